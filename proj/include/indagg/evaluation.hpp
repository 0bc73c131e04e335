#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "indagg/core.hpp"
#include "indagg/indicators.hpp"
#include "indagg/naive_bayes.hpp"
#include "indagg/random_forest.hpp"
#include "indagg/selection.hpp"

namespace indagg {

/// Splits `total` into per-class quotas proportional to `counts` using the
/// largest-remainder rule; remainder ties go to the lower class.
inline std::array<std::size_t, kNumClasses> proportional_quotas(
    const std::array<std::size_t, kNumClasses>& counts, std::size_t total) {
  const std::size_t n = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
  if (n == 0) throw std::invalid_argument("proportional_quotas: no records");
  std::array<std::size_t, kNumClasses> quota{};
  std::array<double, kNumClasses> remainder{};
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const double exact = static_cast<double>(counts[c]) * static_cast<double>(total) / static_cast<double>(n);
    quota[c] = static_cast<std::size_t>(std::floor(exact));
    remainder[c] = exact - static_cast<double>(quota[c]);
    assigned += quota[c];
  }
  std::array<std::size_t, kNumClasses> order{0, 1, 2, 3};
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t i = 0; assigned < total; ++i, ++assigned) ++quota[order[i % kNumClasses]];
  return quota;
}

inline std::array<std::size_t, kNumClasses> class_counts(std::span<const ShiftClass> labels) {
  std::array<std::size_t, kNumClasses> counts{};
  for (auto l : labels) ++counts[static_cast<std::size_t>(to_int(l))];
  return counts;
}

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Class-proportional train/test split; both index lists are ascending.
inline Split stratified_split(std::span<const ShiftClass> labels, std::size_t train_size,
                              std::uint64_t seed) {
  if (train_size == 0 || train_size >= labels.size())
    throw std::invalid_argument("stratified_split: dataset too small for the requested train size");
  const auto quota = proportional_quotas(class_counts(labels), train_size);
  std::vector<std::uint8_t> is_train(labels.size(), 0);
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (static_cast<std::size_t>(to_int(labels[i])) == c) members.push_back(i);
    Rng rng = make_stream(seed, "split", c);
    std::shuffle(members.begin(), members.end(), rng);
    for (std::size_t i = 0; i < quota[c]; ++i) is_train[members[i]] = 1;
  }
  Split s;
  for (std::size_t i = 0; i < labels.size(); ++i) (is_train[i] ? s.train : s.test).push_back(i);
  return s;
}

/// `count` subsets of `size` indices into `labels`, each class-proportional.
/// Subsets are drawn independently; within a subset indices are distinct.
inline std::vector<std::vector<std::size_t>> balanced_subsets(std::span<const ShiftClass> labels,
                                                              std::size_t count, std::size_t size,
                                                              std::uint64_t seed) {
  if (size > labels.size()) throw std::invalid_argument("balanced_subsets: test set too small");
  const auto quota = proportional_quotas(class_counts(labels), size);
  std::array<std::vector<std::size_t>, kNumClasses> members;
  for (std::size_t i = 0; i < labels.size(); ++i)
    members[static_cast<std::size_t>(to_int(labels[i]))].push_back(i);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t s = 0; s < count; ++s) {
    Rng rng = make_stream(seed, "subset", s);
    std::vector<std::size_t> subset;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      auto pool = members[c];
      std::shuffle(pool.begin(), pool.end(), rng);
      subset.insert(subset.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(quota[c]));
    }
    std::sort(subset.begin(), subset.end());
    out.push_back(std::move(subset));
  }
  return out;
}

/// Rows: true class; columns: predicted class.
struct ConfusionMatrix {
  std::array<std::array<long, kNumClasses>, kNumClasses> counts{};

  long row_sum(std::size_t c) const {
    return std::accumulate(counts[c].begin(), counts[c].end(), 0L);
  }
  long total() const {
    long t = 0;
    for (std::size_t c = 0; c < kNumClasses; ++c) t += row_sum(c);
    return t;
  }
  long trace() const {
    long t = 0;
    for (std::size_t c = 0; c < kNumClasses; ++c) t += counts[c][c];
    return t;
  }
  bool operator==(const ConfusionMatrix&) const = default;
};

struct ScoreResult {
  double accuracy = 0.0;
  ConfusionMatrix confusion;
  std::array<double, kNumClasses> per_class_error{};  // 0 for classes absent from labels
};

inline ScoreResult score_confusion(const ConfusionMatrix& cm) {
  ScoreResult s;
  s.confusion = cm;
  const long total = cm.total();
  s.accuracy = total > 0 ? static_cast<double>(cm.trace()) / static_cast<double>(total) : 0.0;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const long rs = cm.row_sum(c);
    s.per_class_error[c] = rs > 0 ? 1.0 - static_cast<double>(cm.counts[c][c]) / static_cast<double>(rs) : 0.0;
  }
  return s;
}

inline ScoreResult score(std::span<const ShiftClass> preds, std::span<const ShiftClass> labels) {
  if (preds.size() != labels.size()) throw std::invalid_argument("score: length mismatch");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < preds.size(); ++i)
    ++cm.counts[static_cast<std::size_t>(to_int(labels[i]))][static_cast<std::size_t>(to_int(preds[i]))];
  return score_confusion(cm);
}

struct EvalReport {
  double train_accuracy = 0.0;
  std::optional<double> oob_accuracy;
  std::vector<double> subset_accuracies;
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation
  ConfusionMatrix confusion;  // full test set
  std::array<double, kNumClasses> per_class_error{};       // full test set
  std::array<double, kNumClasses> train_per_class_error{};
  std::size_t n_indicators = 0;
};

inline double mean_of(std::span<const double> v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double sample_std(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

/// Assembles a report from predictions on the training rows and on the full
/// test set; subset accuracies are read off the test predictions.
inline EvalReport make_report(std::span<const ShiftClass> train_preds, std::span<const ShiftClass> train_labels,
                              std::span<const ShiftClass> test_preds, std::span<const ShiftClass> test_labels,
                              std::span<const std::vector<std::size_t>> subsets) {
  EvalReport rep;
  const auto tr = score(train_preds, train_labels);
  rep.train_accuracy = tr.accuracy;
  rep.train_per_class_error = tr.per_class_error;
  const auto te = score(test_preds, test_labels);
  rep.confusion = te.confusion;
  rep.per_class_error = te.per_class_error;
  for (const auto& subset : subsets) {
    std::size_t correct = 0;
    for (auto i : subset) correct += test_preds[i] == test_labels[i] ? 1 : 0;
    rep.subset_accuracies.push_back(subset.empty() ? 0.0
                                                   : static_cast<double>(correct) / static_cast<double>(subset.size()));
  }
  rep.mean = mean_of(rep.subset_accuracies);
  rep.std = sample_std(rep.subset_accuracies);
  return rep;
}

template <typename PredictFn>
std::vector<ShiftClass> predict_all(const IndicatorMatrix& m, PredictFn&& predict, int jobs = 1) {
  std::vector<ShiftClass> out(m.rows());
  parallel_for(m.rows(), jobs, [&](std::size_t r) { out[r] = predict(m.row(r)).cls; });
  return out;
}

struct EvalSettings {
  double nb_smoothing = 1.0;
  ForestConfig forest;
  int jobs = 1;
};

inline EvalReport evaluate_nb(const IndicatorMatrix& train, const IndicatorMatrix& test,
                              std::span<const std::vector<std::size_t>> subsets, double smoothing,
                              NaiveBayesModel* model_out = nullptr) {
  auto model = nb_train(train, smoothing);
  auto predict = [&](std::span<const std::uint8_t> b) { return nb_predict(model, b); };
  const auto tr = predict_all(train, predict);
  const auto te = predict_all(test, predict);
  auto rep = make_report(tr, train.labels, te, test.labels, subsets);
  rep.n_indicators = train.cols();
  if (model_out) *model_out = std::move(model);
  return rep;
}

inline EvalReport evaluate_rf(const IndicatorMatrix& train, const IndicatorMatrix& test,
                              std::span<const std::vector<std::size_t>> subsets, const ForestConfig& config,
                              int jobs = 1, ForestModel* model_out = nullptr) {
  auto model = rf_train(train, config, jobs);
  auto predict = [&](std::span<const std::uint8_t> b) { return rf_predict(model, b); };
  const auto tr = predict_all(train, predict, jobs);
  const auto te = predict_all(test, predict, jobs);
  auto rep = make_report(tr, train.labels, te, test.labels, subsets);
  rep.oob_accuracy = model.oob_accuracy;
  rep.n_indicators = train.cols();
  if (model_out) *model_out = std::move(model);
  return rep;
}

struct CurvePoint {
  std::size_t k = 0;
  EvalReport nb;
  EvalReport rf;
};

/// For each k, trains NB and RF on the first k ranked columns. RF uses the
/// same seed at every k, so the point at k = p equals the all-indicator
/// evaluation over the ranked column order.
inline std::vector<CurvePoint> forward_selection_eval(const IndicatorMatrix& train, const IndicatorMatrix& test,
                                                      const RankedList& ranked, std::span<const std::size_t> ks,
                                                      std::span<const std::vector<std::size_t>> subsets,
                                                      const EvalSettings& settings) {
  std::vector<CurvePoint> out;
  for (auto k : ks) {
    if (k < 1 || k > ranked.order.size()) throw std::invalid_argument("forward_selection_eval: k out of range");
    const std::span<const std::size_t> cols(ranked.order.data(), k);
    const auto tr = train.select_columns(cols);
    const auto te = test.select_columns(cols);
    CurvePoint pt;
    pt.k = k;
    pt.nb = evaluate_nb(tr, te, subsets, settings.nb_smoothing);
    pt.rf = evaluate_rf(tr, te, subsets, settings.forest, settings.jobs);
    out.push_back(std::move(pt));
  }
  return out;
}

/// k in [1, k_max] maximizing NB training accuracy; ties go to the smaller k.
inline std::size_t pick_optimal_k(std::span<const CurvePoint> curve, std::size_t k_max = 20) {
  std::size_t best_k = 0;
  double best = -1.0;
  for (const auto& pt : curve) {
    if (pt.k < 1 || pt.k > k_max) continue;
    if (pt.nb.train_accuracy > best || (pt.nb.train_accuracy == best && pt.k < best_k)) {
      best = pt.nb.train_accuracy;
      best_k = pt.k;
    }
  }
  if (best_k == 0) throw std::invalid_argument("pick_optimal_k: curve does not cover 1..k_max");
  return best_k;
}

/// Columns of `m` whose aggregator is Any.
inline std::vector<std::size_t> any_only_columns(const IndicatorMatrix& m) {
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < m.cols(); ++c)
    if (m.specs[c].aggregator.kind == Aggregator::Kind::Any) out.push_back(c);
  return out;
}

struct AblationResult {
  EvalReport full;
  EvalReport any_only;
};

/// RF on the full grid vs on its Any-only columns, over the same signals,
/// split and subsets. Column order in each arm follows the given order.
inline AblationResult ablation_confirmation(const IndicatorMatrix& train, const IndicatorMatrix& test,
                                            std::span<const std::size_t> full_columns,
                                            std::span<const std::size_t> any_columns,
                                            std::span<const std::vector<std::size_t>> subsets,
                                            const EvalSettings& settings) {
  for (auto c : any_columns)
    if (train.specs.at(c).aggregator.kind != Aggregator::Kind::Any)
      throw std::invalid_argument("ablation_confirmation: any-only arm contains a confirmation indicator");
  AblationResult r;
  r.full = evaluate_rf(train.select_columns(full_columns), test.select_columns(full_columns), subsets,
                       settings.forest, settings.jobs);
  r.any_only = evaluate_rf(train.select_columns(any_columns), test.select_columns(any_columns), subsets,
                           settings.forest, settings.jobs);
  return r;
}

}  // namespace indagg
