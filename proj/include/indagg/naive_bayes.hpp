#pragma once

#include <cmath>
#include <cstdio>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "indagg/core.hpp"
#include "indagg/indicators.hpp"

namespace indagg {

/// Per-class scores of one prediction: log-posteriors (up to a shared
/// constant) for Naive Bayes, vote counts for the forest.
struct Prediction {
  ShiftClass cls = ShiftClass::None;
  std::vector<double> scores;
};

/// Index of the largest score; ties go to the lowest class code.
inline int argmax_lowest(std::span<const double> scores) {
  int best = 0;
  for (std::size_t c = 1; c < scores.size(); ++c)
    if (scores[c] > scores[static_cast<std::size_t>(best)]) best = static_cast<int>(c);
  return best;
}

/// Bernoulli Naive Bayes over binary indicators.
struct NaiveBayesModel {
  std::vector<double> priors;               // [class]
  std::vector<std::vector<double>> cond_p;  // [class][feature] = P(x_j = 1 | c)
  double smoothing = 1.0;
  std::vector<std::string> feature_ids;

  std::size_t n_classes() const { return priors.size(); }
  std::size_t n_features() const { return cond_p.empty() ? 0 : cond_p.front().size(); }

  /// Recomputes the cached log tables; call after filling the fields by hand.
  void prepare() {
    log_prior.clear();
    log_on.assign(n_classes(), {});
    log_off.assign(n_classes(), {});
    for (std::size_t c = 0; c < n_classes(); ++c) {
      log_prior.push_back(std::log(priors[c]));
      for (double p : cond_p[c]) {
        log_on[c].push_back(std::log(p));
        log_off[c].push_back(std::log1p(-p));
      }
    }
  }

  std::vector<double> log_prior;
  std::vector<std::vector<double>> log_on;
  std::vector<std::vector<double>> log_off;
};

/// cond_p[c][j] = (count(x_j = 1, c) + eps) / (count(c) + 2 eps); priors are
/// class frequencies. Every class in [0, n_classes) must occur.
inline NaiveBayesModel nb_train(const IndicatorMatrix& m, double smoothing = 1.0,
                                int n_classes = kNumClasses) {
  if (!(smoothing > 0.0)) throw std::invalid_argument("nb_train: smoothing must be > 0");
  const auto nc = static_cast<std::size_t>(n_classes);
  const std::size_t p = m.cols();
  std::vector<double> class_count(nc, 0.0);
  std::vector<std::vector<double>> ones(nc, std::vector<double>(p, 0.0));
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto c = static_cast<std::size_t>(to_int(m.labels[r]));
    if (c >= nc) throw std::invalid_argument("nb_train: label out of range");
    class_count[c] += 1.0;
    const auto row = m.row(r);
    for (std::size_t j = 0; j < p; ++j) ones[c][j] += row[j];
  }
  for (std::size_t c = 0; c < nc; ++c)
    if (class_count[c] == 0.0)
      throw std::invalid_argument("nb_train: class " + std::to_string(c) + " missing from training data");

  NaiveBayesModel model;
  model.smoothing = smoothing;
  const auto total = static_cast<double>(m.rows());
  for (std::size_t c = 0; c < nc; ++c) {
    model.priors.push_back(class_count[c] / total);
    std::vector<double> row(p);
    for (std::size_t j = 0; j < p; ++j)
      row[j] = (ones[c][j] + smoothing) / (class_count[c] + 2.0 * smoothing);
    model.cond_p.push_back(std::move(row));
  }
  for (const auto& s : m.specs) model.feature_ids.push_back(s.id);
  model.prepare();
  return model;
}

inline Prediction nb_predict(const NaiveBayesModel& model, std::span<const std::uint8_t> bits) {
  if (bits.size() != model.n_features()) throw std::invalid_argument("nb_predict: dimension mismatch");
  Prediction pred;
  pred.scores.resize(model.n_classes());
  for (std::size_t c = 0; c < model.n_classes(); ++c) {
    double s = model.log_prior[c];
    const auto& on = model.log_on[c];
    const auto& off = model.log_off[c];
    for (std::size_t j = 0; j < bits.size(); ++j) s += bits[j] ? on[j] : off[j];
    pred.scores[c] = s;
  }
  pred.cls = static_cast<ShiftClass>(argmax_lowest(pred.scores));
  return pred;
}

/// Rows: indicator ids; columns: classes; entries: P(indicator = 1 | class).
struct ExplainTable {
  std::vector<std::string> ids;
  std::vector<std::vector<double>> probs;
};

inline ExplainTable nb_explain(const NaiveBayesModel& model, std::span<const std::size_t> selected) {
  ExplainTable t;
  for (auto j : selected) {
    if (j >= model.n_features()) throw std::out_of_range("nb_explain: feature index out of range");
    t.ids.push_back(j < model.feature_ids.size() ? model.feature_ids[j] : std::to_string(j));
    std::vector<double> row;
    for (std::size_t c = 0; c < model.n_classes(); ++c) row.push_back(model.cond_p[c][j]);
    t.probs.push_back(std::move(row));
  }
  return t;
}

/// Three significant digits, e.g. 0.0103, 0.971.
inline std::string format_probability(double p) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", p);
  return buf;
}

}  // namespace indagg
