#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "indagg/evaluation.hpp"
#include "indagg/io.hpp"

using namespace indagg;
using Catch::Approx;

namespace {

std::vector<ShiftClass> reference_labels(std::size_t scale = 1) {
  std::vector<ShiftClass> out;
  const std::array<std::size_t, 4> counts{3000, 1000, 1000, 1000};
  for (std::size_t c = 0; c < 4; ++c)
    for (std::size_t i = 0; i < counts[c] / scale; ++i) out.push_back(shift_class_from_int(static_cast<int>(c)));
  return out;
}

IndicatorMatrix noisy_matrix(std::size_t n, std::size_t p, std::uint64_t seed) {
  Rng rng(seed);
  IndicatorMatrix m;
  for (std::size_t j = 0; j < p; ++j) {
    IndicatorSpec s{"", TestKind::TWelch, 0.001 * static_cast<double>(j + 1), {}, Aggregator::any()};
    s.id = make_indicator_id(s);
    m.specs.push_back(s);
  }
  std::bernoulli_distribution keep(0.75), coin(0.5);
  for (std::size_t r = 0; r < n; ++r) {
    const int c = static_cast<int>(r % 4);
    m.labels.push_back(shift_class_from_int(c));
    m.row_ids.push_back("r" + std::to_string(r));
    for (std::size_t j = 0; j < p; ++j)
      m.bits.push_back(static_cast<std::uint8_t>(keep(rng) ? (c >> (j % 2)) & 1 : coin(rng)));
  }
  return m;
}

}  // namespace

TEST_CASE("score on the published confusion matrix", "[evaluation]") {
  ConfusionMatrix cm;
  cm.counts = {{{2267, 162, 32, 39}, {118, 671, 36, 4}, {26, 4, 708, 91}, {46, 7, 76, 700}}};
  const auto s = score_confusion(cm);
  CHECK(cm.total() == 4987);
  CHECK(s.accuracy == Approx((2267.0 + 671 + 708 + 700) / 4987).margin(1e-15));
  CHECK(s.accuracy == Approx(0.8715).margin(5e-5));
  CHECK(s.per_class_error[0] == Approx(1.0 - 2267.0 / 2500).margin(1e-15));

  std::vector<ShiftClass> labels = reference_labels(100);
  CHECK(score(labels, labels).accuracy == 1.0);
  const std::vector<ShiftClass> balanced{ShiftClass::None, ShiftClass::Variance, ShiftClass::Mean, ShiftClass::Trend};
  const std::vector<ShiftClass> constant(4, ShiftClass::Mean);
  CHECK(score(constant, balanced).accuracy == 0.25);
  CHECK_THROWS_AS(score(constant, labels), std::invalid_argument);
}

TEST_CASE("proportional quotas", "[evaluation]") {
  CHECK(proportional_quotas({3000, 1000, 1000, 1000}, 1000) == std::array<std::size_t, 4>{500, 167, 167, 166});
  CHECK(proportional_quotas({2500, 833, 833, 834}, 500) == std::array<std::size_t, 4>{250, 83, 83, 84});
  CHECK(proportional_quotas({1, 1, 1, 1}, 2) == std::array<std::size_t, 4>{1, 1, 0, 0});
  CHECK_THROWS_AS(proportional_quotas({0, 0, 0, 0}, 2), std::invalid_argument);
}

TEST_CASE("stratified_split", "[evaluation]") {
  const auto labels = reference_labels();
  const auto s = stratified_split(labels, 1000, 5);
  CHECK(s.train.size() == 1000);
  CHECK(s.test.size() == 5000);
  std::set<std::size_t> all(s.train.begin(), s.train.end());
  for (auto i : s.test) CHECK(all.insert(i).second);
  std::array<std::size_t, 4> tc{};
  for (auto i : s.train) ++tc[static_cast<std::size_t>(to_int(labels[i]))];
  CHECK(tc[0] == 500);
  for (std::size_t c = 1; c < 4; ++c) {
    CHECK(tc[c] >= 166);
    CHECK(tc[c] <= 167);
  }
  const auto again = stratified_split(labels, 1000, 5);
  CHECK(again.train == s.train);
  CHECK(stratified_split(labels, 1000, 6).train != s.train);
  CHECK_THROWS_AS(stratified_split(labels, 6000, 1), std::invalid_argument);
}

TEST_CASE("balanced_subsets", "[evaluation]") {
  const auto labels = reference_labels();
  const auto s = stratified_split(labels, 1000, 5);
  std::vector<ShiftClass> test_labels;
  for (auto i : s.test) test_labels.push_back(labels[i]);
  const auto subsets = balanced_subsets(test_labels, 10, 500, 8);
  REQUIRE(subsets.size() == 10);
  const auto expect = proportional_quotas(class_counts(test_labels), 500);
  for (const auto& sub : subsets) {
    CHECK(sub.size() == 500);
    CHECK(std::set<std::size_t>(sub.begin(), sub.end()).size() == 500);
    std::vector<ShiftClass> sl;
    for (auto i : sub) sl.push_back(test_labels[i]);
    CHECK(class_counts(sl) == expect);
  }
  CHECK(balanced_subsets(test_labels, 10, 500, 8) == subsets);
  CHECK_THROWS_AS(balanced_subsets(test_labels, 1, 6000, 8), std::invalid_argument);
}

TEST_CASE("reports and curves", "[evaluation]") {
  const auto m = noisy_matrix(400, 6, 2);
  const auto split = stratified_split(m.labels, 120, 3);
  const auto train = m.select_rows(split.train);
  const auto test = m.select_rows(split.test);
  const auto subsets = balanced_subsets(test.labels, 10, 100, 4);

  EvalSettings settings;
  settings.forest = {30, 0, 1, 11};
  RankedList ranked;
  for (std::size_t j = 0; j < 6; ++j) {
    ranked.order.push_back(5 - j);
    ranked.scores.push_back(0.0);
  }
  const std::vector<std::size_t> ks{1, 2, 3, 4, 5, 6};
  const auto curve = forward_selection_eval(train, test, ranked, ks, subsets, settings);
  REQUIRE(curve.size() == 6);

  // The k = p point equals the all-indicator evaluation over the ranked order.
  const auto tr = train.select_columns(ranked.order);
  const auto te = test.select_columns(ranked.order);
  const auto rf = evaluate_rf(tr, te, subsets, settings.forest);
  const auto nb = evaluate_nb(tr, te, subsets, 1.0);
  CHECK(io::report_to_json(curve.back().rf) == io::report_to_json(rf));
  CHECK(io::report_to_json(curve.back().nb) == io::report_to_json(nb));

  for (const auto& pt : curve) {
    for (const auto* rep : {&pt.nb, &pt.rf}) {
      CHECK(rep->subset_accuracies.size() == 10);
      CHECK(rep->mean == Approx(mean_of(rep->subset_accuracies)).margin(1e-12));
      const auto counts = class_counts(test.labels);
      for (std::size_t c = 0; c < 4; ++c) CHECK(rep->confusion.row_sum(c) == static_cast<long>(counts[c]));
    }
  }
  CHECK_THROWS_AS(forward_selection_eval(train, test, ranked, std::vector<std::size_t>{7}, subsets, settings),
                  std::invalid_argument);
}

TEST_CASE("sample standard deviation", "[evaluation]") {
  const std::vector<double> v{1, 2, 3, 4};
  CHECK(mean_of(v) == 2.5);
  CHECK(sample_std(v) == Approx(std::sqrt(5.0 / 3.0)).epsilon(1e-15));
  CHECK(sample_std(std::vector<double>{0.5}) == 0.0);
}

TEST_CASE("pick_optimal_k", "[evaluation]") {
  auto curve_from = [](const std::vector<double>& acc) {
    std::vector<CurvePoint> c;
    for (std::size_t i = 0; i < acc.size(); ++i) {
      CurvePoint pt;
      pt.k = i + 1;
      pt.nb.train_accuracy = acc[i];
      c.push_back(pt);
    }
    return c;
  };
  std::vector<double> rising;
  for (int k = 1; k <= 30; ++k) rising.push_back(0.5 + 0.01 * k);
  CHECK(pick_optimal_k(curve_from(rising), 20) == 20);
  CHECK(pick_optimal_k(curve_from(std::vector<double>(30, 0.7)), 20) == 1);
  std::vector<double> bump(30, 0.6);
  bump[8] = 0.9;
  bump[15] = 0.9;
  bump[25] = 0.99;
  CHECK(pick_optimal_k(curve_from(bump), 20) == 9);
  CHECK_THROWS_AS(pick_optimal_k(std::vector<CurvePoint>{}, 20), std::invalid_argument);
}

TEST_CASE("ablation arms", "[evaluation]") {
  auto m = noisy_matrix(200, 4, 7);
  m.specs[1].aggregator = Aggregator::k_of_n(2, 3);
  m.specs[1].id = make_indicator_id(m.specs[1]);
  CHECK(any_only_columns(m) == std::vector<std::size_t>{0, 2, 3});
  const auto split = stratified_split(m.labels, 80, 1);
  const auto train = m.select_rows(split.train);
  const auto test = m.select_rows(split.test);
  const auto subsets = balanced_subsets(test.labels, 3, 40, 1);
  EvalSettings settings;
  settings.forest = {20, 0, 1, 5};
  const std::vector<std::size_t> full{0, 1, 2, 3};
  const auto any = any_only_columns(m);
  const auto r = ablation_confirmation(train, test, full, any, subsets, settings);
  CHECK(r.full.n_indicators == 4);
  CHECK(r.any_only.n_indicators == 3);
  CHECK_THROWS_AS(ablation_confirmation(train, test, full, full, subsets, settings), std::invalid_argument);
}
