#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "indagg/core.hpp"
#include "indagg/io.hpp"
#include "indagg/naive_bayes.hpp"
#include "indagg/random_forest.hpp"
#include "oracles.hpp"

using namespace indagg;
using Catch::Approx;

namespace {

IndicatorMatrix random_matrix(Rng& rng, std::size_t n, std::size_t p, double signal = 0.8) {
  IndicatorMatrix m;
  for (std::size_t j = 0; j < p; ++j) {
    IndicatorSpec s{"", TestKind::FVariance, 0.001 * static_cast<double>(j + 1), {}, Aggregator::any()};
    s.id = make_indicator_id(s);
    m.specs.push_back(s);
  }
  std::uniform_int_distribution<int> cls(0, 3);
  std::bernoulli_distribution keep(signal), coin(0.5);
  for (std::size_t r = 0; r < n; ++r) {
    const int c = static_cast<int>(r % 4 == 0 ? r / 4 % 4 : static_cast<std::size_t>(cls(rng)));
    m.row_ids.push_back("r" + std::to_string(r));
    m.labels.push_back(shift_class_from_int(c));
    for (std::size_t j = 0; j < p; ++j) {
      const int truth = (c >> (j % 2)) & 1;
      m.bits.push_back(static_cast<std::uint8_t>(keep(rng) ? truth : coin(rng)));
    }
  }
  return m;
}

}  // namespace

TEST_CASE("nb_train estimates", "[nb]") {
  IndicatorMatrix m;
  IndicatorSpec s{"", TestKind::MannWhitneyU, 0.1, {}, Aggregator::any()};
  s.id = make_indicator_id(s);
  m.specs = {s};
  // 10 rows per class; class c has c + 3 ones in its 10 rows.
  for (int c = 0; c < 4; ++c)
    for (int i = 0; i < 10; ++i) {
      m.labels.push_back(shift_class_from_int(c));
      m.row_ids.push_back("x");
      m.bits.push_back(i < c + 3 ? 1 : 0);
    }
  const auto model = nb_train(m, 1.0);
  CHECK(model.cond_p[0][0] == Approx(4.0 / 12.0).margin(1e-15));
  CHECK(model.cond_p[3][0] == Approx(7.0 / 12.0).margin(1e-15));
  for (double p : model.priors) CHECK(p == 0.25);

  const std::vector<std::size_t> sel{0};
  const auto table = nb_explain(model, sel);
  CHECK(table.ids == std::vector<std::string>{s.id});
  CHECK(table.probs[0][0] == model.cond_p[0][0]);
  CHECK(nb_explain(model, std::vector<std::size_t>{}).ids.empty());
  CHECK(format_probability(0.0103) == "0.0103");
  CHECK(format_probability(4.0 / 12.0) == "0.333");

  auto missing = m;
  for (auto& l : missing.labels)
    if (l == ShiftClass::Trend) l = ShiftClass::Mean;
  CHECK_THROWS_AS(nb_train(missing), std::invalid_argument);
  CHECK_THROWS_AS(nb_train(m, 0.0), std::invalid_argument);
}

TEST_CASE("nb_predict arithmetic", "[nb]") {
  NaiveBayesModel model;
  model.priors = {0.5, 0.5};
  model.cond_p = {{0.9}, {0.1}};
  model.prepare();
  const std::vector<std::uint8_t> one{1};
  const auto pred = nb_predict(model, one);
  CHECK(std::exp(pred.scores[0] - pred.scores[1]) == Approx(9.0).epsilon(1e-12));
  CHECK(pred.cls == ShiftClass::None);

  model.cond_p = {{0.3}, {0.3}};
  model.prepare();
  const auto tie = nb_predict(model, one);
  CHECK(tie.scores[0] == tie.scores[1]);
  CHECK(tie.cls == ShiftClass::None);
  CHECK_THROWS_AS(nb_predict(model, std::vector<std::uint8_t>{1, 0}), std::invalid_argument);
}

TEST_CASE("nb log-posteriors equal the joint-enumeration oracle", "[nb][oracle]") {
  Rng rng(44);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t d = 1 + static_cast<std::size_t>(rep % 10);
    const auto m = random_matrix(rng, 120, d);
    const auto model = nb_train(m, 1.0);
    const auto table = oracle::nb_joint_table(model.priors, model.cond_p);
    for (std::size_t mask = 0; mask < (std::size_t{1} << d); ++mask) {
      std::vector<std::uint8_t> bits(d);
      for (std::size_t j = 0; j < d; ++j) bits[j] = static_cast<std::uint8_t>(mask >> j & 1);
      const auto pred = nb_predict(model, bits);
      for (std::size_t c = 0; c < 4; ++c)
        REQUIRE(std::fabs(pred.scores[c] - std::log(table[c][mask])) < 1e-12);
    }
  }
}

TEST_CASE("nb decisions survive duplicating the training set", "[nb]") {
  Rng rng(9);
  const auto m = random_matrix(rng, 200, 8, 0.6);
  auto twice = m;
  twice.labels.insert(twice.labels.end(), m.labels.begin(), m.labels.end());
  twice.row_ids.insert(twice.row_ids.end(), m.row_ids.begin(), m.row_ids.end());
  twice.bits.insert(twice.bits.end(), m.bits.begin(), m.bits.end());
  const auto a = nb_train(m, 1.0);
  const auto b = nb_train(twice, 2.0);
  for (std::size_t c = 0; c < 4; ++c) {
    CHECK(a.priors[c] == Approx(b.priors[c]).epsilon(1e-15));
    for (std::size_t j = 0; j < 8; ++j) CHECK(a.cond_p[c][j] == Approx(b.cond_p[c][j]).epsilon(1e-14));
  }
  for (std::size_t r = 0; r < m.rows(); ++r) CHECK(nb_predict(a, m.row(r)).cls == nb_predict(b, m.row(r)).cls);
}

TEST_CASE("bootstrap leaves about e^-1 of the rows out", "[rf]") {
  Rng rng = make_stream(5, "boot");
  double total = 0.0;
  const int reps = 50;
  for (int t = 0; t < reps; ++t) {
    const auto rows = bootstrap_rows(1000, rng);
    std::vector<std::uint8_t> in(1000, 0);
    for (auto r : rows) in[r] = 1;
    total += static_cast<double>(std::count(in.begin(), in.end(), 0)) / 1000.0;
  }
  CHECK(std::fabs(total / reps - std::pow(1.0 - 1.0 / 1000.0, 1000.0)) < 0.02);
  CHECK(std::fabs(total / reps - std::exp(-1.0)) < 0.02);
}

TEST_CASE("rf on a separable matrix", "[rf]") {
  Rng rng(13);
  auto m = random_matrix(rng, 400, 6, 0.0);
  // Column 3 is the binary label "shift present".
  for (std::size_t r = 0; r < m.rows(); ++r) m.bits[r * m.cols() + 3] = m.labels[r] != ShiftClass::None;
  for (auto& l : m.labels) l = l == ShiftClass::None ? ShiftClass::None : ShiftClass::Variance;
  const auto model = rf_train(m, {50, 0, 1, 3}, 2, 2);
  for (std::size_t r = 0; r < m.rows(); ++r) REQUIRE(rf_predict(model, m.row(r)).cls == m.labels[r]);
  const auto imp = rf_importance(model);
  const auto top = std::max_element(imp.begin(), imp.end()) - imp.begin();
  CHECK(top == 3);
  for (double v : imp) CHECK(v >= 0.0);
  REQUIRE(model.oob_accuracy.has_value());
  CHECK(*model.oob_accuracy == 1.0);
}

TEST_CASE("rf determinism, votes and config errors", "[rf]") {
  Rng rng(21);
  const auto m = random_matrix(rng, 300, 12, 0.7);
  const ForestConfig cfg{40, 0, 1, 99};
  const auto a = rf_train(m, cfg, 1);
  const auto b = rf_train(m, cfg, 6);
  CHECK(io::rf_to_json(a).dump() == io::rf_to_json(b).dump());

  // Reversing the trees leaves every prediction unchanged.
  auto reversed = a;
  std::reverse(reversed.trees.begin(), reversed.trees.end());
  for (std::size_t r = 0; r < m.rows(); ++r)
    CHECK(rf_predict(a, m.row(r)).scores == rf_predict(reversed, m.row(r)).scores);

  // Two single-leaf trees voting 1 and 3: the tie goes to class 1.
  ForestModel tie;
  tie.importances.assign(1, 0.0);
  tie.trees.resize(2);
  tie.trees[0].nodes.push_back({-1, -1, -1, {0, 5, 0, 0}});
  tie.trees[1].nodes.push_back({-1, -1, -1, {0, 0, 0, 5}});
  CHECK(rf_predict(tie, std::vector<std::uint8_t>{0}).cls == ShiftClass::Variance);

  // Training accuracy at least the OOB estimate.
  std::size_t correct = 0;
  for (std::size_t r = 0; r < m.rows(); ++r) correct += rf_predict(a, m.row(r)).cls == m.labels[r];
  CHECK(static_cast<double>(correct) / static_cast<double>(m.rows()) >= *a.oob_accuracy);

  CHECK_THROWS_AS(rf_train(m, {0, 0, 1, 1}), std::invalid_argument);
  CHECK_THROWS_AS(rf_train(m, {5, 13, 1, 1}), std::invalid_argument);
  CHECK_THROWS_AS(rf_train(m, {5, 0, 0, 1}), std::invalid_argument);
  CHECK_THROWS_AS(rf_predict(a, std::vector<std::uint8_t>{1}), std::invalid_argument);
}

TEST_CASE("rf single greedy tree with mtry = p", "[rf]") {
  Rng rng(6);
  const auto m = random_matrix(rng, 150, 5, 0.9);
  const auto a = rf_train(m, {1, 5, 1, 7});
  const auto b = rf_train(m, {1, 5, 1, 7});
  CHECK(io::rf_to_json(a).dump() == io::rf_to_json(b).dump());
  for (const auto& node : a.trees[0].nodes) {
    if (node.is_leaf()) continue;
    CHECK(node.feature >= 0);
    CHECK(node.feature < 5);
  }
  // min_leaf bounds every leaf's bootstrap count.
  const auto c = rf_train(m, {10, 0, 8, 7});
  for (const auto& t : c.trees)
    for (const auto& node : t.nodes)
      if (node.is_leaf()) {
        int total = 0;
        for (int v : node.counts) total += v;
        CHECK(total >= 8);
      }
}
