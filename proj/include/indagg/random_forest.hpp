#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "indagg/core.hpp"
#include "indagg/indicators.hpp"
#include "indagg/naive_bayes.hpp"
#include "indagg/parallel.hpp"

namespace indagg {

struct ForestConfig {
  int n_trees = 500;
  int mtry = 0;  // 0 selects floor(sqrt(p))
  int min_leaf = 1;
  std::uint64_t seed = 1;

  int resolved_mtry(std::size_t p) const {
    if (mtry > 0) return mtry;
    return std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(p)))));
  }
};

/// Internal nodes split on one bit: left = 0, right = 1. Leaves hold the
/// class histogram of their bootstrap rows.
struct TreeNode {
  int feature = -1;
  int left = -1;
  int right = -1;
  std::vector<int> counts;

  bool is_leaf() const { return feature < 0; }
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  const TreeNode& leaf_for(std::span<const std::uint8_t> bits) const {
    const TreeNode* node = &nodes.front();
    while (!node->is_leaf())
      node = &nodes[static_cast<std::size_t>(bits[static_cast<std::size_t>(node->feature)] ? node->right
                                                                                             : node->left)];
    return *node;
  }

  int vote(std::span<const std::uint8_t> bits) const {
    const auto& c = leaf_for(bits).counts;
    return static_cast<int>(std::max_element(c.begin(), c.end()) - c.begin());
  }
};

struct ForestModel {
  ForestConfig config;
  int n_classes = kNumClasses;
  std::vector<DecisionTree> trees;
  std::optional<double> oob_accuracy;
  std::vector<double> importances;
  std::vector<std::string> feature_ids;

  std::size_t n_features() const { return importances.size(); }
};

namespace detail {

struct TreeBuilder {
  std::span<const std::uint8_t> colmajor;  // [feature * n_rows + row]
  std::span<const int> labels;
  std::size_t n_rows;
  std::size_t n_features;
  int n_classes;
  int mtry;
  int min_leaf;
  std::vector<double>& importance;  // accumulated Gini decrease for this tree
  double root_size;

  std::uint8_t bit(std::size_t f, std::size_t r) const { return colmajor[f * n_rows + r]; }

  static double sum_sq_over(const std::vector<double>& c, double total) {
    if (total <= 0.0) return 0.0;
    double s = 0.0;
    for (double v : c) s += v * v;
    return s / total;
  }

  DecisionTree build(std::vector<std::size_t> rows, Rng& rng) {
    DecisionTree tree;
    std::vector<std::size_t> features(n_features);
    std::iota(features.begin(), features.end(), std::size_t{0});
    struct Pending {
      int node;
      std::vector<std::size_t> rows;
    };
    std::vector<Pending> stack;
    tree.nodes.emplace_back();
    stack.push_back({0, std::move(rows)});
    const auto nc = static_cast<std::size_t>(n_classes);
    std::vector<double> parent(nc), ones(nc), zeros(nc);

    while (!stack.empty()) {
      Pending item = std::move(stack.back());
      stack.pop_back();
      std::fill(parent.begin(), parent.end(), 0.0);
      for (auto r : item.rows) parent[static_cast<std::size_t>(labels[r])] += 1.0;
      const double total = static_cast<double>(item.rows.size());
      const bool pure = std::count_if(parent.begin(), parent.end(), [](double v) { return v > 0; }) <= 1;

      int best_feature = -1;
      double best_gain = 0.0;
      if (!pure && item.rows.size() >= 2 * static_cast<std::size_t>(min_leaf)) {
        const double parent_term = sum_sq_over(parent, total);
        const auto draws = std::min<std::size_t>(static_cast<std::size_t>(mtry), n_features);
        for (std::size_t i = 0; i < draws; ++i) {
          const auto j = std::uniform_int_distribution<std::size_t>(i, n_features - 1)(rng);
          std::swap(features[i], features[j]);
          const std::size_t f = features[i];
          std::fill(ones.begin(), ones.end(), 0.0);
          for (auto r : item.rows)
            if (bit(f, r)) ones[static_cast<std::size_t>(labels[r])] += 1.0;
          double n1 = 0.0;
          for (std::size_t c = 0; c < nc; ++c) {
            zeros[c] = parent[c] - ones[c];
            n1 += ones[c];
          }
          const double n0 = total - n1;
          if (n0 < min_leaf || n1 < min_leaf) continue;
          // Weighted Gini decrease: N g(parent) - N0 g(left) - N1 g(right).
          const double gain = sum_sq_over(ones, n1) + sum_sq_over(zeros, n0) - parent_term;
          if (gain <= 1e-10) continue;
          if (best_feature < 0 || gain > best_gain ||
              (gain == best_gain && static_cast<int>(f) < best_feature)) {
            best_feature = static_cast<int>(f);
            best_gain = gain;
          }
        }
      }

      if (best_feature < 0) {
        auto& node = tree.nodes[static_cast<std::size_t>(item.node)];
        node.counts.assign(nc, 0);
        for (std::size_t c = 0; c < nc; ++c) node.counts[c] = static_cast<int>(parent[c]);
        continue;
      }

      importance[static_cast<std::size_t>(best_feature)] += best_gain / root_size;
      std::vector<std::size_t> left_rows, right_rows;
      for (auto r : item.rows) (bit(static_cast<std::size_t>(best_feature), r) ? right_rows : left_rows).push_back(r);
      const int left = static_cast<int>(tree.nodes.size());
      tree.nodes.emplace_back();
      const int right = static_cast<int>(tree.nodes.size());
      tree.nodes.emplace_back();
      auto& node = tree.nodes[static_cast<std::size_t>(item.node)];
      node.feature = best_feature;
      node.left = left;
      node.right = right;
      // Right child is pushed first so the left subtree is expanded first.
      stack.push_back({right, std::move(right_rows)});
      stack.push_back({left, std::move(left_rows)});
    }
    return tree;
  }
};

}  // namespace detail

/// n row indices drawn uniformly with replacement.
inline std::vector<std::size_t> bootstrap_rows(std::size_t n, Rng& rng) {
  std::vector<std::size_t> rows(n);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  for (auto& r : rows) r = pick(rng);
  return rows;
}

inline Prediction rf_predict(const ForestModel& model, std::span<const std::uint8_t> bits) {
  if (bits.size() != model.n_features()) throw std::invalid_argument("rf_predict: dimension mismatch");
  Prediction pred;
  pred.scores.assign(static_cast<std::size_t>(model.n_classes), 0.0);
  for (const auto& t : model.trees) pred.scores[static_cast<std::size_t>(t.vote(bits))] += 1.0;
  pred.cls = static_cast<ShiftClass>(argmax_lowest(pred.scores));
  return pred;
}

/// Breiman forest over binary features: bootstrap rows, mtry features per
/// node, best Gini split, fully grown by default. Tree t draws from its own
/// substream keyed by (seed, t), so the result is independent of `jobs`.
inline ForestModel rf_train(const IndicatorMatrix& m, ForestConfig config, int jobs = 1,
                            int n_classes = kNumClasses) {
  const std::size_t p = m.cols();
  const std::size_t n = m.rows();
  if (config.n_trees < 1) throw std::invalid_argument("rf_train: n_trees must be >= 1");
  if (p == 0 || n == 0) throw std::invalid_argument("rf_train: empty matrix");
  if (config.mtry < 0 || static_cast<std::size_t>(config.mtry) > p)
    throw std::invalid_argument("rf_train: mtry must be in [1, p]");
  if (config.min_leaf < 1) throw std::invalid_argument("rf_train: min_leaf must be >= 1");

  std::vector<std::uint8_t> colmajor(n * p);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < p; ++c) colmajor[c * n + r] = m.at(r, c);
  const auto labels = m.label_codes();
  for (int l : labels)
    if (l < 0 || l >= n_classes) throw std::invalid_argument("rf_train: label out of range");

  ForestModel model;
  model.config = config;
  model.n_classes = n_classes;
  const int mtry = config.resolved_mtry(p);
  const auto n_trees = static_cast<std::size_t>(config.n_trees);
  model.trees.resize(n_trees);
  std::vector<std::vector<double>> tree_importance(n_trees);
  std::vector<std::vector<std::uint8_t>> in_bag(n_trees);

  parallel_for(n_trees, jobs, [&](std::size_t t) {
    Rng rng = make_stream(config.seed, "tree", t);
    auto rows = bootstrap_rows(n, rng);
    in_bag[t].assign(n, 0);
    for (auto r : rows) in_bag[t][r] = 1;
    tree_importance[t].assign(p, 0.0);
    detail::TreeBuilder builder{colmajor, labels, n, p, n_classes, mtry, config.min_leaf,
                                tree_importance[t], static_cast<double>(n)};
    model.trees[t] = builder.build(std::move(rows), rng);
  });

  model.importances.assign(p, 0.0);
  for (const auto& imp : tree_importance)
    for (std::size_t j = 0; j < p; ++j) model.importances[j] += imp[j];
  for (auto& v : model.importances) v /= static_cast<double>(n_trees);

  std::size_t oob_rows = 0, oob_correct = 0;
  std::vector<double> votes(static_cast<std::size_t>(n_classes));
  for (std::size_t r = 0; r < n; ++r) {
    std::fill(votes.begin(), votes.end(), 0.0);
    bool any = false;
    const auto row = m.row(r);
    for (std::size_t t = 0; t < n_trees; ++t) {
      if (in_bag[t][r]) continue;
      votes[static_cast<std::size_t>(model.trees[t].vote(row))] += 1.0;
      any = true;
    }
    if (!any) continue;
    ++oob_rows;
    if (argmax_lowest(votes) == labels[r]) ++oob_correct;
  }
  if (oob_rows > 0) model.oob_accuracy = static_cast<double>(oob_correct) / static_cast<double>(oob_rows);
  for (const auto& s : m.specs) model.feature_ids.push_back(s.id);
  return model;
}

/// Mean decrease in Gini impurity per feature (weighted by node size
/// relative to the bootstrap sample), averaged over trees.
inline std::vector<double> rf_importance(const ForestModel& model) { return model.importances; }

}  // namespace indagg
