#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "indagg/indicators.hpp"
#include "indagg/parallel.hpp"

namespace indagg {

namespace detail {

// One plug-in MI term: p(x,y) log2(p(x,y) / (p(x) p(y))) from counts.
inline double mi_term(double nxy, double nx, double ny, double n) {
  if (nxy <= 0.0) return 0.0;
  return nxy / n * std::log2(nxy * n / (nx * ny));
}

}  // namespace detail

/// Plug-in mutual information (bits) between two discrete columns.
template <typename X, typename Y>
double mutual_information(std::span<const X> x, std::span<const Y> y) {
  if (x.size() != y.size()) throw std::invalid_argument("mutual_information: length mismatch");
  if (x.empty()) throw std::invalid_argument("mutual_information: empty columns");
  std::map<long long, double> px, py;
  std::map<std::pair<long long, long long>, double> pxy;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto a = static_cast<long long>(x[i]);
    const auto b = static_cast<long long>(y[i]);
    px[a] += 1.0;
    py[b] += 1.0;
    pxy[{a, b}] += 1.0;
  }
  const auto n = static_cast<double>(x.size());
  double mi = 0.0;
  for (const auto& [cell, count] : pxy) mi += detail::mi_term(count, px[cell.first], py[cell.second], n);
  return std::max(mi, 0.0);
}

struct RankedList {
  std::vector<std::size_t> order;
  std::vector<double> scores;
};

namespace detail {

using BitColumn = std::vector<std::uint64_t>;

inline std::size_t popcount_and(const BitColumn& a, const BitColumn& b) {
  std::size_t c = 0;
  for (std::size_t w = 0; w < a.size(); ++w) c += static_cast<std::size_t>(std::popcount(a[w] & b[w]));
  return c;
}

inline double binary_pair_mi(std::size_t n11, std::size_t n1a, std::size_t n1b, std::size_t n) {
  const double dn = static_cast<double>(n);
  const double a1 = static_cast<double>(n1a), b1 = static_cast<double>(n1b);
  const double c11 = static_cast<double>(n11);
  const double c10 = a1 - c11, c01 = b1 - c11, c00 = dn - a1 - b1 + c11;
  const double mi = mi_term(c11, a1, b1, dn) + mi_term(c10, a1, dn - b1, dn) +
                    mi_term(c01, dn - a1, b1, dn) + mi_term(c00, dn - a1, dn - b1, dn);
  return std::max(mi, 0.0);
}

}  // namespace detail

/// Scores closer than this are treated as tied.
inline constexpr double kScoreTieTolerance = 1e-12;

/// Greedy mRMR ranking (difference form): the first pick maximizes
/// I(x_j; labels); later picks maximize I(x_j; labels) minus the mean of
/// I(x_j; x_s) over the already selected s. Ties go to the lower column.
/// Relevance and redundancy come from popcounts over packed bit columns.
inline RankedList mrmr_rank(const IndicatorMatrix& m, std::size_t k, int jobs = 1) {
  const std::size_t p = m.cols();
  const std::size_t n = m.rows();
  if (k < 1 || k > p) throw std::invalid_argument("mrmr_rank: K out of range");
  if (n == 0) throw std::invalid_argument("mrmr_rank: empty matrix");

  const std::size_t words = (n + 63) / 64;
  std::vector<detail::BitColumn> cols(p, detail::BitColumn(words, 0));
  std::vector<std::size_t> ones(p, 0);
  for (std::size_t r = 0; r < n; ++r) {
    const auto row = m.row(r);
    for (std::size_t c = 0; c < p; ++c)
      if (row[c]) {
        cols[c][r / 64] |= std::uint64_t{1} << (r % 64);
        ++ones[c];
      }
  }

  int n_classes = 0;
  for (auto l : m.labels) n_classes = std::max(n_classes, to_int(l) + 1);
  std::vector<detail::BitColumn> class_mask(static_cast<std::size_t>(n_classes),
                                            detail::BitColumn(words, 0));
  std::vector<double> class_count(static_cast<std::size_t>(n_classes), 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    const auto c = static_cast<std::size_t>(to_int(m.labels[r]));
    class_mask[c][r / 64] |= std::uint64_t{1} << (r % 64);
    class_count[c] += 1.0;
  }

  const double dn = static_cast<double>(n);
  std::vector<double> relevance(p, 0.0);
  parallel_for(p, jobs, [&](std::size_t j) {
    const double x1 = static_cast<double>(ones[j]);
    double mi = 0.0;
    for (std::size_t c = 0; c < class_mask.size(); ++c) {
      const double n1c = static_cast<double>(detail::popcount_and(cols[j], class_mask[c]));
      mi += detail::mi_term(n1c, x1, class_count[c], dn) +
            detail::mi_term(class_count[c] - n1c, dn - x1, class_count[c], dn);
    }
    relevance[j] = std::max(mi, 0.0);
  });

  RankedList out;
  std::vector<double> redundancy(p, 0.0);
  std::vector<bool> chosen(p, false);
  for (std::size_t step = 0; step < k; ++step) {
    if (step > 0) {
      const std::size_t last = out.order.back();
      parallel_for(p, jobs, [&](std::size_t j) {
        if (chosen[j]) return;
        redundancy[j] += detail::binary_pair_mi(detail::popcount_and(cols[j], cols[last]), ones[j],
                                                ones[last], n);
      });
    }
    std::size_t best = p;
    double best_score = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      if (chosen[j]) continue;
      const double score =
          step == 0 ? relevance[j] : relevance[j] - redundancy[j] / static_cast<double>(step);
      if (best == p || score > best_score + kScoreTieTolerance) {
        best = j;
        best_score = score;
      }
    }
    chosen[best] = true;
    out.order.push_back(best);
    out.scores.push_back(best_score);
  }
  return out;
}

}  // namespace indagg
