#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "indagg/special.hpp"

namespace indagg {

enum class TestKind : int {
  MannWhitneyU = 0,
  KolmogorovSmirnov,
  FVariance,
  TPooled,
  TWelch,
  SlopeShift,
  SlopeChange,
};

inline constexpr std::array<TestKind, 7> kAllTests = {
    TestKind::MannWhitneyU, TestKind::KolmogorovSmirnov, TestKind::FVariance,
    TestKind::TPooled,      TestKind::TWelch,            TestKind::SlopeShift,
    TestKind::SlopeChange};

/// Short tag used in indicator ids and grid configs.
inline constexpr std::string_view test_tag(TestKind k) {
  switch (k) {
    case TestKind::MannWhitneyU: return "U";
    case TestKind::KolmogorovSmirnov: return "KS";
    case TestKind::FVariance: return "F";
    case TestKind::TPooled: return "TP";
    case TestKind::TWelch: return "TW";
    case TestKind::SlopeShift: return "SS";
    case TestKind::SlopeChange: return "SC";
  }
  return "?";
}

inline TestKind test_from_tag(std::string_view tag) {
  for (TestKind k : kAllTests)
    if (test_tag(k) == tag) return k;
  throw std::invalid_argument("unknown test tag: " + std::string(tag));
}

struct TestOutcome {
  double statistic = 0.0;
  double p_value = 1.0;
  bool degenerate = false;
};

/// Floor applied to p-values of non-degenerate outcomes whose statistic is
/// infinite or whose tail probability underflows.
inline constexpr double kMinPValue = std::numeric_limits<double>::denorm_min();

namespace detail {

inline TestOutcome degenerate_outcome() { return {0.0, 1.0, true}; }

inline TestOutcome finite_outcome(double statistic, double p) {
  return {statistic, std::clamp(p, kMinPValue, 1.0), false};
}

inline void require_size(std::span<const double> s, std::size_t min, const char* what) {
  if (s.empty()) throw std::invalid_argument("empty sample");
  if (s.size() < min) throw std::invalid_argument(what);
}

struct Moments {
  double mean = 0.0;
  double var = 0.0;  // unbiased; exactly 0 for a constant sample
  bool constant = true;
};

inline Moments moments(std::span<const double> s) {
  Moments m;
  const auto [lo, hi] = std::minmax_element(s.begin(), s.end());
  if (*lo == *hi) {
    m.mean = *lo;
    return m;
  }
  m.constant = false;
  double sum = 0.0;
  for (double v : s) sum += v;
  m.mean = sum / static_cast<double>(s.size());
  double ss = 0.0;
  for (double v : s) ss += (v - m.mean) * (v - m.mean);
  m.var = s.size() > 1 ? ss / static_cast<double>(s.size() - 1) : 0.0;
  return m;
}

struct LineFit {
  double slope = 0.0;
  double slope_var = 0.0;  // squared standard error of the slope
};

// OLS of the window against its local index 0..n-1.
inline LineFit fit_line(std::span<const double> y) {
  const auto n = static_cast<double>(y.size());
  LineFit fit;
  const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
  if (*lo == *hi) return fit;
  const double xbar = 0.5 * (n - 1.0);
  const double sxx = n * (n * n - 1.0) / 12.0;
  double ybar = 0.0;
  for (double v : y) ybar += v;
  ybar /= n;
  double sxy = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) sxy += (static_cast<double>(i) - xbar) * (y[i] - ybar);
  fit.slope = sxy / sxx;
  double sse = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double r = y[i] - ybar - fit.slope * (static_cast<double>(i) - xbar);
    sse += r * r;
  }
  fit.slope_var = sse / (n - 2.0) / sxx;
  return fit;
}

}  // namespace detail

/// Mann-Whitney U with midranks, tie-corrected variance and continuity
/// correction. statistic = U of the left sample.
inline TestOutcome mann_whitney_u(std::span<const double> left, std::span<const double> right) {
  detail::require_size(left, 1, "empty sample");
  detail::require_size(right, 1, "empty sample");
  const std::size_t nl = left.size();
  const std::size_t nr = right.size();
  const std::size_t total = nl + nr;

  thread_local std::vector<std::pair<double, bool>> pooled;
  pooled.clear();
  pooled.reserve(total);
  for (double v : left) pooled.emplace_back(v, true);
  for (double v : right) pooled.emplace_back(v, false);
  std::sort(pooled.begin(), pooled.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  double rank_sum_left = 0.0;
  double tie_term = 0.0;
  for (std::size_t i = 0; i < total;) {
    std::size_t j = i + 1;
    while (j < total && pooled[j].first == pooled[i].first) ++j;
    const double t = static_cast<double>(j - i);
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k)
      if (pooled[k].second) rank_sum_left += midrank;
    tie_term += t * t * t - t;
    i = j;
  }

  const double dl = static_cast<double>(nl);
  const double dr = static_cast<double>(nr);
  const double dn = static_cast<double>(total);
  const double u = rank_sum_left - dl * (dl + 1.0) / 2.0;
  const double var = dl * dr / 12.0 * ((dn + 1.0) - tie_term / (dn * (dn - 1.0)));
  if (!(var > 0.0)) return {u, 1.0, true};
  const double dev = std::max(std::fabs(u - dl * dr / 2.0) - 0.5, 0.0);
  const double z = dev / std::sqrt(var);
  return detail::finite_outcome(u, std::min(1.0, 2.0 * std_normal_cdf(-z)));
}

/// Exact two-sided Mann-Whitney p-value by enumerating every assignment of
/// ranks to the left sample. Intended as a reference for small, tie-free
/// samples (n_left + n_right <= 16).
inline TestOutcome mann_whitney_exact(std::span<const double> left, std::span<const double> right) {
  detail::require_size(left, 1, "empty sample");
  detail::require_size(right, 1, "empty sample");
  const std::size_t nl = left.size();
  const std::size_t total = nl + right.size();
  if (total > 16) throw std::invalid_argument("exact enumeration limited to 16 observations");

  std::vector<std::pair<double, bool>> pooled;
  for (double v : left) pooled.emplace_back(v, true);
  for (double v : right) pooled.emplace_back(v, false);
  std::sort(pooled.begin(), pooled.end());
  for (std::size_t i = 1; i < total; ++i)
    if (pooled[i].first == pooled[i - 1].first) throw std::invalid_argument("ties not supported");

  // U counts pairs (l, r) with l > r; with ranks, U = sum of left ranks - nl(nl+1)/2.
  long observed_rank_sum = 0;
  for (std::size_t i = 0; i < total; ++i)
    if (pooled[i].second) observed_rank_sum += static_cast<long>(i + 1);
  const long base = static_cast<long>(nl * (nl + 1) / 2);
  const long u_obs = observed_rank_sum - base;
  // Compare doubled deviations to stay in integers.
  const long mean2 = static_cast<long>(nl * right.size());
  const long dev_obs = std::labs(2 * u_obs - mean2);

  std::uint64_t extreme = 0;
  std::uint64_t count = 0;
  const std::uint32_t limit = 1u << total;
  for (std::uint32_t mask = 0; mask < limit; ++mask) {
    if (static_cast<std::size_t>(__builtin_popcount(mask)) != nl) continue;
    long rank_sum = 0;
    for (std::size_t i = 0; i < total; ++i)
      if (mask & (1u << i)) rank_sum += static_cast<long>(i + 1);
    ++count;
    if (std::labs(2 * (rank_sum - base) - mean2) >= dev_obs) ++extreme;
  }
  return {static_cast<double>(u_obs),
          static_cast<double>(extreme) / static_cast<double>(count), false};
}

/// Two-sample Kolmogorov-Smirnov with the asymptotic Kolmogorov p-value.
inline TestOutcome ks_two_sample(std::span<const double> left, std::span<const double> right) {
  detail::require_size(left, 1, "empty sample");
  detail::require_size(right, 1, "empty sample");
  thread_local std::vector<double> a, b;
  a.assign(left.begin(), left.end());
  b.assign(right.begin(), right.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  if (a.front() == a.back() && b.front() == b.back() && a.front() == b.front())
    return detail::degenerate_outcome();

  const double nl = static_cast<double>(a.size());
  const double nr = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / nl - static_cast<double>(j) / nr));
  }
  const double ne = nl * nr / (nl + nr);
  const double sq = std::sqrt(ne);
  const double lambda = (sq + 0.12 + 0.11 / sq) * d;
  return detail::finite_outcome(d, kolmogorov_q(lambda));
}

/// F-test for equality of variances, statistic s2_left / s2_right,
/// two-sided p = 2 min(P(F <= f), P(F >= f)).
inline TestOutcome f_variance(std::span<const double> left, std::span<const double> right) {
  detail::require_size(left, 2, "F-test needs at least 2 observations per sample");
  detail::require_size(right, 2, "F-test needs at least 2 observations per sample");
  const auto ml = detail::moments(left);
  const auto mr = detail::moments(right);
  if (ml.var == 0.0 && mr.var == 0.0) return detail::degenerate_outcome();
  const double d1 = static_cast<double>(left.size() - 1);
  const double d2 = static_cast<double>(right.size() - 1);
  if (mr.var == 0.0) return detail::finite_outcome(std::numeric_limits<double>::infinity(), 0.0);
  const double f = ml.var / mr.var;
  const double p = 2.0 * std::min(f_cdf(f, d1, d2), f_sf(f, d1, d2));
  return detail::finite_outcome(f, std::min(p, 1.0));
}

namespace detail {

inline TestOutcome mean_difference_outcome(double diff, double se2, double df) {
  if (se2 == 0.0) {
    if (diff == 0.0) return degenerate_outcome();
    return finite_outcome(std::copysign(std::numeric_limits<double>::infinity(), diff), 0.0);
  }
  const double t = diff / std::sqrt(se2);
  return finite_outcome(t, student_t_two_sided(t, df));
}

}  // namespace detail

/// Student two-sample t-test with pooled variance. statistic sign follows
/// mean(left) - mean(right).
inline TestOutcome t_pooled(std::span<const double> left, std::span<const double> right) {
  detail::require_size(left, 2, "t-test needs at least 2 observations per sample");
  detail::require_size(right, 2, "t-test needs at least 2 observations per sample");
  const auto ml = detail::moments(left);
  const auto mr = detail::moments(right);
  const double nl = static_cast<double>(left.size());
  const double nr = static_cast<double>(right.size());
  const double df = nl + nr - 2.0;
  const double sp2 = ((nl - 1.0) * ml.var + (nr - 1.0) * mr.var) / df;
  return detail::mean_difference_outcome(ml.mean - mr.mean, sp2 * (1.0 / nl + 1.0 / nr), df);
}

/// Welch t-test with Welch-Satterthwaite degrees of freedom.
inline TestOutcome t_welch(std::span<const double> left, std::span<const double> right) {
  detail::require_size(left, 2, "t-test needs at least 2 observations per sample");
  detail::require_size(right, 2, "t-test needs at least 2 observations per sample");
  const auto ml = detail::moments(left);
  const auto mr = detail::moments(right);
  const double nl = static_cast<double>(left.size());
  const double nr = static_cast<double>(right.size());
  const double vl = ml.var / nl;
  const double vr = mr.var / nr;
  const double se2 = vl + vr;
  const double df = se2 > 0.0 ? se2 * se2 / (vl * vl / (nl - 1.0) + vr * vr / (nr - 1.0)) : 1.0;
  return detail::mean_difference_outcome(ml.mean - mr.mean, se2, df);
}

/// Difference of OLS slopes between the two windows, each fitted against
/// its own local index. statistic = (b_right - b_left) / sqrt(se2_l + se2_r).
inline TestOutcome slope_shift(std::span<const double> left, std::span<const double> right) {
  detail::require_size(left, 3, "slope test needs at least 3 observations per window");
  detail::require_size(right, 3, "slope test needs at least 3 observations per window");
  const auto fl = detail::fit_line(left);
  const auto fr = detail::fit_line(right);
  const double vl = fl.slope_var;
  const double vr = fr.slope_var;
  const double se2 = vl + vr;
  const double dfl = static_cast<double>(left.size()) - 2.0;
  const double dfr = static_cast<double>(right.size()) - 2.0;
  const double df = se2 > 0.0 ? se2 * se2 / (vl * vl / dfl + vr * vr / dfr) : 1.0;
  return detail::mean_difference_outcome(fr.slope - fl.slope, se2, df);
}

/// Test of a non-zero OLS slope on the right window alone; the left window
/// is accepted for interface uniformity and ignored.
inline TestOutcome slope_change(std::span<const double> /*left*/, std::span<const double> right) {
  detail::require_size(right, 3, "slope test needs at least 3 observations per window");
  const auto fr = detail::fit_line(right);
  return detail::mean_difference_outcome(fr.slope, fr.slope_var,
                                         static_cast<double>(right.size()) - 2.0);
}

inline TestOutcome run_test(TestKind kind, std::span<const double> left,
                            std::span<const double> right) {
  switch (kind) {
    case TestKind::MannWhitneyU: return mann_whitney_u(left, right);
    case TestKind::KolmogorovSmirnov: return ks_two_sample(left, right);
    case TestKind::FVariance: return f_variance(left, right);
    case TestKind::TPooled: return t_pooled(left, right);
    case TestKind::TWelch: return t_welch(left, right);
    case TestKind::SlopeShift: return slope_shift(left, right);
    case TestKind::SlopeChange: return slope_change(left, right);
  }
  throw std::invalid_argument("unknown test kind");
}

}  // namespace indagg
