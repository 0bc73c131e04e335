#pragma once

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "indagg/core.hpp"
#include "indagg/parallel.hpp"
#include "indagg/signalgen.hpp"
#include "indagg/stattests.hpp"

namespace indagg {

inline constexpr int kSmoothingWidth = 5;

/// Requested window length. An adaptive size resolves to min(n - 2, len)
/// on a series of length n.
struct WindowSize {
  int len = 30;
  bool adaptive = false;

  int effective(int n) const { return adaptive ? std::min(n - 2, len) : len; }
  auto operator<=>(const WindowSize&) const = default;
};

/// Overlap value meaning "window length minus one", i.e. stride 1.
inline constexpr int kFullOverlap = -1;

struct WindowPlan {
  WindowSize size;
  int overlap = kFullOverlap;
  bool smoothed = false;

  int stride(int effective_len) const {
    if (overlap == kFullOverlap) return 1;
    return std::max(1, effective_len - overlap);
  }
  auto operator<=>(const WindowPlan&) const = default;
};

struct Aggregator {
  enum class Kind { Any, RateAtLeast, RunAtLeast, KofN };
  Kind kind = Kind::Any;
  double beta = 0.0;  // RateAtLeast / RunAtLeast
  int k = 0;          // KofN
  int n_conf = 0;     // KofN

  static Aggregator any() { return {}; }
  static Aggregator rate(double beta) { return {Kind::RateAtLeast, beta, 0, 0}; }
  static Aggregator run(double beta) { return {Kind::RunAtLeast, beta, 0, 0}; }
  static Aggregator k_of_n(int k, int n) { return {Kind::KofN, 0.0, k, n}; }

  bool operator==(const Aggregator&) const = default;
};

struct IndicatorSpec {
  std::string id;
  TestKind test = TestKind::MannWhitneyU;
  double alpha = 0.05;
  WindowPlan window;
  Aggregator aggregator;

  bool operator==(const IndicatorSpec&) const = default;
};

/// Trailing moving average: element j is mean(values[j .. j + width - 1]).
inline std::vector<double> moving_average(std::span<const double> values, int width) {
  if (width < 1) throw std::invalid_argument("moving_average: width must be >= 1");
  const auto w = static_cast<std::size_t>(width);
  if (values.size() < w) throw std::invalid_argument("moving_average: sequence shorter than width");
  std::vector<double> out(values.size() - w + 1);
  for (std::size_t j = 0; j < out.size(); ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < w; ++i) s += values[j + i];
    out[j] = s / static_cast<double>(w);
  }
  return out;
}

struct WindowPosition {
  int start = 0;
  int center = 0;
};

/// Window positions on a series of length n. Empty when the effective window
/// does not fit (or is too short to split).
inline std::vector<WindowPosition> window_positions(int n, const WindowPlan& plan) {
  std::vector<WindowPosition> out;
  const int w = plan.size.effective(n);
  if (w < 2 || n < w) return out;
  const int s = plan.stride(w);
  for (int start = 0; start + w <= n; start += s) out.push_back({start, start + w / 2});
  return out;
}

namespace detail {

inline std::vector<double> prepare_series(std::span<const double> signal, bool smoothed) {
  if (!smoothed) return {signal.begin(), signal.end()};
  if (signal.size() < static_cast<std::size_t>(kSmoothingWidth)) return {};
  return moving_average(signal, kSmoothingWidth);
}

inline TestOutcome test_at(TestKind test, std::span<const double> series, int start, int half) {
  return run_test(test, series.subspan(static_cast<std::size_t>(start), static_cast<std::size_t>(half)),
                  series.subspan(static_cast<std::size_t>(start + half), static_cast<std::size_t>(half)));
}

}  // namespace detail

/// Per-position rejections (p < alpha) of `test` over the windows of `plan`.
/// Smoothed plans run on the width-5 moving average of the signal.
inline std::vector<std::uint8_t> rejection_sequence(std::span<const double> signal, TestKind test,
                                                    double alpha, const WindowPlan& plan) {
  const auto series = detail::prepare_series(signal, plan.smoothed);
  const int n = static_cast<int>(series.size());
  const int half = plan.size.effective(n) / 2;
  std::vector<std::uint8_t> seq;
  for (const auto& pos : window_positions(n, plan))
    seq.push_back(detail::test_at(test, series, pos.start, half).p_value < alpha ? 1 : 0);
  return seq;
}

/// Threshold comparisons against beta * m carry this slack so that e.g.
/// 3 >= 0.3 * 10 holds despite rounding.
inline constexpr double kThresholdSlack = 1e-9;

inline std::uint8_t aggregate(std::span<const std::uint8_t> seq, const Aggregator& agg) {
  const std::size_t m = seq.size();
  if (m == 0) return 0;
  switch (agg.kind) {
    case Aggregator::Kind::Any:
      return std::any_of(seq.begin(), seq.end(), [](auto b) { return b != 0; }) ? 1 : 0;
    case Aggregator::Kind::RateAtLeast: {
      const auto sum = static_cast<double>(std::count(seq.begin(), seq.end(), std::uint8_t{1}));
      return sum + kThresholdSlack >= agg.beta * static_cast<double>(m) ? 1 : 0;
    }
    case Aggregator::Kind::RunAtLeast: {
      std::size_t best = 0, cur = 0;
      for (auto b : seq) {
        cur = b ? cur + 1 : 0;
        best = std::max(best, cur);
      }
      return static_cast<double>(best) + kThresholdSlack >= agg.beta * static_cast<double>(m) ? 1 : 0;
    }
    case Aggregator::Kind::KofN: {
      // Sequences shorter than n_conf are treated as a single truncated block.
      const std::size_t width = std::min<std::size_t>(m, static_cast<std::size_t>(agg.n_conf));
      int ones = 0;
      for (std::size_t i = 0; i < width; ++i) ones += seq[i];
      if (ones >= agg.k) return 1;
      for (std::size_t i = width; i < m; ++i) {
        ones += seq[i] - seq[i - width];
        if (ones >= agg.k) return 1;
      }
      return 0;
    }
  }
  return 0;
}

// ---------------------------------------------------------------------------
// Indicator ids: <test>_<w30|wn100>_a<alpha>_<any|rate0.3|run0.3|k2of5>_<s1|o5>_<raw|ma5>

namespace detail {

inline std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline double parse_double(std::string_view s, std::string_view id) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw std::invalid_argument("malformed indicator id: " + std::string(id));
  return v;
}

inline int parse_int(std::string_view s, std::string_view id) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw std::invalid_argument("malformed indicator id: " + std::string(id));
  return v;
}

}  // namespace detail

inline std::string make_indicator_id(const IndicatorSpec& s) {
  std::string id(test_tag(s.test));
  id += s.window.size.adaptive ? "_wn" : "_w";
  id += std::to_string(s.window.size.len);
  id += "_a" + detail::format_number(s.alpha);
  switch (s.aggregator.kind) {
    case Aggregator::Kind::Any: id += "_any"; break;
    case Aggregator::Kind::RateAtLeast: id += "_rate" + detail::format_number(s.aggregator.beta); break;
    case Aggregator::Kind::RunAtLeast: id += "_run" + detail::format_number(s.aggregator.beta); break;
    case Aggregator::Kind::KofN:
      id += "_k" + std::to_string(s.aggregator.k) + "of" + std::to_string(s.aggregator.n_conf);
      break;
  }
  id += s.window.overlap == kFullOverlap ? "_s1" : "_o" + std::to_string(s.window.overlap);
  id += s.window.smoothed ? "_ma5" : "_raw";
  return id;
}

inline IndicatorSpec parse_indicator_id(std::string_view id) {
  std::vector<std::string_view> parts;
  for (std::size_t pos = 0;;) {
    const auto next = id.find('_', pos);
    parts.push_back(id.substr(pos, next == std::string_view::npos ? next : next - pos));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  const auto bad = [&] { return std::invalid_argument("malformed indicator id: " + std::string(id)); };
  if (parts.size() != 6) throw bad();

  IndicatorSpec s;
  s.test = test_from_tag(parts[0]);

  auto w = parts[1];
  if (w.starts_with("wn")) {
    s.window.size = {detail::parse_int(w.substr(2), id), true};
  } else if (w.starts_with("w")) {
    s.window.size = {detail::parse_int(w.substr(1), id), false};
  } else {
    throw bad();
  }

  if (!parts[2].starts_with("a")) throw bad();
  s.alpha = detail::parse_double(parts[2].substr(1), id);

  auto agg = parts[3];
  if (agg == "any") {
    s.aggregator = Aggregator::any();
  } else if (agg.starts_with("rate")) {
    s.aggregator = Aggregator::rate(detail::parse_double(agg.substr(4), id));
  } else if (agg.starts_with("run")) {
    s.aggregator = Aggregator::run(detail::parse_double(agg.substr(3), id));
  } else if (agg.starts_with("k")) {
    const auto of = agg.find("of");
    if (of == std::string_view::npos) throw bad();
    s.aggregator = Aggregator::k_of_n(detail::parse_int(agg.substr(1, of - 1), id),
                                      detail::parse_int(agg.substr(of + 2), id));
  } else {
    throw bad();
  }

  if (parts[4] == "s1") {
    s.window.overlap = kFullOverlap;
  } else if (parts[4].starts_with("o")) {
    s.window.overlap = detail::parse_int(parts[4].substr(1), id);
  } else {
    throw bad();
  }

  if (parts[5] == "raw") s.window.smoothed = false;
  else if (parts[5] == "ma5") s.window.smoothed = true;
  else throw bad();

  s.id = std::string(id);
  if (make_indicator_id(s) != id) throw bad();
  return s;
}

// ---------------------------------------------------------------------------

/// Signals x indicators bit matrix, row-major.
struct IndicatorMatrix {
  std::vector<IndicatorSpec> specs;
  std::vector<std::string> row_ids;
  std::vector<ShiftClass> labels;
  std::vector<std::uint8_t> bits;

  std::size_t rows() const { return labels.size(); }
  std::size_t cols() const { return specs.size(); }
  std::uint8_t at(std::size_t r, std::size_t c) const { return bits[r * cols() + c]; }
  std::span<const std::uint8_t> row(std::size_t r) const {
    return std::span(bits).subspan(r * cols(), cols());
  }

  IndicatorMatrix select_rows(std::span<const std::size_t> idx) const {
    IndicatorMatrix out;
    out.specs = specs;
    out.bits.reserve(idx.size() * cols());
    for (auto r : idx) {
      out.row_ids.push_back(row_ids[r]);
      out.labels.push_back(labels[r]);
      auto rr = row(r);
      out.bits.insert(out.bits.end(), rr.begin(), rr.end());
    }
    return out;
  }

  IndicatorMatrix select_columns(std::span<const std::size_t> idx) const {
    IndicatorMatrix out;
    out.row_ids = row_ids;
    out.labels = labels;
    for (auto c : idx) out.specs.push_back(specs.at(c));
    out.bits.reserve(rows() * idx.size());
    for (std::size_t r = 0; r < rows(); ++r)
      for (auto c : idx) out.bits.push_back(at(r, c));
    return out;
  }

  std::vector<int> label_codes() const {
    std::vector<int> y;
    y.reserve(labels.size());
    for (auto l : labels) y.push_back(to_int(l));
    return y;
  }

  bool operator==(const IndicatorMatrix&) const = default;
};

namespace detail {

// Specs sharing (test, window size, smoothing) share one stride-1 p-value
// sequence; coarser strides read every s-th entry of it.
struct PValueGroup {
  TestKind test;
  WindowSize size;
  bool smoothed;
  auto key() const { return std::tuple(static_cast<int>(test), size, smoothed); }
};

inline void featurize_row_cached(std::span<const double> signal, std::span<const IndicatorSpec> specs,
                                 std::span<const PValueGroup> groups,
                                 std::span<const std::size_t> group_of,
                                 std::span<std::uint8_t> out) {
  std::vector<double> series[2];
  bool have[2] = {false, false};
  std::vector<std::vector<double>> pvalues(groups.size());
  std::vector<int> eff_len(groups.size(), 0);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const int si = groups[g].smoothed ? 1 : 0;
    if (!have[si]) {
      series[si] = prepare_series(signal, groups[g].smoothed);
      have[si] = true;
    }
    const auto& x = series[si];
    const int n = static_cast<int>(x.size());
    WindowPlan plan{groups[g].size, kFullOverlap, groups[g].smoothed};
    const int w = groups[g].size.effective(n);
    eff_len[g] = w;
    for (const auto& pos : window_positions(n, plan))
      pvalues[g].push_back(test_at(groups[g].test, x, pos.start, w / 2).p_value);
  }
  std::vector<std::uint8_t> seq;
  for (std::size_t c = 0; c < specs.size(); ++c) {
    const auto g = group_of[c];
    const auto& p = pvalues[g];
    const auto stride = static_cast<std::size_t>(specs[c].window.stride(eff_len[g]));
    seq.clear();
    for (std::size_t i = 0; i < p.size(); i += stride) seq.push_back(p[i] < specs[c].alpha ? 1 : 0);
    out[c] = aggregate(seq, specs[c].aggregator);
  }
}

}  // namespace detail

struct FeaturizeOptions {
  int jobs = 1;
  bool use_cache = true;
};

/// Evaluates every indicator on every signal. Cell (r, c) is
/// aggregate(rejection_sequence(signal r, spec c)).
inline IndicatorMatrix featurize(std::span<const SignalRecord> dataset,
                                 std::span<const IndicatorSpec> specs,
                                 FeaturizeOptions opts = {}) {
  if (specs.empty()) throw std::invalid_argument("featurize: empty indicator list");
  IndicatorMatrix m;
  m.specs.assign(specs.begin(), specs.end());
  for (const auto& rec : dataset) {
    m.row_ids.push_back(rec.id);
    m.labels.push_back(rec.label);
  }
  const std::size_t p = specs.size();
  m.bits.assign(dataset.size() * p, 0);

  std::vector<detail::PValueGroup> groups;
  std::vector<std::size_t> group_of(p);
  std::map<decltype(groups.front().key()), std::size_t> index;
  for (std::size_t c = 0; c < p; ++c) {
    detail::PValueGroup g{specs[c].test, specs[c].window.size, specs[c].window.smoothed};
    auto [it, inserted] = index.emplace(g.key(), groups.size());
    if (inserted) groups.push_back(g);
    group_of[c] = it->second;
  }

  parallel_for(dataset.size(), opts.jobs, [&](std::size_t r) {
    auto out = std::span(m.bits).subspan(r * p, p);
    const auto& values = dataset[r].values;
    if (opts.use_cache) {
      detail::featurize_row_cached(values, specs, groups, group_of, out);
    } else {
      for (std::size_t c = 0; c < p; ++c)
        out[c] = aggregate(rejection_sequence(values, specs[c].test, specs[c].alpha, specs[c].window),
                           specs[c].aggregator);
    }
  });
  return m;
}

}  // namespace indagg
