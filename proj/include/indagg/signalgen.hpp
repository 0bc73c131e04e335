#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "indagg/core.hpp"

namespace indagg {

inline constexpr int kMinLength = 100;
inline constexpr int kMaxLength = 200;

/// One simulated univariate series with its label and change point.
struct SignalRecord {
  std::string id;
  std::vector<double> values;
  ShiftClass label = ShiftClass::None;
  std::optional<int> change_point;  // absent iff label == None

  int n() const { return static_cast<int>(values.size()); }
  bool operator==(const SignalRecord&) const = default;
};

struct NoiseModel {
  enum class Kind { Gaussian, ScaledStudent };
  Kind kind = Kind::Gaussian;
  int df = 3;
  std::pair<double, double> scale_range{1.0, 1.0};  // ScaledStudent only
};

struct DatasetSpec {
  std::string name = "custom";
  NoiseModel noise;
  std::pair<double, double> mean_shift_range{1.01, 5.0};
  // Gaussian: post-change standard deviation. ScaledStudent: factor applied
  // to the per-signal scale.
  std::pair<double, double> std_shift_range{1.01, 5.0};
  std::pair<double, double> slope_range{0.02, 3.0};
  std::array<int, kNumClasses> counts{3000, 1000, 1000, 1000};
};

inline DatasetSpec preset_a() {
  DatasetSpec s;
  s.name = "A";
  return s;
}

inline DatasetSpec preset_b() {
  DatasetSpec s;
  s.name = "B";
  s.mean_shift_range = {0.505, 2.5};
  return s;
}

inline DatasetSpec preset_c() {
  DatasetSpec s;
  s.name = "C";
  s.noise = {NoiseModel::Kind::ScaledStudent, 3, {0.5, 3.0}};
  s.mean_shift_range = {0.3, 5.0};
  s.std_shift_range = {1.05, 5.0};
  s.slope_range = {0.02, 3.0};
  return s;
}

/// Looks up a preset by name ("A", "B" or "C"); throws InputError otherwise.
inline DatasetSpec dataset_preset(const std::string& name) {
  if (name == "A") return preset_a();
  if (name == "B") return preset_b();
  if (name == "C") return preset_c();
  throw InputError("unknown dataset preset: " + name);
}

/// Same spec with every class count multiplied by `fraction` (at least 1 each).
inline DatasetSpec scaled(DatasetSpec spec, double fraction) {
  for (auto& c : spec.counts)
    c = std::max(1, static_cast<int>(std::lround(c * fraction)));
  return spec;
}

inline int draw_length(Rng& rng) {
  return std::uniform_int_distribution<int>(kMinLength, kMaxLength)(rng);
}

inline int change_point_low(int n) { return (2 * n + 9) / 10; }
inline int change_point_high(int n) { return (8 * n) / 10; }

inline int draw_change_point(Rng& rng, int n) {
  return std::uniform_int_distribution<int>(change_point_low(n), change_point_high(n))(rng);
}

namespace detail {
inline double uniform(Rng& rng, std::pair<double, double> range) {
  return std::uniform_real_distribution<double>(range.first, range.second)(rng);
}
}  // namespace detail

/// Draws one labeled signal. Draw order: length, change point, shift
/// parameters, noise scale, then the n noise values.
inline SignalRecord generate_signal(Rng& rng, ShiftClass label, const DatasetSpec& spec) {
  const int code = to_int(label);
  if (code < 0 || code >= kNumClasses)
    throw std::invalid_argument("label outside {0..3}");

  SignalRecord rec;
  rec.label = label;
  const int n = draw_length(rng);
  int tau = n;
  if (label != ShiftClass::None) {
    tau = draw_change_point(rng, n);
    rec.change_point = tau;
  }

  double post_scale = 1.0;
  double mean_shift = 0.0;
  double slope = 0.0;
  switch (label) {
    case ShiftClass::Variance: post_scale = detail::uniform(rng, spec.std_shift_range); break;
    case ShiftClass::Mean: mean_shift = detail::uniform(rng, spec.mean_shift_range); break;
    case ShiftClass::Trend: slope = detail::uniform(rng, spec.slope_range); break;
    case ShiftClass::None: break;
  }

  double base_scale = 1.0;
  const bool student = spec.noise.kind == NoiseModel::Kind::ScaledStudent;
  if (student) base_scale = detail::uniform(rng, spec.noise.scale_range);

  std::normal_distribution<double> gauss(0.0, 1.0);
  std::student_t_distribution<double> student_t(static_cast<double>(spec.noise.df));

  rec.values.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double noise = student ? student_t(rng) : gauss(rng);
    const bool after = i >= tau;
    double x = noise * base_scale * (after ? post_scale : 1.0);
    if (after) x += mean_shift + slope * static_cast<double>(i - tau);
    rec.values[static_cast<std::size_t>(i)] = x;
  }
  return rec;
}

/// Records are ordered by class (all class 0, then 1, 2, 3). Signal i is
/// drawn from its own substream keyed by (master_seed, i).
inline std::vector<SignalRecord> generate_dataset(std::uint64_t master_seed,
                                                  const DatasetSpec& spec) {
  for (int c : spec.counts)
    if (c <= 0) throw std::invalid_argument("class counts must be positive");

  std::vector<SignalRecord> out;
  std::size_t index = 0;
  for (int c = 0; c < kNumClasses; ++c) {
    for (int j = 0; j < spec.counts[static_cast<std::size_t>(c)]; ++j, ++index) {
      Rng rng = make_stream(master_seed, "signal", index);
      SignalRecord rec = generate_signal(rng, static_cast<ShiftClass>(c), spec);
      std::string num = std::to_string(index);
      rec.id = spec.name + "-" + std::string(num.size() < 5 ? 5 - num.size() : 0, '0') + num;
      out.push_back(std::move(rec));
    }
  }
  return out;
}

}  // namespace indagg
