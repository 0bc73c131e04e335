#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <sstream>

#include "indagg/io.hpp"
#include "indagg/signalgen.hpp"
#include "indagg/stattests.hpp"

using namespace indagg;

namespace {

double mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sd(std::span<const double> v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

double kurtosis(std::span<const double> v) {
  const double m = mean(v);
  double m2 = 0.0, m4 = 0.0;
  for (double x : v) {
    m2 += (x - m) * (x - m);
    m4 += std::pow(x - m, 4);
  }
  m2 /= static_cast<double>(v.size());
  m4 /= static_cast<double>(v.size());
  return m4 / (m2 * m2);
}

}  // namespace

TEST_CASE("draw_length stays in [100, 200] with the uniform mean", "[signalgen]") {
  Rng rng(42);
  double sum = 0.0;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    const int n = draw_length(rng);
    REQUIRE(n >= 100);
    REQUIRE(n <= 200);
    sum += n;
  }
  const double sigma = std::sqrt((101.0 * 101.0 - 1.0) / 12.0) / std::sqrt(static_cast<double>(draws));
  CHECK(std::fabs(sum / draws - 150.0) < 3.0 * sigma);

  Rng a(7), b(7);
  CHECK(draw_length(a) == draw_length(b));
}

TEST_CASE("draw_change_point bounds", "[signalgen]") {
  CHECK(change_point_low(100) == 20);
  CHECK(change_point_high(100) == 80);
  CHECK(change_point_low(105) == 21);
  CHECK(change_point_high(105) == 84);

  Rng rng(1);
  std::set<int> seen;
  for (int i = 0; i < 100000; ++i) {
    const int tau = draw_change_point(rng, 100);
    REQUIRE(tau >= 20);
    REQUIRE(tau <= 80);
    seen.insert(tau);
  }
  CHECK(seen.size() == 61);
}

TEST_CASE("class 0 Gaussian signals are centred noise", "[signalgen]") {
  const auto spec = preset_a();
  int within = 0;
  for (int r = 0; r < 1000; ++r) {
    Rng rng = make_stream(3, "t", static_cast<std::uint64_t>(r));
    const auto rec = generate_signal(rng, ShiftClass::None, spec);
    CHECK_FALSE(rec.change_point.has_value());
    if (std::fabs(mean(rec.values)) < 4.0 / std::sqrt(rec.n())) ++within;
  }
  CHECK(within >= 990);
}

TEST_CASE("mean shift on set A lands in the configured range on average", "[signalgen]") {
  const auto spec = preset_a();
  double total = 0.0;
  const int reps = 2000;
  for (int r = 0; r < reps; ++r) {
    Rng rng = make_stream(5, "t", static_cast<std::uint64_t>(r));
    const auto rec = generate_signal(rng, ShiftClass::Mean, spec);
    const auto tau = static_cast<std::size_t>(*rec.change_point);
    const std::span<const double> v(rec.values);
    total += mean(v.subspan(tau)) - mean(v.subspan(0, tau));
  }
  const double avg = total / reps;
  CHECK(avg > 1.01);
  CHECK(avg < 5.0);
  CHECK(std::fabs(avg - 3.005) < 0.15);
}

TEST_CASE("trend drift starts at zero at the change point", "[signalgen]") {
  DatasetSpec spec = preset_a();
  spec.slope_range = {0.02, 0.02};
  for (int r = 0; r < 50; ++r) {
    Rng rng = make_stream(9, "t", static_cast<std::uint64_t>(r));
    Rng replay = rng;
    const auto rec = generate_signal(rng, ShiftClass::Trend, spec);

    // Replay the documented draw order: length, change point, slope, noise.
    const int n = draw_length(replay);
    const int tau = draw_change_point(replay, n);
    const double slope = std::uniform_real_distribution<double>(0.02, 0.02)(replay);
    std::normal_distribution<double> g(0.0, 1.0);
    REQUIRE(rec.n() == n);
    REQUIRE(*rec.change_point == tau);
    for (int i = 0; i < n; ++i) {
      const double noise = g(replay);
      const double drift = i >= tau ? slope * (i - tau) : 0.0;
      REQUIRE(rec.values[static_cast<std::size_t>(i)] == Catch::Approx(noise + drift).margin(1e-12));
    }
  }
}

TEST_CASE("generate_signal rejects labels outside 0..3", "[signalgen]") {
  Rng rng(1);
  CHECK_THROWS_AS(generate_signal(rng, static_cast<ShiftClass>(4), preset_a()), std::invalid_argument);
  CHECK_THROWS_AS(generate_signal(rng, static_cast<ShiftClass>(-1), preset_a()), std::invalid_argument);
}

TEST_CASE("generate_dataset counts, invariants and determinism", "[signalgen]") {
  const auto data = generate_dataset(11, preset_a());
  REQUIRE(data.size() == 6000);
  std::array<int, 4> counts{};
  for (const auto& rec : data) {
    ++counts[static_cast<std::size_t>(to_int(rec.label))];
    REQUIRE(rec.n() >= 100);
    REQUIRE(rec.n() <= 200);
    REQUIRE((rec.label == ShiftClass::None) == !rec.change_point.has_value());
    if (rec.change_point) {
      REQUIRE(*rec.change_point >= change_point_low(rec.n()));
      REQUIRE(*rec.change_point <= change_point_high(rec.n()));
    }
    for (double v : rec.values) REQUIRE(std::isfinite(v));
  }
  CHECK(counts == std::array<int, 4>{3000, 1000, 1000, 1000});

  const auto small = scaled(preset_b(), 0.02);
  std::ostringstream a, b;
  io::write_signals(a, generate_dataset(99, small));
  io::write_signals(b, generate_dataset(99, small));
  CHECK(a.str() == b.str());

  // Signal i depends only on (seed, i): a larger class-0 count leaves the
  // earlier class-0 records unchanged.
  auto bigger = small;
  bigger.counts[3] += 5;
  const auto x = generate_dataset(99, small);
  const auto y = generate_dataset(99, bigger);
  for (int i = 0; i < small.counts[0]; ++i) CHECK(x[static_cast<std::size_t>(i)] == y[static_cast<std::size_t>(i)]);
}

TEST_CASE("set C noise is heavier-tailed than Gaussian", "[signalgen]") {
  const auto c = generate_dataset(4, scaled(preset_c(), 0.1));
  const auto a = generate_dataset(4, scaled(preset_a(), 0.1));
  auto avg_kurtosis = [](const std::vector<SignalRecord>& d) {
    double total = 0.0;
    for (const auto& rec : d) {
      const auto tau = static_cast<std::size_t>(rec.change_point.value_or(rec.n()));
      total += kurtosis(std::span<const double>(rec.values).subspan(0, tau));
    }
    return total / static_cast<double>(d.size());
  };
  CHECK(avg_kurtosis(c) > avg_kurtosis(a));
}

TEST_CASE("pre-change noise is exchangeable between halves", "[signalgen]") {
  const double alpha = 0.05;
  const int reps = 5000;
  int rejections = 0;
  for (int r = 0; r < reps; ++r) {
    Rng rng = make_stream(21, "t", static_cast<std::uint64_t>(r));
    const auto rec = generate_signal(rng, ShiftClass::None, preset_a());
    const std::span<const double> v(rec.values);
    const auto half = v.size() / 2;
    if (mann_whitney_u(v.subspan(0, half), v.subspan(half, half)).p_value < alpha) ++rejections;
  }
  const double rate = static_cast<double>(rejections) / reps;
  CHECK(std::fabs(rate - alpha) <= 3.0 * std::sqrt(alpha * (1 - alpha) / reps));
}

TEST_CASE("variance shift raises the post-change spread", "[signalgen]") {
  DatasetSpec spec = preset_a();
  spec.std_shift_range = {1.5, 5.0};
  int larger = 0;
  const int reps = 1000;
  for (int r = 0; r < reps; ++r) {
    Rng rng = make_stream(8, "t", static_cast<std::uint64_t>(r));
    const auto rec = generate_signal(rng, ShiftClass::Variance, spec);
    const auto tau = static_cast<std::size_t>(*rec.change_point);
    const std::span<const double> v(rec.values);
    if (sd(v.subspan(tau)) / sd(v.subspan(0, tau)) > 1.0) ++larger;
  }
  CHECK(larger >= 950);
}
