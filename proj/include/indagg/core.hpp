#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace indagg {

/// Shift class of a signal. The numeric order is the row order of every
/// confusion matrix in the library.
enum class ShiftClass : int { None = 0, Variance = 1, Mean = 2, Trend = 3 };

inline constexpr int kNumClasses = 4;

inline constexpr std::array<std::string_view, kNumClasses> kClassNames = {
    "no_change", "variance", "mean", "trend"};

inline ShiftClass shift_class_from_int(int code) {
  if (code < 0 || code >= kNumClasses)
    throw std::invalid_argument("shift class out of range: " + std::to_string(code));
  return static_cast<ShiftClass>(code);
}

inline constexpr int to_int(ShiftClass c) { return static_cast<int>(c); }

/// Raised for malformed user input (files, presets, flags). The CLI maps it
/// to exit code 2; every other exception maps to 1.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Rng = std::mt19937_64;

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline constexpr std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Seed of the named substream `tag` at position `index` under `master`.
/// Substreams are independent of the order in which they are requested.
inline constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                                           std::uint64_t index = 0) {
  std::uint64_t x = splitmix64(master ^ splitmix64(fnv1a(tag)));
  return splitmix64(x ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

inline Rng make_stream(std::uint64_t master, std::string_view tag, std::uint64_t index = 0) {
  return Rng(derive_seed(master, tag, index));
}

}  // namespace indagg
