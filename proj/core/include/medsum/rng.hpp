#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace medsum {

// 64-bit linear congruential generator with fixed constants. Every shuffle,
// split, fold assignment and weight draw in the project goes through this
// generator so results are reproducible across platforms (and across
// reimplementations in other languages).
class Lcg64 {
 public:
  static constexpr std::uint64_t kMultiplier = 6364136223846793005ULL;
  static constexpr std::uint64_t kIncrement = 1442695040888963407ULL;

  explicit Lcg64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ = state_ * kMultiplier + kIncrement;
    return state_;
  }

  // Uniform integer in [0, n). Plain modulo; the bias is negligible for the
  // small n used here and keeps the generator trivial to reimplement.
  std::uint64_t below(std::uint64_t n) { return next() % n; }

  // Uniform double in [0, 1) built from the top 53 bits.
  double uniform01() {
    return static_cast<double>(next() >> 11) * (1.0 / 9007199254740992.0);
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // In-place Fisher-Yates, swapping from the back.
  template <class T>
  void shuffle(std::vector<T>& v) {
    if (v.size() < 2) return;
    for (std::size_t i = v.size() - 1; i > 0; --i) {
      std::size_t j = static_cast<std::size_t>(below(i + 1));
      std::swap(v[i], v[j]);
    }
  }

 private:
  std::uint64_t state_;
};

}  // namespace medsum
