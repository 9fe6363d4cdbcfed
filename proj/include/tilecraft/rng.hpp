#pragma once

#include <cstdint>
#include <span>
#include <utility>

namespace tilecraft {

// splitmix64. Every random draw in the simulator, the texture packs and the
// learners goes through this so that runs are reproducible bit-for-bit.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed = 0) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform in [0, n). Modulo reduction; the bias is below 2^-40 for every n used here.
  std::uint64_t below(std::uint64_t n) { return next() % n; }

  std::uint64_t state() const { return state_; }
  void set_state(std::uint64_t s) { state_ = s; }

 private:
  std::uint64_t state_;
};

// Portable Fisher-Yates (std::shuffle is implementation-defined).
template <typename T>
void shuffle(std::span<T> items, SplitMix64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::size_t j = rng.below(i);
    std::swap(items[i - 1], items[j]);
  }
}

// Seed for the k-th child stream of `master`.
inline std::uint64_t child_seed(std::uint64_t master, std::uint64_t k) {
  SplitMix64 rng(master ^ (0xD1B54A32D192ED03ull * (k + 1)));
  return rng.next();
}

}  // namespace tilecraft
