#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace metarg {

// A labeled seed stream. The derived generator is a pure function of
// (master_seed, stream), so any episode or sub-stream can be reproduced
// without replaying its siblings.
//
// Mixing: h0 = mix(master_seed ^ 0x9E3779B97F4A7C15), then for every label
// h = mix(h ^ fnv1a64(label)), where mix is the SplitMix64 finalizer. The
// generator is std::mt19937_64 seeded with h; all distributions below are
// implemented here rather than taken from <random> so that draws are
// bit-identical across standard library implementations.
struct SeedPath {
  std::uint64_t master_seed = 0;
  std::vector<std::string> stream;

  SeedPath child(std::string_view label) const;
  // Appends the single label "label/index".
  SeedPath child(std::string_view label, std::uint64_t index) const;

  std::uint64_t derive_seed() const;
  std::string to_string() const;

  friend bool operator==(const SeedPath&, const SeedPath&) = default;
};

std::uint64_t splitmix64_mix(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view text);

class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

  // [0, 1) with 53 bits of resolution.
  double uniform01();
  // [lo, hi)
  double uniform(double lo, double hi);
  // Unbiased integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n);
  // Inclusive range.
  int uniform_int(int lo, int hi);
  bool bernoulli(double p);
  // Standard normal via the Marsaglia polar method (second variate discarded).
  double normal();

  template <class T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      using std::swap;
      swap(items[i - 1], items[j]);
    }
  }

  template <class T>
  void shuffle(std::vector<T>& items) {
    shuffle(std::span<T>(items));
  }

 private:
  std::mt19937_64 engine_;
};

Rng derive_rng(const SeedPath& path);

}  // namespace metarg
