#include "metarg/rng.hpp"

#include <cmath>

#include "metarg/error.hpp"

namespace metarg {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid-argument";
    case ErrorCode::invalid_bounds: return "invalid-bounds";
    case ErrorCode::split_infeasible: return "split-infeasible";
    case ErrorCode::out_of_range: return "out-of-range";
    case ErrorCode::bucket_too_small: return "bucket-too-small";
    case ErrorCode::resolved_game: return "resolved-game";
    case ErrorCode::illegal_action: return "illegal-action";
    case ErrorCode::not_done: return "not-done";
    case ErrorCode::vocab_too_small: return "vocab-too-small";
    case ErrorCode::codebook_mismatch: return "codebook-mismatch";
    case ErrorCode::empty_input: return "empty-input";
    case ErrorCode::malformed_trace: return "malformed-trace";
    case ErrorCode::protocol_violation: return "protocol-violation";
    case ErrorCode::io: return "io";
  }
  return "unknown";
}

std::uint64_t splitmix64_mix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

SeedPath SeedPath::child(std::string_view label) const {
  SeedPath out = *this;
  out.stream.emplace_back(label);
  return out;
}

SeedPath SeedPath::child(std::string_view label, std::uint64_t index) const {
  return child(std::string(label) + "/" + std::to_string(index));
}

std::uint64_t SeedPath::derive_seed() const {
  std::uint64_t h = splitmix64_mix(master_seed ^ 0x9E3779B97F4A7C15ULL);
  for (const auto& label : stream) h = splitmix64_mix(h ^ fnv1a64(label));
  return h;
}

std::string SeedPath::to_string() const {
  std::string out = std::to_string(master_seed) + ":";
  for (std::size_t i = 0; i < stream.size(); ++i) {
    if (i) out += '|';
    out += stream[i];
  }
  return out;
}

Rng derive_rng(const SeedPath& path) { return Rng(path.derive_seed()); }

double Rng::uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) {
  const double x = lo + (hi - lo) * uniform01();
  return x < hi ? x : lo;
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw Error(ErrorCode::invalid_argument, "Rng::below(0)");
  // Rejection on the top multiple of n keeps every residue equally likely.
  const std::uint64_t limit = max() - (max() % n + 1) % n;
  std::uint64_t x = engine_();
  while (x > limit) x = engine_();
  return x % n;
}

int Rng::uniform_int(int lo, int hi) {
  if (hi < lo) throw Error(ErrorCode::invalid_argument, "uniform_int with hi < lo");
  const auto span = static_cast<std::uint64_t>(static_cast<std::int64_t>(hi) - lo) + 1;
  return static_cast<int>(lo + static_cast<std::int64_t>(below(span)));
}

bool Rng::bernoulli(double p) {
  if (p >= 1.0) return true;
  if (p <= 0.0) return false;
  return uniform01() < p;
}

double Rng::normal() {
  for (;;) {
    const double u = 2.0 * uniform01() - 1.0;
    const double v = 2.0 * uniform01() - 1.0;
    const double s = u * u + v * v;
    if (s > 0.0 && s < 1.0) return u * std::sqrt(-2.0 * std::log(s) / s);
  }
}

}  // namespace metarg
