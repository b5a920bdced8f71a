#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "metarg/rng.hpp"
#include "metarg/semantics.hpp"

namespace metarg {

// Value section v of a dimension with d values: [low, high), except the last
// section, which is closed at +1 so the partition covers [-1, +1].
struct Section {
  double low = -1.0;
  double high = 1.0;
  bool closed_high = false;

  double width() const { return high - low; }
  bool contains(double x) const { return x >= low && (x < high || (closed_high && x == high)); }
};

Section section_bounds(int d, int v);
// Index of the section containing x; x is clamped to [-1, +1] first.
int section_index(int d, double x);

// Admissible standard deviation range [w/12, w/6] for section width w = 2/d.
inline double sigma_min(int d) { return 2.0 / (12.0 * d); }
inline double sigma_max(int d) { return 2.0 / (6.0 * d); }

struct ScsStimulus {
  std::vector<double> coords;

  std::size_t size() const { return coords.size(); }
  friend bool operator==(const ScsStimulus&, const ScsStimulus&) = default;
};

struct OheStimulus {
  std::vector<std::uint8_t> bits;

  std::size_t size() const { return bits.size(); }
  friend bool operator==(const OheStimulus&, const OheStimulus&) = default;
};

// Per-dimension, per-value gaussian kernels over [-1, +1].
struct ScsCodebook {
  SemanticStructure structure;
  std::vector<std::vector<double>> mus;
  std::vector<std::vector<double>> sigmas;

  double mu(int dim, int value) const { return mus[dim][value]; }
  double sigma(int dim, int value) const { return sigmas[dim][value]; }
  // mu inside its section and sigma in [w/12, w/6] for every (dim, value).
  bool satisfies_invariants() const;
};

ScsCodebook build_codebook(const SemanticStructure& structure, Rng& rng);

inline constexpr int kTruncationAttempts = 100;

// N(mu, sigma) restricted to [-1, +1] by resampling; clamps after
// kTruncationAttempts rejections. sigma == 0 returns mu.
double sample_truncated_gaussian(double mu, double sigma, Rng& rng);

ScsStimulus sample_scs(const ScsCodebook& codebook, const LatentStimulus& latent, Rng& rng);

OheStimulus encode_ohe(const SemanticStructure& structure, const LatentStimulus& latent);

double gaussian_log_density(double x, double mu, double sigma);

struct DecodedStimulus {
  LatentStimulus latent;
  double log_likelihood = 0.0;
};

// Per-dimension argmax of the value densities; ties go to the lowest value.
DecodedStimulus decode_ml(const ScsCodebook& codebook, const ScsStimulus& stimulus);

// Per-dimension posterior over values under a uniform value prior:
// result[i][v] is proportional to N(x_i; mu_v, sigma_v).
std::vector<std::vector<double>> value_posteriors(const ScsCodebook& codebook, const ScsStimulus& stimulus);

struct InferenceOptions {
  // Midpoint grid over mu (within the section) and sigma (in [w/12, w/6]).
  int mu_points = 32;
  int sigma_points = 16;
  // Rule out any d that leaves a section empty. Valid only when every value
  // is known to have been observed (e.g. after a full pass over the space).
  bool require_all_sections = false;
};

// Posterior over d in [2, v_max] for one dimension.
struct DimensionPosterior {
  int v_min = 2;
  std::vector<double> probabilities;

  double probability(int d) const { return probabilities[static_cast<std::size_t>(d - v_min)]; }
  int map_estimate() const;
  // Natural-log entropy.
  double entropy() const;
};

// Codebook-free estimate of the number of value sections on one dimension.
// Each observation is assigned to its section under every candidate d (with
// probability 1/d); each non-empty section contributes its marginal
// likelihood under uniform priors on mu (within the section) and sigma (in
// [w/12, w/6]), integrated on a midpoint grid. The prior over d is uniform.
// Sufficient statistics make the cost independent of the number of
// observations per section.
DimensionPosterior infer_dimension(std::span<const double> observations, int v_max, InferenceOptions options = {});

std::vector<DimensionPosterior> infer_structure(const std::vector<std::vector<double>>& observations, int v_max,
                                                InferenceOptions options = {});

}  // namespace metarg
