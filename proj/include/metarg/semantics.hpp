#pragma once

#include <compare>
#include <cstddef>
#include <span>
#include <vector>

#include "metarg/rng.hpp"

namespace metarg {

// One symbolic value per latent dimension, 0-indexed: values[i] in [0, d(i)).
struct LatentStimulus {
  std::vector<int> values;

  std::size_t size() const { return values.size(); }
  int operator[](std::size_t i) const { return values[i]; }

  auto operator<=>(const LatentStimulus&) const = default;
};

// The tuple (d(i)): number of symbolic values on every latent dimension.
class SemanticStructure {
 public:
  SemanticStructure() = default;
  // Throws invalid-bounds unless dims is non-empty and every d(i) >= 2.
  explicit SemanticStructure(std::vector<int> dims);

  const std::vector<int>& dims() const { return dims_; }
  int dim(std::size_t i) const { return dims_[i]; }
  int n_dim() const { return static_cast<int>(dims_.size()); }
  int max_dim() const;
  std::size_t space_size() const;
  // Sum of d(i): length of the one-hot encoding.
  std::size_t ohe_size() const;

  bool contains(const LatentStimulus& latent) const;
  // Row-major rank of a latent in lexicographic order, and its inverse.
  std::size_t flat_index(const LatentStimulus& latent) const;
  LatentStimulus from_flat(std::size_t index) const;

  friend bool operator==(const SemanticStructure&, const SemanticStructure&) = default;

 private:
  std::vector<int> dims_;
};

struct ZsctSplit {
  std::vector<LatentStimulus> train;  // lexicographic order
  std::vector<LatentStimulus> test;   // lexicographic order
  double holdout_fraction = 0.0;
};

inline constexpr double kDefaultHoldoutFraction = 0.2;

// Draws every d(i) independently and uniformly from [v_min, v_max].
SemanticStructure sample_structure(Rng& rng, int n_dim, int v_min, int v_max);

// All latents of the space in lexicographic order.
std::vector<LatentStimulus> enumerate_space(const SemanticStructure& structure);

// True when every (dimension, value) pair occurs in at least one stimulus.
bool covers_all_values(const SemanticStructure& structure, std::span<const LatentStimulus> stimuli);

// Shuffles the space and greedily moves stimuli to the test set, skipping any
// stimulus whose removal would leave a (dimension, value) pair absent from
// train. Requested test size is max(1, floor(fraction * |space|)); the result
// may be smaller when coverage forbids more holdouts.
ZsctSplit make_zsct_split(const SemanticStructure& structure, double holdout_fraction, Rng& rng);

}  // namespace metarg
