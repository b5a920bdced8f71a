#include "metarg/semantics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "metarg/error.hpp"

namespace metarg {

SemanticStructure::SemanticStructure(std::vector<int> dims) : dims_(std::move(dims)) {
  if (dims_.empty()) throw Error(ErrorCode::invalid_bounds, "structure needs at least one dimension");
  for (int d : dims_) {
    if (d < 2) throw Error(ErrorCode::invalid_bounds, "every dimension needs at least 2 values, got " + std::to_string(d));
  }
}

int SemanticStructure::max_dim() const { return dims_.empty() ? 0 : *std::max_element(dims_.begin(), dims_.end()); }

std::size_t SemanticStructure::space_size() const {
  std::size_t n = dims_.empty() ? 0 : 1;
  for (int d : dims_) n *= static_cast<std::size_t>(d);
  return n;
}

std::size_t SemanticStructure::ohe_size() const {
  std::size_t n = 0;
  for (int d : dims_) n += static_cast<std::size_t>(d);
  return n;
}

bool SemanticStructure::contains(const LatentStimulus& latent) const {
  if (latent.size() != dims_.size()) return false;
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    if (latent[i] < 0 || latent[i] >= dims_[i]) return false;
  }
  return true;
}

std::size_t SemanticStructure::flat_index(const LatentStimulus& latent) const {
  if (!contains(latent)) throw Error(ErrorCode::out_of_range, "latent does not belong to the structure");
  std::size_t index = 0;
  for (std::size_t i = 0; i < dims_.size(); ++i) index = index * dims_[i] + static_cast<std::size_t>(latent[i]);
  return index;
}

LatentStimulus SemanticStructure::from_flat(std::size_t index) const {
  if (index >= space_size()) throw Error(ErrorCode::out_of_range, "flat index beyond space size");
  LatentStimulus out{std::vector<int>(dims_.size())};
  for (std::size_t i = dims_.size(); i-- > 0;) {
    out.values[i] = static_cast<int>(index % dims_[i]);
    index /= dims_[i];
  }
  return out;
}

SemanticStructure sample_structure(Rng& rng, int n_dim, int v_min, int v_max) {
  if (n_dim < 1) throw Error(ErrorCode::invalid_bounds, "n_dim must be >= 1");
  if (v_min < 2 || v_min > v_max) {
    throw Error(ErrorCode::invalid_bounds,
                "need 2 <= v_min <= v_max, got [" + std::to_string(v_min) + ", " + std::to_string(v_max) + "]");
  }
  std::vector<int> dims(static_cast<std::size_t>(n_dim));
  for (auto& d : dims) d = rng.uniform_int(v_min, v_max);
  return SemanticStructure(std::move(dims));
}

std::vector<LatentStimulus> enumerate_space(const SemanticStructure& structure) {
  const std::size_t n = structure.space_size();
  std::vector<LatentStimulus> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) out.push_back(structure.from_flat(k));
  return out;
}

bool covers_all_values(const SemanticStructure& structure, std::span<const LatentStimulus> stimuli) {
  for (int i = 0; i < structure.n_dim(); ++i) {
    std::vector<bool> seen(static_cast<std::size_t>(structure.dim(i)), false);
    for (const auto& s : stimuli) seen[static_cast<std::size_t>(s[i])] = true;
    if (std::find(seen.begin(), seen.end(), false) != seen.end()) return false;
  }
  return true;
}

ZsctSplit make_zsct_split(const SemanticStructure& structure, double holdout_fraction, Rng& rng) {
  if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0)) {
    throw Error(ErrorCode::invalid_argument, "holdout fraction must lie in (0, 1)");
  }
  const std::size_t size = structure.space_size();
  if (size < 2) throw Error(ErrorCode::split_infeasible, "space too small to split");

  auto space = enumerate_space(structure);
  rng.shuffle(space);

  const auto requested = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(holdout_fraction * static_cast<double>(size))));

  // counts[i][v]: number of train stimuli with value v on dimension i.
  std::vector<std::vector<std::size_t>> counts;
  for (int d : structure.dims()) counts.emplace_back(static_cast<std::size_t>(d), size / static_cast<std::size_t>(d));

  std::vector<bool> held(size, false);
  std::size_t held_count = 0;
  for (std::size_t k = 0; k < size && held_count < requested; ++k) {
    const auto& s = space[k];
    bool removable = true;
    for (int i = 0; i < structure.n_dim() && removable; ++i) removable = counts[i][s[i]] > 1;
    if (!removable) continue;
    for (int i = 0; i < structure.n_dim(); ++i) --counts[i][s[i]];
    held[k] = true;
    ++held_count;
  }
  if (held_count == 0) throw Error(ErrorCode::split_infeasible, "no stimulus can be held out without breaking coverage");

  ZsctSplit split;
  split.holdout_fraction = holdout_fraction;
  for (std::size_t k = 0; k < size; ++k) (held[k] ? split.test : split.train).push_back(space[k]);
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

}  // namespace metarg
