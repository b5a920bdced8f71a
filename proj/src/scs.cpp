#include "metarg/scs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "metarg/error.hpp"

namespace metarg {

namespace {

double log_sum_exp(std::span<const double> xs) {
  double peak = -std::numeric_limits<double>::infinity();
  for (double x : xs) peak = std::max(peak, x);
  if (!std::isfinite(peak)) return peak;
  double acc = 0.0;
  for (double x : xs) acc += std::exp(x - peak);
  return peak + std::log(acc);
}

void require_conforming(const ScsCodebook& codebook, const LatentStimulus& latent) {
  if (!codebook.structure.contains(latent)) {
    throw Error(ErrorCode::codebook_mismatch, "latent does not conform to the codebook structure");
  }
}

}  // namespace

Section section_bounds(int d, int v) {
  if (d < 1 || v < 0 || v >= d) {
    throw Error(ErrorCode::out_of_range, "value " + std::to_string(v) + " outside [0, " + std::to_string(d) + ")");
  }
  Section s;
  s.low = -1.0 + 2.0 * v / d;
  s.high = v + 1 == d ? 1.0 : -1.0 + 2.0 * (v + 1) / d;
  s.closed_high = v + 1 == d;
  return s;
}

int section_index(int d, double x) {
  x = std::clamp(x, -1.0, 1.0);
  int v = std::clamp(static_cast<int>(std::floor((x + 1.0) * d / 2.0)), 0, d - 1);
  // Align with section_bounds exactly at the boundaries.
  if (v > 0 && x < section_bounds(d, v).low) --v;
  if (v + 1 < d && x >= section_bounds(d, v).high) ++v;
  return v;
}

bool ScsCodebook::satisfies_invariants() const {
  if (mus.size() != structure.dims().size() || sigmas.size() != mus.size()) return false;
  for (int i = 0; i < structure.n_dim(); ++i) {
    const int d = structure.dim(i);
    if (mus[i].size() != static_cast<std::size_t>(d) || sigmas[i].size() != mus[i].size()) return false;
    for (int v = 0; v < d; ++v) {
      if (!section_bounds(d, v).contains(mus[i][v])) return false;
      if (sigmas[i][v] < sigma_min(d) || sigmas[i][v] > sigma_max(d)) return false;
    }
  }
  return true;
}

ScsCodebook build_codebook(const SemanticStructure& structure, Rng& rng) {
  ScsCodebook cb;
  cb.structure = structure;
  for (int d : structure.dims()) {
    std::vector<double> mus(static_cast<std::size_t>(d));
    std::vector<double> sigmas(static_cast<std::size_t>(d));
    for (int v = 0; v < d; ++v) {
      const Section s = section_bounds(d, v);
      mus[v] = rng.uniform(s.low, s.high);
      sigmas[v] = rng.uniform(sigma_min(d), sigma_max(d));
    }
    cb.mus.push_back(std::move(mus));
    cb.sigmas.push_back(std::move(sigmas));
  }
  return cb;
}

double sample_truncated_gaussian(double mu, double sigma, Rng& rng) {
  if (sigma <= 0.0) return std::clamp(mu, -1.0, 1.0);
  double x = mu;
  for (int attempt = 0; attempt < kTruncationAttempts; ++attempt) {
    x = mu + sigma * rng.normal();
    if (x >= -1.0 && x <= 1.0) return x;
  }
  return std::clamp(x, -1.0, 1.0);
}

ScsStimulus sample_scs(const ScsCodebook& codebook, const LatentStimulus& latent, Rng& rng) {
  require_conforming(codebook, latent);
  ScsStimulus out;
  out.coords.reserve(latent.size());
  for (std::size_t i = 0; i < latent.size(); ++i) {
    const int v = latent[i];
    out.coords.push_back(sample_truncated_gaussian(codebook.mus[i][v], codebook.sigmas[i][v], rng));
  }
  return out;
}

OheStimulus encode_ohe(const SemanticStructure& structure, const LatentStimulus& latent) {
  if (!structure.contains(latent)) throw Error(ErrorCode::out_of_range, "latent does not conform to the structure");
  OheStimulus out;
  out.bits.assign(structure.ohe_size(), 0);
  std::size_t offset = 0;
  for (int i = 0; i < structure.n_dim(); ++i) {
    out.bits[offset + static_cast<std::size_t>(latent[i])] = 1;
    offset += static_cast<std::size_t>(structure.dim(i));
  }
  return out;
}

double gaussian_log_density(double x, double mu, double sigma) {
  const double z = (x - mu) / sigma;
  return -0.5 * z * z - std::log(sigma) - 0.5 * std::log(2.0 * std::numbers::pi);
}

DecodedStimulus decode_ml(const ScsCodebook& codebook, const ScsStimulus& stimulus) {
  const auto n = static_cast<std::size_t>(codebook.structure.n_dim());
  if (stimulus.size() != n) throw Error(ErrorCode::codebook_mismatch, "stimulus length differs from n_dim");
  DecodedStimulus out;
  out.latent.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    int best = 0;
    double best_ll = gaussian_log_density(stimulus.coords[i], codebook.mus[i][0], codebook.sigmas[i][0]);
    for (int v = 1; v < codebook.structure.dim(i); ++v) {
      const double ll = gaussian_log_density(stimulus.coords[i], codebook.mus[i][v], codebook.sigmas[i][v]);
      if (ll > best_ll) {
        best_ll = ll;
        best = v;
      }
    }
    out.latent.values[i] = best;
    out.log_likelihood += best_ll;
  }
  return out;
}

std::vector<std::vector<double>> value_posteriors(const ScsCodebook& codebook, const ScsStimulus& stimulus) {
  const auto n = static_cast<std::size_t>(codebook.structure.n_dim());
  if (stimulus.size() != n) throw Error(ErrorCode::codebook_mismatch, "stimulus length differs from n_dim");
  std::vector<std::vector<double>> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int d = codebook.structure.dim(i);
    std::vector<double> ll(static_cast<std::size_t>(d));
    for (int v = 0; v < d; ++v) ll[v] = gaussian_log_density(stimulus.coords[i], codebook.mus[i][v], codebook.sigmas[i][v]);
    const double norm = log_sum_exp(ll);
    for (double& x : ll) x = std::exp(x - norm);
    out[i] = std::move(ll);
  }
  return out;
}

int DimensionPosterior::map_estimate() const {
  const auto it = std::max_element(probabilities.begin(), probabilities.end());
  return v_min + static_cast<int>(it - probabilities.begin());
}

double DimensionPosterior::entropy() const {
  double h = 0.0;
  for (double p : probabilities) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

DimensionPosterior infer_dimension(std::span<const double> observations, int v_max, InferenceOptions options) {
  if (observations.empty()) throw Error(ErrorCode::empty_input, "infer_structure needs at least one observation");
  if (v_max < 2) throw Error(ErrorCode::invalid_bounds, "v_max must be >= 2");
  const int mu_points = options.mu_points;
  const int sigma_points = options.sigma_points;
  if (mu_points < 1 || sigma_points < 1) throw Error(ErrorCode::invalid_argument, "empty inference grid");

  const double log_grid = std::log(static_cast<double>(mu_points) * sigma_points);
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);

  DimensionPosterior post;
  post.v_min = 2;
  std::vector<double> log_evidence;
  std::vector<double> terms(static_cast<std::size_t>(mu_points) * sigma_points);

  for (int d = 2; d <= v_max; ++d) {
    // Per-section count, mean and centred sum of squares.
    std::vector<double> count(d, 0.0), sum(d, 0.0);
    std::vector<int> idx(observations.size());
    for (std::size_t k = 0; k < observations.size(); ++k) {
      idx[k] = section_index(d, observations[k]);
      count[idx[k]] += 1.0;
      sum[idx[k]] += observations[k];
    }
    std::vector<double> ss(d, 0.0);
    for (std::size_t k = 0; k < observations.size(); ++k) {
      const double dev = observations[k] - sum[idx[k]] / count[idx[k]];
      ss[idx[k]] += dev * dev;
    }

    double total = 0.0;
    if (options.require_all_sections && std::count(count.begin(), count.end(), 0.0) > 0) {
      log_evidence.push_back(-std::numeric_limits<double>::infinity());
      continue;
    }
    for (int v = 0; v < d; ++v) {
      if (count[v] == 0.0) continue;
      const Section s = section_bounds(d, v);
      const double n = count[v];
      const double mean = sum[v] / n;
      const double s_lo = sigma_min(d);
      const double s_step = (sigma_max(d) - s_lo) / sigma_points;
      const double m_step = s.width() / mu_points;
      std::size_t t = 0;
      for (int a = 0; a < mu_points; ++a) {
        const double mu = s.low + (a + 0.5) * m_step;
        const double dm = mean - mu;
        for (int b = 0; b < sigma_points; ++b) {
          const double sigma = s_lo + (b + 0.5) * s_step;
          terms[t++] = -n * (std::log(sigma) + half_log_2pi) - (ss[v] + n * dm * dm) / (2.0 * sigma * sigma);
        }
      }
      // Marginal over the kernel grid, times 1/d per observation for the
      // uniform choice of value.
      total += log_sum_exp(terms) - log_grid - n * std::log(static_cast<double>(d));
    }
    log_evidence.push_back(total);
  }

  const double norm = log_sum_exp(log_evidence);
  if (!std::isfinite(norm)) {
    // No hypothesis occupies every section: drop the constraint.
    options.require_all_sections = false;
    return infer_dimension(observations, v_max, options);
  }
  for (double le : log_evidence) post.probabilities.push_back(std::exp(le - norm));
  return post;
}

std::vector<DimensionPosterior> infer_structure(const std::vector<std::vector<double>>& observations, int v_max,
                                                InferenceOptions options) {
  if (observations.empty()) throw Error(ErrorCode::empty_input, "no dimensions observed");
  std::vector<DimensionPosterior> out;
  out.reserve(observations.size());
  for (const auto& obs : observations) out.push_back(infer_dimension(obs, v_max, options));
  return out;
}

}  // namespace metarg
