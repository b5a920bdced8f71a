#include "metarg/validation.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <sstream>

#include <fmt/core.h>

#include "metarg/agents.hpp"
#include "metarg/batch.hpp"
#include "metarg/metrics.hpp"
#include "metarg/scs.hpp"
#include "metarg/semantics.hpp"

namespace metarg {

bool within_binomial_ci(long long k, long long n, double p) {
  if (n <= 0) return false;
  const double half = 1.96 * std::sqrt(p * (1.0 - p) / static_cast<double>(n));
  return std::abs(static_cast<double>(k) / static_cast<double>(n) - p) <= half;
}

namespace {

using Clock = std::chrono::steady_clock;

CheckResult timed(std::string name, double limit, const std::function<bool(std::string&)>& body) {
  CheckResult r;
  r.name = std::move(name);
  r.limit_seconds = limit;
  const auto t0 = Clock::now();
  try {
    r.passed = body(r.detail);
  } catch (const std::exception& e) {
    r.passed = false;
    r.detail = std::string("exception: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  if (limit > 0 && r.seconds >= limit) {
    r.passed = false;
    r.detail += fmt::format(" [runtime {:.2f}s exceeds {:.0f}s]", r.seconds, limit);
  }
  return r;
}

struct Tally {
  long long correct = 0;
  long long total = 0;
  double rate() const { return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0; }
};

Tally zsct_tally(const RunConfig& config) {
  std::ostringstream sink;
  const auto result = run_batch(config, Task::referential, sink);
  Tally t;
  for (const auto& g : result.summary.groups) {
    t.correct += g.test_correct;
    t.total += g.test_total;
  }
  if (result.failed > 0) throw std::runtime_error(fmt::format("{} episodes failed", result.failed));
  return t;
}

RunConfig oracle_config(int o, int s, bool reveal, OraclePerception perception) {
  RunConfig c;
  c.seed = 2024;
  c.episodes = 50;
  c.workers = 1;
  c.listener = ListenerKind::oracle;
  c.perception = perception;
  c.episode.n_dim = 3;
  c.episode.v_min = 2;
  c.episode.v_max = 5;
  c.episode.shots = s;
  c.episode.game.k_distractors = 3;
  c.episode.game.o_samples = o;
  c.episode.game.reveal_target_after_decision = reveal;
  return c;
}

std::string strip_header(const std::string& trace) { return trace.substr(trace.find('\n') + 1); }

}  // namespace

CheckResult check_codebook_invariants() {
  return timed("codebook_invariants", 10.0, [](std::string& detail) {
    Rng rng = derive_rng(SeedPath{1, {"validate", "codebooks"}});
    int ok = 0;
    const int total = 10000;
    for (int c = 0; c < total; ++c) {
      const int n_dim = rng.uniform_int(1, 6);
      const int v_max = rng.uniform_int(2, 10);
      const auto structure = sample_structure(rng, n_dim, 2, v_max);
      const auto codebook = build_codebook(structure, rng);
      bool good = true;
      for (int i = 0; i < n_dim; ++i) {
        const int d = structure.dim(static_cast<std::size_t>(i));
        const double w = 2.0 / d;
        for (int v = 0; v < d; ++v) {
          const double lo = -1.0 + v * w;
          const double hi = v + 1 == d ? 1.0 : -1.0 + (v + 1) * w;
          const double mu = codebook.mu(i, v);
          const double sigma = codebook.sigma(i, v);
          good = good && mu >= lo && mu <= hi && sigma >= w / 12.0 - 1e-15 && sigma <= w / 6.0 + 1e-15;
        }
      }
      ok += good;
    }
    detail = fmt::format("{}/{} codebooks satisfy mu-in-section and sigma bounds", ok, total);
    return ok == total;
  });
}

CheckResult check_shape_invariance() {
  return timed("shape_invariance", 0.0, [](std::string& detail) {
    Rng rng = derive_rng(SeedPath{1, {"validate", "shape"}});
    const SemanticStructure small({2, 2, 2}), large({5, 5, 5});
    const auto cb_small = build_codebook(small, rng);
    const auto cb_large = build_codebook(large, rng);
    const auto scs_small = sample_scs(cb_small, LatentStimulus{{1, 0, 1}}, rng).size();
    const auto scs_large = sample_scs(cb_large, LatentStimulus{{4, 2, 0}}, rng).size();
    const auto ohe_small = encode_ohe(small, LatentStimulus{{1, 0, 1}}).size();
    const auto ohe_large = encode_ohe(large, LatentStimulus{{4, 2, 0}}).size();
    detail = fmt::format("SCS lengths {} and {}, OHE lengths {} and {}", scs_small, scs_large, ohe_small, ohe_large);
    return scs_small == 3 && scs_large == 3 && ohe_small == 6 && ohe_large == 15;
  });
}

CheckResult check_split_coverage() {
  return timed("zsct_split_coverage", 5.0, [](std::string& detail) {
    int ok = 0;
    const int total = 1000;
    for (int e = 0; e < total; ++e) {
      const SeedPath path = SeedPath{3, {}}.child("episode", static_cast<std::uint64_t>(e));
      Rng srng = derive_rng(path.child("structure"));
      const auto structure = sample_structure(srng, 3, 2, 5);
      Rng rng = derive_rng(path.child("split"));
      const auto split = make_zsct_split(structure, kDefaultHoldoutFraction, rng);
      std::vector<LatentStimulus> all = split.train;
      all.insert(all.end(), split.test.begin(), split.test.end());
      std::sort(all.begin(), all.end());
      const bool partition = std::adjacent_find(all.begin(), all.end()) == all.end() &&
                             all == enumerate_space(structure);
      ok += partition && !split.test.empty() && covers_all_values(structure, split.train);
    }
    detail = fmt::format("{}/{} splits are coverage-safe partitions with a non-empty test set", ok, total);
    return ok == total;
  });
}

CheckResult check_posdis_language() {
  return timed("posdis_language", 5.0, [](std::string& detail) {
    double worst = 0.0;
    for (const auto& dims : std::vector<std::vector<int>>{{5, 5, 5}, {4, 2, 3}, {2, 2}, {3, 5, 2, 4}}) {
      const auto score = posdis(posdis_language(SemanticStructure(dims), 10));
      worst = std::max(worst, score.degenerate ? 1.0 : std::abs(score.value - 1.0));
    }
    detail = fmt::format("max |posdis - 1| = {:.3g} over (5,5,5), (4,2,3), (2,2), (3,5,2,4)", worst);
    return worst <= 1e-9;
  });
}

CheckResult check_oracle() {
  return timed("oracle_listener", 120.0, [](std::string& detail) {
    bool pass = true;
    std::string out;
    for (int oi = 0; oi < 2; ++oi) {
      for (int si = 0; si < 2; ++si) {
        const int o = oi == 0 ? 1 : 4;
        const int s = si + 1;
        const auto exact = zsct_tally(oracle_config(o, s, true, OraclePerception::exact));
        const auto exact_nr = zsct_tally(oracle_config(o, s, false, OraclePerception::exact));
        const auto cb = zsct_tally(oracle_config(o, s, true, OraclePerception::codebook));
        const auto cb_nr = zsct_tally(oracle_config(o, s, false, OraclePerception::codebook));
        pass = pass && exact.correct == exact.total && exact_nr.rate() >= frozen::kOracleExactNoReveal &&
               cb.rate() >= frozen::kOracleCodebookReveal[oi][si] &&
               cb_nr.rate() >= frozen::kOracleCodebookNoReveal[oi][si];
        out += fmt::format(" O={} S={}: exact {}/{} and {}/{} without reveal, codebook {}/{} and {}/{};", o, s,
                           exact.correct, exact.total, exact_nr.correct, exact_nr.total, cb.correct, cb.total,
                           cb_nr.correct, cb_nr.total);
      }
    }
    detail = "ZSCT" + out;
    return pass;
  });
}

CheckResult check_cheat_language() {
  return timed("cheat_language", 120.0, [](std::string& detail) {
    RunConfig c;
    c.seed = 99;
    c.episodes = 50;
    c.speaker = SpeakerKind::cheat;
    c.listener = ListenerKind::cheat;
    c.episode.permute_vocab = false;
    const auto off = zsct_tally(c);
    c.episode.permute_vocab = true;
    const auto on = zsct_tally(c);
    detail = fmt::format("permutation off {:.4f} ({}/{}), on {:.4f} ({}/{})", off.rate(), off.correct, off.total,
                         on.rate(), on.correct, on.total);
    return off.rate() >= 0.95 && within_binomial_ci(on.correct, on.total, 0.25);
  });
}

CheckResult check_chance_baselines() {
  return timed("chance_baselines", 60.0, [](std::string& detail) {
    RunConfig c;
    c.seed = 2024;
    c.episodes = 1000;
    c.listener = ListenerKind::random;
    const auto listener = zsct_tally(c);

    c.recall_agent = RecallAgentKind::random;
    std::ostringstream sink;
    const auto recall = run_batch(c, Task::recall, sink);
    long long k = 0, n = 0;
    for (const auto& g : recall.summary.groups)
      for (std::size_t s = 0; s < g.shot_total.size(); ++s) {
        k += g.shot_correct[s];
        n += g.shot_total[s];
      }
    detail = fmt::format("random listener {:.4f} ({}/{}) vs 0.25, random recall {:.4f} ({}/{}) vs 0.2",
                         listener.rate(), listener.correct, listener.total, n ? double(k) / n : 0.0, k, n);
    return within_binomial_ci(listener.correct, listener.total, 0.25) && within_binomial_ci(k, n, 0.2);
  });
}

CheckResult check_recall_gap() {
  return timed("recall_gap", 300.0, [](std::string& detail) {
    RunConfig c;
    c.seed = 7;
    c.episodes = 200;
    c.episode.shots = 2;
    const auto second_shot = [&](RecallAgentKind agent, Representation repr) {
      c.recall_agent = agent;
      c.representation = repr;
      std::ostringstream sink;
      const auto result = run_batch(c, Task::recall, sink);
      const auto& g = result.summary.groups.at(0);
      return Tally{g.shot_correct.at(1), g.shot_total.at(1)};
    };
    const auto ohe = second_shot(RecallAgentKind::ohe_reader, Representation::ohe);
    const auto scs = second_shot(RecallAgentKind::scs_solver, Representation::scs);
    detail = fmt::format("second shot: OHE reader {:.4f} ({}/{}), SCS solver {:.4f} ({}/{}), chance 0.2", ohe.rate(),
                         ohe.correct, ohe.total, scs.rate(), scs.correct, scs.total);
    return ohe.total > 0 && ohe.correct == ohe.total && scs.rate() >= frozen::kRecallSolverSecondShot &&
           scs.rate() > 0.2;
  });
}

CheckResult check_determinism() {
  return timed("determinism", 0.0, [](std::string& detail) {
    bool same = true;
    for (const Task task : {Task::referential, Task::recall}) {
      RunConfig c;
      c.seed = 31337;
      c.episodes = 40;
      c.episode.shots = 2;
      c.episode.game.o_samples = 4;
      c.perception = OraclePerception::codebook;
      std::ostringstream one, eight;
      c.workers = 1;
      run_batch(c, task, one, Execution::serial);
      c.workers = 8;
      run_batch(c, task, eight, Execution::parallel);
      same = same && strip_header(one.str()) == strip_header(eight.str());
    }
    detail = same ? "1 vs 8 workers: episode traces byte-identical (referential and recall)"
                  : "episode traces differ between 1 and 8 workers";
    return same;
  });
}

CheckResult check_metric_invariances() {
  return timed("metric_invariances", 0.0, [](std::string& detail) {
    Rng rng = derive_rng(SeedPath{1, {"validate", "metrics"}});
    double worst_pos = 0.0, worst_bos = 0.0, worst_top = 0.0;
    for (int t = 0; t < 200; ++t) {
      const auto structure = sample_structure(rng, rng.uniform_int(1, 4), 2, 5);
      const int vocab = 10;
      std::vector<LanguageRow> rows;
      for (auto& latent : enumerate_space(structure)) {
        std::vector<int> message;
        if (t % 2 == 0) {
          message = posdis_speak(latent, vocab);
        } else {
          const int len = rng.uniform_int(1, 5);
          for (int j = 0; j < len; ++j) message.push_back(rng.uniform_int(0, vocab));
        }
        rows.push_back({std::move(latent), std::move(message)});
      }
      const LanguageTable table(rows);
      const auto perm = VocabPermutation::sample(vocab, rng);
      for (auto& row : rows) row.message = apply_permutation(perm, row.message);
      const LanguageTable permuted(rows);
      worst_pos = std::max(worst_pos, std::abs(posdis(table).value - posdis(permuted).value));
      worst_bos = std::max(worst_bos, std::abs(bosdis(table).value - bosdis(permuted).value));
      worst_top = std::max(worst_top, std::abs(topographic_similarity(table).value -
                                               topographic_similarity(permuted).value));
    }
    detail = fmt::format("max change under permutation: posdis {:.3g}, bosdis {:.3g}, topsim {:.3g}", worst_pos,
                         worst_bos, worst_top);
    return worst_pos <= 1e-12 && worst_bos <= 1e-12 && worst_top <= 1e-12;
  });
}

std::vector<CheckResult> run_validation_suite() {
  return {check_codebook_invariants(), check_shape_invariance(), check_split_coverage(),
          check_posdis_language(),     check_oracle(),           check_cheat_language(),
          check_chance_baselines(),    check_recall_gap(),       check_determinism(),
          check_metric_invariances()};
}

std::string format_check(const CheckResult& r) {
  return fmt::format("{} {:<24} {:7.2f}s  {}", r.passed ? "PASS" : "FAIL", r.name, r.seconds, r.detail);
}

}  // namespace metarg
