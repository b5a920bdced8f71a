#pragma once

#include <string>
#include <vector>

namespace metarg {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
  double limit_seconds = 0.0;  // 0: no runtime bound
};

// Frozen regression values, measured once with the seeds used below.
namespace frozen {
// Oracle ZSCT over 50 episodes, master seed 2024, pooled over test games.
inline constexpr double kOracleExactNoReveal = 1.0;
// Decoding oracle, indexed [O=1, O=4][S=1, S=2]; 371 test games per cell.
inline constexpr double kOracleCodebookReveal[2][2] = {{370.0 / 371, 370.0 / 371}, {368.0 / 371, 368.0 / 371}};
inline constexpr double kOracleCodebookNoReveal[2][2] = {{368.0 / 371, 370.0 / 371}, {366.0 / 371, 368.0 / 371}};
// Recall: structure-inference solver, 200 episodes, master seed 7, shot 2.
inline constexpr double kRecallSolverSecondShot = 7003.0 / 8346;
}  // namespace frozen

// z = 1.96 normal interval around p for k successes in n trials.
bool within_binomial_ci(long long k, long long n, double p);

// Each check is one acceptance criterion of the engine.
CheckResult check_codebook_invariants();
CheckResult check_shape_invariance();
CheckResult check_split_coverage();
CheckResult check_posdis_language();
CheckResult check_oracle();
CheckResult check_cheat_language();
CheckResult check_chance_baselines();
CheckResult check_recall_gap();
CheckResult check_determinism();
CheckResult check_metric_invariances();

std::vector<CheckResult> run_validation_suite();
std::string format_check(const CheckResult& result);

}  // namespace metarg
