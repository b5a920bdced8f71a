#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "metarg/config.hpp"
#include "metarg/episode.hpp"
#include "metarg/recall.hpp"

namespace metarg {

// One JSON object per line, keys sorted. Record types:
//   header         engine, version, task, resolved config
//   episode_start  structure, codebook, ZSCT test set, permutation
//   step           one listener turn (task "referential") or recall turn
//   episode_end    status "ok" with tallies, or "failed" with the error
enum class Task { referential, recall };
std::string_view to_string(Task task);
Task task_from_string(std::string_view text);

struct RecallStepRecord {
  std::uint64_t episode = 0;
  RecallPhase phase = RecallPhase::present;
  int shot = 1;
  int game = 0;
  LatentStimulus target;
  // Queried dimension; empty on present turns.
  std::optional<int> query;
  // Answered value; empty for a no-op.
  std::optional<int> answer;
  double reward = 0.0;
  std::optional<bool> correct;

  friend bool operator==(const RecallStepRecord&, const RecallStepRecord&) = default;
};

std::string header_line(const RunConfig& config, Task task);
std::string episode_start_line(const MetaEpisode& episode);
std::string step_line(const StepRecord& record);
std::string recall_step_line(const RecallStepRecord& record);
std::string episode_end_line(std::uint64_t episode, const EpisodeSummary& summary);
std::string recall_end_line(std::uint64_t episode, const RecallSummary& summary);
std::string failed_episode_line(Task task, std::uint64_t episode, std::string_view error);

StepRecord parse_step(const nlohmann::json& j);
RecallStepRecord parse_recall_step(const nlohmann::json& j);

// Parses one line; throws malformed-trace naming `line_no`.
nlohmann::json parse_trace_line(std::string_view line, std::size_t line_no);
// Canonical form: parse then dump. Idempotent on lines produced here.
std::string canonical_line(std::string_view line);

// --- summaries ---------------------------------------------------------------

struct GroupKey {
  std::string task;
  int o_samples = 0;
  int shots = 0;
  int distractors = 0;
  bool permute = false;
  // Listener kind, or recall agent kind for recall traces.
  std::string agent;

  friend auto operator<=>(const GroupKey&, const GroupKey&) = default;
};

struct Interval {
  double mean = 0.0;
  double low = 0.0;
  double high = 0.0;
};

struct GroupSummary {
  GroupKey key;
  int episodes = 0;
  int failed = 0;
  // Referential: ZSCT accuracy. Recall: unused.
  Interval zsct;
  long long test_correct = 0;
  long long test_total = 0;
  // Per shot: train accuracy (referential) or recall accuracy (recall).
  std::vector<Interval> shots;
  std::vector<long long> shot_correct;
  std::vector<long long> shot_total;
};

struct TraceSummary {
  std::vector<GroupSummary> groups;

  const GroupSummary* find(const GroupKey& key) const;
  nlohmann::json to_json() const;
};

inline constexpr int kBootstrapResamples = 1000;

// Means are over episodes of per-episode accuracy; intervals are 95%
// percentile bootstraps over episodes from a fixed seed per group.
class TraceSummarizer {
 public:
  explicit TraceSummarizer(int resamples = kBootstrapResamples) : resamples_(resamples) {}

  void consume(std::string_view line);
  void consume(const nlohmann::json& record, std::size_t line_no);
  TraceSummary finish() const;

 private:
  struct Group {
    int ok = 0;
    int failed = 0;
    std::vector<double> zsct;
    long long test_correct = 0;
    long long test_total = 0;
    std::vector<std::vector<double>> shots;
    std::vector<long long> shot_correct;
    std::vector<long long> shot_total;
  };

  int resamples_;
  std::size_t line_no_ = 0;
  std::optional<GroupKey> current_;
  std::vector<std::pair<GroupKey, Group>> groups_;

  Group& group();
};

TraceSummary summarize_traces(std::istream& in, int resamples = kBootstrapResamples);

// 95% percentile bootstrap of the mean.
Interval bootstrap_mean(const std::vector<double>& values, int resamples, Rng& rng);

}  // namespace metarg
