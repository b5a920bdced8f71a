#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "metarg/rng.hpp"
#include "metarg/scs.hpp"
#include "metarg/semantics.hpp"

namespace metarg {

enum class Representation { scs, ohe };
std::string_view to_string(Representation repr);
Representation representation_from_string(std::string_view text);

struct RecallConfig {
  int n_dim = 3;
  int v_min = 2;
  int v_max = 5;
  int shots = 2;
  Representation representation = Representation::scs;
  double reward_correct = 1.0;
  double reward_incorrect = 0.0;
  SeedPath seed;

  void validate() const;
  // Answers are 0-based values in [0, v_max).
  int answer_space() const { return v_max; }
};

enum class RecallPhase { present, query, done };
std::string_view to_string(RecallPhase phase);

struct RecallAction {
  bool no_op = true;
  int value = -1;

  static RecallAction noop() { return {}; }
  static RecallAction answer(int v) { return RecallAction{false, v}; }
};

struct RecallObservation {
  RecallPhase phase = RecallPhase::present;
  int shot = 1;
  int game = 0;
  // Present: the encoded stimulus (SCS coordinates or OHE bits). Query: empty.
  std::vector<double> stimulus;
  // Query: one-hot flag of the queried dimension. Present: all zero.
  std::vector<std::uint8_t> query;
};

struct RecallStepResult {
  RecallObservation observation;
  double reward = 0.0;
  bool done = false;
  std::optional<bool> correct;
};

struct RecallSummary {
  std::vector<int> correct;  // per shot
  std::vector<int> total;    // per shot

  double shot_accuracy(int shot) const;
  double second_shot_accuracy() const { return shot_accuracy(2); }
};

// Every game has two turns: the stimulus is presented (only no-op is legal),
// then one uniformly drawn dimension is queried and the agent answers its
// discrete value. The dimension is announced at query time.
class RecallEpisode {
 public:
  explicit RecallEpisode(RecallConfig config);

  const RecallConfig& config() const { return config_; }
  const SemanticStructure& structure() const { return structure_; }
  const std::optional<ScsCodebook>& codebook() const { return codebook_; }
  const std::vector<LatentStimulus>& schedule() const { return schedule_; }
  RecallPhase phase() const { return phase_; }
  int queried_dimension() const { return queried_; }
  std::size_t total_games() const { return schedule_.size(); }
  bool done() const { return phase_ == RecallPhase::done; }
  const LatentStimulus& current_latent() const { return schedule_[game_]; }

  RecallObservation observation() const;
  RecallStepResult step(const RecallAction& action);
  // Throws not-done before the last game is answered.
  RecallSummary summary() const;

 private:
  void present();

  RecallConfig config_;
  SemanticStructure structure_;
  std::optional<ScsCodebook> codebook_;
  std::vector<LatentStimulus> schedule_;
  std::size_t game_ = 0;
  RecallPhase phase_ = RecallPhase::present;
  int queried_ = 0;
  std::vector<double> view_;
  RecallSummary acc_;
};

RecallEpisode begin_recall_episode(const RecallConfig& config);

class RecallAgent {
 public:
  virtual ~RecallAgent() = default;
  virtual RecallAction act(const RecallObservation& obs) = 0;
};

// Segments OHE vectors into blocks from the positions of their ones: block i
// holds the i-th one, so its extent is the range of positions seen there.
class OheReader final : public RecallAgent {
 public:
  RecallAction act(const RecallObservation& obs) override;

 private:
  std::vector<int> lo_, hi_;
  std::vector<int> last_ones_;
};

// Infers the number of sections on the queried dimension from every
// coordinate seen so far, then answers the section holding the last one.
// From shot 2 on the whole space has been shown once, so every section must
// be occupied.
class ScsStructureSolver final : public RecallAgent {
 public:
  explicit ScsStructureSolver(int v_max, InferenceOptions options = {}) : v_max_(v_max), options_(options) {}
  RecallAction act(const RecallObservation& obs) override;

 private:
  int v_max_;
  InferenceOptions options_;
  std::vector<std::vector<double>> seen_;
  std::vector<double> last_;
};

class RandomRecaller final : public RecallAgent {
 public:
  RandomRecaller(int v_max, Rng rng) : v_max_(v_max), rng_(std::move(rng)) {}
  RecallAction act(const RecallObservation& obs) override;

 private:
  int v_max_;
  Rng rng_;
};

enum class RecallAgentKind { ohe_reader, scs_solver, random };
std::string_view to_string(RecallAgentKind kind);
RecallAgentKind recall_agent_from_string(std::string_view text);
std::unique_ptr<RecallAgent> make_recall_agent(RecallAgentKind kind, const RecallConfig& config, Rng rng,
                                               InferenceOptions inference = {});

// Plays one episode to completion.
RecallSummary run_recall_episode(RecallEpisode& episode, RecallAgent& agent);

}  // namespace metarg
