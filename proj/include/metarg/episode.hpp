#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "metarg/refgame.hpp"
#include "metarg/rng.hpp"
#include "metarg/scs.hpp"
#include "metarg/semantics.hpp"

namespace metarg {

struct EpisodeConfig {
  int n_dim = 3;
  int v_min = 2;
  int v_max = 5;
  int shots = 1;
  GameConfig game;
  double holdout_fraction = kDefaultHoldoutFraction;
  bool permute_vocab = true;
  SeedPath seed;

  void validate() const;
  int sentence_len() const { return game.resolved_sentence_len(n_dim); }
};

// Bijection on tokens 1..vocab_size; EoS (0) is always fixed.
class VocabPermutation {
 public:
  static VocabPermutation identity(int vocab_size);
  static VocabPermutation sample(int vocab_size, Rng& rng);
  // mapping[0] must be 0 and mapping must be a bijection on [0, vocab_size].
  static VocabPermutation from_mapping(std::vector<int> mapping);

  int vocab_size() const { return static_cast<int>(mapping_.size()) - 1; }
  int apply(int token) const;
  VocabPermutation inverse() const;
  const std::vector<int>& mapping() const { return mapping_; }
  bool is_identity() const;

 private:
  std::vector<int> mapping_;
};

// Throws out-of-range for tokens outside [0, vocab_size].
std::vector<int> apply_permutation(const VocabPermutation& perm, std::span<const int> tokens);

enum class Phase { train, test, done };
std::string_view to_string(Phase phase);
Phase phase_from_string(std::string_view text);

struct StepRecord {
  std::uint64_t episode = 0;
  Phase phase = Phase::train;
  // 1-based shot within the phase (the test shot is shot 1 of the test phase).
  int shot = 1;
  // Game index within the episode.
  int game = 0;
  int round = 0;
  LatentStimulus target;
  std::vector<LatentStimulus> candidates;
  std::optional<int> target_index;
  // Message as seen by the listener, after permutation.
  std::vector<int> message;
  ListenerAction action;
  double reward = 0.0;
  // Empty on communication turns.
  std::optional<bool> correct;

  friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

struct StepResult {
  double reward = 0.0;
  bool game_done = false;
  bool episode_done = false;
  StepRecord record;
  std::optional<DecisionOutcome> outcome;
};

struct EpisodeSummary {
  std::vector<int> train_correct;
  std::vector<int> train_total;
  int test_correct = 0;
  int test_total = 0;

  double train_accuracy(int shot) const;
  double zsct_accuracy() const;
};

// One meta-referential-game episode: a sampled structure, codebook, ZSCT
// split and vocabulary permutation, then S shots over the train stimuli and
// a single shot over the test stimuli.
class MetaEpisode {
 public:
  MetaEpisode(EpisodeConfig config, std::shared_ptr<const Speaker> speaker, std::uint64_t episode_id = 0);

  MetaEpisode(MetaEpisode&&) noexcept = default;
  MetaEpisode& operator=(MetaEpisode&&) noexcept = default;

  const EpisodeConfig& config() const { return config_; }
  std::uint64_t id() const { return id_; }
  const SemanticStructure& structure() const { return structure_; }
  const ScsCodebook& codebook() const { return *codebook_; }
  const ZsctSplit& split() const { return split_; }
  const VocabPermutation& permutation() const { return permutation_; }
  Phase phase() const { return phase_; }
  int shot() const { return shot_; }
  int game_index() const { return game_counter_; }
  const std::vector<LatentStimulus>& schedule() const { return schedule_; }
  const GameState& game() const { return game_; }
  bool done() const { return phase_ == Phase::done; }
  std::size_t total_games() const;

  ListenerObservation observation() const;
  // Advances by one listener turn. Communication turns must carry a no-op
  // decision; the decision turn must not. Listener tokens are recorded but
  // never delivered to the speaker.
  StepResult step(const ListenerAction& action);
  // Throws not-done until the test shot has been played.
  EpisodeSummary summary() const;

 private:
  void start_game();
  void speak();
  void advance();

  EpisodeConfig config_;
  std::shared_ptr<const Speaker> speaker_;
  std::uint64_t id_;
  SemanticStructure structure_;
  std::unique_ptr<ScsCodebook> codebook_;
  ZsctSplit split_;
  VocabPermutation permutation_;
  std::unique_ptr<ViewPool> views_;
  Phase phase_ = Phase::train;
  int shot_ = 1;
  std::vector<LatentStimulus> schedule_;
  std::size_t position_ = 0;
  int game_counter_ = 0;
  GameState game_;
  EpisodeSummary acc_;
};

MetaEpisode begin_episode(const EpisodeConfig& config, std::shared_ptr<const Speaker> speaker,
                          std::uint64_t episode_id = 0);

}  // namespace metarg
