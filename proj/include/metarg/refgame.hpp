#pragma once

#include <optional>
#include <span>
#include <vector>

#include "metarg/rng.hpp"
#include "metarg/scs.hpp"
#include "metarg/semantics.hpp"

namespace metarg {

inline constexpr int kEos = 0;

struct GameConfig {
  int k_distractors = 3;
  bool descriptive = true;
  double target_present_prob = 1.0;
  int o_samples = 1;
  // 0 selects n_dim + 1 (one token per dimension plus EoS).
  int sentence_len = 0;
  // Tokens 1..vocab_size; 0 is EoS.
  int vocab_size = 10;
  int rounds = 1;
  double reward_correct = 1.0;
  double reward_incorrect = 0.0;
  bool reveal_target_after_decision = false;

  void validate() const;
  // "No target" is a legal answer only when the target can actually be absent.
  bool no_target_legal() const { return descriptive && target_present_prob < 1.0; }
  int resolved_sentence_len(int n_dim) const { return sentence_len > 0 ? sentence_len : n_dim + 1; }
  int decision_count() const { return k_distractors + 1; }
};

class Decision {
 public:
  enum class Kind { no_op, candidate, no_target };

  static Decision no_op() { return Decision(Kind::no_op, -1); }
  static Decision no_target() { return Decision(Kind::no_target, -1); }
  static Decision pick(int index) { return Decision(Kind::candidate, index); }

  // Wire encoding: candidate index >= 0, no-op = -1, no-target = -2.
  static Decision from_code(int code);
  int code() const;

  Kind kind() const { return kind_; }
  int index() const { return index_; }
  bool is_no_op() const { return kind_ == Kind::no_op; }

  friend bool operator==(const Decision&, const Decision&) = default;

 private:
  Decision(Kind kind, int index) : kind_(kind), index_(index) {}
  Kind kind_;
  int index_;
};

struct ListenerAction {
  int token = kEos;
  Decision decision = Decision::no_op();

  friend bool operator==(const ListenerAction&, const ListenerAction&) = default;
};

enum class Turn { communication, decision };

struct SpeakerObservation {
  ScsStimulus stimulus;
  // Ground-truth latent of the described stimulus, for rule-based speakers.
  LatentStimulus latent;
  int round = 0;
};

struct ListenerObservation {
  std::vector<ScsStimulus> views;
  std::vector<int> message;
  int round = 0;
  Turn turn = Turn::decision;
};

class Speaker {
 public:
  virtual ~Speaker() = default;
  virtual std::vector<int> speak(const SpeakerObservation& obs) const = 0;
};

// Object-centric views: every latent owns o_samples fixed SCS samples for the
// lifetime of an episode. view(latent, j) is a pure function of the seed path,
// the latent, and j.
class ViewPool {
 public:
  ViewPool(const ScsCodebook& codebook, int o_samples, SeedPath path);

  int o_samples() const { return o_samples_; }
  ScsStimulus view(const LatentStimulus& latent, int sample) const;

 private:
  const ScsCodebook* codebook_;
  int o_samples_;
  SeedPath path_;
};

struct GameState {
  // The stimulus the speaker describes.
  LatentStimulus target;
  std::vector<LatentStimulus> candidates;
  // Position of the target among candidates; empty when a descriptive game
  // drew a target-absent candidate set.
  std::optional<int> target_index;
  ScsStimulus speaker_view;
  std::vector<ScsStimulus> listener_views;
  std::vector<int> message;
  int round = 0;
  bool resolved = false;
};

struct DecisionOutcome {
  double reward = 0.0;
  bool correct = false;
  bool revealed = false;
  // Only meaningful when revealed; empty means the target was absent.
  std::optional<int> target_index;
};

// Draws K distractors uniformly from bucket \ {target}. When the bucket holds
// fewer than K other stimuli the remainder is drawn from fallback. Throws
// bucket-too-small when both together cannot supply the candidates.
GameState new_game(Rng& rng, std::span<const LatentStimulus> bucket, std::span<const LatentStimulus> fallback,
                   const LatentStimulus& target, const ViewPool& views, const GameConfig& config, int sentence_len);

inline GameState new_game(Rng& rng, std::span<const LatentStimulus> bucket, const LatentStimulus& target,
                          const ViewPool& views, const GameConfig& config, int sentence_len) {
  return new_game(rng, bucket, {}, target, views, config, sentence_len);
}

SpeakerObservation speaker_view(const GameState& state);
ListenerObservation listener_view(const GameState& state, const GameConfig& config);
DecisionOutcome resolve_decision(GameState& state, const ListenerAction& action, const GameConfig& config);

}  // namespace metarg
