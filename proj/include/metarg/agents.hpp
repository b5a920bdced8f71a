#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "metarg/episode.hpp"
#include "metarg/refgame.hpp"
#include "metarg/rng.hpp"
#include "metarg/scs.hpp"

namespace metarg {

// --- speakers --------------------------------------------------------------

// Positional language: token l(i) + 1 at position i, then EoS, padded with EoS
// up to sentence_len (0 means n_dim + 1). Throws vocab-too-small when a value
// does not fit in the vocabulary.
std::vector<int> posdis_speak(const LatentStimulus& latent, int vocab_size, int sentence_len = 0);

class PosdisSpeaker final : public Speaker {
 public:
  PosdisSpeaker(int vocab_size, int sentence_len) : vocab_size_(vocab_size), sentence_len_(sentence_len) {}
  std::vector<int> speak(const SpeakerObservation& obs) const override;

 private:
  int vocab_size_;
  int sentence_len_;
};

// Analog-to-digital language: vocab_size uniform bins over [-1, +1], token k
// (1-based) covering [-1 + 2(k-1)/V, -1 + 2k/V). +1 maps to the last token.
int cheat_token(double coordinate, int vocab_size);
double cheat_bin_center(int token, int vocab_size);
std::vector<int> cheat_speak(const ScsStimulus& stimulus, int vocab_size, int sentence_len = 0);

class CheatSpeaker final : public Speaker {
 public:
  CheatSpeaker(int vocab_size, int sentence_len) : vocab_size_(vocab_size), sentence_len_(sentence_len) {}
  std::vector<int> speak(const SpeakerObservation& obs) const override;

 private:
  int vocab_size_;
  int sentence_len_;
};

// --- listeners -------------------------------------------------------------

// Picks the candidate closest (Euclidean) to the bin centres named by the
// first non-EoS tokens of the message.
ListenerAction cheat_decide(const ListenerObservation& obs, int vocab_size);

// Uniform over the legal decisions of the current turn.
ListenerAction random_decide(const ListenerObservation& obs, const GameConfig& config, Rng& rng);

// Constraint store for a positional language: which latent values each
// (position, token) pair may still denote on dimension `position`.
class OracleMemory {
 public:
  OracleMemory(SemanticStructure structure, int vocab_size);

  int positions() const { return structure_.n_dim(); }
  bool allows(int position, int token, int value) const;
  std::optional<int> confirmed(int position, int token) const;
  // Number of values still allowed for (position, token).
  int remaining(int position, int token) const;

  // Confirms token -> value at a position and prunes that value from every
  // other token at the same position. Contradictions are counted, never
  // applied: confirmed bindings are not retracted.
  void bind(int position, int token, int value);
  void exclude(int position, int token, int value);

  // Every content position of the message admits the latent's value.
  bool consistent(std::span<const int> message, const LatentStimulus& latent) const;
  // `trusted` (empty = all) masks the positions whose value is reliable.
  void learn_target(std::span<const int> message, const LatentStimulus& target, const std::vector<bool>& trusted = {});
  // The latent is known not to be the one described by the message: when all
  // but one position already confirm its values, the last one cannot.
  void learn_not_target(std::span<const int> message, const LatentStimulus& latent);
  // Probability that a stimulus with per-dimension value posteriors is
  // described by the message under the current constraints (log scale).
  double log_consistency(std::span<const int> message, const std::vector<std::vector<double>>& posteriors) const;

  std::size_t conflicts() const { return conflicts_; }
  std::size_t bound_count() const;

 private:
  std::size_t slot(int position, int token) const;
  void propagate(int position);
  void mark_seen(std::span<const int> message);

  SemanticStructure structure_;
  int vocab_size_;
  // allowed_[slot][value]
  std::vector<std::vector<bool>> allowed_;
  std::vector<std::optional<int>> confirmed_;
  // Tokens observed at a position. Only those are known to denote a value,
  // so only those are forced when a single value remains.
  std::vector<bool> seen_;
  std::size_t conflicts_ = 0;
};

// Decoded values whose posterior falls below this are never bound.
inline constexpr double kOracleBindConfidence = 0.99;

struct OracleChoice {
  ListenerAction action;
  std::vector<LatentStimulus> decoded;
  // confidence[j][i]: posterior of decoded[j][i].
  std::vector<std::vector<double>> confidence;
  std::vector<int> consistent;
};

// Decodes every candidate view with the ground-truth codebook. Bindings are
// only learned from decoded values with posterior >= kOracleBindConfidence.
OracleChoice oracle_decide(const OracleMemory& memory, const ListenerObservation& obs, const ScsCodebook& codebook,
                           const GameConfig& config, Rng& rng);
// Same decision rule with exact perception of the candidate latents.
OracleChoice oracle_decide_exact(const OracleMemory& memory, const ListenerObservation& obs,
                                 std::span<const LatentStimulus> candidates, const GameConfig& config, Rng& rng);
void oracle_update(OracleMemory& memory, std::span<const int> message, const OracleChoice& choice,
                   const DecisionOutcome& outcome);

class Listener {
 public:
  virtual ~Listener() = default;
  virtual ListenerAction act(const ListenerObservation& obs) = 0;
  virtual void observe(const DecisionOutcome& /*outcome*/) {}
};

// How the oracle perceives candidates: by decoding views with the codebook,
// or exactly, by reading the candidate latents from the environment. Exact
// perception isolates the binding logic from kernel overlap between
// neighbouring values, which no decoder can resolve.
enum class OraclePerception { codebook, exact };

std::string_view to_string(OraclePerception perception);
OraclePerception oracle_perception_from_string(std::string_view text);

class OracleListener final : public Listener {
 public:
  OracleListener(const ScsCodebook& codebook, GameConfig config, Rng rng);
  // The episode must outlive the listener.
  OracleListener(const MetaEpisode& episode, OraclePerception perception, Rng rng);

  ListenerAction act(const ListenerObservation& obs) override;
  void observe(const DecisionOutcome& outcome) override;
  const OracleMemory& memory() const { return memory_; }

 private:
  const ScsCodebook* codebook_;
  GameConfig config_;
  Rng rng_;
  OracleMemory memory_;
  const MetaEpisode* episode_ = nullptr;
  std::optional<OracleChoice> last_;
  std::vector<int> last_message_;
};

class CheatListener final : public Listener {
 public:
  explicit CheatListener(int vocab_size) : vocab_size_(vocab_size) {}
  ListenerAction act(const ListenerObservation& obs) override { return cheat_decide(obs, vocab_size_); }

 private:
  int vocab_size_;
};

class RandomListener final : public Listener {
 public:
  RandomListener(GameConfig config, Rng rng) : config_(std::move(config)), rng_(std::move(rng)) {}
  ListenerAction act(const ListenerObservation& obs) override { return random_decide(obs, config_, rng_); }

 private:
  GameConfig config_;
  Rng rng_;
};

enum class ListenerKind { oracle, cheat, random, external };
enum class SpeakerKind { posdis, cheat };

std::string_view to_string(ListenerKind kind);
std::string_view to_string(SpeakerKind kind);
ListenerKind listener_kind_from_string(std::string_view text);
SpeakerKind speaker_kind_from_string(std::string_view text);

std::shared_ptr<const Speaker> make_speaker(SpeakerKind kind, const EpisodeConfig& config);
// In-process listeners only; `external` throws invalid-argument. The oracle
// receives the episode's ground-truth codebook.
std::unique_ptr<Listener> make_listener(ListenerKind kind, const MetaEpisode& episode, Rng rng,
                                        OraclePerception perception = OraclePerception::exact);

}  // namespace metarg
