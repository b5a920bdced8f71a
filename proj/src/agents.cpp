#include "metarg/agents.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "metarg/error.hpp"

namespace metarg {

std::vector<int> posdis_speak(const LatentStimulus& latent, int vocab_size, int sentence_len) {
  const int n = static_cast<int>(latent.size());
  const int len = sentence_len > 0 ? sentence_len : n + 1;
  if (len < n + 1) throw Error(ErrorCode::invalid_argument, "sentence too short for one token per dimension plus EoS");
  std::vector<int> tokens(static_cast<std::size_t>(len), kEos);
  for (int i = 0; i < n; ++i) {
    const int token = latent[i] + 1;
    if (latent[i] < 0 || token > vocab_size) {
      throw Error(ErrorCode::vocab_too_small,
                  "value " + std::to_string(latent[i]) + " needs token " + std::to_string(token) + " but |V| = " +
                      std::to_string(vocab_size));
    }
    tokens[static_cast<std::size_t>(i)] = token;
  }
  return tokens;
}

std::vector<int> PosdisSpeaker::speak(const SpeakerObservation& obs) const {
  return posdis_speak(obs.latent, vocab_size_, sentence_len_);
}

int cheat_token(double coordinate, int vocab_size) {
  if (vocab_size < 1) throw Error(ErrorCode::vocab_too_small, "cheat language needs a non-empty vocabulary");
  const double x = std::clamp(coordinate, -1.0, 1.0);
  const int bin = static_cast<int>(std::floor((x + 1.0) * vocab_size / 2.0));
  return std::min(bin, vocab_size - 1) + 1;
}

double cheat_bin_center(int token, int vocab_size) {
  if (token < 1 || token > vocab_size) throw Error(ErrorCode::out_of_range, "token outside the cheat vocabulary");
  return -1.0 + (2.0 * token - 1.0) / vocab_size;
}

std::vector<int> cheat_speak(const ScsStimulus& stimulus, int vocab_size, int sentence_len) {
  const int n = static_cast<int>(stimulus.size());
  const int len = sentence_len > 0 ? sentence_len : n + 1;
  if (len < n + 1) throw Error(ErrorCode::invalid_argument, "sentence too short for one token per dimension plus EoS");
  std::vector<int> tokens(static_cast<std::size_t>(len), kEos);
  for (int i = 0; i < n; ++i) tokens[static_cast<std::size_t>(i)] = cheat_token(stimulus.coords[i], vocab_size);
  return tokens;
}

std::vector<int> CheatSpeaker::speak(const SpeakerObservation& obs) const {
  return cheat_speak(obs.stimulus, vocab_size_, sentence_len_);
}

ListenerAction cheat_decide(const ListenerObservation& obs, int vocab_size) {
  if (obs.turn == Turn::communication || obs.views.empty()) return {};
  const std::size_t n = obs.views.front().size();
  std::vector<double> analog;
  for (std::size_t i = 0; i < n && i < obs.message.size(); ++i) {
    const int t = obs.message[i];
    if (t == kEos) break;
    analog.push_back(cheat_bin_center(t, vocab_size));
  }
  int best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < obs.views.size(); ++j) {
    double dist = 0.0;
    for (std::size_t i = 0; i < analog.size(); ++i) {
      const double diff = obs.views[j].coords[i] - analog[i];
      dist += diff * diff;
    }
    if (dist < best_dist) {
      best_dist = dist;
      best = static_cast<int>(j);
    }
  }
  return ListenerAction{kEos, Decision::pick(best)};
}

ListenerAction random_decide(const ListenerObservation& obs, const GameConfig& config, Rng& rng) {
  if (obs.turn == Turn::communication) return {};
  const auto n = static_cast<std::uint64_t>(obs.views.size()) + (config.no_target_legal() ? 1 : 0);
  const auto pick = rng.below(n);
  if (pick == obs.views.size()) return ListenerAction{kEos, Decision::no_target()};
  return ListenerAction{kEos, Decision::pick(static_cast<int>(pick))};
}

// --- oracle ----------------------------------------------------------------

OracleMemory::OracleMemory(SemanticStructure structure, int vocab_size)
    : structure_(std::move(structure)), vocab_size_(vocab_size) {
  for (int i = 0; i < structure_.n_dim(); ++i) {
    for (int t = 0; t <= vocab_size_; ++t) {
      allowed_.emplace_back(static_cast<std::size_t>(structure_.dim(i)), true);
      confirmed_.emplace_back();
      seen_.push_back(false);
    }
  }
}

std::size_t OracleMemory::slot(int position, int token) const {
  if (position < 0 || position >= structure_.n_dim() || token < 1 || token > vocab_size_) {
    throw Error(ErrorCode::out_of_range, "no memory slot for position " + std::to_string(position) + ", token " +
                                             std::to_string(token));
  }
  return static_cast<std::size_t>(position) * static_cast<std::size_t>(vocab_size_ + 1) + static_cast<std::size_t>(token);
}

bool OracleMemory::allows(int position, int token, int value) const {
  const auto& a = allowed_[slot(position, token)];
  return value >= 0 && static_cast<std::size_t>(value) < a.size() && a[static_cast<std::size_t>(value)];
}

std::optional<int> OracleMemory::confirmed(int position, int token) const { return confirmed_[slot(position, token)]; }

int OracleMemory::remaining(int position, int token) const {
  const auto& a = allowed_[slot(position, token)];
  return static_cast<int>(std::count(a.begin(), a.end(), true));
}

std::size_t OracleMemory::bound_count() const {
  return static_cast<std::size_t>(std::count_if(confirmed_.begin(), confirmed_.end(), [](const auto& c) { return c.has_value(); }));
}

void OracleMemory::bind(int position, int token, int value) {
  const auto s = slot(position, token);
  if (confirmed_[s]) {
    if (*confirmed_[s] != value) ++conflicts_;
    return;
  }
  if (!allows(position, token, value)) {
    ++conflicts_;
    return;
  }
  confirmed_[s] = value;
  auto& a = allowed_[s];
  std::fill(a.begin(), a.end(), false);
  a[static_cast<std::size_t>(value)] = true;
  for (int other = 1; other <= vocab_size_; ++other) {
    if (other != token) allowed_[slot(position, other)][static_cast<std::size_t>(value)] = false;
  }
  propagate(position);
}

void OracleMemory::exclude(int position, int token, int value) {
  const auto s = slot(position, token);
  if (confirmed_[s]) {
    if (*confirmed_[s] == value) ++conflicts_;
    return;
  }
  allowed_[s][static_cast<std::size_t>(value)] = false;
  propagate(position);
}

void OracleMemory::propagate(int position) {
  // A token left with a single admissible value is forced to it.
  for (int t = 1; t <= vocab_size_; ++t) {
    const auto s = slot(position, t);
    if (!seen_[s] || confirmed_[s] || remaining(position, t) != 1) continue;
    const auto& a = allowed_[s];
    bind(position, t, static_cast<int>(std::find(a.begin(), a.end(), true) - a.begin()));
    return;  // bind() re-enters propagate
  }
}

bool OracleMemory::consistent(std::span<const int> message, const LatentStimulus& latent) const {
  const int n = std::min<int>(positions(), static_cast<int>(message.size()));
  for (int i = 0; i < n; ++i) {
    const int t = message[static_cast<std::size_t>(i)];
    if (t == kEos) continue;
    if (!allows(i, t, latent[static_cast<std::size_t>(i)])) return false;
  }
  return true;
}

void OracleMemory::mark_seen(std::span<const int> message) {
  const int n = std::min<int>(positions(), static_cast<int>(message.size()));
  for (int i = 0; i < n; ++i) {
    const int t = message[static_cast<std::size_t>(i)];
    if (t != kEos) seen_[slot(i, t)] = true;
  }
}

void OracleMemory::learn_target(std::span<const int> message, const LatentStimulus& target,
                                const std::vector<bool>& trusted) {
  mark_seen(message);
  const int n = std::min<int>(positions(), static_cast<int>(message.size()));
  for (int i = 0; i < n; ++i) {
    const int t = message[static_cast<std::size_t>(i)];
    if (t == kEos) continue;
    if (!trusted.empty() && !trusted[static_cast<std::size_t>(i)]) continue;
    bind(i, t, target[static_cast<std::size_t>(i)]);
  }
}

double OracleMemory::log_consistency(std::span<const int> message,
                                     const std::vector<std::vector<double>>& posteriors) const {
  const int n = std::min<int>(positions(), static_cast<int>(message.size()));
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const int t = message[static_cast<std::size_t>(i)];
    if (t == kEos) continue;
    const auto& a = allowed_[slot(i, t)];
    double p = 0.0;
    for (std::size_t v = 0; v < a.size(); ++v) {
      if (a[v]) p += posteriors[static_cast<std::size_t>(i)][v];
    }
    acc += std::log(p);
  }
  return acc;
}

void OracleMemory::learn_not_target(std::span<const int> message, const LatentStimulus& latent) {
  mark_seen(message);
  const int n = std::min<int>(positions(), static_cast<int>(message.size()));
  int open = -1;
  for (int i = 0; i < n; ++i) {
    const int t = message[static_cast<std::size_t>(i)];
    if (t == kEos) continue;
    const auto c = confirmed(i, t);
    if (c && *c == latent[static_cast<std::size_t>(i)]) continue;
    if (c) return;  // already distinguished on a confirmed position
    if (open >= 0) return;  // two open positions: nothing uniquely implied
    open = i;
  }
  if (open < 0) {
    ++conflicts_;
    return;
  }
  exclude(open, message[static_cast<std::size_t>(open)], latent[static_cast<std::size_t>(open)]);
}

namespace {

// Uniform among consistent candidates. With none consistent: "no target" when
// legal, otherwise uniform among the best-scoring candidates.
OracleChoice choose(const OracleMemory& memory, const ListenerObservation& obs, const GameConfig& config, Rng& rng,
                    OracleChoice choice, std::span<const double> scores) {
  for (std::size_t j = 0; j < choice.decoded.size(); ++j) {
    if (memory.consistent(obs.message, choice.decoded[j])) choice.consistent.push_back(static_cast<int>(j));
  }
  std::vector<int> pool = choice.consistent;
  if (pool.empty()) {
    if (config.no_target_legal()) {
      choice.action = ListenerAction{kEos, Decision::no_target()};
      return choice;
    }
    const double best = *std::max_element(scores.begin(), scores.end());
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (scores[j] >= best) pool.push_back(static_cast<int>(j));
    }
  }
  const auto k = static_cast<std::size_t>(rng.below(pool.size()));
  choice.action = ListenerAction{kEos, Decision::pick(pool[k])};
  return choice;
}

}  // namespace

OracleChoice oracle_decide(const OracleMemory& memory, const ListenerObservation& obs, const ScsCodebook& codebook,
                           const GameConfig& config, Rng& rng) {
  OracleChoice choice;
  if (obs.turn == Turn::communication) return choice;
  std::vector<double> scores;
  for (const auto& view : obs.views) {
    const auto post = value_posteriors(codebook, view);
    LatentStimulus latent{std::vector<int>(post.size())};
    std::vector<double> conf(post.size());
    for (std::size_t i = 0; i < post.size(); ++i) {
      const auto it = std::max_element(post[i].begin(), post[i].end());
      latent.values[i] = static_cast<int>(it - post[i].begin());
      conf[i] = *it;
    }
    scores.push_back(memory.log_consistency(obs.message, post));
    choice.decoded.push_back(std::move(latent));
    choice.confidence.push_back(std::move(conf));
  }
  return choose(memory, obs, config, rng, std::move(choice), scores);
}

OracleChoice oracle_decide_exact(const OracleMemory& memory, const ListenerObservation& obs,
                                 std::span<const LatentStimulus> candidates, const GameConfig& config, Rng& rng) {
  OracleChoice choice;
  if (obs.turn == Turn::communication) return choice;
  for (const auto& c : candidates) {
    choice.decoded.push_back(c);
    choice.confidence.emplace_back(c.size(), 1.0);
  }
  const std::vector<double> scores(candidates.size(), 0.0);
  return choose(memory, obs, config, rng, std::move(choice), scores);
}

void oracle_update(OracleMemory& memory, std::span<const int> message, const OracleChoice& choice,
                   const DecisionOutcome& outcome) {
  const Decision d = choice.action.decision;
  auto trusted = [&](std::size_t j) {
    std::vector<bool> mask;
    for (double c : choice.confidence[j]) mask.push_back(c >= kOracleBindConfidence);
    return mask;
  };
  auto all_trusted = [&](std::size_t j) {
    const auto m = trusted(j);
    return std::find(m.begin(), m.end(), false) == m.end();
  };
  if (outcome.revealed) {
    if (outcome.target_index) {
      const auto j = static_cast<std::size_t>(*outcome.target_index);
      memory.learn_target(message, choice.decoded[j], trusted(j));
    }
    if (!outcome.correct && d.kind() == Decision::Kind::candidate && all_trusted(static_cast<std::size_t>(d.index()))) {
      memory.learn_not_target(message, choice.decoded[static_cast<std::size_t>(d.index())]);
    }
    return;
  }
  if (d.kind() != Decision::Kind::candidate) return;
  const auto j = static_cast<std::size_t>(d.index());
  if (outcome.correct) {
    memory.learn_target(message, choice.decoded[j], trusted(j));
  } else if (all_trusted(j)) {
    memory.learn_not_target(message, choice.decoded[j]);
  }
}

OracleListener::OracleListener(const ScsCodebook& codebook, GameConfig config, Rng rng)
    : codebook_(&codebook),
      config_(std::move(config)),
      rng_(std::move(rng)),
      memory_(codebook.structure, config_.vocab_size) {}

OracleListener::OracleListener(const MetaEpisode& episode, OraclePerception perception, Rng rng)
    : OracleListener(episode.codebook(), episode.config().game, std::move(rng)) {
  if (perception == OraclePerception::exact) episode_ = &episode;
}

ListenerAction OracleListener::act(const ListenerObservation& obs) {
  if (obs.turn == Turn::communication) return {};
  if (episode_) {
    last_ = oracle_decide_exact(memory_, obs, episode_->game().candidates, config_, rng_);
  } else {
    last_ = oracle_decide(memory_, obs, *codebook_, config_, rng_);
  }
  last_message_ = obs.message;
  return last_->action;
}

void OracleListener::observe(const DecisionOutcome& outcome) {
  if (!last_) return;
  oracle_update(memory_, last_message_, *last_, outcome);
  last_.reset();
}

// --- factories -------------------------------------------------------------

std::string_view to_string(ListenerKind kind) {
  switch (kind) {
    case ListenerKind::oracle: return "oracle";
    case ListenerKind::cheat: return "cheat";
    case ListenerKind::random: return "random";
    case ListenerKind::external: return "external";
  }
  return "random";
}

std::string_view to_string(SpeakerKind kind) { return kind == SpeakerKind::posdis ? "posdis" : "cheat"; }

ListenerKind listener_kind_from_string(std::string_view text) {
  for (auto k : {ListenerKind::oracle, ListenerKind::cheat, ListenerKind::random, ListenerKind::external}) {
    if (text == to_string(k)) return k;
  }
  throw Error(ErrorCode::invalid_argument, "unknown listener '" + std::string(text) + "'");
}

SpeakerKind speaker_kind_from_string(std::string_view text) {
  if (text == "posdis") return SpeakerKind::posdis;
  if (text == "cheat") return SpeakerKind::cheat;
  throw Error(ErrorCode::invalid_argument, "unknown speaker '" + std::string(text) + "'");
}

std::shared_ptr<const Speaker> make_speaker(SpeakerKind kind, const EpisodeConfig& config) {
  const int len = config.sentence_len();
  if (kind == SpeakerKind::posdis) return std::make_shared<PosdisSpeaker>(config.game.vocab_size, len);
  return std::make_shared<CheatSpeaker>(config.game.vocab_size, len);
}

std::string_view to_string(OraclePerception perception) {
  return perception == OraclePerception::codebook ? "codebook" : "exact";
}

OraclePerception oracle_perception_from_string(std::string_view text) {
  if (text == "codebook") return OraclePerception::codebook;
  if (text == "exact") return OraclePerception::exact;
  throw Error(ErrorCode::invalid_argument, "unknown oracle perception '" + std::string(text) + "'");
}

std::unique_ptr<Listener> make_listener(ListenerKind kind, const MetaEpisode& episode, Rng rng,
                                        OraclePerception perception) {
  const auto& game = episode.config().game;
  switch (kind) {
    case ListenerKind::oracle: return std::make_unique<OracleListener>(episode, perception, std::move(rng));
    case ListenerKind::cheat: return std::make_unique<CheatListener>(game.vocab_size);
    case ListenerKind::random: return std::make_unique<RandomListener>(game, std::move(rng));
    case ListenerKind::external: break;
  }
  throw Error(ErrorCode::invalid_argument, "external listeners connect through the protocol server");
}

}  // namespace metarg
