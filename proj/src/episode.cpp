#include "metarg/episode.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "metarg/error.hpp"

namespace metarg {

void EpisodeConfig::validate() const {
  if (n_dim < 1) throw Error(ErrorCode::invalid_argument, "n_dim must be >= 1");
  if (v_min < 2 || v_min > v_max) throw Error(ErrorCode::invalid_bounds, "need 2 <= v_min <= v_max");
  if (shots < 1) throw Error(ErrorCode::invalid_argument, "shots must be >= 1");
  if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0)) {
    throw Error(ErrorCode::invalid_argument, "holdout fraction must lie in (0, 1)");
  }
  game.validate();
}

VocabPermutation VocabPermutation::identity(int vocab_size) {
  VocabPermutation p;
  p.mapping_.resize(static_cast<std::size_t>(vocab_size) + 1);
  std::iota(p.mapping_.begin(), p.mapping_.end(), 0);
  return p;
}

VocabPermutation VocabPermutation::sample(int vocab_size, Rng& rng) {
  VocabPermutation p = identity(vocab_size);
  rng.shuffle(std::span<int>(p.mapping_).subspan(1));
  return p;
}

VocabPermutation VocabPermutation::from_mapping(std::vector<int> mapping) {
  if (mapping.empty() || mapping[0] != kEos) throw Error(ErrorCode::invalid_argument, "permutation must fix EoS");
  std::vector<bool> seen(mapping.size(), false);
  for (int t : mapping) {
    if (t < 0 || static_cast<std::size_t>(t) >= mapping.size() || seen[t]) {
      throw Error(ErrorCode::invalid_argument, "mapping is not a bijection");
    }
    seen[t] = true;
  }
  VocabPermutation p;
  p.mapping_ = std::move(mapping);
  return p;
}

int VocabPermutation::apply(int token) const {
  if (token < 0 || token > vocab_size()) {
    throw Error(ErrorCode::out_of_range, "token " + std::to_string(token) + " outside the vocabulary");
  }
  return mapping_[static_cast<std::size_t>(token)];
}

VocabPermutation VocabPermutation::inverse() const {
  VocabPermutation p;
  p.mapping_.resize(mapping_.size());
  for (std::size_t t = 0; t < mapping_.size(); ++t) p.mapping_[static_cast<std::size_t>(mapping_[t])] = static_cast<int>(t);
  return p;
}

bool VocabPermutation::is_identity() const {
  for (std::size_t t = 0; t < mapping_.size(); ++t) {
    if (mapping_[t] != static_cast<int>(t)) return false;
  }
  return true;
}

std::vector<int> apply_permutation(const VocabPermutation& perm, std::span<const int> tokens) {
  std::vector<int> out;
  out.reserve(tokens.size());
  for (int t : tokens) out.push_back(perm.apply(t));
  return out;
}

std::string_view to_string(Phase phase) {
  switch (phase) {
    case Phase::train: return "train";
    case Phase::test: return "test";
    case Phase::done: return "done";
  }
  return "done";
}

Phase phase_from_string(std::string_view text) {
  if (text == "train") return Phase::train;
  if (text == "test") return Phase::test;
  if (text == "done") return Phase::done;
  throw Error(ErrorCode::invalid_argument, "unknown phase '" + std::string(text) + "'");
}

double EpisodeSummary::train_accuracy(int shot) const {
  const auto s = static_cast<std::size_t>(shot - 1);
  if (s >= train_total.size() || train_total[s] == 0) return 0.0;
  return static_cast<double>(train_correct[s]) / train_total[s];
}

double EpisodeSummary::zsct_accuracy() const {
  return test_total == 0 ? 0.0 : static_cast<double>(test_correct) / test_total;
}

MetaEpisode::MetaEpisode(EpisodeConfig config, std::shared_ptr<const Speaker> speaker, std::uint64_t episode_id)
    : config_(std::move(config)), speaker_(std::move(speaker)), id_(episode_id) {
  config_.validate();
  if (!speaker_) throw Error(ErrorCode::invalid_argument, "episode needs a speaker");
  const SeedPath& root = config_.seed;

  Rng structure_rng = derive_rng(root.child("structure"));
  structure_ = sample_structure(structure_rng, config_.n_dim, config_.v_min, config_.v_max);

  Rng codebook_rng = derive_rng(root.child("codebook"));
  codebook_ = std::make_unique<ScsCodebook>(build_codebook(structure_, codebook_rng));

  Rng split_rng = derive_rng(root.child("split"));
  split_ = make_zsct_split(structure_, config_.holdout_fraction, split_rng);

  if (config_.permute_vocab) {
    Rng perm_rng = derive_rng(root.child("permutation"));
    permutation_ = VocabPermutation::sample(config_.game.vocab_size, perm_rng);
  } else {
    permutation_ = VocabPermutation::identity(config_.game.vocab_size);
  }

  views_ = std::make_unique<ViewPool>(*codebook_, config_.game.o_samples, root.child("views"));
  acc_.train_correct.assign(static_cast<std::size_t>(config_.shots), 0);
  acc_.train_total.assign(static_cast<std::size_t>(config_.shots), 0);

  schedule_ = split_.train;
  Rng schedule_rng = derive_rng(root.child("schedule/train", 1));
  schedule_rng.shuffle(schedule_);
  start_game();
}

std::size_t MetaEpisode::total_games() const {
  return split_.train.size() * static_cast<std::size_t>(config_.shots) + split_.test.size();
}

void MetaEpisode::start_game() {
  const bool test = phase_ == Phase::test;
  const auto& bucket = test ? split_.test : split_.train;
  const auto& fallback = test ? split_.train : split_.test;
  Rng rng = derive_rng(config_.seed.child("game", static_cast<std::uint64_t>(game_counter_)));
  game_ = new_game(rng, bucket, fallback, schedule_[position_], *views_, config_.game, config_.sentence_len());
  speak();
}

void MetaEpisode::speak() {
  auto tokens = speaker_->speak(speaker_view(game_));
  tokens.resize(static_cast<std::size_t>(config_.sentence_len()), kEos);
  game_.message = apply_permutation(permutation_, tokens);
}

ListenerObservation MetaEpisode::observation() const {
  if (done()) throw Error(ErrorCode::not_done, "episode already finished");
  return listener_view(game_, config_.game);
}

StepResult MetaEpisode::step(const ListenerAction& action) {
  if (done()) throw Error(ErrorCode::illegal_action, "stepping a finished episode");
  const Turn turn = listener_view(game_, config_.game).turn;
  if (action.token < 0 || action.token > config_.game.vocab_size) {
    throw Error(ErrorCode::illegal_action, "token " + std::to_string(action.token) + " outside the vocabulary");
  }

  StepResult result;
  StepRecord& rec = result.record;
  rec.episode = id_;
  rec.phase = phase_;
  rec.shot = phase_ == Phase::test ? 1 : shot_;
  rec.game = game_counter_;
  rec.round = game_.round;
  rec.target = game_.target;
  rec.candidates = game_.candidates;
  rec.target_index = game_.target_index;
  rec.message = game_.message;
  rec.action = action;

  if (turn == Turn::communication) {
    if (!action.decision.is_no_op()) {
      throw Error(ErrorCode::illegal_action, "decision submitted during a communication turn");
    }
    ++game_.round;
    speak();
    return result;
  }

  if (action.decision.is_no_op()) throw Error(ErrorCode::illegal_action, "no-op submitted at the decision turn");
  const DecisionOutcome outcome = resolve_decision(game_, action, config_.game);
  rec.reward = outcome.reward;
  rec.correct = outcome.correct;
  result.reward = outcome.reward;
  result.outcome = outcome;
  result.game_done = true;

  if (phase_ == Phase::test) {
    ++acc_.test_total;
    acc_.test_correct += outcome.correct ? 1 : 0;
  } else {
    const auto s = static_cast<std::size_t>(shot_ - 1);
    ++acc_.train_total[s];
    acc_.train_correct[s] += outcome.correct ? 1 : 0;
  }

  advance();
  result.episode_done = done();
  return result;
}

void MetaEpisode::advance() {
  ++game_counter_;
  ++position_;
  if (position_ < schedule_.size()) {
    start_game();
    return;
  }
  position_ = 0;
  if (phase_ == Phase::train && shot_ < config_.shots) {
    ++shot_;
    schedule_ = split_.train;
    Rng rng = derive_rng(config_.seed.child("schedule/train", static_cast<std::uint64_t>(shot_)));
    rng.shuffle(schedule_);
  } else if (phase_ == Phase::train) {
    phase_ = Phase::test;
    schedule_ = split_.test;
    Rng rng = derive_rng(config_.seed.child("schedule/test"));
    rng.shuffle(schedule_);
  } else {
    phase_ = Phase::done;
    schedule_.clear();
    return;
  }
  start_game();
}

EpisodeSummary MetaEpisode::summary() const {
  if (!done()) throw Error(ErrorCode::not_done, "episode summary requested before the test shot finished");
  return acc_;
}

MetaEpisode begin_episode(const EpisodeConfig& config, std::shared_ptr<const Speaker> speaker,
                          std::uint64_t episode_id) {
  return MetaEpisode(config, std::move(speaker), episode_id);
}

}  // namespace metarg
