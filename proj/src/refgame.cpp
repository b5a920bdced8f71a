#include "metarg/refgame.hpp"

#include <algorithm>
#include <string>

#include "metarg/error.hpp"

namespace metarg {

void GameConfig::validate() const {
  if (k_distractors < 1) throw Error(ErrorCode::invalid_argument, "k_distractors must be >= 1");
  if (o_samples < 1) throw Error(ErrorCode::invalid_argument, "o_samples must be >= 1");
  if (!(target_present_prob >= 0.0 && target_present_prob <= 1.0)) {
    throw Error(ErrorCode::invalid_argument, "target_present_prob must lie in [0, 1]");
  }
  if (vocab_size < 1) throw Error(ErrorCode::invalid_argument, "vocab_size must be >= 1");
  if (rounds < 1) throw Error(ErrorCode::invalid_argument, "rounds must be >= 1");
  if (sentence_len < 0) throw Error(ErrorCode::invalid_argument, "sentence_len must be >= 0");
}

Decision Decision::from_code(int code) {
  if (code >= 0) return pick(code);
  if (code == -1) return no_op();
  if (code == -2) return no_target();
  throw Error(ErrorCode::illegal_action, "unknown decision code " + std::to_string(code));
}

int Decision::code() const {
  switch (kind_) {
    case Kind::candidate: return index_;
    case Kind::no_op: return -1;
    case Kind::no_target: return -2;
  }
  return -1;
}

ViewPool::ViewPool(const ScsCodebook& codebook, int o_samples, SeedPath path)
    : codebook_(&codebook), o_samples_(o_samples), path_(std::move(path)) {
  if (o_samples_ < 1) throw Error(ErrorCode::invalid_argument, "o_samples must be >= 1");
}

ScsStimulus ViewPool::view(const LatentStimulus& latent, int sample) const {
  if (sample < 0 || sample >= o_samples_) throw Error(ErrorCode::out_of_range, "view sample index out of range");
  const auto flat = codebook_->structure.flat_index(latent);
  Rng rng = derive_rng(path_.child("latent", flat).child("sample", static_cast<std::uint64_t>(sample)));
  return sample_scs(*codebook_, latent, rng);
}

namespace {

// Uniform draw without replacement of `count` items from `pool`, skipping any
// already in `taken`.
void draw_excluding(Rng& rng, std::span<const LatentStimulus> pool, std::vector<LatentStimulus>& taken,
                    std::size_t count) {
  std::vector<const LatentStimulus*> free;
  for (const auto& s : pool) {
    if (std::find(taken.begin(), taken.end(), s) == taken.end()) free.push_back(&s);
  }
  for (std::size_t k = 0; k < count && !free.empty(); ++k) {
    const auto j = static_cast<std::size_t>(rng.below(free.size()));
    taken.push_back(*free[j]);
    free[j] = free.back();
    free.pop_back();
  }
}

void draw_candidates(Rng& rng, std::span<const LatentStimulus> bucket, std::span<const LatentStimulus> fallback,
                     std::vector<LatentStimulus>& taken, std::size_t count) {
  const std::size_t before = taken.size();
  draw_excluding(rng, bucket, taken, count);
  const std::size_t got = taken.size() - before;
  if (got < count) draw_excluding(rng, fallback, taken, count - got);
  if (taken.size() - before < count) {
    throw Error(ErrorCode::bucket_too_small,
                "need " + std::to_string(count) + " more distinct stimuli, found " + std::to_string(taken.size() - before));
  }
}

}  // namespace

GameState new_game(Rng& rng, std::span<const LatentStimulus> bucket, std::span<const LatentStimulus> fallback,
                   const LatentStimulus& target, const ViewPool& views, const GameConfig& config, int sentence_len) {
  config.validate();
  if (std::find(bucket.begin(), bucket.end(), target) == bucket.end()) {
    throw Error(ErrorCode::invalid_argument, "target is not part of its bucket");
  }
  const auto k = static_cast<std::size_t>(config.k_distractors);

  // taken[0] is the target; distractors follow.
  std::vector<LatentStimulus> taken{target};
  draw_candidates(rng, bucket, fallback, taken, k);

  const bool target_absent = config.descriptive && rng.bernoulli(1.0 - config.target_present_prob);
  if (target_absent) draw_candidates(rng, bucket, fallback, taken, 1);

  GameState state;
  state.target = target;
  if (target_absent) {
    state.candidates.assign(taken.begin() + 1, taken.end());
  } else {
    state.candidates = std::move(taken);
  }
  rng.shuffle(state.candidates);
  if (!target_absent) {
    state.target_index = static_cast<int>(std::find(state.candidates.begin(), state.candidates.end(), target) -
                                          state.candidates.begin());
  }

  // O = 1: one shared view per latent. O > 1: the speaker and the listener's
  // target slot use distinct samples.
  const int o = views.o_samples();
  const int speaker_sample = o == 1 ? 0 : static_cast<int>(rng.below(static_cast<std::uint64_t>(o)));
  state.speaker_view = views.view(target, speaker_sample);
  state.listener_views.reserve(state.candidates.size());
  for (const auto& c : state.candidates) {
    int sample = 0;
    if (o > 1) {
      sample = static_cast<int>(rng.below(static_cast<std::uint64_t>(o)));
      if (c == target) {
        sample = static_cast<int>(rng.below(static_cast<std::uint64_t>(o - 1)));
        if (sample >= speaker_sample) ++sample;
      }
    }
    state.listener_views.push_back(views.view(c, sample));
  }
  state.message.assign(static_cast<std::size_t>(sentence_len), kEos);
  return state;
}

SpeakerObservation speaker_view(const GameState& state) {
  if (state.resolved) throw Error(ErrorCode::resolved_game, "speaker queried on a resolved game");
  return SpeakerObservation{state.speaker_view, state.target, state.round};
}

ListenerObservation listener_view(const GameState& state, const GameConfig& config) {
  ListenerObservation obs;
  obs.views = state.listener_views;
  obs.message = state.message;
  obs.round = state.round;
  obs.turn = state.round + 1 >= config.rounds ? Turn::decision : Turn::communication;
  return obs;
}

DecisionOutcome resolve_decision(GameState& state, const ListenerAction& action, const GameConfig& config) {
  if (state.resolved) throw Error(ErrorCode::resolved_game, "game already resolved");
  const Decision d = action.decision;
  const int n = static_cast<int>(state.candidates.size());
  switch (d.kind()) {
    case Decision::Kind::no_op:
      throw Error(ErrorCode::illegal_action, "no-op is not a decision");
    case Decision::Kind::no_target:
      if (!config.no_target_legal()) throw Error(ErrorCode::illegal_action, "no-target is illegal in this game mode");
      break;
    case Decision::Kind::candidate:
      if (d.index() < 0 || d.index() >= n) {
        throw Error(ErrorCode::illegal_action, "candidate index " + std::to_string(d.index()) + " out of range");
      }
      break;
  }
  if (action.token < 0 || action.token > config.vocab_size) {
    throw Error(ErrorCode::illegal_action, "token " + std::to_string(action.token) + " outside the vocabulary");
  }

  DecisionOutcome out;
  if (state.target_index) {
    out.correct = d.kind() == Decision::Kind::candidate && d.index() == *state.target_index;
  } else {
    out.correct = d.kind() == Decision::Kind::no_target;
  }
  out.reward = out.correct ? config.reward_correct : config.reward_incorrect;
  if (config.reveal_target_after_decision) {
    out.revealed = true;
    out.target_index = state.target_index;
  }
  state.resolved = true;
  return out;
}

}  // namespace metarg
