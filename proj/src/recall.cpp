#include "metarg/recall.hpp"

#include <algorithm>
#include <string>

#include "metarg/error.hpp"

namespace metarg {

std::string_view to_string(Representation repr) { return repr == Representation::scs ? "scs" : "ohe"; }

Representation representation_from_string(std::string_view text) {
  if (text == "scs") return Representation::scs;
  if (text == "ohe") return Representation::ohe;
  throw Error(ErrorCode::invalid_argument, "unknown representation '" + std::string(text) + "'");
}

std::string_view to_string(RecallPhase phase) {
  switch (phase) {
    case RecallPhase::present: return "present";
    case RecallPhase::query: return "query";
    case RecallPhase::done: return "done";
  }
  return "done";
}

void RecallConfig::validate() const {
  if (n_dim < 1) throw Error(ErrorCode::invalid_argument, "n_dim must be >= 1");
  if (v_min < 2 || v_min > v_max) throw Error(ErrorCode::invalid_bounds, "need 2 <= v_min <= v_max");
  if (shots < 1) throw Error(ErrorCode::invalid_argument, "shots must be >= 1");
}

double RecallSummary::shot_accuracy(int shot) const {
  const auto s = static_cast<std::size_t>(shot - 1);
  if (s >= total.size() || total[s] == 0) return 0.0;
  return static_cast<double>(correct[s]) / total[s];
}

RecallEpisode::RecallEpisode(RecallConfig config) : config_(std::move(config)) {
  config_.validate();
  Rng structure_rng = derive_rng(config_.seed.child("structure"));
  structure_ = sample_structure(structure_rng, config_.n_dim, config_.v_min, config_.v_max);
  if (config_.representation == Representation::scs) {
    Rng codebook_rng = derive_rng(config_.seed.child("codebook"));
    codebook_ = build_codebook(structure_, codebook_rng);
  }
  const auto space = enumerate_space(structure_);
  for (int s = 1; s <= config_.shots; ++s) {
    auto shot = space;
    Rng rng = derive_rng(config_.seed.child("schedule", static_cast<std::uint64_t>(s)));
    rng.shuffle(shot);
    schedule_.insert(schedule_.end(), shot.begin(), shot.end());
  }
  acc_.correct.assign(static_cast<std::size_t>(config_.shots), 0);
  acc_.total.assign(static_cast<std::size_t>(config_.shots), 0);
  present();
}

void RecallEpisode::present() {
  Rng rng = derive_rng(config_.seed.child("game", game_));
  queried_ = static_cast<int>(rng.below(static_cast<std::uint64_t>(structure_.n_dim())));
  const auto& latent = schedule_[game_];
  view_.clear();
  if (codebook_) {
    view_ = sample_scs(*codebook_, latent, rng).coords;
  } else {
    for (auto b : encode_ohe(structure_, latent).bits) view_.push_back(b);
  }
  phase_ = RecallPhase::present;
}

RecallObservation RecallEpisode::observation() const {
  RecallObservation obs;
  obs.phase = phase_;
  if (done()) return obs;
  obs.shot = static_cast<int>(game_ / structure_.space_size()) + 1;
  obs.game = static_cast<int>(game_);
  obs.query.assign(static_cast<std::size_t>(structure_.n_dim()), 0);
  if (phase_ == RecallPhase::present) {
    obs.stimulus = view_;
  } else {
    obs.query[static_cast<std::size_t>(queried_)] = 1;
  }
  return obs;
}

RecallStepResult RecallEpisode::step(const RecallAction& action) {
  RecallStepResult result;
  if (done()) throw Error(ErrorCode::illegal_action, "stepping a finished recall episode");
  if (phase_ == RecallPhase::present) {
    if (!action.no_op) throw Error(ErrorCode::illegal_action, "only no-op is legal while the stimulus is presented");
    phase_ = RecallPhase::query;
    result.observation = observation();
    return result;
  }
  if (action.no_op) throw Error(ErrorCode::illegal_action, "an answer is required at the query turn");
  if (action.value < 0 || action.value >= config_.answer_space()) {
    throw Error(ErrorCode::illegal_action, "answer " + std::to_string(action.value) + " outside [0, v_max)");
  }
  const bool ok = action.value == schedule_[game_][static_cast<std::size_t>(queried_)];
  const auto shot = game_ / structure_.space_size();
  ++acc_.total[shot];
  acc_.correct[shot] += ok ? 1 : 0;
  result.correct = ok;
  result.reward = ok ? config_.reward_correct : config_.reward_incorrect;

  ++game_;
  if (game_ == schedule_.size()) {
    phase_ = RecallPhase::done;
  } else {
    present();
  }
  result.done = done();
  result.observation = observation();
  return result;
}

RecallSummary RecallEpisode::summary() const {
  if (!done()) throw Error(ErrorCode::not_done, "recall summary requested before the episode finished");
  return acc_;
}

RecallEpisode begin_recall_episode(const RecallConfig& config) { return RecallEpisode(config); }

RecallAction OheReader::act(const RecallObservation& obs) {
  if (obs.phase == RecallPhase::present) {
    last_ones_.clear();
    for (std::size_t b = 0; b < obs.stimulus.size(); ++b) {
      if (obs.stimulus[b] > 0.5) last_ones_.push_back(static_cast<int>(b));
    }
    if (lo_.empty()) {
      lo_ = last_ones_;
      hi_ = last_ones_;
    }
    for (std::size_t i = 0; i < last_ones_.size() && i < lo_.size(); ++i) {
      lo_[i] = std::min(lo_[i], last_ones_[i]);
      hi_[i] = std::max(hi_[i], last_ones_[i]);
    }
    return RecallAction::noop();
  }
  const auto dim = static_cast<std::size_t>(std::find(obs.query.begin(), obs.query.end(), 1) - obs.query.begin());
  if (dim >= last_ones_.size()) return RecallAction::answer(0);
  return RecallAction::answer(last_ones_[dim] - lo_[dim]);
}

RecallAction ScsStructureSolver::act(const RecallObservation& obs) {
  if (obs.phase == RecallPhase::present) {
    if (seen_.size() < obs.stimulus.size()) seen_.resize(obs.stimulus.size());
    for (std::size_t i = 0; i < obs.stimulus.size(); ++i) seen_[i].push_back(obs.stimulus[i]);
    last_ = obs.stimulus;
    return RecallAction::noop();
  }
  const auto dim = static_cast<std::size_t>(std::find(obs.query.begin(), obs.query.end(), 1) - obs.query.begin());
  if (dim >= last_.size()) return RecallAction::answer(0);
  InferenceOptions options = options_;
  options.require_all_sections = options.require_all_sections || obs.shot >= 2;
  const int d = infer_dimension(seen_[dim], v_max_, options).map_estimate();
  return RecallAction::answer(section_index(d, last_[dim]));
}

RecallAction RandomRecaller::act(const RecallObservation& obs) {
  if (obs.phase == RecallPhase::present) return RecallAction::noop();
  return RecallAction::answer(static_cast<int>(rng_.below(static_cast<std::uint64_t>(v_max_))));
}

std::string_view to_string(RecallAgentKind kind) {
  switch (kind) {
    case RecallAgentKind::ohe_reader: return "ohe-reader";
    case RecallAgentKind::scs_solver: return "scs-solver";
    case RecallAgentKind::random: return "random";
  }
  return "random";
}

RecallAgentKind recall_agent_from_string(std::string_view text) {
  for (auto k : {RecallAgentKind::ohe_reader, RecallAgentKind::scs_solver, RecallAgentKind::random}) {
    if (text == to_string(k)) return k;
  }
  throw Error(ErrorCode::invalid_argument, "unknown recall agent '" + std::string(text) + "'");
}

std::unique_ptr<RecallAgent> make_recall_agent(RecallAgentKind kind, const RecallConfig& config, Rng rng,
                                               InferenceOptions inference) {
  switch (kind) {
    case RecallAgentKind::ohe_reader: return std::make_unique<OheReader>();
    case RecallAgentKind::scs_solver: return std::make_unique<ScsStructureSolver>(config.v_max, inference);
    case RecallAgentKind::random: return std::make_unique<RandomRecaller>(config.v_max, std::move(rng));
  }
  throw Error(ErrorCode::invalid_argument, "unknown recall agent");
}

RecallSummary run_recall_episode(RecallEpisode& episode, RecallAgent& agent) {
  while (!episode.done()) episode.step(agent.act(episode.observation()));
  return episode.summary();
}

}  // namespace metarg
