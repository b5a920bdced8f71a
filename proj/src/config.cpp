#include "metarg/config.hpp"

#include <fstream>
#include <functional>
#include <map>

#include "metarg/error.hpp"

namespace metarg {

using nlohmann::json;

void RunConfig::validate() const {
  if (episodes < 1) throw Error(ErrorCode::invalid_argument, "episodes must be >= 1");
  if (workers < 1) throw Error(ErrorCode::invalid_argument, "workers must be >= 1");
  if (inference.mu_points < 1 || inference.sigma_points < 1)
    throw Error(ErrorCode::invalid_argument, "inference grid must be non-empty");
  episode_config(0).validate();
  recall_config(0).validate();
}

EpisodeConfig RunConfig::episode_config(std::uint64_t index) const {
  EpisodeConfig cfg = episode;
  cfg.seed = SeedPath{seed, {}}.child("episode", index);
  return cfg;
}

RecallConfig RunConfig::recall_config(std::uint64_t index) const {
  RecallConfig cfg;
  cfg.n_dim = episode.n_dim;
  cfg.v_min = episode.v_min;
  cfg.v_max = episode.v_max;
  cfg.shots = episode.shots;
  cfg.representation = representation;
  cfg.reward_correct = episode.game.reward_correct;
  cfg.reward_incorrect = episode.game.reward_incorrect;
  cfg.seed = SeedPath{seed, {}}.child("recall", index);
  return cfg;
}

json to_json(const RunConfig& c) {
  const auto& g = c.episode.game;
  return json{
      {"ndim", c.episode.n_dim},
      {"vmin", c.episode.v_min},
      {"vmax", c.episode.v_max},
      {"shots", c.episode.shots},
      {"obj-samples", g.o_samples},
      {"distractors", g.k_distractors},
      {"vocab-size", g.vocab_size},
      {"sentence-len", g.sentence_len},
      {"rounds", g.rounds},
      {"holdout", c.episode.holdout_fraction},
      {"permute", c.episode.permute_vocab},
      {"descriptive", g.descriptive},
      {"target-present-prob", g.target_present_prob},
      {"reward-correct", g.reward_correct},
      {"reward-incorrect", g.reward_incorrect},
      {"reveal-target", g.reveal_target_after_decision},
      {"seed", c.seed},
      {"episodes", c.episodes},
      {"workers", c.workers},
      {"out", c.out},
      {"listener", std::string(to_string(c.listener))},
      {"speaker", std::string(to_string(c.speaker))},
      {"oracle-perception", std::string(to_string(c.perception))},
      {"bind", c.bind},
      {"representation", std::string(to_string(c.representation))},
      {"recall-agent", std::string(to_string(c.recall_agent))},
      {"mu-points", c.inference.mu_points},
      {"sigma-points", c.inference.sigma_points},
  };
}

namespace {

template <class T>
T get(const json& value, const std::string& key) {
  try {
    return value.get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::invalid_argument, "config key '" + key + "' has the wrong type");
  }
}

std::string text(const json& value, const std::string& key) { return get<std::string>(value, key); }

}  // namespace

RunConfig apply_json(const json& j, RunConfig c) {
  if (!j.is_object()) throw Error(ErrorCode::invalid_argument, "config must be a JSON object");
  auto& g = c.episode.game;
  using Setter = std::function<void(const json&, const std::string&)>;
  const std::map<std::string, Setter> setters = {
      {"ndim", [&](const json& v, const std::string& k) { c.episode.n_dim = get<int>(v, k); }},
      {"vmin", [&](const json& v, const std::string& k) { c.episode.v_min = get<int>(v, k); }},
      {"vmax", [&](const json& v, const std::string& k) { c.episode.v_max = get<int>(v, k); }},
      {"shots", [&](const json& v, const std::string& k) { c.episode.shots = get<int>(v, k); }},
      {"obj-samples", [&](const json& v, const std::string& k) { g.o_samples = get<int>(v, k); }},
      {"distractors", [&](const json& v, const std::string& k) { g.k_distractors = get<int>(v, k); }},
      {"vocab-size", [&](const json& v, const std::string& k) { g.vocab_size = get<int>(v, k); }},
      {"sentence-len", [&](const json& v, const std::string& k) { g.sentence_len = get<int>(v, k); }},
      {"rounds", [&](const json& v, const std::string& k) { g.rounds = get<int>(v, k); }},
      {"holdout", [&](const json& v, const std::string& k) { c.episode.holdout_fraction = get<double>(v, k); }},
      {"permute", [&](const json& v, const std::string& k) { c.episode.permute_vocab = get<bool>(v, k); }},
      {"descriptive", [&](const json& v, const std::string& k) { g.descriptive = get<bool>(v, k); }},
      {"target-present-prob", [&](const json& v, const std::string& k) { g.target_present_prob = get<double>(v, k); }},
      {"reward-correct", [&](const json& v, const std::string& k) { g.reward_correct = get<double>(v, k); }},
      {"reward-incorrect", [&](const json& v, const std::string& k) { g.reward_incorrect = get<double>(v, k); }},
      {"reveal-target",
       [&](const json& v, const std::string& k) { g.reveal_target_after_decision = get<bool>(v, k); }},
      {"seed", [&](const json& v, const std::string& k) { c.seed = get<std::uint64_t>(v, k); }},
      {"episodes", [&](const json& v, const std::string& k) { c.episodes = get<int>(v, k); }},
      {"workers", [&](const json& v, const std::string& k) { c.workers = get<int>(v, k); }},
      {"out", [&](const json& v, const std::string& k) { c.out = text(v, k); }},
      {"listener", [&](const json& v, const std::string& k) { c.listener = listener_kind_from_string(text(v, k)); }},
      {"speaker", [&](const json& v, const std::string& k) { c.speaker = speaker_kind_from_string(text(v, k)); }},
      {"oracle-perception",
       [&](const json& v, const std::string& k) { c.perception = oracle_perception_from_string(text(v, k)); }},
      {"bind", [&](const json& v, const std::string& k) { c.bind = text(v, k); }},
      {"representation",
       [&](const json& v, const std::string& k) { c.representation = representation_from_string(text(v, k)); }},
      {"recall-agent",
       [&](const json& v, const std::string& k) { c.recall_agent = recall_agent_from_string(text(v, k)); }},
      {"mu-points", [&](const json& v, const std::string& k) { c.inference.mu_points = get<int>(v, k); }},
      {"sigma-points", [&](const json& v, const std::string& k) { c.inference.sigma_points = get<int>(v, k); }},
  };
  for (const auto& [key, value] : j.items()) {
    const auto it = setters.find(key);
    if (it == setters.end()) throw Error(ErrorCode::invalid_argument, "unknown config key '" + key + "'");
    it->second(value, key);
  }
  return c;
}

RunConfig load_config_file(const std::string& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open config file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::invalid_argument, "config file '" + path + "': " + e.what());
  }
  return apply_json(j, std::move(base));
}

}  // namespace metarg
