#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "metarg/agents.hpp"
#include "metarg/episode.hpp"
#include "metarg/recall.hpp"

namespace metarg {

inline constexpr const char* kEngineVersion = "1.0.0";

// Everything a run needs. Episode i of a run uses the seed path
// (seed, ["episode/i"]); recall episode i uses (seed, ["recall/i"]).
struct RunConfig {
  EpisodeConfig episode;
  std::uint64_t seed = 0;
  int episodes = 1;
  int workers = 1;
  std::string out;
  ListenerKind listener = ListenerKind::oracle;
  SpeakerKind speaker = SpeakerKind::posdis;
  OraclePerception perception = OraclePerception::exact;
  std::string bind = "127.0.0.1:7777";
  Representation representation = Representation::scs;
  RecallAgentKind recall_agent = RecallAgentKind::scs_solver;
  InferenceOptions inference;

  void validate() const;
  EpisodeConfig episode_config(std::uint64_t index) const;
  RecallConfig recall_config(std::uint64_t index) const;
};

// Keys mirror the CLI flag names ("ndim", "obj-samples", ...). The output
// holds every key, so it is a fully resolved config.
nlohmann::json to_json(const RunConfig& config);
// Applies the keys present in `j` on top of `base`; unknown keys and
// mistyped values throw invalid-argument.
RunConfig apply_json(const nlohmann::json& j, RunConfig base = {});
RunConfig load_config_file(const std::string& path, RunConfig base = {});

}  // namespace metarg
