#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "metarg/agents.hpp"
#include "metarg/config.hpp"
#include "metarg/metrics.hpp"
#include "metarg/trace.hpp"

namespace metarg {

using ListenerFactory = std::function<std::unique_ptr<Listener>(const MetaEpisode&, Rng)>;

// Builds the listener selected by the config.
ListenerFactory default_listener_factory(const RunConfig& config);

// Trace lines of one episode: episode_start, every step, episode_end. Any
// exception ends the episode with a failed record after the lines so far.
std::vector<std::string> referential_episode_lines(const RunConfig& config, std::uint64_t index,
                                                   const ListenerFactory& listeners);
std::vector<std::string> recall_episode_lines(const RunConfig& config, std::uint64_t index);

struct BatchResult {
  TraceSummary summary;
  std::size_t lines = 0;
  int failed = 0;
};

// Writes the header then every episode in index order. The parallel path
// runs episodes on config.workers OpenMP threads; the serial path is the
// reference. Output is identical for both and for any worker count.
BatchResult run_batch(const RunConfig& config, Task task, std::ostream& out, Execution exec = Execution::parallel);
BatchResult run_batch(const RunConfig& config, std::ostream& out, const ListenerFactory& listeners,
                      Execution exec = Execution::parallel);

}  // namespace metarg
