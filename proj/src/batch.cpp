#include "metarg/batch.hpp"

#include <algorithm>
#include <exception>

#include "metarg/error.hpp"

namespace metarg {

ListenerFactory default_listener_factory(const RunConfig& config) {
  const ListenerKind kind = config.listener;
  const OraclePerception perception = config.perception;
  if (kind == ListenerKind::external)
    throw Error(ErrorCode::invalid_argument, "external listeners run through `serve`, not in a batch");
  return [kind, perception](const MetaEpisode& episode, Rng rng) {
    return make_listener(kind, episode, std::move(rng), perception);
  };
}

std::vector<std::string> referential_episode_lines(const RunConfig& config, std::uint64_t index,
                                                   const ListenerFactory& listeners) {
  std::vector<std::string> lines;
  try {
    const EpisodeConfig cfg = config.episode_config(index);
    MetaEpisode episode(cfg, make_speaker(config.speaker, cfg), index);
    lines.push_back(episode_start_line(episode));
    auto listener = listeners(episode, derive_rng(cfg.seed.child("listener")));
    while (!episode.done()) {
      const auto result = episode.step(listener->act(episode.observation()));
      if (result.outcome) listener->observe(*result.outcome);
      lines.push_back(step_line(result.record));
    }
    lines.push_back(episode_end_line(index, episode.summary()));
  } catch (const std::exception& e) {
    lines.push_back(failed_episode_line(Task::referential, index, e.what()));
  }
  return lines;
}

std::vector<std::string> recall_episode_lines(const RunConfig& config, std::uint64_t index) {
  std::vector<std::string> lines;
  try {
    const RecallConfig cfg = config.recall_config(index);
    RecallEpisode episode(cfg);
    auto agent = make_recall_agent(config.recall_agent, cfg, derive_rng(cfg.seed.child("agent")), config.inference);
    while (!episode.done()) {
      const auto obs = episode.observation();
      RecallStepRecord record;
      record.episode = index;
      record.phase = obs.phase;
      record.shot = obs.shot;
      record.game = obs.game;
      record.target = episode.current_latent();
      if (obs.phase == RecallPhase::query) record.query = episode.queried_dimension();
      const auto action = agent->act(obs);
      if (!action.no_op) record.answer = action.value;
      const auto result = episode.step(action);
      record.reward = result.reward;
      record.correct = result.correct;
      lines.push_back(recall_step_line(record));
    }
    lines.push_back(recall_end_line(index, episode.summary()));
  } catch (const std::exception& e) {
    lines.push_back(failed_episode_line(Task::recall, index, e.what()));
  }
  return lines;
}

namespace {

BatchResult run(const RunConfig& config, Task task, std::ostream& out, const ListenerFactory* listeners,
                Execution exec) {
  config.validate();
  BatchResult result;
  TraceSummarizer summarizer;
  const auto emit = [&](const std::string& line) {
    out << line << '\n';
    summarizer.consume(line);
    ++result.lines;
  };
  emit(header_line(config, task));

  const auto episode_lines = [&](std::uint64_t index) {
    return task == Task::referential ? referential_episode_lines(config, index, *listeners)
                                     : recall_episode_lines(config, index);
  };

  const long long total = config.episodes;
  const long long chunk = std::max(64, 4 * config.workers);
  std::vector<std::vector<std::string>> buffers;
  for (long long begin = 0; begin < total; begin += chunk) {
    const long long end = std::min(total, begin + chunk);
    buffers.assign(static_cast<std::size_t>(end - begin), {});
    if (exec == Execution::parallel) {
#pragma omp parallel for schedule(dynamic, 1) num_threads(config.workers)
      for (long long i = begin; i < end; ++i)
        buffers[static_cast<std::size_t>(i - begin)] = episode_lines(static_cast<std::uint64_t>(i));
    } else {
      for (long long i = begin; i < end; ++i)
        buffers[static_cast<std::size_t>(i - begin)] = episode_lines(static_cast<std::uint64_t>(i));
    }
    for (const auto& lines : buffers)
      for (const auto& line : lines) emit(line);
  }
  if (!out) throw Error(ErrorCode::io, "failed writing the trace");
  result.summary = summarizer.finish();
  for (const auto& g : result.summary.groups) result.failed += g.failed;
  return result;
}

}  // namespace

BatchResult run_batch(const RunConfig& config, Task task, std::ostream& out, Execution exec) {
  if (task == Task::recall) return run(config, task, out, nullptr, exec);
  const auto listeners = default_listener_factory(config);
  return run(config, task, out, &listeners, exec);
}

BatchResult run_batch(const RunConfig& config, std::ostream& out, const ListenerFactory& listeners, Execution exec) {
  return run(config, Task::referential, out, &listeners, exec);
}

}  // namespace metarg
