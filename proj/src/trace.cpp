#include "metarg/trace.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <fmt/core.h>

#include "metarg/error.hpp"

namespace metarg {

using nlohmann::json;

std::string_view to_string(Task task) { return task == Task::referential ? "referential" : "recall"; }

Task task_from_string(std::string_view text) {
  if (text == "referential") return Task::referential;
  if (text == "recall") return Task::recall;
  throw Error(ErrorCode::malformed_trace, "unknown task '" + std::string(text) + "'");
}

namespace {

json optional_json(const std::optional<int>& v) { return v ? json(*v) : json(nullptr); }
json optional_json(const std::optional<bool>& v) { return v ? json(*v) : json(nullptr); }

json latents_json(const std::vector<LatentStimulus>& latents) {
  json out = json::array();
  for (const auto& l : latents) out.push_back(l.values);
  return out;
}

std::string dump(const json& j) { return j.dump(); }

}  // namespace

std::string header_line(const RunConfig& config, Task task) {
  return dump(json{{"type", "header"},
                   {"engine", "metarg"},
                   {"version", kEngineVersion},
                   {"task", std::string(to_string(task))},
                   {"config", to_json(config)}});
}

std::string episode_start_line(const MetaEpisode& episode) {
  const auto& cb = episode.codebook();
  return dump(json{{"type", "episode_start"},
                   {"task", "referential"},
                   {"episode", episode.id()},
                   {"seed_path", episode.config().seed.to_string()},
                   {"structure", episode.structure().dims()},
                   {"codebook", json{{"mu", cb.mus}, {"sigma", cb.sigmas}}},
                   {"train_size", episode.split().train.size()},
                   {"test", latents_json(episode.split().test)},
                   {"permutation", episode.permutation().mapping()}});
}

std::string step_line(const StepRecord& r) {
  return dump(json{{"type", "step"},
                   {"task", "referential"},
                   {"episode", r.episode},
                   {"phase", std::string(to_string(r.phase))},
                   {"shot", r.shot},
                   {"game", r.game},
                   {"round", r.round},
                   {"target", r.target.values},
                   {"candidates", latents_json(r.candidates)},
                   {"target_index", optional_json(r.target_index)},
                   {"message", r.message},
                   {"token", r.action.token},
                   {"decision", r.action.decision.code()},
                   {"reward", r.reward},
                   {"correct", optional_json(r.correct)}});
}

std::string recall_step_line(const RecallStepRecord& r) {
  return dump(json{{"type", "step"},
                   {"task", "recall"},
                   {"episode", r.episode},
                   {"phase", std::string(to_string(r.phase))},
                   {"shot", r.shot},
                   {"game", r.game},
                   {"target", r.target.values},
                   {"query", optional_json(r.query)},
                   {"answer", optional_json(r.answer)},
                   {"reward", r.reward},
                   {"correct", optional_json(r.correct)}});
}

std::string episode_end_line(std::uint64_t episode, const EpisodeSummary& s) {
  return dump(json{{"type", "episode_end"},
                   {"task", "referential"},
                   {"episode", episode},
                   {"status", "ok"},
                   {"train_correct", s.train_correct},
                   {"train_total", s.train_total},
                   {"test_correct", s.test_correct},
                   {"test_total", s.test_total}});
}

std::string recall_end_line(std::uint64_t episode, const RecallSummary& s) {
  return dump(json{{"type", "episode_end"},
                   {"task", "recall"},
                   {"episode", episode},
                   {"status", "ok"},
                   {"shot_correct", s.correct},
                   {"shot_total", s.total}});
}

std::string failed_episode_line(Task task, std::uint64_t episode, std::string_view error) {
  return dump(json{{"type", "episode_end"},
                   {"task", std::string(to_string(task))},
                   {"episode", episode},
                   {"status", "failed"},
                   {"error", std::string(error)}});
}

namespace {

LatentStimulus latent_from(const json& j) { return LatentStimulus{j.get<std::vector<int>>()}; }

template <class T>
std::optional<T> optional_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<T>();
}

}  // namespace

StepRecord parse_step(const json& j) {
  StepRecord r;
  r.episode = j.at("episode").get<std::uint64_t>();
  r.phase = phase_from_string(j.at("phase").get<std::string>());
  r.shot = j.at("shot").get<int>();
  r.game = j.at("game").get<int>();
  r.round = j.at("round").get<int>();
  r.target = latent_from(j.at("target"));
  for (const auto& c : j.at("candidates")) r.candidates.push_back(latent_from(c));
  r.target_index = optional_from<int>(j.at("target_index"));
  r.message = j.at("message").get<std::vector<int>>();
  r.action.token = j.at("token").get<int>();
  r.action.decision = Decision::from_code(j.at("decision").get<int>());
  r.reward = j.at("reward").get<double>();
  r.correct = optional_from<bool>(j.at("correct"));
  return r;
}

RecallStepRecord parse_recall_step(const json& j) {
  RecallStepRecord r;
  r.episode = j.at("episode").get<std::uint64_t>();
  const auto phase = j.at("phase").get<std::string>();
  if (phase == "present") {
    r.phase = RecallPhase::present;
  } else if (phase == "query") {
    r.phase = RecallPhase::query;
  } else {
    throw Error(ErrorCode::malformed_trace, "unknown recall phase '" + phase + "'");
  }
  r.shot = j.at("shot").get<int>();
  r.game = j.at("game").get<int>();
  r.target = latent_from(j.at("target"));
  r.query = optional_from<int>(j.at("query"));
  r.answer = optional_from<int>(j.at("answer"));
  r.reward = j.at("reward").get<double>();
  r.correct = optional_from<bool>(j.at("correct"));
  return r;
}

json parse_trace_line(std::string_view line, std::size_t line_no) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::malformed_trace, fmt::format("line {}: {}", line_no, e.what()));
  }
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string())
    throw Error(ErrorCode::malformed_trace, fmt::format("line {}: record without a type", line_no));
  return j;
}

std::string canonical_line(std::string_view line) { return parse_trace_line(line, 0).dump(); }

// --- summaries ---------------------------------------------------------------

const GroupSummary* TraceSummary::find(const GroupKey& key) const {
  for (const auto& g : groups)
    if (g.key == key) return &g;
  return nullptr;
}

namespace {

json interval_json(const Interval& i) { return json{{"mean", i.mean}, {"low", i.low}, {"high", i.high}}; }

std::string key_label(const GroupKey& k) {
  return fmt::format("{}|O={}|S={}|K={}|permute={}|{}", k.task, k.o_samples, k.shots, k.distractors, k.permute,
                     k.agent);
}

}  // namespace

json TraceSummary::to_json() const {
  json out = json::array();
  for (const auto& g : groups) {
    json shots = json::array();
    for (std::size_t s = 0; s < g.shots.size(); ++s) {
      json entry = interval_json(g.shots[s]);
      entry["shot"] = s + 1;
      entry["correct"] = g.shot_correct[s];
      entry["total"] = g.shot_total[s];
      shots.push_back(entry);
    }
    json item{{"task", g.key.task},
              {"obj-samples", g.key.o_samples},
              {"shots", g.key.shots},
              {"distractors", g.key.distractors},
              {"permute", g.key.permute},
              {"agent", g.key.agent},
              {"episodes", g.episodes},
              {"failed", g.failed},
              {"per_shot", shots}};
    if (g.key.task == "referential") {
      item["zsct"] = interval_json(g.zsct);
      item["test_correct"] = g.test_correct;
      item["test_total"] = g.test_total;
    }
    out.push_back(item);
  }
  return json{{"groups", out}};
}

Interval bootstrap_mean(const std::vector<double>& values, int resamples, Rng& rng) {
  if (values.empty()) return {};
  const double n = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  Interval out{sum / n, sum / n, sum / n};
  if (resamples < 1) return out;
  std::vector<double> means;
  means.reserve(static_cast<std::size_t>(resamples));
  for (int b = 0; b < resamples; ++b) {
    double s = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) s += values[rng.below(values.size())];
    means.push_back(s / n);
  }
  std::sort(means.begin(), means.end());
  const auto at = [&](double q) {
    const auto idx = static_cast<std::size_t>(std::floor(q * static_cast<double>(resamples - 1)));
    return means[idx];
  };
  out.low = at(0.025);
  out.high = means[static_cast<std::size_t>(std::ceil(0.975 * static_cast<double>(resamples - 1)))];
  return out;
}

TraceSummarizer::Group& TraceSummarizer::group() {
  for (auto& [key, g] : groups_)
    if (key == *current_) return g;
  groups_.emplace_back(*current_, Group{});
  return groups_.back().second;
}

void TraceSummarizer::consume(std::string_view line) {
  ++line_no_;
  if (line.find_first_not_of(" \t\r") == std::string_view::npos) return;
  consume(parse_trace_line(line, line_no_), line_no_);
}

void TraceSummarizer::consume(const json& record, std::size_t line_no) {
  const auto fail = [&](const std::string& what) {
    throw Error(ErrorCode::malformed_trace, fmt::format("line {}: {}", line_no, what));
  };
  try {
    const auto type = record.at("type").get<std::string>();
    if (type == "header") {
      const auto& c = record.at("config");
      GroupKey key;
      key.task = record.at("task").get<std::string>();
      task_from_string(key.task);
      key.shots = c.at("shots").get<int>();
      if (key.task == "referential") {
        key.o_samples = c.at("obj-samples").get<int>();
        key.distractors = c.at("distractors").get<int>();
        key.permute = c.at("permute").get<bool>();
        key.agent = c.at("listener").get<std::string>();
      } else {
        key.agent = c.at("recall-agent").get<std::string>();
      }
      current_ = key;
      group();
      return;
    }
    if (type != "episode_end") return;
    if (!current_) fail("episode record before any header");
    auto& g = group();
    if (record.at("status").get<std::string>() != "ok") {
      ++g.failed;
      return;
    }
    ++g.ok;
    std::vector<int> correct, total;
    if (current_->task == "referential") {
      correct = record.at("train_correct").get<std::vector<int>>();
      total = record.at("train_total").get<std::vector<int>>();
      const int tc = record.at("test_correct").get<int>();
      const int tt = record.at("test_total").get<int>();
      if (tt <= 0) fail("episode without test games");
      g.zsct.push_back(static_cast<double>(tc) / tt);
      g.test_correct += tc;
      g.test_total += tt;
    } else {
      correct = record.at("shot_correct").get<std::vector<int>>();
      total = record.at("shot_total").get<std::vector<int>>();
    }
    if (correct.size() != total.size()) fail("per-shot tallies of different lengths");
    if (g.shots.size() < total.size()) {
      g.shots.resize(total.size());
      g.shot_correct.resize(total.size());
      g.shot_total.resize(total.size());
    }
    for (std::size_t s = 0; s < total.size(); ++s) {
      if (total[s] > 0) g.shots[s].push_back(static_cast<double>(correct[s]) / total[s]);
      g.shot_correct[s] += correct[s];
      g.shot_total[s] += total[s];
    }
  } catch (const json::exception& e) {
    fail(e.what());
  }
}

TraceSummary TraceSummarizer::finish() const {
  TraceSummary out;
  for (const auto& [key, g] : groups_) {
    GroupSummary s;
    s.key = key;
    s.episodes = g.ok;
    s.failed = g.failed;
    Rng rng = derive_rng(SeedPath{0, {"bootstrap", key_label(key)}});
    s.zsct = bootstrap_mean(g.zsct, resamples_, rng);
    s.test_correct = g.test_correct;
    s.test_total = g.test_total;
    for (const auto& values : g.shots) s.shots.push_back(bootstrap_mean(values, resamples_, rng));
    s.shot_correct = g.shot_correct;
    s.shot_total = g.shot_total;
    out.groups.push_back(std::move(s));
  }
  std::sort(out.groups.begin(), out.groups.end(), [](const auto& a, const auto& b) { return a.key < b.key; });
  return out;
}

TraceSummary summarize_traces(std::istream& in, int resamples) {
  TraceSummarizer summarizer(resamples);
  std::string line;
  while (std::getline(in, line)) summarizer.consume(line);
  return summarizer.finish();
}

}  // namespace metarg
