#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/core.h>

#include "metarg/batch.hpp"
#include "metarg/config.hpp"
#include "metarg/error.hpp"
#include "metarg/metrics.hpp"
#include "metarg/protocol.hpp"
#include "metarg/trace.hpp"
#include "metarg/validation.hpp"

namespace {

using metarg::RunConfig;

// Flag values stay empty unless given, so they override the config file
// only where the user set them.
struct Flags {
  std::optional<std::string> config;
  std::optional<int> ndim, vmin, vmax, shots, obj_samples, distractors, vocab_size, sentence_len, rounds;
  std::optional<double> holdout, target_present_prob, reward_correct, reward_incorrect;
  std::optional<bool> permute, descriptive, reveal_target;
  std::optional<std::uint64_t> seed;
  std::optional<int> episodes, workers, mu_points, sigma_points;
  std::optional<std::string> out, listener, speaker, perception, bind, representation, recall_agent;

  void add(CLI::App& app) {
    app.add_option("--config", config, "JSON config file; flags override its keys");
    app.add_option("--ndim", ndim, "latent dimensions");
    app.add_option("--vmin", vmin, "minimum values per dimension");
    app.add_option("--vmax", vmax, "maximum values per dimension");
    app.add_option("--shots", shots, "training shots S");
    app.add_option("--obj-samples", obj_samples, "object-centric samples O");
    app.add_option("--distractors", distractors, "distractors K");
    app.add_option("--vocab-size", vocab_size, "vocabulary size (EoS excluded)");
    app.add_option("--sentence-len", sentence_len, "message length, 0 for ndim+1");
    app.add_option("--rounds", rounds, "communication rounds per game");
    app.add_option("--holdout", holdout, "ZSCT holdout fraction");
    app.add_flag("--permute,!--no-permute", permute, "per-episode vocabulary permutation");
    app.add_flag("--descriptive,!--no-descriptive", descriptive, "descriptive game variant");
    app.add_option("--target-present-prob", target_present_prob, "probability the target is among candidates");
    app.add_option("--reward-correct", reward_correct, "reward for a correct decision");
    app.add_option("--reward-incorrect", reward_incorrect, "reward for a wrong decision");
    app.add_flag("--reveal-target,!--no-reveal-target", reveal_target, "reveal the target after each decision");
    app.add_option("--seed", seed, "master seed");
    app.add_option("--episodes", episodes, "number of episodes");
    app.add_option("--workers", workers, "worker threads");
    app.add_option("--out", out, "trace output path");
    app.add_option("--listener", listener, "oracle | cheat | random | external");
    app.add_option("--speaker", speaker, "posdis | cheat");
    app.add_option("--oracle-perception", perception, "exact | codebook");
    app.add_option("--bind", bind, "host:port for serve");
    app.add_option("--representation", representation, "recall stimulus encoding: scs | ohe");
    app.add_option("--recall-agent", recall_agent, "ohe-reader | scs-solver | random");
    app.add_option("--mu-points", mu_points, "structure inference grid, mu axis");
    app.add_option("--sigma-points", sigma_points, "structure inference grid, sigma axis");
  }

  RunConfig resolve() const {
    RunConfig c = config ? metarg::load_config_file(*config) : RunConfig{};
    nlohmann::json j = nlohmann::json::object();
    const auto put = [&](const char* key, const auto& value) {
      if (value) j[key] = *value;
    };
    put("ndim", ndim);
    put("vmin", vmin);
    put("vmax", vmax);
    put("shots", shots);
    put("obj-samples", obj_samples);
    put("distractors", distractors);
    put("vocab-size", vocab_size);
    put("sentence-len", sentence_len);
    put("rounds", rounds);
    put("holdout", holdout);
    put("permute", permute);
    put("descriptive", descriptive);
    put("target-present-prob", target_present_prob);
    put("reward-correct", reward_correct);
    put("reward-incorrect", reward_incorrect);
    put("reveal-target", reveal_target);
    put("seed", seed);
    put("episodes", episodes);
    put("workers", workers);
    put("out", out);
    put("listener", listener);
    put("speaker", speaker);
    put("oracle-perception", perception);
    put("bind", bind);
    put("representation", representation);
    put("recall-agent", recall_agent);
    put("mu-points", mu_points);
    put("sigma-points", sigma_points);
    c = metarg::apply_json(j, c);
    c.validate();
    return c;
  }
};

int run_batch_command(const RunConfig& config, metarg::Task task) {
  metarg::BatchResult result;
  if (config.out.empty()) {
    result = metarg::run_batch(config, task, std::cout);
    std::cerr << result.summary.to_json().dump(2) << '\n';
  } else {
    std::ofstream out(config.out);
    if (!out) throw metarg::Error(metarg::ErrorCode::io, "cannot open '" + config.out + "'");
    result = metarg::run_batch(config, task, out);
    std::cout << result.summary.to_json().dump(2) << '\n';
  }
  return 0;
}

int run_episode_command(RunConfig config, metarg::Task task) {
  config.episodes = 1;
  config.workers = 1;
  std::cout << metarg::header_line(config, task) << '\n';
  if (task == metarg::Task::recall) {
    for (const auto& line : metarg::recall_episode_lines(config, 0)) std::cout << line << '\n';
  } else {
    const auto lines = metarg::referential_episode_lines(config, 0, metarg::default_listener_factory(config));
    for (const auto& line : lines) std::cout << line << '\n';
  }
  return 0;
}

int run_metrics_command(const std::string& table_path, const std::string& traces_path, int resamples) {
  if (!table_path.empty()) {
    std::ifstream in(table_path);
    if (!in) throw metarg::Error(metarg::ErrorCode::io, "cannot open '" + table_path + "'");
    const auto table = metarg::parse_table_csv(in);
    const auto metric = [](const metarg::MetricValue& m) {
      return nlohmann::json{{"value", m.value}, {"degenerate", m.degenerate}};
    };
    const nlohmann::json report{{"rows", table.size()},
                                {"topsim", metric(metarg::topographic_similarity(table, metarg::Execution::parallel))},
                                {"posdis", metric(metarg::posdis(table))},
                                {"bosdis", metric(metarg::bosdis(table))}};
    std::cout << report.dump(2) << '\n';
  }
  if (!traces_path.empty()) {
    std::ifstream in(traces_path);
    if (!in) throw metarg::Error(metarg::ErrorCode::io, "cannot open '" + traces_path + "'");
    std::cout << metarg::summarize_traces(in, resamples).to_json().dump(2) << '\n';
  }
  return 0;
}

int run_serve_command(const RunConfig& config) {
  metarg::ProtocolServer server(config, config.bind);
  const int port = server.start();
  std::cout << fmt::format("listening on port {} (protocol version {})", port, metarg::kProtocolVersion) << std::endl;
  server.serve();
  return 0;
}

int run_validate_command() {
  bool ok = true;
  for (const auto& result : metarg::run_validation_suite()) {
    std::cout << metarg::format_check(result) << '\n';
    ok = ok && result.passed;
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Meta-referential games engine"};
  app.require_subcommand(1);

  Flags episode_flags, batch_flags, recall_flags, serve_flags;
  auto* episode = app.add_subcommand("episode", "play one referential episode and print its trace");
  episode_flags.add(*episode);
  bool episode_recall = false;
  episode->add_flag("--recall", episode_recall, "play a recall episode instead");

  auto* batch = app.add_subcommand("batch", "run many referential episodes");
  batch_flags.add(*batch);

  auto* recall = app.add_subcommand("recall", "run recall-task episodes");
  recall_flags.add(*recall);

  auto* metrics = app.add_subcommand("metrics", "compositionality metrics or trace summaries");
  std::string table_path, traces_path;
  int resamples = metarg::kBootstrapResamples;
  metrics->add_option("--table", table_path, "rows 'l1,l2,...;t1 t2 ...'");
  metrics->add_option("--traces", traces_path, "JSONL trace file");
  metrics->add_option("--resamples", resamples, "bootstrap resamples");

  auto* serve = app.add_subcommand("serve", "serve external listeners over TCP");
  serve_flags.add(*serve);

  auto* validate = app.add_subcommand("validate", "run the invariant and acceptance suite");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*episode)
      return run_episode_command(episode_flags.resolve(),
                                 episode_recall ? metarg::Task::recall : metarg::Task::referential);
    if (*batch) return run_batch_command(batch_flags.resolve(), metarg::Task::referential);
    if (*recall) return run_batch_command(recall_flags.resolve(), metarg::Task::recall);
    if (*metrics) {
      if (table_path.empty() && traces_path.empty()) {
        std::cerr << "metrics needs --table or --traces\n";
        return 2;
      }
      return run_metrics_command(table_path, traces_path, resamples);
    }
    if (*serve) return run_serve_command(serve_flags.resolve());
    if (*validate) return run_validate_command();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
