#include <algorithm>
#include <sstream>
#include <thread>

#include <benchmark/benchmark.h>

#include "metarg/agents.hpp"
#include "metarg/batch.hpp"
#include "metarg/metrics.hpp"

namespace {

using metarg::Execution;

// Arg: episodes. Serial reference vs OpenMP chunks on every available core.
void run_batch_kernel(benchmark::State& state, Execution exec, metarg::Task task) {
  metarg::RunConfig config;
  config.episodes = static_cast<int>(state.range(0));
  config.workers = exec == Execution::serial ? 1 : std::max(1u, std::thread::hardware_concurrency());
  config.episode.game.o_samples = 4;
  config.perception = metarg::OraclePerception::codebook;
  for (auto _ : state) {
    std::ostringstream out;
    auto result = metarg::run_batch(config, task, out, exec);
    benchmark::DoNotOptimize(result.lines);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_BatchReferentialSerial(benchmark::State& s) { run_batch_kernel(s, Execution::serial, metarg::Task::referential); }
void BM_BatchReferentialParallel(benchmark::State& s) { run_batch_kernel(s, Execution::parallel, metarg::Task::referential); }
void BM_BatchRecallSerial(benchmark::State& s) { run_batch_kernel(s, Execution::serial, metarg::Task::recall); }
void BM_BatchRecallParallel(benchmark::State& s) { run_batch_kernel(s, Execution::parallel, metarg::Task::recall); }

// Arg: values per dimension of a 3-d space; the table holds d^3 rows.
void run_topsim(benchmark::State& state, Execution exec) {
  const int d = static_cast<int>(state.range(0));
  const auto table = metarg::posdis_language(metarg::SemanticStructure({d, d, d}), d + 1);
  for (auto _ : state) benchmark::DoNotOptimize(metarg::topographic_similarity(table, exec).value);
  const auto n = static_cast<std::int64_t>(table.size());
  state.SetItemsProcessed(state.iterations() * n * (n - 1) / 2);
}

void BM_TopsimSerial(benchmark::State& s) { run_topsim(s, Execution::serial); }
void BM_TopsimParallel(benchmark::State& s) { run_topsim(s, Execution::parallel); }

}  // namespace

BENCHMARK(BM_BatchReferentialSerial)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BatchReferentialParallel)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BatchRecallSerial)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BatchRecallParallel)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TopsimSerial)->Arg(5)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TopsimParallel)->Arg(5)->Arg(8)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
