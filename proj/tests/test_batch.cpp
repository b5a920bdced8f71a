#include <doctest.h>

#include <sstream>

#include "metarg/batch.hpp"
#include "metarg/error.hpp"
#include "metarg/validation.hpp"

using namespace metarg;

namespace {

std::string without_header(const std::string& trace) {
  return trace.substr(trace.find('\n') + 1);
}

}  // namespace

TEST_SUITE("batch") {
  TEST_CASE("oracle with reveal and two shots is perfect") {
    RunConfig c;
    c.episodes = 100;
    c.episode.shots = 2;
    c.episode.game.reveal_target_after_decision = true;
    std::ostringstream out;
    const auto r = run_batch(c, Task::referential, out);
    REQUIRE(r.summary.groups.size() == 1);
    CHECK(r.failed == 0);
    CHECK(r.summary.groups[0].episodes == 100);
    CHECK(r.summary.groups[0].zsct.mean == 1.0);
  }

  TEST_CASE("random listener sits at chance") {
    RunConfig c;
    c.episodes = 200;
    c.seed = 2024;
    c.listener = ListenerKind::random;
    std::ostringstream out;
    const auto g = run_batch(c, Task::referential, out).summary.groups.at(0);
    CHECK(within_binomial_ci(g.test_correct, g.test_total, 0.25));
  }

  TEST_CASE("worker count and execution path do not change the trace") {
    RunConfig c;
    c.episodes = 30;
    c.seed = 8;
    c.episode.game.o_samples = 4;
    c.perception = OraclePerception::codebook;
    std::ostringstream serial, one, eight;
    run_batch(c, Task::referential, serial, Execution::serial);
    run_batch(c, Task::referential, one, Execution::parallel);
    c.workers = 8;
    run_batch(c, Task::referential, eight, Execution::parallel);
    CHECK(serial.str() == one.str());
    CHECK(without_header(one.str()) == without_header(eight.str()));
  }

  TEST_CASE("recall batches are deterministic too") {
    RunConfig c;
    c.episodes = 10;
    std::ostringstream a, b;
    run_batch(c, Task::recall, a, Execution::serial);
    c.workers = 4;
    run_batch(c, Task::recall, b, Execution::parallel);
    CHECK(without_header(a.str()) == without_header(b.str()));
  }

  TEST_CASE("inline summary equals the summary of the written trace") {
    for (Task task : {Task::referential, Task::recall}) {
      RunConfig c;
      c.episodes = 25;
      c.seed = 4;
      c.listener = ListenerKind::random;
      std::ostringstream out;
      const auto r = run_batch(c, task, out);
      std::istringstream in(out.str());
      CHECK(summarize_traces(in).to_json().dump() == r.summary.to_json().dump());
      std::size_t lines = 0;
      for (char ch : out.str()) lines += ch == '\n';
      CHECK(lines == r.lines);
    }
  }

  TEST_CASE("a failing listener fails its episode and the run continues") {
    RunConfig c;
    c.episodes = 6;
    const ListenerFactory flaky = [&](const MetaEpisode& ep, Rng rng) -> std::unique_ptr<Listener> {
      if (ep.id() == 2) throw Error(ErrorCode::illegal_action, "listener crashed");
      return make_listener(ListenerKind::oracle, ep, std::move(rng));
    };
    std::ostringstream out;
    const auto r = run_batch(c, out, flaky);
    CHECK(r.failed == 1);
    const auto& g = r.summary.groups.at(0);
    CHECK(g.episodes == 5);
    CHECK(g.failed == 1);
    CHECK(out.str().find("listener crashed") != std::string::npos);
  }

  TEST_CASE("external listeners are refused in batches") {
    RunConfig c;
    c.listener = ListenerKind::external;
    std::ostringstream out;
    CHECK_THROWS_AS(run_batch(c, Task::referential, out), Error);
  }
}
