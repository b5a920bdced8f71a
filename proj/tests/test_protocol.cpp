#include <doctest.h>

#include <cstring>
#include <sstream>
#include <thread>

#include "metarg/batch.hpp"
#include "metarg/protocol.hpp"

using namespace metarg;
using nlohmann::json;

namespace {

json one(const std::vector<std::string>& replies) {
  REQUIRE(replies.size() == 1);
  return json::parse(replies[0]);
}

ListenerObservation to_observation(const json& obs) {
  ListenerObservation o;
  for (const auto& v : obs["views"]) o.views.push_back(ScsStimulus{v.get<std::vector<double>>()});
  o.message = obs["message"].get<std::vector<int>>();
  o.round = obs["round"].get<int>();
  o.turn = obs["turn"] == "decision" ? Turn::decision : Turn::communication;
  return o;
}

DecisionOutcome to_outcome(const json& result) {
  DecisionOutcome out;
  out.reward = result["reward"].get<double>();
  out.correct = result["correct"].is_boolean() && result["correct"].get<bool>();
  if (result.contains("target_index")) {
    out.revealed = true;
    if (!result["target_index"].is_null()) out.target_index = result["target_index"].get<int>();
  }
  return out;
}

std::string act(int token, int decision) {
  return json{{"type", "act"}, {"token", token}, {"decision", decision}}.dump();
}

std::vector<std::string> step_lines(const std::vector<std::string>& lines) {
  std::vector<std::string> out;
  for (const auto& l : lines)
    if (json::parse(l)["type"] == "step" || json::parse(l)["type"] == "episode_start") out.push_back(l);
  return out;
}

}  // namespace

TEST_SUITE("protocol") {
  TEST_CASE("hello handshake") {
    ProtocolSession s(RunConfig{});
    const auto hello = one(s.handle(R"({"type":"hello","version":1})"));
    CHECK(hello["type"] == "hello");
    CHECK(hello["version"] == kProtocolVersion);
    CHECK(hello["engine"] == kEngineVersion);
    CHECK(hello["action_space"]["decisions"] == 4);
    CHECK(hello["action_space"]["no_op"] == -1);
    CHECK(hello["action_space"]["no_target"] == -2);
    CHECK(hello["action_space"]["no_target_legal"] == false);

    ProtocolSession bad(RunConfig{});
    const auto err = one(bad.handle(R"({"type":"hello","version":99})"));
    CHECK(err["type"] == "error");
    CHECK(err["code"] == "protocol-violation");
    CHECK(bad.closed());
    CHECK(bad.handle(R"({"type":"hello","version":1})").empty());
  }

  TEST_CASE("ordering violations close the session") {
    ProtocolSession s(RunConfig{});
    CHECK(one(s.handle(act(0, 0)))["type"] == "error");
    CHECK(s.closed());

    ProtocolSession t(RunConfig{});
    t.handle(R"({"type":"hello","version":1})");
    CHECK(one(t.handle(act(0, 0)))["type"] == "error");

    ProtocolSession u(RunConfig{});
    CHECK(one(u.handle("not json"))["code"] == "protocol-violation");
    ProtocolSession v(RunConfig{});
    CHECK(one(v.handle(R"({"type":"dance"})"))["type"] == "error");
  }

  TEST_CASE("a decision in a communication turn names the phase") {
    RunConfig c;
    c.episode.game.rounds = 2;
    ProtocolSession s(c);
    s.handle(R"({"type":"hello","version":1})");
    const auto obs = one(s.handle(R"({"type":"reset","seed":3})"));
    CHECK(obs["turn"] == "communication");
    const auto err = one(s.handle(act(0, 1)));
    CHECK(err["type"] == "error");
    CHECK(err["code"] == "illegal-action");
    CHECK(err["message"].get<std::string>().find("(phase train, communication turn)") != std::string::npos);
    CHECK(s.closed());
  }

  TEST_CASE("views round-trip bit-exactly") {
    ProtocolSession s(RunConfig{});
    s.handle(R"({"type":"hello","version":1})");
    const auto obs = one(s.handle(R"({"type":"reset","seed":11,"config":{"obj-samples":4}})"));
    const auto expected = s.episode()->observation().views;
    const auto got = to_observation(obs).views;
    REQUIRE(got.size() == expected.size());
    for (std::size_t k = 0; k < got.size(); ++k)
      for (std::size_t i = 0; i < got[k].size(); ++i)
        CHECK(std::memcmp(&got[k].coords[i], &expected[k].coords[i], sizeof(double)) == 0);
    CHECK(format_views({ScsStimulus{{0.1, -1.0}}}) == "[[0.10000000000000001,-1]]");
  }

  TEST_CASE("replaying batch actions reproduces the batch trace") {
    RunConfig c;
    c.seed = 21;
    c.episode.shots = 2;
    c.episode.game.reveal_target_after_decision = true;
    const auto batch = referential_episode_lines(c, 0, default_listener_factory(c));

    ProtocolSession s(c);
    s.handle(R"({"type":"hello","version":1})");
    s.handle(R"({"type":"reset","seed":21,"episode":0})");
    json last;
    for (const auto& line : batch) {
      const auto j = json::parse(line);
      if (j["type"] != "step") continue;
      const auto replies = s.handle(act(j["token"], j["decision"]));
      last = json::parse(replies.back());
    }
    CHECK(last["type"] == "summary");
    CHECK(last["zsct"] == 1.0);
    CHECK(step_lines(s.trace()) == step_lines(batch));
    CHECK(s.trace().back() == batch.back());
  }

  TEST_CASE("a client-side oracle decides like the in-process one") {
    RunConfig c;
    c.seed = 5;
    c.episode.game.o_samples = 4;
    c.episode.game.reveal_target_after_decision = true;
    c.perception = OraclePerception::codebook;
    const auto batch = referential_episode_lines(c, 1, default_listener_factory(c));

    ProtocolSession s(c);
    s.handle(R"({"type":"hello","version":1})");
    auto obs = one(s.handle(R"({"type":"reset","seed":5,"episode":1})"));
    const auto& episode = *s.episode();
    OracleListener client(episode.codebook(), episode.config().game,
                          derive_rng(c.episode_config(1).seed.child("listener")));
    while (obs["type"] == "obs") {
      const auto a = client.act(to_observation(obs));
      const auto replies = s.handle(act(a.token, a.decision.code()));
      const auto result = json::parse(replies.front());
      REQUIRE(result["type"] == "result");
      client.observe(to_outcome(result));
      obs = json::parse(replies.back());
    }
    CHECK(obs["type"] == "summary");
    CHECK(step_lines(s.trace()) == step_lines(batch));
  }

  TEST_CASE("tcp loopback with concurrent sessions") {
    ProtocolServer server(RunConfig{}, "127.0.0.1:0");
    const int port = server.start();
    CHECK(port > 0);
    std::thread loop([&] { server.serve(); });

    const auto play = [port](std::uint64_t seed) {
      LineClient client("127.0.0.1", port);
      client.send(R"({"type":"hello","version":1})");
      REQUIRE(json::parse(*client.read_line())["type"] == "hello");
      client.send(json{{"type", "reset"}, {"seed", seed}}.dump());
      auto obs = json::parse(*client.read_line());
      int games = 0;
      while (obs["type"] == "obs") {
        client.send(act(0, 0));
        const auto result = json::parse(*client.read_line());
        REQUIRE(result["type"] == "result");
        ++games;
        obs = json::parse(*client.read_line());
      }
      CHECK(obs["type"] == "summary");
      return std::make_pair(games, obs.dump());
    };

    std::pair<int, std::string> a, b, a2;
    std::thread ta([&] { a = play(1); });
    std::thread tb([&] { b = play(2); });
    ta.join();
    tb.join();
    a2 = play(1);
    CHECK(a.first > 0);
    CHECK(a == a2);

    {
      LineClient rude("127.0.0.1", port);
      rude.send(act(0, 0));
      CHECK(json::parse(*rude.read_line())["type"] == "error");
      CHECK_FALSE(rude.read_line().has_value());
    }
    server.stop();
    loop.join();
    CHECK(server.sessions_served() >= 3);
  }
}
