#include <doctest.h>

#include <set>

#include "metarg/agents.hpp"
#include "metarg/episode.hpp"
#include "metarg/error.hpp"

using namespace metarg;

namespace {

EpisodeConfig small_config(std::uint64_t seed, int shots = 2) {
  EpisodeConfig c;
  c.shots = shots;
  c.seed = SeedPath{seed, {"episode/0"}};
  return c;
}

// Plays to the end, always picking the revealed-or-first candidate.
std::vector<StepRecord> play(MetaEpisode& ep) {
  std::vector<StepRecord> out;
  while (!ep.done()) {
    const int pick = ep.game().target_index.value_or(0);
    out.push_back(ep.step(ListenerAction{0, Decision::pick(pick)}).record);
  }
  return out;
}

}  // namespace

TEST_SUITE("episode") {
  TEST_CASE("vocabulary permutation") {
    Rng rng(4);
    const auto p = VocabPermutation::sample(10, rng);
    CHECK(p.apply(0) == 0);
    std::set<int> image;
    for (int t = 0; t <= 10; ++t) image.insert(p.apply(t));
    CHECK(image.size() == 11);
    const auto inv = p.inverse();
    for (int t = 0; t <= 10; ++t) CHECK(inv.apply(p.apply(t)) == t);
    CHECK(VocabPermutation::identity(5).is_identity());
    CHECK_THROWS_AS(p.apply(11), Error);
    CHECK_THROWS_AS(VocabPermutation::from_mapping({1, 0}), Error);
    CHECK_THROWS_AS(VocabPermutation::from_mapping({0, 1, 1}), Error);
    const auto m = VocabPermutation::from_mapping({0, 2, 1});
    CHECK(apply_permutation(m, std::vector<int>{1, 2, 0}) == std::vector<int>{2, 1, 0});
  }

  TEST_CASE("phase strings") {
    for (Phase p : {Phase::train, Phase::test, Phase::done}) CHECK(phase_from_string(to_string(p)) == p);
    CHECK_THROWS_AS(phase_from_string("warmup"), Error);
  }

  TEST_CASE("phases, shots and summary") {
    auto cfg = small_config(5, 3);
    MetaEpisode ep(cfg, make_speaker(SpeakerKind::posdis, cfg));
    CHECK_THROWS_AS(ep.summary(), Error);
    const std::size_t train = ep.split().train.size();
    const std::size_t test = ep.split().test.size();
    CHECK(ep.total_games() == 3 * train + test);

    const auto records = play(ep);
    REQUIRE(records.size() == ep.total_games());
    for (std::size_t k = 0; k < records.size(); ++k) {
      const auto& r = records[k];
      CHECK(r.game == static_cast<int>(k));
      if (k < 3 * train) {
        CHECK(r.phase == Phase::train);
        CHECK(r.shot == static_cast<int>(k / train) + 1);
      } else {
        CHECK(r.phase == Phase::test);
        CHECK(r.shot == 1);
      }
      CHECK(r.correct == true);
    }
    // Every training shot covers the training stimuli exactly once.
    for (int s = 0; s < 3; ++s) {
      std::set<LatentStimulus> seen;
      for (std::size_t k = s * train; k < (s + 1) * train; ++k) seen.insert(records[k].target);
      CHECK(seen.size() == train);
    }
    const auto sum = ep.summary();
    CHECK(sum.test_total == static_cast<int>(test));
    CHECK(sum.zsct_accuracy() == 1.0);
    CHECK(sum.train_accuracy(2) == 1.0);
    CHECK_THROWS_AS(ep.step(ListenerAction{}), Error);
    CHECK_THROWS_AS(ep.observation(), Error);
  }

  TEST_CASE("messages pass through the permutation") {
    auto cfg = small_config(6);
    MetaEpisode ep(cfg, make_speaker(SpeakerKind::posdis, cfg));
    CHECK_FALSE(ep.permutation().is_identity());
    const auto raw = posdis_speak(ep.game().target, cfg.game.vocab_size, cfg.sentence_len());
    CHECK(ep.observation().message == apply_permutation(ep.permutation(), raw));

    cfg.permute_vocab = false;
    MetaEpisode plain(cfg, make_speaker(SpeakerKind::posdis, cfg));
    CHECK(plain.permutation().is_identity());
    CHECK(plain.observation().message == posdis_speak(plain.game().target, cfg.game.vocab_size, cfg.sentence_len()));
  }

  TEST_CASE("episodes are a pure function of the seed path") {
    auto cfg = small_config(77);
    MetaEpisode a(cfg, make_speaker(SpeakerKind::posdis, cfg));
    MetaEpisode b(cfg, make_speaker(SpeakerKind::posdis, cfg));
    CHECK(a.structure() == b.structure());
    CHECK(a.permutation().mapping() == b.permutation().mapping());
    CHECK(play(a) == play(b));

    auto other = cfg;
    other.seed = SeedPath{77, {"episode/1"}};
    MetaEpisode c(other, make_speaker(SpeakerKind::posdis, other));
    MetaEpisode d(cfg, make_speaker(SpeakerKind::posdis, cfg));
    CHECK(play(c) != play(d));
  }

  TEST_CASE("test stimuli never appear as training targets") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      auto cfg = small_config(seed, 1);
      MetaEpisode ep(cfg, make_speaker(SpeakerKind::posdis, cfg));
      const std::set<LatentStimulus> test(ep.split().test.begin(), ep.split().test.end());
      for (const auto& r : play(ep)) CHECK((r.phase == Phase::test) == (test.count(r.target) == 1));
    }
  }

  TEST_CASE("communication rounds") {
    auto cfg = small_config(9, 1);
    cfg.game.rounds = 3;
    MetaEpisode ep(cfg, make_speaker(SpeakerKind::posdis, cfg));
    CHECK(ep.observation().turn == Turn::communication);
    CHECK_THROWS_AS(ep.step(ListenerAction{0, Decision::pick(0)}), Error);
    auto r = ep.step(ListenerAction{4, Decision::no_op()});
    CHECK_FALSE(r.game_done);
    CHECK(r.record.round == 0);
    CHECK_FALSE(r.record.correct.has_value());
    r = ep.step(ListenerAction{0, Decision::no_op()});
    CHECK(r.record.round == 1);
    CHECK(ep.observation().turn == Turn::decision);
    CHECK_THROWS_AS(ep.step(ListenerAction{0, Decision::no_op()}), Error);
    CHECK_THROWS_AS(ep.step(ListenerAction{99, Decision::pick(0)}), Error);
    r = ep.step(ListenerAction{0, Decision::pick(0)});
    CHECK(r.game_done);
    CHECK(r.record.round == 2);
    CHECK(ep.game().round == 0);
  }

  TEST_CASE("config validation") {
    EpisodeConfig c;
    c.v_min = 1;
    CHECK_THROWS_AS(c.validate(), Error);
    c = EpisodeConfig{};
    c.shots = 0;
    CHECK_THROWS_AS(c.validate(), Error);
    c = EpisodeConfig{};
    c.holdout_fraction = 1.0;
    CHECK_THROWS_AS(c.validate(), Error);
    CHECK_THROWS_AS(MetaEpisode(EpisodeConfig{}, nullptr), Error);
  }
}
