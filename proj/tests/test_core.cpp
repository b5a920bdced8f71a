#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "metarg/error.hpp"
#include "metarg/rng.hpp"
#include "metarg/semantics.hpp"

using namespace metarg;

namespace {

// Brute force: largest coverage-safe subset size over all subsets of the space.
std::size_t max_safe_holdout(const SemanticStructure& s) {
  const auto space = enumerate_space(s);
  std::size_t best = 0;
  for (unsigned mask = 1; mask < (1u << space.size()); ++mask) {
    std::vector<LatentStimulus> train;
    for (std::size_t k = 0; k < space.size(); ++k)
      if (!(mask & (1u << k))) train.push_back(space[k]);
    if (covers_all_values(s, train)) best = std::max<std::size_t>(best, space.size() - train.size());
  }
  return best;
}

}  // namespace

TEST_SUITE("core") {
  TEST_CASE("fnv1a and splitmix reference vectors") {
    CHECK(fnv1a64("") == 0xCBF29CE484222325ULL);
    CHECK(fnv1a64("a") == 0xAF63DC4C8601EC8CULL);
    CHECK(fnv1a64("foobar") == 0x85944171F73967E8ULL);
    // First output of a SplitMix64 generator seeded with 0.
    CHECK(splitmix64_mix(0) == 0xE220A8397B1DCDAFULL);
  }

  TEST_CASE("seed derivation matches an independent reimplementation") {
    const auto mix = [](std::uint64_t z) {
      z += 0x9E3779B97F4A7C15ULL;
      z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
      z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
      return z ^ (z >> 31);
    };
    const auto fnv = [](const std::string& s) {
      std::uint64_t h = 0xCBF29CE484222325ULL;
      for (unsigned char c : s) h = (h ^ c) * 0x100000001B3ULL;
      return h;
    };
    const SeedPath path{123456789, {"episode/3", "codebook", "dim/1"}};
    std::uint64_t h = mix(123456789ULL ^ 0x9E3779B97F4A7C15ULL);
    for (const auto& label : path.stream) h = mix(h ^ fnv(label));
    CHECK(path.derive_seed() == h);

    Rng rng = derive_rng(path);
    std::mt19937_64 reference(h);
    for (int i = 0; i < 5; ++i) CHECK(rng() == reference());
  }

  TEST_CASE("seed path regressions") {
    CHECK(SeedPath{42, {}}.derive_seed() == 2949826092126892291ULL);
    Rng a = derive_rng(SeedPath{42, {"episode/0"}});
    Rng b = derive_rng(SeedPath{42, {"episode/1"}});
    CHECK(a() == 6894300849287850502ULL);
    CHECK(b() == 9853795843798483466ULL);
    CHECK(SeedPath{42, {}}.child("episode", 7) == SeedPath{42, {"episode/7"}});
  }

  TEST_CASE("same path yields identical draws") {
    Rng a = derive_rng(SeedPath{9, {"x"}});
    Rng b = derive_rng(SeedPath{9, {"x"}});
    for (int i = 0; i < 10; ++i) CHECK(a.uniform01() == b.uniform01());
  }

  TEST_CASE("rng ranges") {
    Rng rng(5);
    for (int i = 0; i < 10000; ++i) {
      const double u = rng.uniform01();
      CHECK((u >= 0.0 && u < 1.0));
      const auto k = rng.below(7);
      CHECK(k < 7);
      const int v = rng.uniform_int(-2, 2);
      CHECK((v >= -2 && v <= 2));
    }
  }

  TEST_CASE("normal sampler moments") {
    Rng rng(11);
    const int n = 200000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
      const double x = rng.normal();
      sum += x;
      sq += x * x;
    }
    const double mean = sum / n;
    CHECK(std::abs(mean) < 4.0 / std::sqrt(n));
    CHECK(sq / n - mean * mean == doctest::Approx(1.0).epsilon(0.02));
  }

  TEST_CASE("structure validation") {
    CHECK_THROWS_AS(SemanticStructure(std::vector<int>{}), Error);
    CHECK_THROWS_AS(SemanticStructure({3, 1}), Error);
    Rng rng(1);
    CHECK_THROWS_AS(sample_structure(rng, 3, 1, 5), Error);
    CHECK_THROWS_AS(sample_structure(rng, 3, 4, 3), Error);
  }

  TEST_CASE("sample_structure examples") {
    Rng rng(1);
    CHECK(sample_structure(rng, 3, 2, 2).dims() == std::vector<int>{2, 2, 2});

    Rng ep = derive_rng(SeedPath{0, {"episode/0"}});
    CHECK(sample_structure(ep, 3, 2, 5).dims() == std::vector<int>{2, 5, 2});

    // (4,2,3) is producible.
    bool found = false;
    Rng search(3);
    for (int i = 0; i < 10000 && !found; ++i) found = sample_structure(search, 3, 2, 5).dims() == std::vector<int>{4, 2, 3};
    CHECK(found);
  }

  TEST_CASE("sample_structure marginals within 3 sigma") {
    Rng rng(2024);
    const int n = 100000;
    std::vector<std::vector<int>> counts(3, std::vector<int>(6, 0));
    for (int t = 0; t < n; ++t) {
      const auto s = sample_structure(rng, 3, 2, 5);
      for (int i = 0; i < 3; ++i) ++counts[i][s.dim(i)];
    }
    const double sd = std::sqrt(n * 0.25 * 0.75);
    for (int i = 0; i < 3; ++i)
      for (int v = 2; v <= 5; ++v) CHECK(std::abs(counts[i][v] - n * 0.25) < 3 * sd);
  }

  TEST_CASE("enumerate_space examples") {
    const auto two = enumerate_space(SemanticStructure({2, 2}));
    REQUIRE(two.size() == 4);
    CHECK(two[0].values == std::vector<int>{0, 0});
    CHECK(two[1].values == std::vector<int>{0, 1});
    CHECK(two[2].values == std::vector<int>{1, 0});
    CHECK(two[3].values == std::vector<int>{1, 1});
    CHECK(enumerate_space(SemanticStructure({5, 5, 5})).size() == 125);
    const auto s423 = enumerate_space(SemanticStructure({4, 2, 3}));
    CHECK(s423.size() == 24);
    CHECK(s423.front().values == std::vector<int>{0, 0, 0});
    CHECK(s423.back().values == std::vector<int>{3, 1, 2});
  }

  TEST_CASE("enumerate_space is a sorted bijection with flat indices") {
    const SemanticStructure s({3, 4, 2});
    const auto space = enumerate_space(s);
    CHECK(std::is_sorted(space.begin(), space.end()));
    CHECK(std::adjacent_find(space.begin(), space.end()) == space.end());
    for (std::size_t k = 0; k < space.size(); ++k) {
      CHECK(s.contains(space[k]));
      CHECK(s.flat_index(space[k]) == k);
      CHECK(s.from_flat(k) == space[k]);
    }
  }

  TEST_CASE("zsct split examples") {
    const SemanticStructure s22({2, 2});
    Rng rng(4);
    const auto quarter = make_zsct_split(s22, 0.25, rng);
    CHECK(quarter.test.size() == 1);
    CHECK(quarter.train.size() == 3);
    CHECK(covers_all_values(s22, quarter.train));

    // Requested 3; the largest coverage-safe holdout is an antipodal pair.
    CHECK(max_safe_holdout(s22) == 2);
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      Rng r(seed);
      const auto split = make_zsct_split(s22, 0.75, r);
      CHECK(split.test.size() == 2);
      CHECK(covers_all_values(s22, split.train));
    }

    const SemanticStructure s555({5, 5, 5});
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
      Rng r(seed);
      const auto split = make_zsct_split(s555, 0.2, r);
      CHECK(split.test.size() == 25);
      CHECK(split.train.size() == 100);
      CHECK(covers_all_values(s555, split.train));
    }
  }

  TEST_CASE("greedy split reaches the brute-force optimum when enough is requested") {
    for (const auto& dims : std::vector<std::vector<int>>{{2, 2}, {2, 3}, {3, 3}, {2, 2, 2}, {4, 2}}) {
      const SemanticStructure s(dims);
      Rng rng(17);
      const auto split = make_zsct_split(s, 0.99, rng);
      CHECK(split.test.size() <= max_safe_holdout(s));
      CHECK(covers_all_values(s, split.train));
    }
  }

  TEST_CASE("zsct split property over random structures") {
    Rng meta(77);
    for (int t = 0; t < 1000; ++t) {
      const auto s = sample_structure(meta, meta.uniform_int(2, 4), 2, 6);
      const double fraction = meta.uniform(0.05, 0.6);
      Rng rng(meta());
      const auto split = make_zsct_split(s, fraction, rng);
      std::set<LatentStimulus> all(split.train.begin(), split.train.end());
      for (const auto& x : split.test) CHECK(all.insert(x).second);
      CHECK(all.size() == s.space_size());
      CHECK(!split.test.empty());
      CHECK(split.test.size() <= std::max<std::size_t>(1, static_cast<std::size_t>(fraction * s.space_size())));
      CHECK(covers_all_values(s, split.train));
    }
  }

  TEST_CASE("zsct split determinism and errors") {
    const SemanticStructure s({3, 4});
    Rng a(8), b(8);
    const auto x = make_zsct_split(s, 0.3, a);
    const auto y = make_zsct_split(s, 0.3, b);
    CHECK(x.train == y.train);
    CHECK(x.test == y.test);
    Rng rng(1);
    CHECK_THROWS_AS(make_zsct_split(s, 0.0, rng), Error);
    CHECK_THROWS_AS(make_zsct_split(s, 1.0, rng), Error);
    // A single dimension cannot lose any value.
    try {
      make_zsct_split(SemanticStructure({3}), 0.5, rng);
      FAIL("expected split-infeasible");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::split_infeasible);
    }
  }
}
