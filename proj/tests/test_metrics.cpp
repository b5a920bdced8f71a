#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>

#include "metarg/agents.hpp"
#include "metarg/error.hpp"
#include "metarg/metrics.hpp"

using namespace metarg;

namespace {

// Reference implementations written from the definitions, without shared code.

double ref_mi(const std::vector<int>& x, const std::vector<int>& y) {
  const double n = static_cast<double>(x.size());
  std::map<int, double> px, py;
  std::map<std::pair<int, int>, double> pxy;
  for (std::size_t i = 0; i < x.size(); ++i) {
    px[x[i]] += 1 / n;
    py[y[i]] += 1 / n;
    pxy[{x[i], y[i]}] += 1 / n;
  }
  double mi = 0.0;
  for (const auto& [k, p] : pxy) mi += p * std::log(p / (px[k.first] * py[k.second]));
  return mi;
}

double ref_entropy(const std::vector<int>& x) {
  std::map<int, double> p;
  for (int v : x) p[v] += 1.0 / static_cast<double>(x.size());
  double h = 0.0;
  for (const auto& [_, q] : p) h -= q * std::log(q);
  return h;
}

double ref_gap_mean(const std::vector<std::vector<int>>& vars, const LanguageTable& t) {
  double total = 0.0;
  int used = 0;
  for (const auto& v : vars) {
    const double h = ref_entropy(v);
    if (h == 0.0) continue;
    double first = 0.0, second = 0.0;
    for (int a = 0; a < t.n_dim(); ++a) {
      std::vector<int> attr;
      for (const auto& r : t.rows()) attr.push_back(r.meaning[a]);
      const double mi = ref_mi(v, attr);
      if (mi > first) {
        second = first;
        first = mi;
      } else if (mi > second) {
        second = mi;
      }
    }
    total += (first - second) / h;
    ++used;
  }
  return used ? total / used : 0.0;
}

double ref_posdis(const LanguageTable& t) {
  std::vector<std::vector<int>> vars;
  for (int j = 0; j < t.message_len(); ++j) {
    std::vector<int> col;
    for (const auto& r : t.rows()) col.push_back(r.message[j]);
    if (std::any_of(col.begin(), col.end(), [](int s) { return s != 0; })) vars.push_back(col);
  }
  return ref_gap_mean(vars, t);
}

int ref_edit(const std::vector<int>& a, const std::vector<int>& b) {
  std::function<int(std::size_t, std::size_t)> go = [&](std::size_t i, std::size_t j) -> int {
    if (i == 0) return static_cast<int>(j);
    if (j == 0) return static_cast<int>(i);
    return std::min({go(i - 1, j) + 1, go(i, j - 1) + 1, go(i - 1, j - 1) + (a[i - 1] != b[j - 1])});
  };
  return go(a.size(), b.size());
}

std::vector<double> ref_ranks(const std::vector<double>& x) {
  std::vector<double> r;
  for (double v : x) {
    double less = 0, equal = 0;
    for (double w : x) {
      less += w < v;
      equal += w == v;
    }
    r.push_back(less + (equal + 1) / 2);
  }
  return r;
}

double ref_topsim(const LanguageTable& t) {
  std::vector<double> dm, dx;
  const auto cut = [](const std::vector<int>& m) { return std::vector<int>(m.begin(), std::find(m.begin(), m.end(), 0)); };
  for (std::size_t i = 0; i < t.size(); ++i)
    for (std::size_t j = i + 1; j < t.size(); ++j) {
      int h = 0;
      for (int a = 0; a < t.n_dim(); ++a) h += t.rows()[i].meaning[a] != t.rows()[j].meaning[a];
      dm.push_back(h);
      dx.push_back(ref_edit(cut(t.rows()[i].message), cut(t.rows()[j].message)));
    }
  const auto a = ref_ranks(dm), b = ref_ranks(dx);
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    ma += a[k] / n;
    mb += b[k] / n;
  }
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    sab += (a[k] - ma) * (b[k] - mb);
    saa += (a[k] - ma) * (a[k] - ma);
    sbb += (b[k] - mb) * (b[k] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

LanguageTable random_table(Rng& rng, int rows) {
  std::vector<LanguageRow> out;
  for (int r = 0; r < rows; ++r) {
    LanguageRow row;
    for (int a = 0; a < 3; ++a) row.meaning.values.push_back(rng.uniform_int(0, 3));
    for (int k = 0; k < 4; ++k) row.message.push_back(rng.uniform_int(0, 5));
    out.push_back(row);
  }
  return LanguageTable(out);
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("distances") {
    CHECK(hamming(LatentStimulus{{0, 1, 2}}, LatentStimulus{{0, 2, 2}}) == 1);
    CHECK_THROWS_AS(hamming(LatentStimulus{{0}}, LatentStimulus{{0, 1}}), Error);
    const std::vector<int> kitten{1, 2, 3, 3, 4, 5}, sitting{6, 2, 3, 3, 2, 5, 7};
    CHECK(levenshtein(kitten, sitting) == 3);
    CHECK(levenshtein(std::vector<int>{}, kitten) == 6);
  }

  TEST_CASE("positional language scores") {
    const auto t = posdis_language(SemanticStructure({5, 5, 5}), 10);
    CHECK(t.size() == 125);
    CHECK(posdis(t).value == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(posdis(t).value == doctest::Approx(ref_posdis(t)).epsilon(1e-12));
    CHECK(bosdis(t).value == doctest::Approx(0.0).epsilon(1e-12));
    const double ts = topographic_similarity(t).value;
    CHECK(ts == doctest::Approx(ref_topsim(t)).epsilon(1e-12));
    CHECK(ts == doctest::Approx(0.94214949108573232).epsilon(1e-12));
  }

  TEST_CASE("copy-one-attribute and constant languages") {
    std::vector<LanguageRow> copy, constant;
    for (const auto& l : enumerate_space(SemanticStructure({3, 4}))) {
      copy.push_back({l, {l[0] + 1, 0}});
      constant.push_back({l, {1, 0}});
    }
    CHECK(posdis(LanguageTable(copy)).value == doctest::Approx(1.0));
    const auto c = posdis(LanguageTable(constant));
    CHECK(c.degenerate);
    CHECK(c.value == 0.0);
    CHECK(bosdis(LanguageTable(constant)).degenerate);
  }

  TEST_CASE("bag-of-symbols disentanglement reaches one") {
    // Symbol 1 repeated x times, symbol 2 repeated y times.
    std::vector<LanguageRow> rows;
    for (const auto& l : enumerate_space(SemanticStructure({3, 3}))) {
      std::vector<int> m(static_cast<std::size_t>(l[0]), 1);
      m.insert(m.end(), static_cast<std::size_t>(l[1]), 2);
      m.push_back(0);
      rows.push_back({l, m});
    }
    const LanguageTable t(rows);
    CHECK(bosdis(t).value == doctest::Approx(1.0));
    CHECK_FALSE(bosdis(t).degenerate);
  }

  TEST_CASE("topsim degenerate cases") {
    const LanguageTable two({{LatentStimulus{{0}}, {1}}, {LatentStimulus{{1}}, {2}}});
    CHECK(topographic_similarity(two).degenerate);
    const LanguageTable flat({{LatentStimulus{{0}}, {1}}, {LatentStimulus{{1}}, {1}}, {LatentStimulus{{2}}, {1}}});
    CHECK(topographic_similarity(flat).degenerate);
    CHECK_THROWS_AS(LanguageTable({}), Error);
  }

  TEST_CASE("random tables agree with the references and stay in range") {
    Rng rng(19);
    for (int k = 0; k < 1000; ++k) {
      const auto t = random_table(rng, rng.uniform_int(3, 12));
      const auto ts = topographic_similarity(t, Execution::serial);
      const auto tp = topographic_similarity(t, Execution::parallel);
      CHECK(ts.value == tp.value);
      CHECK(ts.degenerate == tp.degenerate);
      CHECK((ts.value >= -1.0 && ts.value <= 1.0));
      const auto p = posdis(t), b = bosdis(t);
      CHECK((p.value >= 0.0 && p.value <= 1.0 + 1e-12));
      CHECK((b.value >= 0.0 && b.value <= 1.0 + 1e-12));
      if (k < 200) {
        CHECK(p.value == doctest::Approx(ref_posdis(t)).epsilon(1e-9));
        if (!ts.degenerate) CHECK(ts.value == doctest::Approx(ref_topsim(t)).epsilon(1e-9));
      }
    }
  }

  TEST_CASE("metrics ignore row order and symbol names") {
    Rng rng(23);
    const auto base = random_table(rng, 10);
    auto rows = base.rows();
    rng.shuffle(rows);
    const LanguageTable shuffled(rows);
    CHECK(topographic_similarity(shuffled).value == doctest::Approx(topographic_similarity(base).value));
    CHECK(posdis(shuffled).value == doctest::Approx(posdis(base).value));
    CHECK(bosdis(shuffled).value == doctest::Approx(bosdis(base).value));

    const std::vector<int> relabel{0, 5, 3, 1, 2, 4};
    for (auto& r : rows)
      for (auto& s : r.message) s = relabel[static_cast<std::size_t>(s)];
    const LanguageTable renamed(rows);
    CHECK(topographic_similarity(renamed).value == doctest::Approx(topographic_similarity(base).value));
    CHECK(posdis(renamed).value == doctest::Approx(posdis(base).value));
  }

  TEST_CASE("large table serial and parallel topsim are identical") {
    const auto t = posdis_language(SemanticStructure({6, 6, 6}), 10);
    CHECK(topographic_similarity(t, Execution::serial).value == topographic_similarity(t, Execution::parallel).value);
  }

  TEST_CASE("table csv parsing") {
    std::istringstream in("# header\n0,1;1 2 0\n\n 2,0 ; 3 1 0 0\n");
    const auto t = parse_table_csv(in);
    REQUIRE(t.size() == 2);
    CHECK(t.n_dim() == 2);
    CHECK(t.message_len() == 4);
    CHECK(t.rows()[0].message == std::vector<int>{1, 2, 0, 0});
    CHECK(t.rows()[1].meaning.values == std::vector<int>{2, 0});
    std::istringstream missing("0,1 1 2\n");
    CHECK_THROWS_AS(parse_table_csv(missing), Error);
    std::istringstream bad("0,x;1\n");
    CHECK_THROWS_AS(parse_table_csv(bad), Error);
    std::istringstream ragged("0,1;1\n0;1\n");
    CHECK_THROWS_AS(parse_table_csv(ragged), Error);
  }

  TEST_CASE("reconstruction accuracy") {
    const auto r = reconstruction_accuracy(ScsStimulus{{0.1, 0.26, -0.5}}, ScsStimulus{{0.1, 0.2, -0.49}});
    CHECK(r.correct == std::vector<bool>{true, false, true});
    CHECK(r.mean == doctest::Approx(2.0 / 3));
    const auto edge = reconstruction_accuracy(ScsStimulus{{0.15, -0.35}}, ScsStimulus{{0.1, -0.3}});
    CHECK(edge.mean == 1.0);
    CHECK(reconstruction_accuracy(ScsStimulus{{0.1501}}, ScsStimulus{{0.1}}).mean == 0.0);
    CHECK_THROWS_AS(reconstruction_accuracy(ScsStimulus{{0.1}}, ScsStimulus{{0.1, 0.2}}), Error);
  }
}
