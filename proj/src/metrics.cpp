#include "metarg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <string>

#include "metarg/agents.hpp"
#include "metarg/error.hpp"

namespace metarg {

LanguageTable::LanguageTable(std::vector<LanguageRow> rows) : rows_(std::move(rows)) {
  if (rows_.empty()) throw Error(ErrorCode::empty_input, "language table has no rows");
  n_dim_ = static_cast<int>(rows_.front().meaning.values.size());
  for (const auto& row : rows_) {
    if (static_cast<int>(row.meaning.values.size()) != n_dim_)
      throw Error(ErrorCode::invalid_argument, "meanings of different lengths in one table");
    message_len_ = std::max(message_len_, static_cast<int>(row.message.size()));
  }
  for (auto& row : rows_) row.message.resize(static_cast<std::size_t>(message_len_), kEos);
}

LanguageTable posdis_language(const SemanticStructure& structure, int vocab_size) {
  std::vector<LanguageRow> rows;
  for (auto& latent : enumerate_space(structure)) {
    auto message = posdis_speak(latent, vocab_size);
    rows.push_back({std::move(latent), std::move(message)});
  }
  return LanguageTable(std::move(rows));
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<int> parse_ints(const std::string& text, char sep, int line_no) {
  std::vector<int> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) {
    item = trim(item);
    if (item.empty()) continue;
    std::size_t used = 0;
    int value = 0;
    try {
      value = std::stoi(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size())
      throw Error(ErrorCode::invalid_argument, "line " + std::to_string(line_no) + ": bad integer '" + item + "'");
    out.push_back(value);
  }
  return out;
}

}  // namespace

LanguageTable parse_table_csv(std::istream& in) {
  std::vector<LanguageRow> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto semi = line.find(';');
    if (semi == std::string::npos)
      throw Error(ErrorCode::invalid_argument, "line " + std::to_string(line_no) + ": missing ';'");
    LanguageRow row;
    row.meaning.values = parse_ints(line.substr(0, semi), ',', line_no);
    row.message = parse_ints(line.substr(semi + 1), ' ', line_no);
    if (row.meaning.values.empty())
      throw Error(ErrorCode::invalid_argument, "line " + std::to_string(line_no) + ": empty meaning");
    rows.push_back(std::move(row));
  }
  return LanguageTable(std::move(rows));
}

int hamming(const LatentStimulus& a, const LatentStimulus& b) {
  if (a.values.size() != b.values.size()) throw Error(ErrorCode::invalid_argument, "hamming on unequal lengths");
  int d = 0;
  for (std::size_t i = 0; i < a.values.size(); ++i) d += a.values[i] != b.values[i];
  return d;
}

int levenshtein(std::span<const int> a, std::span<const int> b) {
  std::vector<int> prev(b.size() + 1), cur(b.size() + 1);
  std::iota(prev.begin(), prev.end(), 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = static_cast<int>(i);
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const int sub = prev[j - 1] + (a[i - 1] != b[j - 1]);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

namespace {

std::span<const int> content(const std::vector<int>& message) {
  const auto end = std::find(message.begin(), message.end(), kEos);
  return {message.data(), static_cast<std::size_t>(end - message.begin())};
}

std::vector<double> average_ranks(const std::vector<double>& x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

bool constant(const std::vector<double>& x) {
  return std::adjacent_find(x.begin(), x.end(), std::not_equal_to<>()) == x.end();
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double entropy(const std::map<long long, int>& counts, double n) {
  double h = 0.0;
  for (const auto& [_, c] : counts) {
    const double p = c / n;
    h -= p * std::log(p);
  }
  return h;
}

double entropy_of(std::span<const int> x) {
  std::map<long long, int> counts;
  for (int v : x) ++counts[v];
  return entropy(counts, static_cast<double>(x.size()));
}

double mutual_information(std::span<const int> x, std::span<const int> y) {
  std::map<long long, int> joint;
  for (std::size_t i = 0; i < x.size(); ++i) ++joint[(static_cast<long long>(x[i]) << 32) + y[i]];
  const double n = static_cast<double>(x.size());
  return std::max(0.0, entropy_of(x) + entropy_of(y) - entropy(joint, n));
}

bool single_valued(std::span<const int> x) {
  return std::adjacent_find(x.begin(), x.end(), std::not_equal_to<>()) == x.end();
}

// Mean over non-degenerate variables of (I1 - I2) / H.
MetricValue disentanglement(const std::vector<std::vector<int>>& variables,
                            const std::vector<std::vector<int>>& attributes) {
  double total = 0.0;
  int used = 0;
  for (const auto& var : variables) {
    if (single_valued(var)) continue;
    std::vector<double> mi;
    for (const auto& attr : attributes) mi.push_back(mutual_information(var, attr));
    std::sort(mi.begin(), mi.end(), std::greater<>());
    const double second = mi.size() > 1 ? mi[1] : 0.0;
    total += (mi[0] - second) / entropy_of(var);
    ++used;
  }
  if (used == 0) return {0.0, true};
  return {total / used, false};
}

std::vector<std::vector<int>> attribute_columns(const LanguageTable& table) {
  std::vector<std::vector<int>> attrs(static_cast<std::size_t>(table.n_dim()));
  for (const auto& row : table.rows())
    for (int i = 0; i < table.n_dim(); ++i) attrs[static_cast<std::size_t>(i)].push_back(row.meaning.values[i]);
  return attrs;
}

}  // namespace

MetricValue topographic_similarity(const LanguageTable& table, Execution exec) {
  const auto& rows = table.rows();
  const std::size_t n = rows.size();
  const std::size_t pairs = n * (n - 1) / 2;
  if (pairs < 3) return {0.0, true};

  std::vector<std::span<const int>> messages;
  for (const auto& row : rows) messages.push_back(content(row.message));

  std::vector<double> meaning(pairs), message(pairs);
  const long long count = static_cast<long long>(n);
  auto fill_row = [&](long long i) {
    const auto ui = static_cast<std::size_t>(i);
    std::size_t p = ui * n - ui * (ui + 1) / 2;
    for (std::size_t j = ui + 1; j < n; ++j, ++p) {
      meaning[p] = hamming(rows[ui].meaning, rows[j].meaning);
      message[p] = levenshtein(messages[ui], messages[j]);
    }
  };
  if (exec == Execution::parallel) {
#pragma omp parallel for schedule(dynamic, 8)
    for (long long i = 0; i < count; ++i) fill_row(i);
  } else {
    for (long long i = 0; i < count; ++i) fill_row(i);
  }

  if (constant(meaning) || constant(message)) return {0.0, true};
  return {pearson(average_ranks(meaning), average_ranks(message)), false};
}

MetricValue posdis(const LanguageTable& table) {
  std::vector<std::vector<int>> positions;
  for (int j = 0; j < table.message_len(); ++j) {
    std::vector<int> column;
    bool content_seen = false;
    for (const auto& row : table.rows()) {
      column.push_back(row.message[static_cast<std::size_t>(j)]);
      content_seen = content_seen || column.back() != kEos;
    }
    if (content_seen) positions.push_back(std::move(column));
  }
  return disentanglement(positions, attribute_columns(table));
}

MetricValue bosdis(const LanguageTable& table) {
  std::map<int, std::vector<int>> counts;
  for (const auto& row : table.rows())
    for (int t : row.message)
      if (t != kEos) counts.try_emplace(t);
  for (auto& [symbol, column] : counts)
    for (const auto& row : table.rows())
      column.push_back(static_cast<int>(std::count(row.message.begin(), row.message.end(), symbol)));
  std::vector<std::vector<int>> variables;
  for (auto& [_, column] : counts) variables.push_back(std::move(column));
  return disentanglement(variables, attribute_columns(table));
}

Reconstruction reconstruction_accuracy(const ScsStimulus& predicted, const ScsStimulus& truth, double threshold) {
  if (predicted.coords.size() != truth.coords.size())
    throw Error(ErrorCode::invalid_argument, "reconstruction on unequal lengths");
  if (truth.coords.empty()) throw Error(ErrorCode::empty_input, "reconstruction of an empty stimulus");
  Reconstruction out;
  int hits = 0;
  for (std::size_t i = 0; i < truth.coords.size(); ++i) {
    const bool ok = std::abs(predicted.coords[i] - truth.coords[i]) <= threshold + 1e-12;
    out.correct.push_back(ok);
    hits += ok;
  }
  out.mean = static_cast<double>(hits) / static_cast<double>(truth.coords.size());
  return out;
}

}  // namespace metarg
