#pragma once

#include <istream>
#include <span>
#include <vector>

#include "metarg/scs.hpp"
#include "metarg/semantics.hpp"

namespace metarg {

enum class Execution { serial, parallel };

struct LanguageRow {
  LatentStimulus meaning;
  std::vector<int> message;
};

// Rows share one meaning length; messages are padded with EoS to the longest.
class LanguageTable {
 public:
  explicit LanguageTable(std::vector<LanguageRow> rows);

  const std::vector<LanguageRow>& rows() const { return rows_; }
  std::size_t size() const { return rows_.size(); }
  int n_dim() const { return n_dim_; }
  int message_len() const { return message_len_; }

 private:
  std::vector<LanguageRow> rows_;
  int n_dim_ = 0;
  int message_len_ = 0;
};

// Every stimulus of the space, described by posdis_speak.
LanguageTable posdis_language(const SemanticStructure& structure, int vocab_size);

// Rows `l1,l2,...,lN;t1 t2 ... tL`. Blank lines and lines starting with '#'
// are skipped.
LanguageTable parse_table_csv(std::istream& in);

// Degenerate metrics report value 0 with the flag set.
struct MetricValue {
  double value = 0.0;
  bool degenerate = false;
};

int hamming(const LatentStimulus& a, const LatentStimulus& b);
int levenshtein(std::span<const int> a, std::span<const int> b);

// Spearman correlation (average ranks) between pairwise meaning Hamming
// distances and pairwise message edit distances over all unordered pairs.
// Messages are compared up to their first EoS. Degenerate with fewer than
// three pairs or a constant distance vector.
MetricValue topographic_similarity(const LanguageTable& table, Execution exec = Execution::serial);

// Plug-in mutual information in nats. Positions holding only EoS are skipped;
// positions with zero entropy are degenerate and excluded from the mean.
MetricValue posdis(const LanguageTable& table);

// Per non-EoS symbol, its count per message plays the role of a position.
MetricValue bosdis(const LanguageTable& table);

inline constexpr double kReconstructionThreshold = 0.05;

struct Reconstruction {
  std::vector<bool> correct;
  double mean = 0.0;
};

// |pred_i - truth_i| <= threshold counts as correct. The bound is inclusive
// with a 1e-12 allowance, so a decimal offset of exactly the threshold passes.
Reconstruction reconstruction_accuracy(const ScsStimulus& predicted, const ScsStimulus& truth,
                                       double threshold = kReconstructionThreshold);

}  // namespace metarg
