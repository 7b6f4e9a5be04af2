#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "vcap/data/text.hpp"

namespace vcap::metrics {

using Sentence = Tokens;
using RefSet = std::vector<Sentence>;

inline constexpr std::size_t kMaxN = 4;

/// N-gram counts of one sentence for n = 1..4, keyed by the space-joined n-gram.
struct NGramCounts {
  std::array<std::unordered_map<std::string, int>, kMaxN> by_order;
  std::array<int, kMaxN> totals{};  // max(0, len - n + 1)

  const std::unordered_map<std::string, int>& order(std::size_t n) const { return by_order[n - 1]; }
};

NGramCounts count_ngrams(const Sentence& s);

// BLEU ---------------------------------------------------------------------

struct BleuDetail {
  std::array<double, kMaxN> precision{};  // clipped modified precisions p_1..p_4
  double brevity_penalty = 0.0;
  double hyp_length = 0.0;
  double ref_length = 0.0;
  double score = 0.0;
};

/// Corpus BLEU-4 (no smoothing); closest reference length, shorter on ties.
BleuDetail bleu4_detail(const std::vector<Sentence>& hyps, const std::vector<RefSet>& refs);
double bleu4(const std::vector<Sentence>& hyps, const std::vector<RefSet>& refs);

// ROUGE-L ------------------------------------------------------------------

inline constexpr double kRougeBeta = 1.2;

std::size_t lcs_length(const Sentence& a, const Sentence& b);
/// Best LCS F-measure over the references (beta = 1.2).
double rouge_l(const Sentence& hyp, const RefSet& refs);

// METEOR (exact + stem stages) ---------------------------------------------

std::string porter_stem(std::string_view word);

struct MeteorAlignment {
  int matches = 0;
  int exact_matches = 0;
  int chunks = 0;
};

/// Unigram alignment maximizing exact matches, then all (exact + stem)
/// matches, then minimizing the number of chunks.
MeteorAlignment meteor_align(const Sentence& hyp, const Sentence& ref);
double meteor_lite(const Sentence& hyp, const RefSet& refs);

// CIDEr --------------------------------------------------------------------

enum class CiderVariant { cider_d, cider };

CiderVariant parse_cider_variant(const std::string& name);
std::string to_string(CiderVariant v);

/// Document frequencies over a reference corpus; one document = one clip's reference set.
class IdfTable {
 public:
  IdfTable() = default;

  std::size_t document_count() const { return documents_; }
  /// df(g), zero when unseen.
  std::size_t df(const std::string& ngram, std::size_t n) const;
  /// ln(D / max(df, 1)).
  double idf(const std::string& ngram, std::size_t n) const;
  double log_documents() const { return log_documents_; }

  const std::unordered_map<std::string, std::size_t>& table(std::size_t n) const { return df_[n - 1]; }

  friend IdfTable build_idf(const std::vector<RefSet>& corpus);

  /// {"documents": D, "df": [{ngram: df}, ...]} with one map per order.
  nlohmann::json to_json() const;
  /// Throws FormatError unless 1 <= df <= D for every entry.
  static IdfTable from_json(const nlohmann::json& j);

 private:
  std::array<std::unordered_map<std::string, std::size_t>, kMaxN> df_;
  std::size_t documents_ = 0;
  double log_documents_ = 0.0;
};

IdfTable build_idf(const std::vector<RefSet>& corpus);

inline constexpr double kCiderSigma = 6.0;
inline constexpr double kCiderScale = 10.0;

/// Scores hypotheses against reference sets whose tf-idf vectors are prepared once.
class CiderScorer {
 public:
  struct SentenceVector {
    std::array<std::unordered_map<std::string, double>, kMaxN> counts;  // raw n-gram counts
    std::array<std::unordered_map<std::string, double>, kMaxN> weights;  // count * idf
    std::array<double, kMaxN> norm{};
    std::size_t length = 0;
  };
  using Prepared = std::vector<SentenceVector>;

  explicit CiderScorer(const IdfTable& idf, CiderVariant variant = CiderVariant::cider_d);

  SentenceVector vectorize(const Sentence& s) const;
  Prepared prepare(const RefSet& refs) const;
  double score(const Sentence& hyp, const Prepared& refs) const;
  double score(const Sentence& hyp, const RefSet& refs) const { return score(hyp, prepare(refs)); }

  CiderVariant variant() const { return variant_; }

 private:
  const IdfTable* idf_;
  CiderVariant variant_;
};

/// Per-clip CIDEr-D (or plain CIDEr) in [0, 10].
double cider_d(const Sentence& hyp, const RefSet& refs, const IdfTable& idf,
               CiderVariant variant = CiderVariant::cider_d);

// Corpus report -------------------------------------------------------------

struct MetricReport {
  double bleu4 = 0.0;
  double rouge_l = 0.0;
  double meteor = 0.0;
  double cider = 0.0;
};

/// All four metrics over aligned hypothesis/reference lists.
MetricReport score_corpus(const std::vector<Sentence>& hyps, const std::vector<RefSet>& refs, const IdfTable& idf,
                          CiderVariant variant = CiderVariant::cider_d);

std::string report_table(const std::vector<std::pair<std::string, MetricReport>>& rows);
nlohmann::json to_json(const MetricReport& r);

void write_idf(const std::filesystem::path& path, const IdfTable& idf);
IdfTable read_idf(const std::filesystem::path& path);

}  // namespace vcap::metrics
