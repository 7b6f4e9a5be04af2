#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "vcap/data/text.hpp"
#include "vcap/nn/graph.hpp"

namespace vcap::attributes {

/// Word classes used to pick attribute candidates: content words (nouns,
/// verbs, adjectives) and stopwords that are never attributes.
struct ContentLexicon {
  std::set<std::string> content;
  std::set<std::string> stopwords;

  /// Covers the synthetic grammar plus common captioning nouns, verbs and adjectives.
  static ContentLexicon bundled();
  bool is_candidate(const std::string& word) const { return !stopwords.count(word) && content.count(word); }
};

/// Ordered attribute tokens, most frequent first.
class AttributeLexicon {
 public:
  AttributeLexicon() = default;
  explicit AttributeLexicon(std::vector<std::string> tokens);

  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  std::optional<std::size_t> index(const std::string& token) const;

  friend bool operator==(const AttributeLexicon& a, const AttributeLexicon& b) { return a.tokens_ == b.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, std::size_t> index_;
};

/// Top-N candidates by corpus frequency, ties lexicographic. Warns when fewer than N exist.
AttributeLexicon mine_attributes(const std::vector<Tokens>& captions, std::size_t n,
                                 const ContentLexicon& lexicon = ContentLexicon::bundled());

/// Multi-hot vector: bit i set iff lexicon token i occurs in any of the captions.
std::vector<std::uint8_t> label_clip(const std::vector<Tokens>& captions, const AttributeLexicon& lexicon);

using AttributeLabels = std::map<std::string, std::vector<std::uint8_t>>;

/// L_a = -(1/N) sum_i [y_i log q_i + (1 - y_i) log(1 - q_i)], averaged over the batch rows.
nn::Var attribute_loss(nn::Graph& g, nn::Var q, const nn::Tensor& y);
/// Rows of `labels` as a (B x N) tensor of 0/1 doubles.
nn::Tensor label_matrix(const std::vector<const std::vector<std::uint8_t>*>& labels);

void write_lexicon(const std::filesystem::path& path, const AttributeLexicon& lexicon);
AttributeLexicon read_lexicon(const std::filesystem::path& path);
/// One line per clip: id TAB comma-separated indices of set bits.
void write_labels(const std::filesystem::path& path, const AttributeLabels& labels);
AttributeLabels read_labels(const std::filesystem::path& path, std::size_t n);

}  // namespace vcap::attributes
