#include "vcap/attributes/attributes.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <spdlog/spdlog.h>

#include "vcap/data/corpus.hpp"
#include "vcap/error.hpp"
#include "vcap/nn/ops.hpp"

namespace vcap::attributes {

ContentLexicon ContentLexicon::bundled() {
  ContentLexicon lex;
  for (const auto* table : {&data::color_words(), &data::subject_words(), &data::action_ing_words(),
                            &data::action_s_words()}) {
    lex.content.insert(table->begin(), table->end());
  }
  static const char* const kCommon[] = {
      // nouns
      "man", "woman", "person", "people", "boy", "girl", "child", "baby", "dog", "cat", "horse", "bird", "fish",
      "car", "bike", "ball", "guitar", "piano", "food", "water", "kitchen", "street", "road", "table", "room",
      "field", "stage", "onion", "egg", "potato", "meat", "song", "game", "video", "group", "team", "shape",
      "box", "circle", "line", "square", "triangle", "ring", "cross", "bar", "diamond", "pole", "cube", "dot",
      // verbs
      "playing", "plays", "play", "talking", "talks", "singing", "sings", "dancing", "dances", "cooking", "cooks",
      "cutting", "cuts", "slicing", "slices", "riding", "rides", "running", "runs", "walking", "walks",
      "driving", "drives", "swimming", "swims", "jumping", "jumps", "eating", "eats", "moving", "moves",
      "rolling", "rolls", "spinning", "spins", "sitting", "sits", "holding", "holds", "mixing", "mixes",
      "pouring", "pours", "flying", "flies", "fighting", "fights",
      // adjectives
      "big", "small", "large", "little", "young", "old", "black", "brown", "pink", "purple", "gray", "grey",
      "dark", "bright", "tall", "short", "fast", "slow",
  };
  lex.content.insert(std::begin(kCommon), std::end(kCommon));
  static const char* const kStop[] = {
      "a",    "an",   "the",  "is",   "are",  "was",  "were", "be",   "been", "there", "that", "this",
      "these", "those", "it",  "its",  "of",   "in",   "on",   "at",   "to",   "from",  "and",  "or",
      "with", "by",   "for",  "into", "onto", "some", "his",  "her",  "their", "he",   "she",  "they",
  };
  lex.stopwords.insert(std::begin(kStop), std::end(kStop));
  return lex;
}

AttributeLexicon::AttributeLexicon(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], i).second) throw FormatError("duplicate attribute '" + tokens_[i] + "'");
  }
}

std::optional<std::size_t> AttributeLexicon::index(const std::string& token) const {
  auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

AttributeLexicon mine_attributes(const std::vector<Tokens>& captions, std::size_t n, const ContentLexicon& lexicon) {
  if (captions.empty()) throw RangeError("mine_attributes: empty caption corpus");
  std::map<std::string, std::size_t> freq;
  for (const auto& c : captions) {
    for (const auto& w : c) {
      if (lexicon.is_candidate(w)) ++freq[w];
    }
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(freq.begin(), freq.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  if (ranked.size() < n) {
    spdlog::warn("only {} attribute candidates found, fewer than the requested {}", ranked.size(), n);
  }
  std::vector<std::string> tokens;
  for (std::size_t i = 0; i < ranked.size() && i < n; ++i) tokens.push_back(ranked[i].first);
  return AttributeLexicon(std::move(tokens));
}

std::vector<std::uint8_t> label_clip(const std::vector<Tokens>& captions, const AttributeLexicon& lexicon) {
  std::vector<std::uint8_t> y(lexicon.size(), 0);
  for (const auto& c : captions) {
    for (const auto& w : c) {
      if (auto i = lexicon.index(w)) y[*i] = 1;
    }
  }
  return y;
}

nn::Var attribute_loss(nn::Graph& g, nn::Var q, const nn::Tensor& y) {
  if (g.shape(q) != y.shape()) {
    throw DimensionError("attribute_loss: predictions " + nn::shape_string(g.shape(q)) + " vs labels " +
                         nn::shape_string(y.shape()));
  }
  return nn::binary_cross_entropy(g, q, y);
}

nn::Tensor label_matrix(const std::vector<const std::vector<std::uint8_t>*>& labels) {
  if (labels.empty()) throw RangeError("label_matrix: no rows");
  const std::size_t n = labels.front()->size();
  nn::Tensor y({labels.size(), n});
  for (std::size_t r = 0; r < labels.size(); ++r) {
    if (labels[r]->size() != n) throw DimensionError("label_matrix: ragged label rows");
    for (std::size_t i = 0; i < n; ++i) y.at(r, i) = (*labels[r])[i];
  }
  return y;
}

void write_lexicon(const std::filesystem::path& path, const AttributeLexicon& lexicon) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error("cannot write " + path.string());
  for (const auto& t : lexicon.tokens()) os << t << '\n';
}

AttributeLexicon read_lexicon(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot read " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty()) tokens.push_back(line);
  }
  return AttributeLexicon(std::move(tokens));
}

void write_labels(const std::filesystem::path& path, const AttributeLabels& labels) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error("cannot write " + path.string());
  for (const auto& [id, bits] : labels) {
    os << id << '\t';
    bool first = true;
    for (std::size_t i = 0; i < bits.size(); ++i) {
      if (!bits[i]) continue;
      if (!first) os << ',';
      os << i;
      first = false;
    }
    os << '\n';
  }
}

AttributeLabels read_labels(const std::filesystem::path& path, std::size_t n) {
  std::ifstream is(path);
  if (!is) throw Error("cannot read " + path.string());
  AttributeLabels out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw FormatError(path.string() + ":" + std::to_string(lineno) + ": missing tab");
    std::vector<std::uint8_t> bits(n, 0);
    std::stringstream ss(line.substr(tab + 1));
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (item.empty()) continue;
      std::size_t idx = 0;
      try {
        idx = std::stoul(item);
      } catch (const std::exception&) {
        throw FormatError(path.string() + ":" + std::to_string(lineno) + ": bad index '" + item + "'");
      }
      if (idx >= n) throw FormatError(path.string() + ":" + std::to_string(lineno) + ": index out of range");
      bits[idx] = 1;
    }
    out[line.substr(0, tab)] = std::move(bits);
  }
  return out;
}

}  // namespace vcap::attributes
