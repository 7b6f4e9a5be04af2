#include "vcap/data/text.hpp"

#include <algorithm>
#include <cctype>
#include <map>

#include "vcap/error.hpp"

namespace vcap {
namespace {

const std::string kSpecials[Vocabulary::kReserved] = {"<pad>", "<bos>", "<eos>", "<unk>"};

bool is_stripped(char c) {
  switch (c) {
    case '.':
    case ',':
    case '!':
    case '?':
    case ';':
    case ':':
    case '\'':
    case '"':
      return true;
    default:
      return false;
  }
}

}  // namespace

Tokens tokenize(std::string_view text) {
  Tokens out;
  std::string current;
  for (char ch : text) {
    if (is_stripped(ch)) continue;
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!current.empty()) out.push_back(std::move(current));
      current.clear();
      continue;
    }
    current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

std::string join_tokens(const Tokens& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

Vocabulary::Vocabulary() {
  for (const auto& s : kSpecials) insert(s);
}

Vocabulary::Vocabulary(const std::vector<std::string>& tokens) : Vocabulary() {
  for (const auto& t : tokens) {
    if (contains(t)) throw FormatError("duplicate or reserved vocabulary token '" + t + "'");
    insert(t);
  }
}

void Vocabulary::insert(const std::string& token) {
  token_to_id_.emplace(token, static_cast<TokenId>(id_to_token_.size()));
  id_to_token_.push_back(token);
}

TokenId Vocabulary::id(const std::string& token) const {
  auto it = token_to_id_.find(token);
  return it == token_to_id_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= id_to_token_.size()) {
    throw RangeError("token id " + std::to_string(id) + " outside vocabulary of " + std::to_string(size()));
  }
  return id_to_token_[static_cast<std::size_t>(id)];
}

Caption Vocabulary::encode(const Tokens& tokens) const {
  Caption ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id(t));
  return ids;
}

Tokens Vocabulary::decode(const Caption& ids) const {
  Tokens out;
  for (TokenId i : ids) {
    if (i == kEos) break;
    if (i == kPad || i == kBos) continue;
    out.push_back(token(i));
  }
  return out;
}

std::vector<std::string> Vocabulary::words() const {
  return {id_to_token_.begin() + static_cast<std::ptrdiff_t>(kReserved), id_to_token_.end()};
}

Vocabulary build_vocabulary(const std::vector<Tokens>& captions, std::size_t min_count) {
  std::map<std::string, std::size_t> counts;
  for (const auto& c : captions) {
    for (const auto& t : c) ++counts[t];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked;
  for (const auto& [tok, n] : counts) {
    if (n >= min_count && std::find(std::begin(kSpecials), std::end(kSpecials), tok) == std::end(kSpecials)) {
      ranked.emplace_back(tok, n);
    }
  }
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> tokens;
  tokens.reserve(ranked.size());
  for (auto& [tok, n] : ranked) tokens.push_back(tok);
  return Vocabulary(tokens);
}

}  // namespace vcap
