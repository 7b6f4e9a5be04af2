#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace vcap {

using Tokens = std::vector<std::string>;
using TokenId = std::int64_t;
using Caption = std::vector<TokenId>;

/// Lowercases, strips [.,!?;:'"] and splits on whitespace.
Tokens tokenize(std::string_view text);
std::string join_tokens(const Tokens& tokens);

/// Token <-> id bijection with fixed reserved ids.
class Vocabulary {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kBos = 1;
  static constexpr TokenId kEos = 2;
  static constexpr TokenId kUnk = 3;
  static constexpr std::size_t kReserved = 4;

  Vocabulary();
  /// Specials first, then `tokens` in the given order (duplicates and specials rejected).
  explicit Vocabulary(const std::vector<std::string>& tokens);

  std::size_t size() const { return id_to_token_.size(); }
  TokenId id(const std::string& token) const;  // unknown -> kUnk
  bool contains(const std::string& token) const { return token_to_id_.count(token) != 0; }
  const std::string& token(TokenId id) const;

  Caption encode(const Tokens& tokens) const;
  /// Drops <pad>/<bos>, stops at the first <eos>.
  Tokens decode(const Caption& ids) const;

  /// Non-special tokens in id order.
  std::vector<std::string> words() const;

  static bool is_special(TokenId id) { return id >= 0 && id < static_cast<TokenId>(kReserved); }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.id_to_token_ == b.id_to_token_; }

 private:
  void insert(const std::string& token);

  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, TokenId> token_to_id_;
};

/// Specials 0-3, then tokens by frequency (desc), ties lexicographic.
/// Tokens seen fewer than `min_count` times are left out (they map to <unk>).
Vocabulary build_vocabulary(const std::vector<Tokens>& captions, std::size_t min_count = 1);

}  // namespace vcap
