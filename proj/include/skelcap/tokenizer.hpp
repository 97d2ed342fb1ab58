#pragma once

// Corpus-built word-level vocabulary with reserved control tokens.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "skelcap/errors.hpp"
#include "skelcap/text.hpp"

namespace skelcap {

using TokenId = std::int32_t;

inline constexpr TokenId kPad = 0;
inline constexpr TokenId kBos = 1;
inline constexpr TokenId kEos = 2;
inline constexpr TokenId kUnk = 3;
inline constexpr std::size_t kReservedTokens = 4;

class Vocabulary {
 public:
  Vocabulary() : id_to_token_{"<pad>", "<s>", "</s>", "<unk>"} { index(); }

  // Reserved tokens must occupy the first four entries.
  explicit Vocabulary(std::vector<std::string> tokens) : id_to_token_(std::move(tokens)) {
    if (id_to_token_.size() < kReservedTokens) throw SchemaError("vocabulary: fewer than 4 entries");
    index();
    if (token_to_id_.size() != id_to_token_.size()) throw SchemaError("vocabulary: duplicate token");
  }

  std::size_t size() const { return id_to_token_.size(); }
  const std::string& token(TokenId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= size())
      throw InvalidIdError("token id " + std::to_string(id) + " outside vocabulary of size " +
                           std::to_string(size()));
    return id_to_token_[static_cast<std::size_t>(id)];
  }
  TokenId id(std::string_view word) const {
    auto it = token_to_id_.find(std::string(word));
    if (it == token_to_id_.end() || it->second < static_cast<TokenId>(kReservedTokens)) return kUnk;
    return it->second;
  }
  const std::vector<std::string>& tokens() const { return id_to_token_; }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.id_to_token_ == b.id_to_token_; }

  // One token per line; the line number is the id.
  void save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write vocabulary " + path.string());
    for (const auto& t : id_to_token_) out << t << '\n';
    if (!out) throw IoError("failed writing vocabulary " + path.string());
  }

  static Vocabulary load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read vocabulary " + path.string());
    std::vector<std::string> tokens;
    for (std::string line; std::getline(in, line);) tokens.push_back(line);
    return Vocabulary(std::move(tokens));
  }

 private:
  void index() {
    token_to_id_.clear();
    for (std::size_t i = 0; i < id_to_token_.size(); ++i)
      token_to_id_.emplace(id_to_token_[i], static_cast<TokenId>(i));
  }

  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, TokenId> token_to_id_;
};

// Tokens ordered by descending frequency, ties broken lexicographically.
inline Vocabulary build_vocab(std::span<const std::string> descriptions, std::size_t min_freq = 1) {
  if (descriptions.empty()) throw EmptyInputError("build_vocab: empty corpus");
  if (min_freq < 1) min_freq = 1;
  std::map<std::string, std::size_t> counts;
  for (const auto& d : descriptions)
    for (auto& w : normalize_words(d)) ++counts[w];

  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  Vocabulary base;
  std::vector<std::string> tokens = base.tokens();
  for (auto& [w, c] : ranked) {
    if (c < min_freq) continue;
    if (std::find(tokens.begin(), tokens.begin() + kReservedTokens, w) != tokens.begin() + kReservedTokens)
      continue;
    tokens.push_back(w);
  }
  return Vocabulary(std::move(tokens));
}

// [BOS, words..., EOS], truncating words so the result fits in max_len.
inline std::vector<TokenId> encode(const Vocabulary& vocab, std::string_view text, std::size_t max_len) {
  if (max_len < 3) throw InvalidParamsError("encode: max_len must be at least 3");
  const auto words = normalize_words(text);
  const std::size_t keep = std::min(words.size(), max_len - 2);
  std::vector<TokenId> ids;
  ids.reserve(keep + 2);
  ids.push_back(kBos);
  for (std::size_t i = 0; i < keep; ++i) ids.push_back(vocab.id(words[i]));
  ids.push_back(kEos);
  return ids;
}

inline std::string decode(const Vocabulary& vocab, std::span<const TokenId> ids) {
  std::vector<std::string> words;
  for (TokenId id : ids) {
    const std::string& tok = vocab.token(id);
    if (id == kEos) break;
    if (id == kPad || id == kBos) continue;
    words.push_back(tok);
  }
  return join_words(words);
}

}  // namespace skelcap
