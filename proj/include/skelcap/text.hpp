#pragma once

#include <cctype>
#include <string>
#include <string_view>
#include <vector>

namespace skelcap {

// Shared word normalization for the tokenizer and the metrics: ASCII
// lowercase, '.' and ',' become standalone tokens, split on whitespace.
inline std::vector<std::string> normalize_words(std::string_view text) {
  std::vector<std::string> words;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) words.push_back(std::move(current));
    current.clear();
  };
  for (char c : text) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isspace(u)) {
      flush();
    } else if (c == '.' || c == ',') {
      flush();
      words.emplace_back(1, c);
    } else {
      current.push_back(static_cast<char>(std::tolower(u)));
    }
  }
  flush();
  return words;
}

inline std::string join_words(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out.push_back(' ');
    out += w;
  }
  return out;
}

inline std::string normalize_text(std::string_view text) { return join_words(normalize_words(text)); }

}  // namespace skelcap
