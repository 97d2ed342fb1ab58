#pragma once

// ROUGE-1/2/L (per-pair F1, averaged) and BLEU (corpus-pooled modified
// precisions, brevity-penalised geometric mean for the composite score).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "skelcap/errors.hpp"
#include "skelcap/text.hpp"

namespace skelcap {

using Tokens = std::vector<std::string>;

inline Tokens metric_tokenize(std::string_view text) { return normalize_words(text); }

struct MetricReport {
  double rouge1 = 0, rouge2 = 0, rougeL = 0;
  double bleu = 0, bleu1 = 0, bleu2 = 0, bleu3 = 0, bleu4 = 0;
  std::size_t n_pairs = 0;

  nlohmann::ordered_json to_json() const {
    return {{"rouge1", rouge1}, {"rouge2", rouge2}, {"rougeL", rougeL}, {"bleu", bleu}, {"bleu1", bleu1},
            {"bleu2", bleu2},   {"bleu3", bleu3},   {"bleu4", bleu4},   {"n_pairs", n_pairs}};
  }

  static MetricReport from_json(const nlohmann::json& j) {
    MetricReport r;
    r.rouge1 = j.at("rouge1").get<double>();
    r.rouge2 = j.at("rouge2").get<double>();
    r.rougeL = j.at("rougeL").get<double>();
    r.bleu = j.at("bleu").get<double>();
    r.bleu1 = j.at("bleu1").get<double>();
    r.bleu2 = j.at("bleu2").get<double>();
    r.bleu3 = j.at("bleu3").get<double>();
    r.bleu4 = j.at("bleu4").get<double>();
    r.n_pairs = j.at("n_pairs").get<std::size_t>();
    return r;
  }

  // Column order: ROUGE-1 ROUGE-2 ROUGE-L | BLEU BLEU-1 BLEU-2 BLEU-3 BLEU-4
  std::string table(std::string_view setup = "") const {
    char buf[512];
    std::snprintf(buf, sizeof buf,
                  "%-24s %8s %8s %8s | %8s %8s %8s %8s %8s\n"
                  "%-24.24s %8.4f %8.4f %8.4f | %8.4f %8.4f %8.4f %8.4f %8.4f\n",
                  "Setup", "ROUGE-1", "ROUGE-2", "ROUGE-L", "BLEU", "BLEU-1", "BLEU-2", "BLEU-3", "BLEU-4",
                  std::string(setup).c_str(), rouge1, rouge2, rougeL, bleu, bleu1, bleu2, bleu3, bleu4);
    return buf;
  }
};

namespace detail {

using NgramCounts = std::map<std::vector<std::string_view>, std::size_t>;

inline NgramCounts ngrams(const Tokens& t, std::size_t n) {
  NgramCounts out;
  if (n == 0 || t.size() < n) return out;
  for (std::size_t i = 0; i + n <= t.size(); ++i) {
    std::vector<std::string_view> g(t.begin() + static_cast<std::ptrdiff_t>(i),
                                    t.begin() + static_cast<std::ptrdiff_t>(i + n));
    ++out[std::move(g)];
  }
  return out;
}

inline std::size_t ngram_total(const Tokens& t, std::size_t n) { return t.size() >= n ? t.size() - n + 1 : 0; }

inline std::size_t clipped_matches(const NgramCounts& cand, const NgramCounts& ref) {
  std::size_t m = 0;
  for (const auto& [g, c] : cand) {
    auto it = ref.find(g);
    if (it != ref.end()) m += std::min(c, it->second);
  }
  return m;
}

inline void check_lengths(std::size_t a, std::size_t b, const char* op) {
  if (a != b)
    throw LengthMismatchError(std::string(op) + ": " + std::to_string(a) + " candidates vs " +
                              std::to_string(b) + " references");
}

inline std::vector<Tokens> tokenize_all(std::span<const std::string> texts) {
  std::vector<Tokens> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(metric_tokenize(t));
  return out;
}

inline double f1(std::size_t matches, std::size_t cand_total, std::size_t ref_total) {
  if (matches == 0 || cand_total + ref_total == 0) return 0.0;
  return 2.0 * static_cast<double>(matches) / static_cast<double>(cand_total + ref_total);
}

}  // namespace detail

// Token-level longest common subsequence length.
inline std::size_t lcs_length(const Tokens& a, const Tokens& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

inline double rouge_n_pair(const Tokens& cand, const Tokens& ref, std::size_t n) {
  const auto m = detail::clipped_matches(detail::ngrams(cand, n), detail::ngrams(ref, n));
  return detail::f1(m, detail::ngram_total(cand, n), detail::ngram_total(ref, n));
}

inline double rouge_l_pair(const Tokens& cand, const Tokens& ref) {
  if (cand.empty() || ref.empty()) return 0.0;
  return detail::f1(lcs_length(cand, ref), cand.size(), ref.size());
}

inline double rouge_n(std::span<const std::string> candidates, std::span<const std::string> references,
                      std::size_t n) {
  detail::check_lengths(candidates.size(), references.size(), "rouge_n");
  if (candidates.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i)
    sum += rouge_n_pair(metric_tokenize(candidates[i]), metric_tokenize(references[i]), n);
  return sum / static_cast<double>(candidates.size());
}

inline double rouge_l(std::span<const std::string> candidates, std::span<const std::string> references) {
  detail::check_lengths(candidates.size(), references.size(), "rouge_l");
  if (candidates.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i)
    sum += rouge_l_pair(metric_tokenize(candidates[i]), metric_tokenize(references[i]));
  return sum / static_cast<double>(candidates.size());
}

struct BleuCounts {
  std::array<std::size_t, 4> matches{};
  std::array<std::size_t, 4> totals{};
  std::size_t cand_len = 0;
  std::size_t ref_len = 0;

  double precision(std::size_t n) const {
    const auto i = n - 1;
    return totals[i] == 0 ? 0.0 : static_cast<double>(matches[i]) / static_cast<double>(totals[i]);
  }
  double brevity_penalty() const {
    if (cand_len == 0) return 0.0;
    return std::min(1.0, std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(cand_len)));
  }
};

inline BleuCounts bleu_counts(const std::vector<Tokens>& cands, const std::vector<Tokens>& refs) {
  BleuCounts c;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    c.cand_len += cands[i].size();
    c.ref_len += refs[i].size();
    for (std::size_t n = 1; n <= 4; ++n) {
      c.matches[n - 1] += detail::clipped_matches(detail::ngrams(cands[i], n), detail::ngrams(refs[i], n));
      c.totals[n - 1] += detail::ngram_total(cands[i], n);
    }
  }
  return c;
}

// BP * exp(mean ln p_n); zero whenever any precision is zero.
inline double bleu_combine(const std::array<double, 4>& precisions, double brevity_penalty) {
  double log_sum = 0.0;
  for (double p : precisions) {
    if (!(p > 0.0)) return 0.0;
    log_sum += std::log(p);
  }
  return brevity_penalty * std::exp(log_sum / 4.0);
}

inline double bleu_individual(std::span<const std::string> candidates, std::span<const std::string> references,
                              std::size_t n) {
  detail::check_lengths(candidates.size(), references.size(), "bleu_individual");
  if (n < 1 || n > 4) throw InvalidParamsError("bleu_individual: n must be in 1..4");
  return bleu_counts(detail::tokenize_all(candidates), detail::tokenize_all(references)).precision(n);
}

inline double bleu_composite(std::span<const std::string> candidates, std::span<const std::string> references) {
  detail::check_lengths(candidates.size(), references.size(), "bleu_composite");
  const auto c = bleu_counts(detail::tokenize_all(candidates), detail::tokenize_all(references));
  return bleu_combine({c.precision(1), c.precision(2), c.precision(3), c.precision(4)}, c.brevity_penalty());
}

inline MetricReport evaluate_tokens(const std::vector<Tokens>& cands, const std::vector<Tokens>& refs) {
  detail::check_lengths(cands.size(), refs.size(), "evaluate");
  MetricReport r;
  r.n_pairs = cands.size();
  if (cands.empty()) return r;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    r.rouge1 += rouge_n_pair(cands[i], refs[i], 1);
    r.rouge2 += rouge_n_pair(cands[i], refs[i], 2);
    r.rougeL += rouge_l_pair(cands[i], refs[i]);
  }
  const auto n = static_cast<double>(cands.size());
  r.rouge1 /= n;
  r.rouge2 /= n;
  r.rougeL /= n;
  const auto c = bleu_counts(cands, refs);
  r.bleu1 = c.precision(1);
  r.bleu2 = c.precision(2);
  r.bleu3 = c.precision(3);
  r.bleu4 = c.precision(4);
  r.bleu = bleu_combine({r.bleu1, r.bleu2, r.bleu3, r.bleu4}, c.brevity_penalty());
  return r;
}

inline MetricReport evaluate(std::span<const std::string> candidates, std::span<const std::string> references) {
  detail::check_lengths(candidates.size(), references.size(), "evaluate");
  return evaluate_tokens(detail::tokenize_all(candidates), detail::tokenize_all(references));
}

}  // namespace skelcap
