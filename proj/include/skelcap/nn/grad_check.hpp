#pragma once

// Central finite-difference check of the analytic gradient over every parameter.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "skelcap/nn/model.hpp"

namespace skelcap::nn {

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
  std::string worst_tensor;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t checked = 0;
};

inline ModelConfig tiny_config(std::size_t vocab_size = 12) {
  ModelConfig c;
  c.d_model = 8;
  c.n_heads = 2;
  c.n_encoder_layers = 1;
  c.n_decoder_layers = 1;
  c.d_ff = 16;
  c.dropout_p = 0.0;
  c.max_src_len = 6;
  c.max_tgt_len = 6;
  c.vocab_size = vocab_size;
  return c;
}

// Random two-sample batch with ragged lengths so both padding masks are exercised.
inline Batch random_check_batch(const ModelConfig& c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> coord(0.0, 0.7);
  std::uniform_int_distribution<TokenId> tok(static_cast<TokenId>(kReservedTokens),
                                             static_cast<TokenId>(c.vocab_size - 1));
  std::vector<Example> ex(2);
  const std::size_t src[2] = {c.max_src_len, std::max<std::size_t>(1, c.max_src_len - 2)};
  const std::size_t tgt[2] = {std::max<std::size_t>(1, c.max_tgt_len - 2), c.max_tgt_len - 1};
  for (std::size_t i = 0; i < 2; ++i) {
    ex[i].frames.resize(src[i]);
    for (auto& f : ex[i].frames)
      for (auto& v : f) v = coord(rng);
    ex[i].tokens.push_back(kBos);
    for (std::size_t t = 0; t < tgt[i]; ++t) ex[i].tokens.push_back(tok(rng));
    ex[i].tokens.push_back(kEos);
  }
  const Example* members[2] = {&ex[0], &ex[1]};
  return make_batch(members, c);
}

inline ParamVector analytic_gradient(const Seq2SeqModel& m, const Batch& b) {
  ParamVector g;
  loss_and_gradient(m, b, nullptr, g);
  return g;
}

// max over parameters of |a - n| / max(1e-8, |a| + |n|).
inline GradCheckResult compare_with_finite_differences(const Seq2SeqModel& model, const Batch& b,
                                                       const ParamVector& analytic, double eps) {
  Seq2SeqModel m = model;
  GradCheckResult r;
  for (std::size_t i = 0; i < m.params.size(); ++i) {
    const double orig = m.params[i];
    m.params[i] = orig + eps;
    const double up = batch_loss(m, b);
    m.params[i] = orig - eps;
    const double down = batch_loss(m, b);
    m.params[i] = orig;
    const double numeric = (up - down) / (2.0 * eps);
    const double a = analytic[i];
    const double rel = std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
    ++r.checked;
    if (rel > r.max_relative_error || !std::isfinite(rel)) {
      r.max_relative_error = std::isfinite(rel) ? rel : INFINITY;
      r.worst_index = i;
      r.analytic = a;
      r.numeric = numeric;
    }
  }
  for (const auto& t : m.arch.layout.tensors())
    if (r.worst_index >= t.offset && r.worst_index < t.offset + t.size()) r.worst_tensor = t.name;
  return r;
}

inline GradCheckResult gradient_check(const ModelConfig& config, const Batch& b, double eps, std::uint64_t seed) {
  const Seq2SeqModel m = init_model(config, seed);
  return compare_with_finite_differences(m, b, analytic_gradient(m, b), eps);
}

}  // namespace skelcap::nn
