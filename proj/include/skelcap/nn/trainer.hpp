#pragma once

// Teacher-forced training with seeded batch order and dropout, plus greedy
// caption generation.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "skelcap/corpus.hpp"
#include "skelcap/errors.hpp"
#include "skelcap/nn/adam.hpp"
#include "skelcap/nn/checkpoint.hpp"
#include "skelcap/nn/model.hpp"
#include "skelcap/tokenizer.hpp"

namespace skelcap::nn {

struct TrainConfig {
  double learning_rate = 5e-5;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::size_t batch_size = 16;
  std::size_t max_steps = 1000;
  std::uint64_t seed = 0;
  std::optional<double> gradient_clip_norm;
  std::size_t log_every = 1;
  std::optional<std::filesystem::path> checkpoint_path;
  std::size_t checkpoint_every = 0;  // 0: only at the end

  AdamConfig adam() const { return {learning_rate, adam_beta1, adam_beta2, adam_eps}; }

  void validate() const {
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
      throw ConfigError("train config: learning_rate must be finite and non-negative");
    if (batch_size < 1) throw ConfigError("train config: batch_size must be at least 1");
    if (gradient_clip_norm && !(*gradient_clip_norm > 0.0))
      throw ConfigError("train config: gradient_clip_norm must be positive");
  }
};

struct TrainLogEntry {
  std::uint64_t step = 0;
  double loss = 0.0;
};

using TrainingLog = std::vector<TrainLogEntry>;

inline std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

inline Example make_example(const PreprocessedSample& s, const Vocabulary& vocab, const ModelConfig& config) {
  Example e;
  e.frames.reserve(s.frames.size());
  for (const auto& f : s.frames) e.frames.push_back(f.points);
  e.tokens = encode(vocab, s.description, config.max_tgt_len + 1);
  return e;
}

inline std::vector<Example> make_examples(const std::vector<PreprocessedSample>& samples, const Vocabulary& vocab,
                                          const ModelConfig& config) {
  std::vector<Example> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(make_example(s, vocab, config));
  return out;
}

// Infinite stream of per-epoch permutations; batch k covers stream positions
// [k * batch_size, (k + 1) * batch_size). Random access keeps resumed runs aligned.
class BatchSchedule {
 public:
  BatchSchedule(std::size_t n, std::size_t batch_size, std::uint64_t seed)
      : n_(n), batch_size_(batch_size), seed_(seed) {
    if (n == 0) throw EmptyInputError("training set is empty");
  }

  std::vector<std::size_t> batch(std::uint64_t step) {
    std::vector<std::size_t> out;
    out.reserve(batch_size_);
    const std::uint64_t first = step * batch_size_;
    for (std::uint64_t k = first; k < first + batch_size_; ++k) out.push_back(permutation(k / n_)[k % n_]);
    return out;
  }

 private:
  const std::vector<std::size_t>& permutation(std::uint64_t epoch) {
    if (!cached_ || cached_epoch_ != epoch) {
      perm_.resize(n_);
      std::iota(perm_.begin(), perm_.end(), std::size_t{0});
      auto rng = stream_rng(seed_, 1, epoch);
      std::shuffle(perm_.begin(), perm_.end(), rng);
      cached_epoch_ = epoch;
      cached_ = true;
    }
    return perm_;
  }

  std::size_t n_, batch_size_;
  std::uint64_t seed_;
  bool cached_ = false;
  std::uint64_t cached_epoch_ = 0;
  std::vector<std::size_t> perm_;
};

inline bool all_finite(const ParamVector& xs) {
  return std::all_of(xs.begin(), xs.end(), [](double x) { return std::isfinite(x); });
}

// Forward, backward, optional clipping and one Adam step. Dropout masks are
// seeded by (seed, optimizer step).
inline double backward_and_step(Seq2SeqModel& model, const Batch& batch, const TrainConfig& cfg, AdamState& state) {
  if (state.m.size() != model.size()) throw PreconditionError("optimizer state does not match the model");
  const auto step = state.step;
  auto rng = stream_rng(cfg.seed, 2, step);
  ParamVector grad;
  const double loss = loss_and_gradient(model, batch, model.config.dropout_p > 0.0 ? &rng : nullptr, grad);
  if (!std::isfinite(loss)) throw DivergedError(static_cast<long>(step), "non-finite loss");
  if (!all_finite(grad)) throw DivergedError(static_cast<long>(step), "non-finite gradient");
  if (cfg.gradient_clip_norm) clip_global_norm(grad, *cfg.gradient_clip_norm);
  adam_update(model.params, grad, state, cfg.adam());
  if (!all_finite(model.params)) throw DivergedError(static_cast<long>(step), "non-finite parameters");
  return loss;
}

using StepCallback = std::function<void(const TrainLogEntry&)>;

// Continues from state.step until cfg.max_steps optimizer steps have been taken.
inline TrainingLog train(Seq2SeqModel& model, AdamState& state, const std::vector<Example>& examples,
                         const TrainConfig& cfg, const StepCallback& on_step = {}) {
  cfg.validate();
  if (examples.empty()) throw EmptyInputError("train: empty training set");
  if (state.m.empty()) state = AdamState(model.size());
  BatchSchedule schedule(examples.size(), cfg.batch_size, cfg.seed);
  TrainingLog log;
  std::vector<const Example*> members;
  while (state.step < cfg.max_steps) {
    const auto step = state.step;
    members.clear();
    for (auto i : schedule.batch(step)) members.push_back(&examples[i]);
    const Batch batch = make_batch(members, model.config);
    const double loss = backward_and_step(model, batch, cfg, state);
    TrainLogEntry entry{step, loss};
    log.push_back(entry);
    if (on_step && (cfg.log_every == 0 || step % cfg.log_every == 0 || state.step == cfg.max_steps)) on_step(entry);
    if (cfg.checkpoint_path && cfg.checkpoint_every > 0 && state.step % cfg.checkpoint_every == 0)
      save_checkpoint(model, &state, *cfg.checkpoint_path);
  }
  if (cfg.checkpoint_path) save_checkpoint(model, &state, *cfg.checkpoint_path);
  return log;
}

inline TrainingLog train(Seq2SeqModel& model, const std::vector<PreprocessedSample>& samples, const Vocabulary& vocab,
                         const TrainConfig& cfg, AdamState& state, const StepCallback& on_step = {}) {
  if (samples.empty()) throw EmptyInputError("train: empty training set");
  return train(model, state, make_examples(samples, vocab, model.config), cfg, on_step);
}

// Greedy generation from BOS; ties go to the smaller id. Stops at EOS or
// after max_tgt_len generated tokens.
inline std::vector<TokenId> greedy_decode_ids(const Seq2SeqModel& model, std::span<const FrameVector> frames,
                                              std::size_t max_tgt_len) {
  if (frames.empty()) throw EmptyInputError("greedy_decode: no frames");
  const auto& c = model.config;
  const auto idx = subsample_indices(frames.size(), c.max_src_len);
  Mat source(static_cast<Eigen::Index>(idx.size()), static_cast<Eigen::Index>(c.input_dim));
  for (std::size_t t = 0; t < idx.size(); ++t)
    for (std::size_t k = 0; k < c.input_dim; ++k)
      source(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(k)) = frames[idx[t]][k];
  const std::vector<std::uint8_t> src_valid(idx.size(), 1);
  EncoderState enc;
  encode_source(model, source, 1, idx.size(), src_valid, nullptr, enc);

  const std::size_t limit = std::min(max_tgt_len, c.max_tgt_len);
  std::vector<TokenId> prefix{kBos};
  std::vector<TokenId> generated;
  DecoderState dec;
  while (generated.size() < limit) {
    const std::vector<std::uint8_t> valid(prefix.size(), 1);
    decode_targets(model, enc, prefix, prefix.size(), valid, nullptr, dec);
    const auto last = dec.logits.row(dec.logits.rows() - 1);
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < last.size(); ++j)
      if (last(j) > last(best)) best = j;
    const auto id = static_cast<TokenId>(best);
    generated.push_back(id);
    if (id == kEos) break;
    prefix.push_back(id);
  }
  return generated;
}

inline std::string greedy_decode(const Seq2SeqModel& model, std::span<const FrameVector> frames,
                                 const Vocabulary& vocab, std::size_t max_tgt_len) {
  return decode(vocab, greedy_decode_ids(model, frames, max_tgt_len));
}

inline std::string greedy_decode(const Seq2SeqModel& model, const PreprocessedSample& sample,
                                 const Vocabulary& vocab) {
  std::vector<FrameVector> frames;
  for (const auto& f : sample.frames) frames.push_back(f.points);
  return greedy_decode(model, frames, vocab, model.config.max_tgt_len);
}

// Captions every sample and scores them against the references.
inline MetricReport evaluate_model(const Seq2SeqModel& model, const std::vector<PreprocessedSample>& samples,
                                   const Vocabulary& vocab, std::vector<std::string>* hypotheses = nullptr) {
  std::vector<std::string> cands, refs;
  for (const auto& s : samples) {
    cands.push_back(greedy_decode(model, s, vocab));
    refs.push_back(s.description);
  }
  if (hypotheses) *hypotheses = cands;
  return evaluate(cands, refs);
}

}  // namespace skelcap::nn
