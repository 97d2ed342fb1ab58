#pragma once

// Skeleton-to-text encoder-decoder transformer: a linear embedding of each
// 150-value frame feeds a pre-norm transformer encoder; a pre-norm decoder
// with causal self-attention and cross-attention predicts caption tokens.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "skelcap/errors.hpp"
#include "skelcap/nn/layers.hpp"
#include "skelcap/nn/tensor.hpp"
#include "skelcap/skeleton.hpp"
#include "skelcap/tokenizer.hpp"

namespace skelcap::nn {

struct ModelConfig {
  std::size_t d_model = 64;
  std::size_t n_heads = 4;
  std::size_t n_encoder_layers = 2;
  std::size_t n_decoder_layers = 2;
  std::size_t d_ff = 128;
  double dropout_p = 0.1;
  std::size_t max_src_len = 64;  // frames
  std::size_t max_tgt_len = 32;  // tokens, including BOS
  std::size_t vocab_size = 0;
  std::size_t input_dim = kFrameValues;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;

  void validate() const {
    if (d_model == 0 || n_heads == 0 || n_encoder_layers == 0 || n_decoder_layers == 0 || d_ff == 0 ||
        max_src_len == 0 || max_tgt_len == 0 || vocab_size == 0 || input_dim == 0)
      throw ConfigError("model config: all dimensions must be positive");
    if (d_model % n_heads != 0) throw ConfigError("model config: d_model must be divisible by n_heads");
    if (!(dropout_p >= 0.0 && dropout_p < 1.0)) throw ConfigError("model config: dropout_p must lie in [0, 1)");
    if (vocab_size < kReservedTokens) throw ConfigError("model config: vocab_size below the reserved tokens");
  }

  static ModelConfig desk(std::size_t vocab_size) {
    ModelConfig c;
    c.vocab_size = vocab_size;
    return c;
  }

  // Large backbone dimensions; constructible for shape checks only.
  static ModelConfig full_scale() {
    ModelConfig c;
    c.d_model = 768;
    c.n_heads = 12;
    c.n_encoder_layers = 12;
    c.n_decoder_layers = 12;
    c.d_ff = 2048;
    c.dropout_p = 0.1;
    c.vocab_size = 250112;
    return c;
  }
};

struct EncoderLayer {
  LayerNorm norm1;
  MultiHeadAttention attn;
  LayerNorm norm2;
  FeedForward ffn;
};

struct DecoderLayer {
  LayerNorm norm1;
  MultiHeadAttention self_attn;
  LayerNorm norm2;
  MultiHeadAttention cross_attn;
  LayerNorm norm3;
  FeedForward ffn;
};

// Offsets of every parameter tensor within the flat vector.
struct Architecture {
  ParamLayout layout;
  Linear skeleton_embedding;
  std::size_t token_embedding = 0;
  std::vector<EncoderLayer> encoder;
  LayerNorm encoder_norm;
  std::vector<DecoderLayer> decoder;
  LayerNorm decoder_norm;
  Linear output;

  explicit Architecture(const ModelConfig& c) {
    c.validate();
    const auto d = c.d_model;
    skeleton_embedding = Linear::make(layout, "skeleton_embedding", c.input_dim, d);
    token_embedding = layout.add("token_embedding", c.vocab_size, d);
    for (std::size_t i = 0; i < c.n_encoder_layers; ++i) {
      const std::string p = "encoder." + std::to_string(i);
      EncoderLayer l;
      l.norm1 = LayerNorm::make(layout, p + ".norm1", d);
      l.attn = MultiHeadAttention::make(layout, p + ".self_attn", d, c.n_heads);
      l.norm2 = LayerNorm::make(layout, p + ".norm2", d);
      l.ffn = FeedForward::make(layout, p + ".ffn", d, c.d_ff);
      encoder.push_back(l);
    }
    encoder_norm = LayerNorm::make(layout, "encoder.norm", d);
    for (std::size_t i = 0; i < c.n_decoder_layers; ++i) {
      const std::string p = "decoder." + std::to_string(i);
      DecoderLayer l;
      l.norm1 = LayerNorm::make(layout, p + ".norm1", d);
      l.self_attn = MultiHeadAttention::make(layout, p + ".self_attn", d, c.n_heads);
      l.norm2 = LayerNorm::make(layout, p + ".norm2", d);
      l.cross_attn = MultiHeadAttention::make(layout, p + ".cross_attn", d, c.n_heads);
      l.norm3 = LayerNorm::make(layout, p + ".norm3", d);
      l.ffn = FeedForward::make(layout, p + ".ffn", d, c.d_ff);
      decoder.push_back(l);
    }
    decoder_norm = LayerNorm::make(layout, "decoder.norm", d);
    output = Linear::make(layout, "output", d, c.vocab_size);
  }
};

// Parameter count without allocating anything.
inline std::size_t parameter_count(const ModelConfig& c) { return Architecture(c).layout.total(); }

struct Seq2SeqModel {
  ModelConfig config;
  Architecture arch;
  ParamVector params;

  explicit Seq2SeqModel(const ModelConfig& c) : config(c), arch(c), params(arch.layout.total(), 0.0) {}

  std::size_t size() const { return params.size(); }
  const double* data() const { return params.data(); }
  double* data() { return params.data(); }
};

// Scaled-uniform weights (bound sqrt(6 / (fan_in + fan_out))), zero biases,
// unit layer-norm gains. Deterministic per seed.
inline Seq2SeqModel init_model(const ModelConfig& config, std::uint64_t seed) {
  Seq2SeqModel m(config);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (const auto& t : m.arch.layout.tensors()) {
    double* p = m.params.data() + t.offset;
    const auto& n = t.name;
    const auto ends_with = [&](std::string_view suffix) {
      return n.size() >= suffix.size() && n.compare(n.size() - suffix.size(), suffix.size(), suffix) == 0;
    };
    if (ends_with(".gain")) {
      std::fill(p, p + t.size(), 1.0);
    } else if (ends_with(".bias")) {
      std::fill(p, p + t.size(), 0.0);
    } else {
      const double bound = std::sqrt(6.0 / static_cast<double>(t.rows + t.cols));
      for (std::size_t i = 0; i < t.size(); ++i) p[i] = bound * unit(rng);
    }
  }
  return m;
}

inline Mat sinusoidal_positions(std::size_t length, std::size_t d_model) {
  Mat pe(static_cast<Eigen::Index>(length), static_cast<Eigen::Index>(d_model));
  for (std::size_t pos = 0; pos < length; ++pos)
    for (std::size_t i = 0; i < d_model; ++i) {
      const double freq = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / static_cast<double>(d_model));
      const double a = static_cast<double>(pos) * freq;
      pe(static_cast<Eigen::Index>(pos), static_cast<Eigen::Index>(i)) = (i % 2 == 0) ? std::sin(a) : std::cos(a);
    }
  return pe;
}

// Padded batch. Row b * src_len + t holds frame t of sample b; likewise for targets.
struct Batch {
  std::size_t batch = 0;
  std::size_t src_len = 0;
  std::size_t tgt_len = 0;
  Mat source;
  std::vector<std::uint8_t> source_valid;
  std::vector<TokenId> target_in;
  std::vector<TokenId> target_out;
  std::vector<std::uint8_t> target_valid;

  std::size_t valid_targets() const {
    return static_cast<std::size_t>(std::count(target_valid.begin(), target_valid.end(), std::uint8_t{1}));
  }
};

// Temporal indices keeping `length` of `frames` frames: round(i (T-1) / (L-1)).
inline std::vector<std::size_t> subsample_indices(std::size_t frames, std::size_t length) {
  std::vector<std::size_t> idx;
  if (frames <= length) {
    for (std::size_t i = 0; i < frames; ++i) idx.push_back(i);
    return idx;
  }
  if (length == 1) return {0};
  for (std::size_t i = 0; i < length; ++i)
    idx.push_back(static_cast<std::size_t>(
        std::llround(static_cast<double>(i) * static_cast<double>(frames - 1) / static_cast<double>(length - 1))));
  return idx;
}

struct Example {
  std::vector<FrameVector> frames;
  std::vector<TokenId> tokens;  // BOS ... EOS
};

inline Batch make_batch(std::span<const Example* const> examples, const ModelConfig& config) {
  if (examples.empty()) throw ShapeError("make_batch: empty batch");
  Batch b;
  b.batch = examples.size();
  for (const auto* e : examples) {
    if (e->frames.empty()) throw ShapeError("make_batch: sample without frames");
    if (e->tokens.size() < 2) throw ShapeError("make_batch: target needs at least BOS and EOS");
    b.src_len = std::max(b.src_len, std::min(e->frames.size(), config.max_src_len));
    b.tgt_len = std::max(b.tgt_len, std::min(e->tokens.size() - 1, config.max_tgt_len));
  }
  const auto S = b.src_len, L = b.tgt_len;
  b.source = Mat::Zero(static_cast<Eigen::Index>(b.batch * S), static_cast<Eigen::Index>(config.input_dim));
  b.source_valid.assign(b.batch * S, 0);
  b.target_in.assign(b.batch * L, kPad);
  b.target_out.assign(b.batch * L, kPad);
  b.target_valid.assign(b.batch * L, 0);
  for (std::size_t i = 0; i < b.batch; ++i) {
    const auto& e = *examples[i];
    const auto idx = subsample_indices(e.frames.size(), config.max_src_len);
    for (std::size_t t = 0; t < idx.size(); ++t) {
      const auto& f = e.frames[idx[t]];
      if (f.size() != config.input_dim) throw ShapeError("make_batch: frame width mismatch");
      for (std::size_t k = 0; k < f.size(); ++k)
        b.source(static_cast<Eigen::Index>(i * S + t), static_cast<Eigen::Index>(k)) = f[k];
      b.source_valid[i * S + t] = 1;
    }
    const std::size_t n = std::min(e.tokens.size() - 1, config.max_tgt_len);
    for (std::size_t t = 0; t < n; ++t) {
      b.target_in[i * L + t] = e.tokens[t];
      b.target_out[i * L + t] = e.tokens[t + 1];
      b.target_valid[i * L + t] = 1;
    }
  }
  return b;
}

enum class Mode { train, eval };

struct EncoderLayerCache {
  Mat input;
  LayerNorm::Cache n1;
  Mat a;
  MultiHeadAttention::Cache attn;
  Dropout drop1;
  Mat h;
  LayerNorm::Cache n2;
  Mat c;
  FeedForward::Cache ffn;
  Dropout drop2;
};

struct DecoderLayerCache {
  Mat input;
  LayerNorm::Cache n1;
  Mat a;
  MultiHeadAttention::Cache self_attn;
  Dropout drop1;
  Mat h1;
  LayerNorm::Cache n2;
  Mat c;
  MultiHeadAttention::Cache cross_attn;
  Dropout drop2;
  Mat h2;
  LayerNorm::Cache n3;
  Mat e;
  FeedForward::Cache ffn;
  Dropout drop3;
};

struct EncoderState {
  std::size_t batch = 0, src_len = 0;
  std::vector<std::uint8_t> source_valid;
  Dropout embed_drop;
  std::vector<EncoderLayerCache> layers;
  Mat top;  // pre final norm
  LayerNorm::Cache top_norm;
  Mat memory;
};

struct DecoderState {
  std::size_t batch = 0, tgt_len = 0;
  std::vector<TokenId> tokens;
  Dropout embed_drop;
  std::vector<DecoderLayerCache> layers;
  Mat top;
  LayerNorm::Cache top_norm;
  Mat normed;
  Mat logits;
};

struct ForwardCache {
  EncoderState enc;
  DecoderState dec;
};

inline void encode_source(const Seq2SeqModel& m, const Mat& source, std::size_t batch, std::size_t src_len,
                          std::span<const std::uint8_t> valid, std::mt19937_64* rng, EncoderState& st) {
  const auto& c = m.config;
  const auto& A = m.arch;
  const double* P = m.data();
  const double p = rng ? c.dropout_p : 0.0;
  if (static_cast<std::size_t>(source.rows()) != batch * src_len ||
      static_cast<std::size_t>(source.cols()) != c.input_dim || valid.size() != batch * src_len)
    throw ShapeError("encoder input shape mismatch");

  st.batch = batch;
  st.src_len = src_len;
  st.source_valid.assign(valid.begin(), valid.end());
  Mat x;
  A.skeleton_embedding.forward(P, source, x);
  const Mat pe = sinusoidal_positions(src_len, c.d_model);
  for (std::size_t b = 0; b < batch; ++b)
    x.middleRows(static_cast<Eigen::Index>(b * src_len), static_cast<Eigen::Index>(src_len)) += pe;
  st.embed_drop.apply(x, p, rng);

  st.layers.resize(A.encoder.size());
  Mat tmp;
  for (std::size_t l = 0; l < A.encoder.size(); ++l) {
    const auto& L = A.encoder[l];
    auto& s = st.layers[l];
    s.input = std::move(x);
    L.norm1.forward(P, s.input, s.a, s.n1);
    L.attn.forward(P, s.a, s.a, batch, src_len, src_len, valid, false, tmp, s.attn);
    s.drop1.apply(tmp, p, rng);
    s.h = s.input + tmp;
    L.norm2.forward(P, s.h, s.c, s.n2);
    L.ffn.forward(P, s.c, tmp, s.ffn);
    s.drop2.apply(tmp, p, rng);
    x = s.h + tmp;
  }
  st.top = std::move(x);
  A.encoder_norm.forward(P, st.top, st.memory, st.top_norm);
}

inline void decode_targets(const Seq2SeqModel& m, const EncoderState& enc, std::span<const TokenId> tokens,
                           std::size_t tgt_len, std::span<const std::uint8_t> valid, std::mt19937_64* rng,
                           DecoderState& st) {
  const auto& c = m.config;
  const auto& A = m.arch;
  const double* P = m.data();
  const double p = rng ? c.dropout_p : 0.0;
  const std::size_t batch = enc.batch;
  if (tokens.size() != batch * tgt_len || valid.size() != batch * tgt_len) throw ShapeError("decoder input shape mismatch");
  if (tgt_len > c.max_tgt_len) throw ShapeError("target longer than max_tgt_len");

  st.batch = batch;
  st.tgt_len = tgt_len;
  st.tokens.assign(tokens.begin(), tokens.end());
  const auto d = static_cast<Eigen::Index>(c.d_model);
  const double emb_scale = std::sqrt(static_cast<double>(c.d_model));
  const auto table = view(P, A.token_embedding, c.vocab_size, c.d_model);
  Mat x(static_cast<Eigen::Index>(batch * tgt_len), d);
  for (std::size_t r = 0; r < tokens.size(); ++r) {
    const auto id = tokens[r];
    if (id < 0 || static_cast<std::size_t>(id) >= c.vocab_size) throw ShapeError("token id outside vocabulary");
    x.row(static_cast<Eigen::Index>(r)) = table.row(id) * emb_scale;
  }
  const Mat pe = sinusoidal_positions(tgt_len, c.d_model);
  for (std::size_t b = 0; b < batch; ++b)
    x.middleRows(static_cast<Eigen::Index>(b * tgt_len), static_cast<Eigen::Index>(tgt_len)) += pe;
  st.embed_drop.apply(x, p, rng);

  st.layers.resize(A.decoder.size());
  Mat tmp;
  for (std::size_t l = 0; l < A.decoder.size(); ++l) {
    const auto& L = A.decoder[l];
    auto& s = st.layers[l];
    s.input = std::move(x);
    L.norm1.forward(P, s.input, s.a, s.n1);
    L.self_attn.forward(P, s.a, s.a, batch, tgt_len, tgt_len, valid, true, tmp, s.self_attn);
    s.drop1.apply(tmp, p, rng);
    s.h1 = s.input + tmp;
    L.norm2.forward(P, s.h1, s.c, s.n2);
    L.cross_attn.forward(P, s.c, enc.memory, batch, tgt_len, enc.src_len, enc.source_valid, false, tmp,
                         s.cross_attn);
    s.drop2.apply(tmp, p, rng);
    s.h2 = s.h1 + tmp;
    L.norm3.forward(P, s.h2, s.e, s.n3);
    L.ffn.forward(P, s.e, tmp, s.ffn);
    s.drop3.apply(tmp, p, rng);
    x = s.h2 + tmp;
  }
  st.top = std::move(x);
  A.decoder_norm.forward(P, st.top, st.normed, st.top_norm);
  A.output.forward(P, st.normed, st.logits);
}

// Logits (batch * tgt_len) x vocab. Dropout only in train mode and only when
// an RNG is supplied.
inline const Mat& forward(const Seq2SeqModel& m, const Batch& b, Mode mode, std::mt19937_64* rng,
                          ForwardCache& cache) {
  std::mt19937_64* r = mode == Mode::train ? rng : nullptr;
  encode_source(m, b.source, b.batch, b.src_len, b.source_valid, r, cache.enc);
  decode_targets(m, cache.enc, b.target_in, b.tgt_len, b.target_valid, r, cache.dec);
  return cache.dec.logits;
}

inline Mat forward(const Seq2SeqModel& m, const Batch& b, Mode mode = Mode::eval, std::mt19937_64* rng = nullptr) {
  ForwardCache cache;
  return forward(m, b, mode, rng, cache);
}

// Mean token cross entropy over valid positions; fills dlogits when given.
inline double cross_entropy(const Mat& logits, std::span<const TokenId> target, std::span<const std::uint8_t> valid,
                            Mat* dlogits = nullptr) {
  if (static_cast<std::size_t>(logits.rows()) != target.size() || target.size() != valid.size())
    throw ShapeError("cross_entropy: shape mismatch");
  std::size_t n = 0;
  for (auto v : valid) n += v ? 1 : 0;
  if (dlogits) *dlogits = Mat::Zero(logits.rows(), logits.cols());
  if (n == 0) return 0.0;
  const double inv_n = 1.0 / static_cast<double>(n);
  double total = 0.0;
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    if (!valid[static_cast<std::size_t>(r)]) continue;
    const auto row = logits.row(r);
    const double mx = row.maxCoeff();
    const double lse = mx + std::log((row.array() - mx).exp().sum());
    const auto y = target[static_cast<std::size_t>(r)];
    if (y < 0 || y >= logits.cols()) throw ShapeError("cross_entropy: label outside vocabulary");
    total += lse - row(y);
    if (dlogits) {
      dlogits->row(r) = (row.array() - lse).exp().matrix() * inv_n;
      (*dlogits)(r, y) -= inv_n;
    }
  }
  return total * inv_n;
}

// Accumulates d(loss)/d(params) into grad, given d(loss)/d(logits).
inline void backward(const Seq2SeqModel& m, const Batch& batch, const ForwardCache& cache, const Mat& dlogits,
                     ParamVector& grad) {
  const auto& c = m.config;
  const auto& A = m.arch;
  const double* P = m.data();
  double* G = grad.data();
  const auto& dec = cache.dec;
  const auto& enc = cache.enc;

  Mat dx, dtmp, da, dkv;
  A.output.backward(P, G, dec.normed, dlogits, &dtmp);
  A.decoder_norm.backward(P, G, dec.top_norm, dtmp, dx);

  Mat dmemory = Mat::Zero(enc.memory.rows(), enc.memory.cols());
  for (std::size_t l = A.decoder.size(); l-- > 0;) {
    const auto& L = A.decoder[l];
    const auto& s = dec.layers[l];
    // x = h2 + drop3(ffn(norm3(h2)))
    dtmp = dx;
    s.drop3.backward(dtmp);
    L.ffn.backward(P, G, s.e, s.ffn, dtmp, da);
    L.norm3.backward(P, G, s.n3, da, dtmp);
    dx += dtmp;
    // h2 = h1 + drop2(cross(norm2(h1), memory))
    dtmp = dx;
    s.drop2.backward(dtmp);
    L.cross_attn.backward(P, G, s.c, enc.memory, dec.batch, dec.tgt_len, enc.src_len, s.cross_attn, dtmp, da, dkv);
    dmemory += dkv;
    L.norm2.backward(P, G, s.n2, da, dtmp);
    dx += dtmp;
    // h1 = input + drop1(self(norm1(input)))
    dtmp = dx;
    s.drop1.backward(dtmp);
    L.self_attn.backward(P, G, s.a, s.a, dec.batch, dec.tgt_len, dec.tgt_len, s.self_attn, dtmp, da, dkv);
    da += dkv;
    L.norm1.backward(P, G, s.n1, da, dtmp);
    dx += dtmp;
  }
  dec.embed_drop.backward(dx);
  const double emb_scale = std::sqrt(static_cast<double>(c.d_model));
  auto gtable = view(G, A.token_embedding, c.vocab_size, c.d_model);
  for (std::size_t r = 0; r < dec.tokens.size(); ++r)
    gtable.row(dec.tokens[r]) += dx.row(static_cast<Eigen::Index>(r)) * emb_scale;

  A.encoder_norm.backward(P, G, enc.top_norm, dmemory, dx);
  for (std::size_t l = A.encoder.size(); l-- > 0;) {
    const auto& L = A.encoder[l];
    const auto& s = enc.layers[l];
    dtmp = dx;
    s.drop2.backward(dtmp);
    L.ffn.backward(P, G, s.c, s.ffn, dtmp, da);
    L.norm2.backward(P, G, s.n2, da, dtmp);
    dx += dtmp;
    dtmp = dx;
    s.drop1.backward(dtmp);
    L.attn.backward(P, G, s.a, s.a, enc.batch, enc.src_len, enc.src_len, s.attn, dtmp, da, dkv);
    da += dkv;
    L.norm1.backward(P, G, s.n1, da, dtmp);
    dx += dtmp;
  }
  enc.embed_drop.backward(dx);
  A.skeleton_embedding.backward(P, G, batch.source, dx, nullptr);
}

// Loss and its full gradient (grad is overwritten) for one batch.
inline double loss_and_gradient(const Seq2SeqModel& m, const Batch& b, std::mt19937_64* dropout_rng,
                                 ParamVector& grad, ForwardCache& cache) {
  const Mat& logits = forward(m, b, dropout_rng ? Mode::train : Mode::eval, dropout_rng, cache);
  Mat dlogits;
  const double loss = cross_entropy(logits, b.target_out, b.target_valid, &dlogits);
  grad.assign(m.size(), 0.0);
  backward(m, b, cache, dlogits, grad);
  return loss;
}

inline double loss_and_gradient(const Seq2SeqModel& m, const Batch& b, std::mt19937_64* dropout_rng,
                                 ParamVector& grad) {
  ForwardCache cache;
  return loss_and_gradient(m, b, dropout_rng, grad, cache);
}

inline double batch_loss(const Seq2SeqModel& m, const Batch& b) {
  ForwardCache cache;
  const Mat& logits = forward(m, b, Mode::eval, nullptr, cache);
  return cross_entropy(logits, b.target_out, b.target_valid);
}

}  // namespace skelcap::nn
