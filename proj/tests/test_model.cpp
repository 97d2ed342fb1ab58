#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "skelcap/nn/grad_check.hpp"
#include "skelcap/nn/model.hpp"

using namespace skelcap;
using namespace skelcap::nn;

namespace {

ModelConfig small_config(std::size_t vocab = 10) {
  ModelConfig c;
  c.d_model = 16;
  c.n_heads = 4;
  c.n_encoder_layers = 2;
  c.n_decoder_layers = 2;
  c.d_ff = 24;
  c.dropout_p = 0.1;
  c.max_src_len = 12;
  c.max_tgt_len = 8;
  c.vocab_size = vocab;
  return c;
}

Example random_example(std::mt19937_64& rng, std::size_t frames, std::size_t tokens, std::size_t vocab) {
  std::normal_distribution<double> coord(0.0, 0.5);
  std::uniform_int_distribution<TokenId> tok(static_cast<TokenId>(kReservedTokens), static_cast<TokenId>(vocab - 1));
  Example e;
  e.frames.resize(frames);
  for (auto& f : e.frames)
    for (auto& v : f) v = coord(rng);
  e.tokens.push_back(kBos);
  for (std::size_t i = 0; i < tokens; ++i) e.tokens.push_back(tok(rng));
  e.tokens.push_back(kEos);
  return e;
}

Batch batch_of(const std::vector<const Example*>& ex, const ModelConfig& c) { return make_batch(ex, c); }

std::size_t closed_form_count(const ModelConfig& c) {
  const auto d = c.d_model, f = c.d_ff, V = c.vocab_size;
  const auto ffn = d * f + f + f * d + d;
  const auto enc = 4 * d + 4 * d * d + ffn;
  const auto dec = 6 * d + 8 * d * d + ffn;
  return c.input_dim * d + d + V * d + c.n_encoder_layers * enc + 2 * d + c.n_decoder_layers * dec + 2 * d + d * V + V;
}

}  // namespace

TEST(ModelConfig, Validation) {
  auto c = ModelConfig::desk(40);
  EXPECT_NO_THROW(c.validate());
  c.n_heads = 5;
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_THROW(Architecture{c}, ConfigError);
  c = ModelConfig::desk(40);
  c.dropout_p = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_THROW(ModelConfig::desk(0).validate(), ConfigError);
}

TEST(ModelConfig, ParameterCounts) {
  const auto desk = ModelConfig::desk(60);
  EXPECT_EQ(parameter_count(desk), closed_form_count(desk));
  EXPECT_EQ(parameter_count(desk), 183548u);
  const auto big = ModelConfig::full_scale();
  EXPECT_NO_THROW(big.validate());
  EXPECT_EQ(big.d_model, 768u);
  EXPECT_EQ(big.n_heads, 12u);
  EXPECT_EQ(big.n_encoder_layers, 12u);
  EXPECT_EQ(big.n_decoder_layers, 12u);
  EXPECT_EQ(big.d_ff, 2048u);
  EXPECT_EQ(parameter_count(big), closed_form_count(big));
  EXPECT_EQ(Architecture(small_config()).layout.find("decoder.1.cross_attn.query.weight").rows, 16u);
}

TEST(Model, InitIsDeterministic) {
  const auto c = small_config();
  EXPECT_EQ(init_model(c, 3).params, init_model(c, 3).params);
  EXPECT_NE(init_model(c, 3).params, init_model(c, 4).params);
  const auto m = init_model(c, 3);
  const auto& g = m.arch.layout.find("encoder.norm.gain");
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_EQ(m.params[g.offset + i], 1.0);
}

TEST(Model, EvalForwardIsDeterministicAndTrainDropoutIsSeeded) {
  const auto c = small_config();
  const auto m = init_model(c, 1);
  std::mt19937_64 rng(2);
  const auto a = random_example(rng, 9, 4, c.vocab_size);
  const auto b = batch_of({&a}, c);
  EXPECT_EQ(forward(m, b), forward(m, b));
  std::mt19937_64 r1(5), r2(5);
  const Mat t1 = forward(m, b, Mode::train, &r1), t2 = forward(m, b, Mode::train, &r2);
  EXPECT_EQ(t1, t2);
  EXPECT_NE(t1, forward(m, b));
}

TEST(Model, DecoderIsCausal) {
  const auto c = small_config();
  const auto m = init_model(c, 1);
  std::mt19937_64 rng(3);
  auto a = random_example(rng, 7, 6, c.vocab_size);
  const Mat base = forward(m, batch_of({&a}, c));
  for (std::size_t t = 1; t < a.tokens.size() - 1; ++t) {
    auto changed = a;
    for (std::size_t k = t; k < changed.tokens.size() - 1; ++k)
      changed.tokens[k] = static_cast<TokenId>(kReservedTokens + (changed.tokens[k] + 1) % 6);
    const Mat out = forward(m, batch_of({&changed}, c));
    EXPECT_LT((out.topRows(static_cast<Eigen::Index>(t)) - base.topRows(static_cast<Eigen::Index>(t))).cwiseAbs().maxCoeff(),
              1e-12);
    EXPECT_GT((out.row(static_cast<Eigen::Index>(t)) - base.row(static_cast<Eigen::Index>(t))).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Model, PaddingDoesNotLeak) {
  const auto c = small_config();
  const auto m = init_model(c, 1);
  std::mt19937_64 rng(4);
  const auto a = random_example(rng, 5, 3, c.vocab_size);
  const auto longer = random_example(rng, 11, 6, c.vocab_size);
  const Mat alone = forward(m, batch_of({&a}, c));
  const auto padded = batch_of({&a, &longer}, c);
  ASSERT_GT(padded.src_len, 5u);
  const Mat together = forward(m, padded);
  const auto n = static_cast<Eigen::Index>(a.tokens.size() - 1);
  EXPECT_LT((together.topRows(n) - alone.topRows(n)).cwiseAbs().maxCoeff(), 1e-10);

  // Garbage in padded frames must not matter either.
  auto poisoned = padded;
  for (std::size_t t = 5; t < padded.src_len; ++t) poisoned.source.row(static_cast<Eigen::Index>(t)).setConstant(1e3);
  EXPECT_LT((forward(m, poisoned).topRows(n) - alone.topRows(n)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Model, AttentionRowsAreDistributions) {
  const auto c = small_config();
  const auto m = init_model(c, 1);
  std::mt19937_64 rng(6);
  const auto a = random_example(rng, 5, 3, c.vocab_size);
  const auto longer = random_example(rng, 10, 5, c.vocab_size);
  const auto b = batch_of({&a, &longer}, c);
  ForwardCache cache;
  forward(m, b, Mode::eval, nullptr, cache);
  auto check = [](const std::vector<Mat>& probs) {
    ASSERT_FALSE(probs.empty());
    for (const auto& p : probs) {
      EXPECT_GE(p.minCoeff(), 0.0);
      for (Eigen::Index i = 0; i < p.rows(); ++i) EXPECT_NEAR(p.row(i).sum(), 1.0, 1e-12);
    }
  };
  for (const auto& l : cache.enc.layers) check(l.attn.probs);
  for (const auto& l : cache.dec.layers) {
    check(l.self_attn.probs);
    check(l.cross_attn.probs);
    // causal: nothing above the diagonal
    for (const auto& p : l.self_attn.probs)
      for (Eigen::Index i = 0; i < p.rows(); ++i)
        for (Eigen::Index j = i + 1; j < p.cols(); ++j) EXPECT_EQ(p(i, j), 0.0);
  }
  // sample 0 has 5 valid frames; its cross-attention ignores the padded keys
  for (std::size_t h = 0; h < c.n_heads; ++h) {
    const auto& p = cache.dec.layers[0].cross_attn.probs[h];
    for (Eigen::Index i = 0; i < p.rows(); ++i)
      for (Eigen::Index j = 5; j < p.cols(); ++j) EXPECT_EQ(p(i, j), 0.0);
  }
}

TEST(Model, UniformOutputGivesLogVocabLoss) {
  const auto c = small_config(17);
  auto m = init_model(c, 1);
  const auto& w = m.arch.layout.find("output.weight");
  const auto& bias = m.arch.layout.find("output.bias");
  std::fill_n(m.params.begin() + static_cast<std::ptrdiff_t>(w.offset), w.size(), 0.0);
  std::fill_n(m.params.begin() + static_cast<std::ptrdiff_t>(bias.offset), bias.size(), 0.0);
  std::mt19937_64 rng(1);
  const auto a = random_example(rng, 6, 4, c.vocab_size);
  EXPECT_NEAR(batch_loss(m, batch_of({&a}, c)), std::log(17.0), 1e-12);
}

TEST(CrossEntropy, HandComputedValueAndGradient) {
  Mat logits(2, 3);
  logits << 1, 2, 3, 0, 0, 0;
  const std::vector<TokenId> target{2, 0};
  const std::vector<std::uint8_t> valid{1, 1};
  Mat d;
  const double loss = cross_entropy(logits, target, valid, &d);
  const double z = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
  EXPECT_NEAR(loss, 0.5 * (std::log(z) - 3.0 + std::log(3.0)), 1e-12);
  EXPECT_NEAR(d(0, 0), 0.5 * std::exp(1.0) / z, 1e-12);
  EXPECT_NEAR(d(0, 2), 0.5 * (std::exp(3.0) / z - 1.0), 1e-12);
  EXPECT_NEAR(d(1, 0), 0.5 * (1.0 / 3.0 - 1.0), 1e-12);
  EXPECT_NEAR(d(1, 1), 0.5 / 3.0, 1e-12);

  const std::vector<std::uint8_t> one{1, 0};
  EXPECT_NEAR(cross_entropy(logits, target, one, &d), std::log(z) - 3.0, 1e-12);
  EXPECT_EQ(d.row(1).cwiseAbs().sum(), 0.0);
  EXPECT_THROW(cross_entropy(logits, std::vector<TokenId>{1}, one), ShapeError);
}

TEST(Batching, SubsampleAndPadding) {
  EXPECT_EQ(subsample_indices(3, 5), (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_EQ(subsample_indices(9, 5), (std::vector<std::size_t>{0, 2, 4, 6, 8}));
  const auto c = small_config();
  std::mt19937_64 rng(1);
  const auto a = random_example(rng, 30, 20, c.vocab_size);
  const auto b = batch_of({&a}, c);
  EXPECT_EQ(b.src_len, c.max_src_len);
  EXPECT_EQ(b.tgt_len, c.max_tgt_len);
  EXPECT_EQ(b.target_in[0], kBos);
  EXPECT_EQ(b.valid_targets(), c.max_tgt_len);
  EXPECT_THROW(make_batch(std::span<const Example* const>{}, c), ShapeError);
}

TEST(GradientCheck, MatchesFiniteDifferences) {
  const auto c = tiny_config();
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto b = random_check_batch(c, seed);
    const auto r = gradient_check(c, b, 1e-5, seed);
    EXPECT_EQ(r.checked, parameter_count(c));
    EXPECT_LT(r.max_relative_error, 1e-4) << r.worst_tensor << " analytic " << r.analytic << " numeric " << r.numeric;
  }
}

TEST(GradientCheck, DetectsACorruptedGradient) {
  const auto c = tiny_config();
  const auto b = random_check_batch(c, 2);
  const auto m = init_model(c, 2);
  auto g = analytic_gradient(m, b);
  const auto& t = m.arch.layout.find("decoder.0.ffn.in.weight");
  for (std::size_t i = 0; i < t.size(); ++i) g[t.offset + i] *= 1.1;
  const auto r = compare_with_finite_differences(m, b, g, 1e-5);
  EXPECT_GT(r.max_relative_error, 1e-2);
  EXPECT_EQ(r.worst_tensor, "decoder.0.ffn.in.weight");
}
