#pragma once

// Building blocks with explicit forward caches and analytic backward passes.
// Parameters live in a flat array `P`; gradients accumulate into `G` (same layout).

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "skelcap/nn/tensor.hpp"

namespace skelcap::nn {

struct Linear {
  std::size_t w = 0, b = 0;
  std::size_t in = 0, out = 0;
  bool has_bias = true;

  static Linear make(ParamLayout& layout, const std::string& name, std::size_t in, std::size_t out, bool bias = true) {
    Linear l;
    l.in = in;
    l.out = out;
    l.has_bias = bias;
    l.w = layout.add(name + ".weight", in, out);
    if (bias) l.b = layout.add(name + ".bias", 1, out);
    return l;
  }

  void forward(const double* P, const Mat& x, Mat& y) const {
    y.noalias() = x * view(P, w, in, out);
    if (has_bias) y.rowwise() += row_view(P, b, out);
  }

  // dx is overwritten when non-null.
  void backward(const double* P, double* G, const Mat& x, const Mat& dy, Mat* dx) const {
    view(G, w, in, out).noalias() += x.transpose() * dy;
    if (has_bias) row_view(G, b, out) += dy.colwise().sum();
    if (dx) dx->noalias() = dy * view(P, w, in, out).transpose();
  }
};

struct LayerNorm {
  static constexpr double kEps = 1e-5;
  std::size_t gain = 0, bias = 0, dim = 0;

  struct Cache {
    Mat xhat;
    Eigen::VectorXd rstd;
  };

  static LayerNorm make(ParamLayout& layout, const std::string& name, std::size_t dim) {
    LayerNorm n;
    n.dim = dim;
    n.gain = layout.add(name + ".gain", 1, dim);
    n.bias = layout.add(name + ".bias", 1, dim);
    return n;
  }

  void forward(const double* P, const Mat& x, Mat& y, Cache& c) const {
    const auto rows = x.rows();
    const double inv_d = 1.0 / static_cast<double>(dim);
    c.xhat.resize(rows, x.cols());
    c.rstd.resize(rows);
    for (Eigen::Index r = 0; r < rows; ++r) {
      const double mean = x.row(r).sum() * inv_d;
      const double var = (x.row(r).array() - mean).square().sum() * inv_d;
      c.rstd(r) = 1.0 / std::sqrt(var + kEps);
      c.xhat.row(r) = (x.row(r).array() - mean) * c.rstd(r);
    }
    y = c.xhat;
    y.array().rowwise() *= row_view(P, gain, dim).array();
    y.rowwise() += row_view(P, bias, dim);
  }

  void backward(const double* P, double* G, const Cache& c, const Mat& dy, Mat& dx) const {
    row_view(G, gain, dim) += (dy.array() * c.xhat.array()).colwise().sum().matrix();
    row_view(G, bias, dim) += dy.colwise().sum();
    Mat dxhat = dy;
    dxhat.array().rowwise() *= row_view(P, gain, dim).array();
    const double inv_d = 1.0 / static_cast<double>(dim);
    dx.resize(dy.rows(), dy.cols());
    for (Eigen::Index r = 0; r < dy.rows(); ++r) {
      const double m1 = dxhat.row(r).sum() * inv_d;
      const double m2 = dxhat.row(r).dot(c.xhat.row(r)) * inv_d;
      dx.row(r) = c.rstd(r) * (dxhat.row(r).array() - m1 - c.xhat.row(r).array() * m2).matrix();
    }
  }
};

// Multi-head scaled dot-product attention over a batch laid out as
// consecutive blocks of `q_len` (queries) and `k_len` (keys) rows.
struct MultiHeadAttention {
  Linear q, k, v, o;
  std::size_t d_model = 0, n_heads = 0;

  struct Cache {
    Mat q, k, v, o;
    std::vector<Mat> probs;  // index b * n_heads + h, each q_len x k_len
  };

  static MultiHeadAttention make(ParamLayout& layout, const std::string& name, std::size_t d_model,
                                 std::size_t n_heads) {
    MultiHeadAttention a;
    a.d_model = d_model;
    a.n_heads = n_heads;
    a.q = Linear::make(layout, name + ".query", d_model, d_model, false);
    a.k = Linear::make(layout, name + ".key", d_model, d_model, false);
    a.v = Linear::make(layout, name + ".value", d_model, d_model, false);
    a.o = Linear::make(layout, name + ".output", d_model, d_model, false);
    return a;
  }

  // key_valid has batch * k_len entries; causal masks keys after the query position.
  void forward(const double* P, const Mat& xq, const Mat& xkv, std::size_t batch, std::size_t q_len,
               std::size_t k_len, std::span<const std::uint8_t> key_valid, bool causal, Mat& y, Cache& c) const {
    q.forward(P, xq, c.q);
    k.forward(P, xkv, c.k);
    v.forward(P, xkv, c.v);
    const auto dh = static_cast<Eigen::Index>(d_model / n_heads);
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    const auto Lq = static_cast<Eigen::Index>(q_len), Lk = static_cast<Eigen::Index>(k_len);
    c.o.resize(xq.rows(), static_cast<Eigen::Index>(d_model));
    c.probs.resize(batch * n_heads);
    constexpr double kNegInf = -std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b < batch; ++b) {
      const auto qr = static_cast<Eigen::Index>(b) * Lq, kr = static_cast<Eigen::Index>(b) * Lk;
      for (std::size_t h = 0; h < n_heads; ++h) {
        const auto col = static_cast<Eigen::Index>(h) * dh;
        Mat& p = c.probs[b * n_heads + h];
        p.noalias() = (c.q.block(qr, col, Lq, dh) * c.k.block(kr, col, Lk, dh).transpose()) * scale;
        for (Eigen::Index i = 0; i < Lq; ++i) {
          double mx = kNegInf;
          for (Eigen::Index j = 0; j < Lk; ++j) {
            if (!key_valid[static_cast<std::size_t>(kr + j)] || (causal && j > i))
              p(i, j) = kNegInf;
            else
              mx = std::max(mx, p(i, j));
          }
          double sum = 0.0;
          for (Eigen::Index j = 0; j < Lk; ++j) {
            const double e = p(i, j) == kNegInf ? 0.0 : std::exp(p(i, j) - mx);
            p(i, j) = e;
            sum += e;
          }
          if (sum > 0.0) p.row(i) /= sum;
        }
        c.o.block(qr, col, Lq, dh).noalias() = p * c.v.block(kr, col, Lk, dh);
      }
    }
    o.forward(P, c.o, y);
  }

  // dxq and dxkv are overwritten. For self-attention the caller sums them.
  void backward(const double* P, double* G, const Mat& xq, const Mat& xkv, std::size_t batch, std::size_t q_len,
                std::size_t k_len, const Cache& c, const Mat& dy, Mat& dxq, Mat& dxkv) const {
    Mat d_o;
    o.backward(P, G, c.o, dy, &d_o);
    const auto dh = static_cast<Eigen::Index>(d_model / n_heads);
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    const auto Lq = static_cast<Eigen::Index>(q_len), Lk = static_cast<Eigen::Index>(k_len);
    Mat dq = Mat::Zero(c.q.rows(), c.q.cols());
    Mat dk = Mat::Zero(c.k.rows(), c.k.cols());
    Mat dv = Mat::Zero(c.v.rows(), c.v.cols());
    Mat dp, ds;
    for (std::size_t b = 0; b < batch; ++b) {
      const auto qr = static_cast<Eigen::Index>(b) * Lq, kr = static_cast<Eigen::Index>(b) * Lk;
      for (std::size_t h = 0; h < n_heads; ++h) {
        const auto col = static_cast<Eigen::Index>(h) * dh;
        const Mat& p = c.probs[b * n_heads + h];
        const auto dob = d_o.block(qr, col, Lq, dh);
        dp.noalias() = dob * c.v.block(kr, col, Lk, dh).transpose();
        dv.block(kr, col, Lk, dh).noalias() += p.transpose() * dob;
        const Eigen::VectorXd rowdot = (dp.array() * p.array()).rowwise().sum();
        ds = p.array() * (dp.array().colwise() - rowdot.array());
        ds *= scale;
        dq.block(qr, col, Lq, dh).noalias() += ds * c.k.block(kr, col, Lk, dh);
        dk.block(kr, col, Lk, dh).noalias() += ds.transpose() * c.q.block(qr, col, Lq, dh);
      }
    }
    Mat tmp;
    q.backward(P, G, xq, dq, &dxq);
    k.backward(P, G, xkv, dk, &dxkv);
    v.backward(P, G, xkv, dv, &tmp);
    dxkv += tmp;
  }
};

struct FeedForward {
  Linear in, out;

  struct Cache {
    Mat hidden;  // post-ReLU
  };

  static FeedForward make(ParamLayout& layout, const std::string& name, std::size_t d_model, std::size_t d_ff) {
    return {Linear::make(layout, name + ".in", d_model, d_ff), Linear::make(layout, name + ".out", d_ff, d_model)};
  }

  void forward(const double* P, const Mat& x, Mat& y, Cache& c) const {
    in.forward(P, x, c.hidden);
    c.hidden = c.hidden.cwiseMax(0.0);
    out.forward(P, c.hidden, y);
  }

  void backward(const double* P, double* G, const Mat& x, const Cache& c, const Mat& dy, Mat& dx) const {
    Mat dh;
    out.backward(P, G, c.hidden, dy, &dh);
    dh = (c.hidden.array() > 0.0).select(dh, 0.0);
    in.backward(P, G, x, dh, &dx);
  }
};

// Inverted dropout; an empty mask means identity.
struct Dropout {
  Mat mask;

  void apply(Mat& x, double p, std::mt19937_64* rng) {
    if (!rng || p <= 0.0) {
      mask.resize(0, 0);
      return;
    }
    std::bernoulli_distribution keep(1.0 - p);
    const double s = 1.0 / (1.0 - p);
    mask.resize(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = keep(*rng) ? s : 0.0;
    x.array() *= mask.array();
  }

  void backward(Mat& dx) const {
    if (mask.size() != 0) dx.array() *= mask.array();
  }
};

}  // namespace skelcap::nn
