#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "skelcap/errors.hpp"
#include "skelcap/nn/tensor.hpp"

namespace skelcap::nn {

struct AdamConfig {
  double learning_rate = 5e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::uint64_t step = 0;
  ParamVector m;
  ParamVector v;

  explicit AdamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
  friend bool operator==(const AdamState&, const AdamState&) = default;
};

inline double global_norm(const ParamVector& g) {
  double s = 0.0;
  for (double x : g) s += x * x;
  return std::sqrt(s);
}

// Rescales g in place so its L2 norm is at most max_norm; returns the pre-clip norm.
inline double clip_global_norm(ParamVector& g, double max_norm) {
  const double n = global_norm(g);
  if (n > max_norm && n > 0.0) {
    const double s = max_norm / n;
    for (double& x : g) x *= s;
  }
  return n;
}

// One bias-corrected Adam update (no weight decay).
inline void adam_update(ParamVector& params, const ParamVector& grad, AdamState& state,
                        const AdamConfig& cfg) {
  if (state.m.size() != params.size() || state.v.size() != params.size() || grad.size() != params.size())
    throw ShapeError("adam_update: state size mismatch");
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grad[i];
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
    const double mhat = state.m[i] / c1;
    const double vhat = state.v[i] / c2;
    params[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.eps);
  }
}

}  // namespace skelcap::nn
