#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "eoattn/activations.hpp"
#include "eoattn/tensor.hpp"

namespace eoattn::nn {

struct AttentionConfig {
  long n = 0;    // sequence length (0 = take from inputs)
  long d_k = 1;  // key dimension; scores scale by 1/sqrt(d_k)
  int heads = 1;
  bool causal_mask = false;
  act::ActivationSet nonlinearity;
};

/// How the attention nonlinearity evaluates inside the graph:
///   Physical  — the full forward model (quantizers, optional noise); the
///               backward pass still uses the smooth surrogate (straight-
///               through estimator).
///   Surrogate — forward and backward both use the smooth surrogate, so
///               central finite differences match the reverse pass.
enum class AttnMode { Physical, Surrogate };

/// Row-wise nonlinearity over a score matrix. With the causal mask on, row i
/// sees only columns j <= i (masked symbols never reach the accumulator) and
/// masked outputs are exactly zero.
template <class S>
TensorT<S> attention_weights(const TensorT<S>& scores, const act::ActivationSet& set, bool causal,
                             AttnMode mode, Rng* rng) {
  detail::check(scores.shape().size() == 2, "attention_weights: need a matrix");
  const long m = scores.rows(), w = scores.cols();
  auto n = detail::make_node<S>(scores.shape(), {scores.node()});
  for (long i = 0; i < m; ++i) {
    const long limit = causal ? std::min(i + 1, w) : w;
    std::vector<double> row(size_t(limit));
    for (long j = 0; j < limit; ++j) row[size_t(j)] = double(scores.data()[i * w + j]);
    const std::vector<double> act_row = mode == AttnMode::Physical
                                            ? set.forward(row, rng)
                                            : set.grad(row).value;
    for (long j = 0; j < limit; ++j) n->value[i * w + j] = S(act_row[size_t(j)]);
    // masked outputs stay zero
  }
  const act::ActivationSet set_copy = set;
  n->backprop = [m, w, causal, set_copy](auto& self) {
    auto& ps = *self.parents[0];
    if (!ps.requires_grad) return;
    ps.ensure_grad();
    for (long i = 0; i < m; ++i) {
      const long limit = causal ? std::min(i + 1, w) : w;
      std::vector<double> row(size_t(limit)), ds(size_t(limit));
      for (long j = 0; j < limit; ++j) {
        row[size_t(j)] = double(ps.value[i * w + j]);
        ds[size_t(j)] = double(self.grad[i * w + j]);
      }
      const act::ActivationVjp vjp = set_copy.grad(row);
      const std::vector<double> dx = vjp.vjp(ds);
      for (long j = 0; j < limit; ++j) ps.grad[i * w + j] += S(dx[size_t(j)]);
    }
  };
  return TensorT<S>(n);
}

/// Single attention head: f(Q K^T / sqrt(d_k)) V.
template <class S>
TensorT<S> attention_forward(const TensorT<S>& q, const TensorT<S>& k, const TensorT<S>& v,
                             const AttentionConfig& cfg, Rng* rng = nullptr,
                             AttnMode mode = AttnMode::Physical) {
  detail::check(q.shape().size() == 2 && k.shape().size() == 2 && v.shape().size() == 2,
                "attention: Q, K, V must be matrices");
  detail::check(q.cols() == k.cols(), "attention: Q and K widths differ");
  detail::check(q.rows() == k.rows() && k.rows() == v.rows(),
                "attention: sequence lengths differ");
  const S inv_sqrt_dk = S(1.0 / std::sqrt(double(cfg.d_k > 0 ? cfg.d_k : q.cols())));
  TensorT<S> scores = scale(matmul_nt(q, k), inv_sqrt_dk);
  TensorT<S> weights =
      attention_weights(scores, cfg.nonlinearity, cfg.causal_mask, mode, rng);
  return matmul(weights, v);
}

/// The post-nonlinearity weight matrix alone (test hook for row-sum and
/// masking invariants).
template <class S>
TensorT<S> attention_matrix(const TensorT<S>& q, const TensorT<S>& k, const AttentionConfig& cfg,
                            Rng* rng = nullptr, AttnMode mode = AttnMode::Physical) {
  const S inv_sqrt_dk = S(1.0 / std::sqrt(double(cfg.d_k > 0 ? cfg.d_k : q.cols())));
  TensorT<S> scores = scale(matmul_nt(q, k), inv_sqrt_dk);
  return attention_weights(scores, cfg.nonlinearity, cfg.causal_mask, mode, rng);
}

/// Central-difference check of the reverse pass. `fn` must build a scalar
/// from the given leaves. Returns the max over all coordinates of
/// |analytic - numeric| / max(|analytic|, |numeric|, 1e-8). 64-bit only.
inline double grad_check(
    const std::function<TensorT<double>(const std::vector<TensorT<double>>&)>& fn,
    std::vector<TensorT<double>> point, double h = 1e-5) {
  for (auto& t : point) t.zero_grad();
  TensorT<double> out = fn(point);
  out.backward();
  std::vector<std::vector<double>> analytic;
  analytic.reserve(point.size());
  for (auto& t : point) analytic.push_back(t.grad());

  double worst = 0.0;
  for (size_t t = 0; t < point.size(); ++t) {
    if (!point[t].requires_grad()) continue;
    for (long i = 0; i < point[t].numel(); ++i) {
      const double saved = point[t].data()[size_t(i)];
      point[t].data()[size_t(i)] = saved + h;
      const double up = fn(point).item();
      point[t].data()[size_t(i)] = saved - h;
      const double dn = fn(point).item();
      point[t].data()[size_t(i)] = saved;
      const double numeric = (up - dn) / (2.0 * h);
      const double a = analytic[t][size_t(i)];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
      worst = std::max(worst, std::abs(a - numeric) / denom);
    }
  }
  return worst;
}

}  // namespace eoattn::nn
