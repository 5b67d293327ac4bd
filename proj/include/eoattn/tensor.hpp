#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <span>
#include <unordered_set>
#include <vector>

#include "eoattn/errors.hpp"
#include "eoattn/rng.hpp"

namespace eoattn::nn {

/// Dense row-major tensor with a reverse-mode tape. Graphs are built per
/// forward pass; backward() runs the tape in reverse topological order.
/// Instantiated with double for gradient checks and float for training.
template <class S>
class TensorT {
 public:
  struct Node {
    std::vector<long> shape;
    std::vector<S> value;
    std::vector<S> grad;
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backprop;  // accumulate self.grad into parents

    long numel() const { return long(value.size()); }
    void ensure_grad() {
      if (grad.size() != value.size()) grad.assign(value.size(), S(0));
    }
  };
  using NodePtr = std::shared_ptr<Node>;

  TensorT() = default;
  explicit TensorT(NodePtr node) : node_(std::move(node)) {}

  static TensorT zeros(std::vector<long> shape, bool requires_grad = false) {
    auto n = std::make_shared<Node>();
    long total = 1;
    for (long d : shape) total *= d;
    n->shape = std::move(shape);
    n->value.assign(size_t(total), S(0));
    n->requires_grad = requires_grad;
    return TensorT(std::move(n));
  }

  static TensorT from_vector(std::vector<long> shape, std::vector<S> data,
                             bool requires_grad = false) {
    long total = 1;
    for (long d : shape) total *= d;
    if (total != long(data.size())) {
      throw Error(ErrorCode::ShapeMismatch, "data length does not match shape");
    }
    auto n = std::make_shared<Node>();
    n->shape = std::move(shape);
    n->value = std::move(data);
    n->requires_grad = requires_grad;
    return TensorT(std::move(n));
  }

  static TensorT scalar(S v) { return from_vector({1}, {v}); }

  static TensorT randn(std::vector<long> shape, S stddev, Rng& rng, bool requires_grad = true) {
    TensorT t = zeros(std::move(shape), requires_grad);
    for (S& v : t.node_->value) v = S(rng.normal(0.0, double(stddev)));
    return t;
  }

  static TensorT full(std::vector<long> shape, S v, bool requires_grad = false) {
    TensorT t = zeros(std::move(shape), requires_grad);
    for (S& x : t.node_->value) x = v;
    return t;
  }

  bool valid() const { return node_ != nullptr; }
  const std::vector<long>& shape() const { return node_->shape; }
  long numel() const { return node_->numel(); }
  long rows() const { return node_->shape.at(0); }
  long cols() const { return node_->shape.at(1); }
  std::vector<S>& data() { return node_->value; }
  const std::vector<S>& data() const { return node_->value; }
  std::vector<S>& grad() {
    node_->ensure_grad();
    return node_->grad;
  }
  bool requires_grad() const { return node_->requires_grad; }
  NodePtr node() const { return node_; }

  S item() const {
    if (node_->numel() != 1) throw Error(ErrorCode::ShapeMismatch, "item() needs one element");
    return node_->value[0];
  }

  void zero_grad() { node_->grad.assign(node_->value.size(), S(0)); }

  /// Reverse pass from a scalar output.
  void backward() {
    if (node_->numel() != 1) {
      throw Error(ErrorCode::ShapeMismatch, "backward() starts from a scalar");
    }
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    topo(node_.get(), seen, order);
    for (Node* n : order) n->ensure_grad();
    node_->grad[0] = S(1);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      Node* n = *it;
      if (n->backprop && n->requires_grad) n->backprop(*n);
    }
  }

 private:
  static void topo(Node* n, std::unordered_set<Node*>& seen, std::vector<Node*>& order) {
    // Iterative DFS; training graphs chain thousands of nodes.
    struct Frame {
      Node* node;
      size_t next_parent;
    };
    std::vector<Frame> stack{{n, 0}};
    seen.insert(n);
    while (!stack.empty()) {
      Frame& f = stack.back();
      if (f.next_parent < f.node->parents.size()) {
        Node* p = f.node->parents[f.next_parent++].get();
        if (seen.insert(p).second) stack.push_back({p, 0});
      } else {
        order.push_back(f.node);
        stack.pop_back();
      }
    }
  }

  NodePtr node_;
};

namespace detail {

template <class S>
typename TensorT<S>::NodePtr make_node(std::vector<long> shape,
                                       std::vector<typename TensorT<S>::NodePtr> parents) {
  auto n = std::make_shared<typename TensorT<S>::Node>();
  long total = 1;
  for (long d : shape) total *= d;
  n->shape = std::move(shape);
  n->value.assign(size_t(total), S(0));
  for (const auto& p : parents) n->requires_grad = n->requires_grad || p->requires_grad;
  n->parents = std::move(parents);
  return n;
}

inline void check(bool cond, const char* what) {
  if (!cond) throw Error(ErrorCode::ShapeMismatch, what);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise / structural ops
// ---------------------------------------------------------------------------

template <class S>
TensorT<S> add(const TensorT<S>& a, const TensorT<S>& b) {
  detail::check(a.shape() == b.shape(), "add: shapes differ");
  auto n = detail::make_node<S>(a.shape(), {a.node(), b.node()});
  for (long i = 0; i < n->numel(); ++i) n->value[i] = a.data()[i] + b.data()[i];
  n->backprop = [](auto& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    if (pa.requires_grad) {
      pa.ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i) pa.grad[i] += self.grad[i];
    }
    if (pb.requires_grad) {
      pb.ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i) pb.grad[i] += self.grad[i];
    }
  };
  return TensorT<S>(n);
}

template <class S>
TensorT<S> sub(const TensorT<S>& a, const TensorT<S>& b) {
  detail::check(a.shape() == b.shape(), "sub: shapes differ");
  auto n = detail::make_node<S>(a.shape(), {a.node(), b.node()});
  for (long i = 0; i < n->numel(); ++i) n->value[i] = a.data()[i] - b.data()[i];
  n->backprop = [](auto& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    if (pa.requires_grad) {
      pa.ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i) pa.grad[i] += self.grad[i];
    }
    if (pb.requires_grad) {
      pb.ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i) pb.grad[i] -= self.grad[i];
    }
  };
  return TensorT<S>(n);
}

template <class S>
TensorT<S> mul(const TensorT<S>& a, const TensorT<S>& b) {
  detail::check(a.shape() == b.shape(), "mul: shapes differ");
  auto n = detail::make_node<S>(a.shape(), {a.node(), b.node()});
  for (long i = 0; i < n->numel(); ++i) n->value[i] = a.data()[i] * b.data()[i];
  n->backprop = [](auto& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    if (pa.requires_grad) {
      pa.ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i) pa.grad[i] += self.grad[i] * pb.value[i];
    }
    if (pb.requires_grad) {
      pb.ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i) pb.grad[i] += self.grad[i] * pa.value[i];
    }
  };
  return TensorT<S>(n);
}

template <class S>
TensorT<S> scale(const TensorT<S>& a, S k) {
  auto n = detail::make_node<S>(a.shape(), {a.node()});
  for (long i = 0; i < n->numel(); ++i) n->value[i] = a.data()[i] * k;
  n->backprop = [k](auto& self) {
    auto& pa = *self.parents[0];
    if (!pa.requires_grad) return;
    pa.ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i) pa.grad[i] += self.grad[i] * k;
  };
  return TensorT<S>(n);
}

/// Adds a (1 x n) row vector to every row of an (m x n) matrix.
template <class S>
TensorT<S> add_rowvec(const TensorT<S>& a, const TensorT<S>& b) {
  detail::check(a.shape().size() == 2 && b.shape().size() == 2 && b.rows() == 1 &&
                    b.cols() == a.cols(),
                "add_rowvec: need (m x n) + (1 x n)");
  auto n = detail::make_node<S>(a.shape(), {a.node(), b.node()});
  const long m = a.rows(), w = a.cols();
  for (long i = 0; i < m; ++i)
    for (long j = 0; j < w; ++j) n->value[i * w + j] = a.data()[i * w + j] + b.data()[j];
  n->backprop = [m, w](auto& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    if (pa.requires_grad) {
      pa.ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i) pa.grad[i] += self.grad[i];
    }
    if (pb.requires_grad) {
      pb.ensure_grad();
      for (long i = 0; i < m; ++i)
        for (long j = 0; j < w; ++j) pb.grad[j] += self.grad[i * w + j];
    }
  };
  return TensorT<S>(n);
}

// ---------------------------------------------------------------------------
// Matrix products
// ---------------------------------------------------------------------------

template <class S>
TensorT<S> matmul(const TensorT<S>& a, const TensorT<S>& b) {
  detail::check(a.shape().size() == 2 && b.shape().size() == 2 && a.cols() == b.rows(),
                "matmul: inner dimensions differ");
  const long m = a.rows(), k = a.cols(), w = b.cols();
  auto n = detail::make_node<S>({m, w}, {a.node(), b.node()});
  for (long i = 0; i < m; ++i) {
    for (long p = 0; p < k; ++p) {
      const S av = a.data()[i * k + p];
      if (av == S(0)) continue;
      for (long j = 0; j < w; ++j) n->value[i * w + j] += av * b.data()[p * w + j];
    }
  }
  n->backprop = [m, k, w](auto& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    if (pa.requires_grad) {
      pa.ensure_grad();
      // dA = dC * B^T
      for (long i = 0; i < m; ++i)
        for (long p = 0; p < k; ++p) {
          S acc = 0;
          for (long j = 0; j < w; ++j) acc += self.grad[i * w + j] * pb.value[p * w + j];
          pa.grad[i * k + p] += acc;
        }
    }
    if (pb.requires_grad) {
      pb.ensure_grad();
      // dB = A^T * dC
      for (long p = 0; p < k; ++p)
        for (long j = 0; j < w; ++j) {
          S acc = 0;
          for (long i = 0; i < m; ++i) acc += pa.value[i * k + p] * self.grad[i * w + j];
          pb.grad[p * w + j] += acc;
        }
    }
  };
  return TensorT<S>(n);
}

/// C = A * B^T for A (m x k), B (n x k); the score kernel Q K^T.
template <class S>
TensorT<S> matmul_nt(const TensorT<S>& a, const TensorT<S>& b) {
  detail::check(a.shape().size() == 2 && b.shape().size() == 2 && a.cols() == b.cols(),
                "matmul_nt: inner dimensions differ");
  const long m = a.rows(), k = a.cols(), w = b.rows();
  auto n = detail::make_node<S>({m, w}, {a.node(), b.node()});
  for (long i = 0; i < m; ++i)
    for (long j = 0; j < w; ++j) {
      S acc = 0;
      for (long p = 0; p < k; ++p) acc += a.data()[i * k + p] * b.data()[j * k + p];
      n->value[i * w + j] = acc;
    }
  n->backprop = [m, k, w](auto& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    if (pa.requires_grad) {
      pa.ensure_grad();
      for (long i = 0; i < m; ++i)
        for (long p = 0; p < k; ++p) {
          S acc = 0;
          for (long j = 0; j < w; ++j) acc += self.grad[i * w + j] * pb.value[j * k + p];
          pa.grad[i * k + p] += acc;
        }
    }
    if (pb.requires_grad) {
      pb.ensure_grad();
      for (long j = 0; j < w; ++j)
        for (long p = 0; p < k; ++p) {
          S acc = 0;
          for (long i = 0; i < m; ++i) acc += self.grad[i * w + j] * pa.value[i * k + p];
          pb.grad[j * k + p] += acc;
        }
    }
  };
  return TensorT<S>(n);
}

// ---------------------------------------------------------------------------
// Nonlinearities and norms
// ---------------------------------------------------------------------------

template <class S>
TensorT<S> gelu(const TensorT<S>& a) {
  auto n = detail::make_node<S>(a.shape(), {a.node()});
  for (long i = 0; i < n->numel(); ++i) {
    const double x = double(a.data()[i]);
    n->value[i] = S(x * 0.5 * (1.0 + std::erf(x / std::sqrt(2.0))));
  }
  n->backprop = [](auto& self) {
    auto& pa = *self.parents[0];
    if (!pa.requires_grad) return;
    pa.ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i) {
      const double x = double(pa.value[i]);
      const double cdf = 0.5 * (1.0 + std::erf(x / std::sqrt(2.0)));
      const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * 3.14159265358979323846);
      pa.grad[i] += self.grad[i] * S(cdf + x * pdf);
    }
  };
  return TensorT<S>(n);
}

/// Row-wise layer normalization with learnable gain/offset (1 x n each).
template <class S>
TensorT<S> layernorm_rows(const TensorT<S>& a, const TensorT<S>& gamma, const TensorT<S>& beta,
                          double eps = 1e-5) {
  detail::check(a.shape().size() == 2 && gamma.cols() == a.cols() && beta.cols() == a.cols(),
                "layernorm: gain/offset width mismatch");
  const long m = a.rows(), w = a.cols();
  auto n = detail::make_node<S>(a.shape(), {a.node(), gamma.node(), beta.node()});
  std::vector<double> means(m), inv_stds(m);
  for (long i = 0; i < m; ++i) {
    double mean = 0;
    for (long j = 0; j < w; ++j) mean += double(a.data()[i * w + j]);
    mean /= w;
    double var = 0;
    for (long j = 0; j < w; ++j) {
      const double d = double(a.data()[i * w + j]) - mean;
      var += d * d;
    }
    var /= w;
    means[i] = mean;
    inv_stds[i] = 1.0 / std::sqrt(var + eps);
    for (long j = 0; j < w; ++j) {
      const double xhat = (double(a.data()[i * w + j]) - mean) * inv_stds[i];
      n->value[i * w + j] = S(xhat * double(gamma.data()[j]) + double(beta.data()[j]));
    }
  }
  n->backprop = [m, w, means, inv_stds](auto& self) {
    auto& pa = *self.parents[0];
    auto& pg = *self.parents[1];
    auto& pb = *self.parents[2];
    if (pg.requires_grad) pg.ensure_grad();
    if (pb.requires_grad) pb.ensure_grad();
    if (pa.requires_grad) pa.ensure_grad();
    for (long i = 0; i < m; ++i) {
      double sum_dy_g = 0, sum_dy_g_xhat = 0;
      for (long j = 0; j < w; ++j) {
        const double xhat = (double(pa.value[i * w + j]) - means[i]) * inv_stds[i];
        const double dy = double(self.grad[i * w + j]);
        const double g = double(pg.value[j]);
        if (pg.requires_grad) pg.grad[j] += S(dy * xhat);
        if (pb.requires_grad) pb.grad[j] += S(dy);
        sum_dy_g += dy * g;
        sum_dy_g_xhat += dy * g * xhat;
      }
      if (pa.requires_grad) {
        for (long j = 0; j < w; ++j) {
          const double xhat = (double(pa.value[i * w + j]) - means[i]) * inv_stds[i];
          const double dy = double(self.grad[i * w + j]);
          const double g = double(pg.value[j]);
          const double dx =
              inv_stds[i] * (dy * g - sum_dy_g / w - xhat * sum_dy_g_xhat / w);
          pa.grad[i * w + j] += S(dx);
        }
      }
    }
  };
  return TensorT<S>(n);
}

/// Mean over rows: (m x n) -> (1 x n).
template <class S>
TensorT<S> mean_rows(const TensorT<S>& a) {
  detail::check(a.shape().size() == 2, "mean_rows: need a matrix");
  const long m = a.rows(), w = a.cols();
  auto n = detail::make_node<S>({1, w}, {a.node()});
  for (long i = 0; i < m; ++i)
    for (long j = 0; j < w; ++j) n->value[j] += a.data()[i * w + j] / S(m);
  n->backprop = [m, w](auto& self) {
    auto& pa = *self.parents[0];
    if (!pa.requires_grad) return;
    pa.ensure_grad();
    for (long i = 0; i < m; ++i)
      for (long j = 0; j < w; ++j) pa.grad[i * w + j] += self.grad[j] / S(m);
  };
  return TensorT<S>(n);
}

/// Inverted dropout; identity when p == 0 or not training (consumes no draws).
template <class S>
TensorT<S> dropout(const TensorT<S>& a, double p, bool training, Rng& rng) {
  if (!training || p <= 0.0) return a;
  auto n = detail::make_node<S>(a.shape(), {a.node()});
  std::vector<S> mask(size_t(n->numel()));
  const S keep_scale = S(1.0 / (1.0 - p));
  for (long i = 0; i < n->numel(); ++i) {
    mask[size_t(i)] = rng.uniform(0.0, 1.0) < p ? S(0) : keep_scale;
    n->value[i] = a.data()[i] * mask[size_t(i)];
  }
  n->backprop = [mask](auto& self) {
    auto& pa = *self.parents[0];
    if (!pa.requires_grad) return;
    pa.ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i) pa.grad[i] += self.grad[i] * mask[i];
  };
  return TensorT<S>(n);
}

/// Row gather: out[i] = table[ids[i]]; backward scatter-adds.
template <class S>
TensorT<S> embedding_rows(const TensorT<S>& table, std::span<const int> ids) {
  detail::check(table.shape().size() == 2, "embedding: need a matrix table");
  const long v = table.rows(), w = table.cols();
  for (int id : ids) {
    if (id < 0 || id >= v) throw Error(ErrorCode::IndexOutOfRange, "embedding id out of range");
  }
  auto n = detail::make_node<S>({long(ids.size()), w}, {table.node()});
  std::vector<int> idv(ids.begin(), ids.end());
  for (size_t i = 0; i < idv.size(); ++i)
    for (long j = 0; j < w; ++j) n->value[long(i) * w + j] = table.data()[idv[i] * w + j];
  n->backprop = [idv, w](auto& self) {
    auto& pt = *self.parents[0];
    if (!pt.requires_grad) return;
    pt.ensure_grad();
    for (size_t i = 0; i < idv.size(); ++i)
      for (long j = 0; j < w; ++j) pt.grad[idv[i] * w + j] += self.grad[long(i) * w + j];
  };
  return TensorT<S>(n);
}

// ---------------------------------------------------------------------------
// Loss
// ---------------------------------------------------------------------------

/// Mean negative log-likelihood of targets under a row-wise softmax of the
/// logits: -(1/P) sum_i log p(target_i | row_i).
template <class S>
TensorT<S> nll_loss(const TensorT<S>& logits, std::span<const int> targets) {
  detail::check(logits.shape().size() == 2 && long(targets.size()) == logits.rows(),
                "nll_loss: one target per row");
  const long p = logits.rows(), v = logits.cols();
  for (int t : targets) {
    if (t < 0 || t >= v) throw Error(ErrorCode::IndexOutOfRange, "target id out of range");
  }
  auto n = detail::make_node<S>({1}, {logits.node()});
  std::vector<int> tv(targets.begin(), targets.end());
  std::vector<double> probs(size_t(p * v));
  double loss = 0;
  for (long i = 0; i < p; ++i) {
    double mx = -1e300;
    for (long j = 0; j < v; ++j) mx = std::max(mx, double(logits.data()[i * v + j]));
    double sum = 0;
    for (long j = 0; j < v; ++j) {
      probs[size_t(i * v + j)] = std::exp(double(logits.data()[i * v + j]) - mx);
      sum += probs[size_t(i * v + j)];
    }
    for (long j = 0; j < v; ++j) probs[size_t(i * v + j)] /= sum;
    loss -= std::log(probs[size_t(i * v + tv[size_t(i)])]);
  }
  n->value[0] = S(loss / double(p));
  n->backprop = [p, v, tv, probs](auto& self) {
    auto& pl = *self.parents[0];
    if (!pl.requires_grad) return;
    pl.ensure_grad();
    const double d = double(self.grad[0]) / double(p);
    for (long i = 0; i < p; ++i)
      for (long j = 0; j < v; ++j) {
        const double onehot = (j == tv[size_t(i)]) ? 1.0 : 0.0;
        pl.grad[i * v + j] += S(d * (probs[size_t(i * v + j)] - onehot));
      }
  };
  return TensorT<S>(n);
}

}  // namespace eoattn::nn
