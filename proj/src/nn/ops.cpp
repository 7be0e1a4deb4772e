// Copyright 2026 The vocrep Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "vocrep/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "vocrep/error.hpp"
#include "vocrep/kernels.hpp"

namespace vocrep::nn {

namespace {

namespace kp = kernels::parallel;

template <typename T>
std::vector<T>* parent_grad(Node<T>& n, std::size_t i) {
  auto& p = n.parents[i];
  return p->requires_grad ? &p->ensure_grad() : nullptr;
}

template <typename T>
const std::vector<T>& parent_value(Node<T>& n, std::size_t i) {
  return n.parents[i]->value;
}

template <typename T>
void require_rank(const Tensor<T>& x, std::size_t rank, const char* what) {
  if (x.rank() != rank) {
    throw ShapeError(std::string(what) + ": expected rank " + std::to_string(rank) + ", got " +
                     shape_str(x.shape()));
  }
}

template <typename T>
void require_same(const Tensor<T>& a, const Tensor<T>& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + ": shape " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  }
}

std::size_t last_dim(const Shape& s) { return s.empty() ? 1 : s.back(); }

}  // namespace

// ---------------------------------------------------------------------------
// elementwise
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  require_same(a, b, "add");
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
  return make_result<T>(a.shape(), std::move(out), {a, b}, [](Node<T>& n) {
    for (std::size_t p = 0; p < 2; ++p) {
      if (auto* g = parent_grad(n, p)) {
        for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += n.grad[i];
      }
    }
  });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  require_same(a, b, "sub");
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] - b[i];
  return make_result<T>(a.shape(), std::move(out), {a, b}, [](Node<T>& n) {
    if (auto* g = parent_grad(n, 0)) {
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += n.grad[i];
    }
    if (auto* g = parent_grad(n, 1)) {
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] -= n.grad[i];
    }
  });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  require_same(a, b, "mul");
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
  return make_result<T>(a.shape(), std::move(out), {a, b}, [](Node<T>& n) {
    const auto& av = parent_value(n, 0);
    const auto& bv = parent_value(n, 1);
    if (auto* g = parent_grad(n, 0)) {
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += n.grad[i] * bv[i];
    }
    if (auto* g = parent_grad(n, 1)) {
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += n.grad[i] * av[i];
    }
  });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor) {
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * factor;
  return make_result<T>(a.shape(), std::move(out), {a}, [factor](Node<T>& n) {
    auto* g = parent_grad(n, 0);
    for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += n.grad[i] * factor;
  });
}

template <typename T>
Tensor<T> add_row(const Tensor<T>& x, const Tensor<T>& b) {
  require_rank(x, 2, "add_row");
  const std::size_t rows = x.dim(0), cols = x.dim(1);
  if (b.size() != cols) throw ShapeError("add_row: bias size mismatch");
  std::vector<T> out(x.values().begin(), x.values().end());
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] += b[c];
  return make_result<T>(x.shape(), std::move(out), {x, b}, [rows, cols](Node<T>& n) {
    if (auto* g = parent_grad(n, 0)) {
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += n.grad[i];
    }
    if (auto* g = parent_grad(n, 1)) {
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) (*g)[c] += n.grad[r * cols + c];
    }
  });
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape) {
  if (shape_numel(shape) != x.size()) throw ShapeError("reshape: element count mismatch");
  std::vector<T> out(x.values().begin(), x.values().end());
  return make_result<T>(std::move(shape), std::move(out), {x}, [](Node<T>& n) {
    auto* g = parent_grad(n, 0);
    for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += n.grad[i];
  });
}

// ---------------------------------------------------------------------------
// linear algebra
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) throw ShapeError("matmul: inner dimensions differ");
  std::vector<T> out(m * n);
  kp::gemm<T>(false, false, m, n, k, a.values().data(), b.values().data(), out.data(), false);
  return make_result<T>({m, n}, std::move(out), {a, b}, [m, n, k](Node<T>& nd) {
    const auto& av = parent_value(nd, 0);
    const auto& bv = parent_value(nd, 1);
    if (auto* g = parent_grad(nd, 0)) {
      kp::gemm<T>(false, true, m, k, n, nd.grad.data(), bv.data(), g->data(), true);
    }
    if (auto* g = parent_grad(nd, 1)) {
      kp::gemm<T>(true, false, k, n, m, av.data(), nd.grad.data(), g->data(), true);
    }
  });
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& x) {
  require_rank(x, 2, "transpose");
  const std::size_t r = x.dim(0), c = x.dim(1);
  std::vector<T> out(r * c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = x[i * c + j];
  return make_result<T>({c, r}, std::move(out), {x}, [r, c](Node<T>& n) {
    auto* g = parent_grad(n, 0);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) (*g)[i * c + j] += n.grad[j * r + i];
  });
}

template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& w) {
  require_rank(x, 2, "linear");
  require_rank(w, 2, "linear");
  const std::size_t rows = x.dim(0), in = x.dim(1), outd = w.dim(0);
  if (w.dim(1) != in) {
    throw ShapeError("linear: input " + shape_str(x.shape()) + " vs weight " + shape_str(w.shape()));
  }
  std::vector<T> out(rows * outd);
  kp::gemm<T>(false, true, rows, outd, in, x.values().data(), w.values().data(), out.data(), false);
  return make_result<T>({rows, outd}, std::move(out), {x, w}, [rows, in, outd](Node<T>& n) {
    const auto& xv = parent_value(n, 0);
    const auto& wv = parent_value(n, 1);
    if (auto* g = parent_grad(n, 0)) {
      kp::gemm<T>(false, false, rows, in, outd, n.grad.data(), wv.data(), g->data(), true);
    }
    if (auto* g = parent_grad(n, 1)) {
      kp::gemm<T>(true, false, outd, in, rows, n.grad.data(), xv.data(), g->data(), true);
    }
  });
}

template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
  return add_row(linear(x, w), b);
}

// ---------------------------------------------------------------------------
// convolution
// ---------------------------------------------------------------------------

namespace {

template <typename T>
Tensor<T> conv1d_impl(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>* bias,
                      const Conv1dOptions& opt) {
  require_rank(x, 2, "conv1d input");
  require_rank(w, 3, "conv1d weight");
  kernels::Conv1dGeometry g;
  g.in_channels = x.dim(0);
  g.length = x.dim(1);
  g.out_channels = w.dim(0);
  g.kernel = w.dim(2);
  g.stride = opt.stride;
  g.pad_left = opt.pad_left;
  g.pad_right = opt.pad_right;
  g.groups = opt.groups;
  if (g.stride == 0) throw ArgumentError("conv1d: stride must be >= 1");
  if (g.groups == 0 || g.in_channels % g.groups || g.out_channels % g.groups) {
    throw ShapeError("conv1d: channels not divisible by groups");
  }
  if (w.dim(1) != g.in_per_group()) {
    throw ShapeError("conv1d: weight " + shape_str(w.shape()) + " does not match input " +
                     shape_str(x.shape()));
  }
  if (g.padded_length() < g.kernel) {
    throw ShapeError("conv1d: input length " + std::to_string(g.length) +
                     " shorter than kernel " + std::to_string(g.kernel));
  }
  if (bias && bias->size() != g.out_channels) throw ShapeError("conv1d: bias size mismatch");

  const std::size_t lout = g.out_length();
  std::vector<T> out(g.out_channels * lout);
  std::span<const T> bspan = bias ? bias->values() : std::span<const T>();
  kp::conv1d_forward<T>(g, x.values(), w.values(), bspan, out);

  std::vector<Tensor<T>> parents{x, w};
  if (bias) parents.push_back(*bias);
  const bool has_bias = bias != nullptr;
  return make_result<T>({g.out_channels, lout}, std::move(out), std::move(parents),
                        [g, has_bias](Node<T>& n) {
                          const auto& xv = parent_value(n, 0);
                          const auto& wv = parent_value(n, 1);
                          if (auto* gx = parent_grad(n, 0)) {
                            kp::conv1d_backward_input<T>(g, wv, n.grad, *gx);
                          }
                          auto* gw = parent_grad(n, 1);
                          auto* gb = has_bias ? parent_grad(n, 2) : nullptr;
                          if (gw) {
                            kp::conv1d_backward_weight<T>(g, xv, n.grad, *gw,
                                                          gb ? std::span<T>(*gb) : std::span<T>());
                          } else if (gb) {
                            std::vector<T> scratch(wv.size());
                            kp::conv1d_backward_weight<T>(g, xv, n.grad, scratch, *gb);
                          }
                        });
}

}  // namespace

template <typename T>
Tensor<T> conv1d(const Tensor<T>& x, const Tensor<T>& w, const Conv1dOptions& opt) {
  return conv1d_impl<T>(x, w, nullptr, opt);
}

template <typename T>
Tensor<T> conv1d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias,
                 const Conv1dOptions& opt) {
  return conv1d_impl<T>(x, w, &bias, opt);
}

// ---------------------------------------------------------------------------
// normalization and activations
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gain, const Tensor<T>& bias, double eps) {
  const std::size_t d = last_dim(x.shape());
  if (d == 0) throw ShapeError("layer_norm: empty last axis");
  if (gain.size() != d || bias.size() != d) throw ShapeError("layer_norm: affine size mismatch");
  const std::size_t rows = x.size() / d;
  std::vector<T> out(x.size());
  std::vector<T> xhat(x.size());
  std::vector<T> inv_std(rows);
  const auto xv = x.values();
  for (std::size_t r = 0; r < rows; ++r) {
    const T* row = xv.data() + r * d;
    T mu = 0;
    for (std::size_t i = 0; i < d; ++i) mu += row[i];
    mu /= static_cast<T>(d);
    T var = 0;
    for (std::size_t i = 0; i < d; ++i) var += (row[i] - mu) * (row[i] - mu);
    var /= static_cast<T>(d);
    const T is = T(1) / std::sqrt(var + static_cast<T>(eps));
    inv_std[r] = is;
    for (std::size_t i = 0; i < d; ++i) {
      xhat[r * d + i] = (row[i] - mu) * is;
      out[r * d + i] = xhat[r * d + i] * gain[i] + bias[i];
    }
  }
  return make_result<T>(x.shape(), std::move(out), {x, gain, bias},
                        [d, rows, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node<T>& n) {
                          const auto& gv = parent_value(n, 1);
                          if (auto* gx = parent_grad(n, 0)) {
                            std::vector<T> dxh(d);
                            for (std::size_t r = 0; r < rows; ++r) {
                              T mean_d = 0, mean_dx = 0;
                              for (std::size_t i = 0; i < d; ++i) {
                                dxh[i] = n.grad[r * d + i] * gv[i];
                                mean_d += dxh[i];
                                mean_dx += dxh[i] * xhat[r * d + i];
                              }
                              mean_d /= static_cast<T>(d);
                              mean_dx /= static_cast<T>(d);
                              for (std::size_t i = 0; i < d; ++i) {
                                (*gx)[r * d + i] +=
                                    inv_std[r] * (dxh[i] - mean_d - xhat[r * d + i] * mean_dx);
                              }
                            }
                          }
                          if (auto* gg = parent_grad(n, 1)) {
                            for (std::size_t r = 0; r < rows; ++r)
                              for (std::size_t i = 0; i < d; ++i)
                                (*gg)[i] += n.grad[r * d + i] * xhat[r * d + i];
                          }
                          if (auto* gb = parent_grad(n, 2)) {
                            for (std::size_t r = 0; r < rows; ++r)
                              for (std::size_t i = 0; i < d; ++i) (*gb)[i] += n.grad[r * d + i];
                          }
                        });
}

template <typename T>
Tensor<T> gelu(const Tensor<T>& x) {
  std::vector<T> out(x.size());
  const auto xv = x.values();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const T v = xv[i];
    out[i] = v * T(0.5) * (T(1) + std::erf(v / std::numbers::sqrt2_v<T>));
  }
  return make_result<T>(x.shape(), std::move(out), {x}, [](Node<T>& n) {
    const auto& xs = parent_value(n, 0);
    auto* g = parent_grad(n, 0);
    const T inv_sqrt_2pi = T(1) / std::sqrt(T(2) * std::numbers::pi_v<T>);
    for (std::size_t i = 0; i < g->size(); ++i) {
      const T v = xs[i];
      const T cdf = T(0.5) * (T(1) + std::erf(v / std::numbers::sqrt2_v<T>));
      const T pdf = inv_sqrt_2pi * std::exp(T(-0.5) * v * v);
      (*g)[i] += n.grad[i] * (cdf + v * pdf);
    }
  });
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] > T(0) ? x[i] : T(0);
  return make_result<T>(x.shape(), std::move(out), {x}, [](Node<T>& n) {
    const auto& xs = parent_value(n, 0);
    auto* g = parent_grad(n, 0);
    for (std::size_t i = 0; i < g->size(); ++i)
      if (xs[i] > T(0)) (*g)[i] += n.grad[i];
  });
}

namespace {

template <typename T>
void softmax_row(const T* in, T* out, std::size_t n) {
  T mx = in[0];
  for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, in[i]);
  T s = 0;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = std::exp(in[i] - mx);
    s += out[i];
  }
  for (std::size_t i = 0; i < n; ++i) out[i] /= s;
}

// dx += y * (dy - sum(dy * y)) per row
template <typename T>
void softmax_row_backward(const T* y, const T* dy, T* dx, std::size_t n, T factor = T(1)) {
  T dot = 0;
  for (std::size_t i = 0; i < n; ++i) dot += dy[i] * y[i];
  for (std::size_t i = 0; i < n; ++i) dx[i] += factor * y[i] * (dy[i] - dot);
}

}  // namespace

template <typename T>
Tensor<T> softmax(const Tensor<T>& x) {
  const std::size_t n = last_dim(x.shape());
  if (n == 0) throw ShapeError("softmax: empty last axis");
  const std::size_t rows = x.size() / n;
  std::vector<T> out(x.size());
  for (std::size_t r = 0; r < rows; ++r) softmax_row(x.values().data() + r * n, out.data() + r * n, n);
  return make_result<T>(x.shape(), out, {x}, [n, rows, y = out](Node<T>& nd) {
    auto* g = parent_grad(nd, 0);
    for (std::size_t r = 0; r < rows; ++r)
      softmax_row_backward(y.data() + r * n, nd.grad.data() + r * n, g->data() + r * n, n);
  });
}

template <typename T>
Tensor<T> cross_entropy(const Tensor<T>& logits, const std::vector<std::size_t>& targets) {
  const std::size_t n = last_dim(logits.shape());
  const std::size_t rows = logits.size() / std::max<std::size_t>(n, 1);
  if (n == 0 || rows != targets.size()) throw ShapeError("cross_entropy: logits/targets mismatch");
  std::vector<T> probs(logits.size());
  T loss = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (targets[r] >= n) {
      throw ArgumentError("cross_entropy: target " + std::to_string(targets[r]) +
                          " out of range for " + std::to_string(n) + " classes");
    }
    const T* row = logits.values().data() + r * n;
    T mx = row[0];
    for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, row[i]);
    T s = 0;
    for (std::size_t i = 0; i < n; ++i) s += std::exp(row[i] - mx);
    const T lse = mx + std::log(s);
    loss += lse - row[targets[r]];
    for (std::size_t i = 0; i < n; ++i) probs[r * n + i] = std::exp(row[i] - lse);
  }
  loss /= static_cast<T>(rows);
  return make_result<T>({1}, {loss}, {logits},
                        [n, rows, targets, probs = std::move(probs)](Node<T>& nd) {
                          auto* g = parent_grad(nd, 0);
                          const T f = nd.grad[0] / static_cast<T>(rows);
                          for (std::size_t r = 0; r < rows; ++r) {
                            for (std::size_t i = 0; i < n; ++i) {
                              const T onehot = i == targets[r] ? T(1) : T(0);
                              (*g)[r * n + i] += f * (probs[r * n + i] - onehot);
                            }
                          }
                        });
}

template <typename T>
Tensor<T> cross_entropy(const Tensor<T>& logits, std::size_t target) {
  return cross_entropy(logits, std::vector<std::size_t>{target});
}

// ---------------------------------------------------------------------------
// attention
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v,
                    std::size_t num_heads, std::vector<T>* weights) {
  require_rank(q, 2, "attention");
  require_same(q, k, "attention q/k");
  require_same(q, v, "attention q/v");
  const std::size_t t = q.dim(0), d = q.dim(1);
  if (num_heads == 0 || d % num_heads != 0) {
    throw ConfigError("attention: model dim " + std::to_string(d) + " not divisible by " +
                      std::to_string(num_heads) + " heads");
  }
  const std::size_t dh = d / num_heads;
  const T inv_scale = T(1) / std::sqrt(static_cast<T>(dh));

  auto head_slice = [t, d, dh](std::span<const T> src, std::size_t h) {
    std::vector<T> out(t * dh);
    for (std::size_t i = 0; i < t; ++i)
      for (std::size_t j = 0; j < dh; ++j) out[i * dh + j] = src[i * d + h * dh + j];
    return out;
  };

  std::vector<T> probs(num_heads * t * t);
  std::vector<T> out(t * d);
  std::vector<T> oh(t * dh);
  for (std::size_t h = 0; h < num_heads; ++h) {
    const auto qh = head_slice(q.values(), h);
    const auto kh = head_slice(k.values(), h);
    const auto vh = head_slice(v.values(), h);
    T* a = probs.data() + h * t * t;
    kp::gemm<T>(false, true, t, t, dh, qh.data(), kh.data(), a, false);
    for (std::size_t i = 0; i < t * t; ++i) a[i] *= inv_scale;
    for (std::size_t i = 0; i < t; ++i) softmax_row(a + i * t, a + i * t, t);
    kp::gemm<T>(false, false, t, dh, t, a, vh.data(), oh.data(), false);
    for (std::size_t i = 0; i < t; ++i)
      for (std::size_t j = 0; j < dh; ++j) out[i * d + h * dh + j] = oh[i * dh + j];
  }
  if (weights) *weights = probs;

  return make_result<T>(
      {t, d}, std::move(out), {q, k, v},
      [t, d, dh, num_heads, inv_scale, head_slice, probs = std::move(probs)](Node<T>& n) {
        auto* gq = parent_grad(n, 0);
        auto* gk = parent_grad(n, 1);
        auto* gv = parent_grad(n, 2);
        std::vector<T> doh, dvh(t * dh), da(t * t), dqh(t * dh), dkh(t * dh);
        for (std::size_t h = 0; h < num_heads; ++h) {
          const T* a = probs.data() + h * t * t;
          doh = head_slice(n.grad, h);
          const auto qh = head_slice(parent_value(n, 0), h);
          const auto kh = head_slice(parent_value(n, 1), h);
          const auto vh = head_slice(parent_value(n, 2), h);
          // dV = A^T dO ; dA = dO V^T ; dS = softmax'(dA) ; dQ = dS K ; dK = dS^T Q
          kp::gemm<T>(true, false, t, dh, t, a, doh.data(), dvh.data(), false);
          kp::gemm<T>(false, true, t, t, dh, doh.data(), vh.data(), da.data(), false);
          std::vector<T> ds(t * t, T(0));
          for (std::size_t i = 0; i < t; ++i)
            softmax_row_backward(a + i * t, da.data() + i * t, ds.data() + i * t, t, inv_scale);
          kp::gemm<T>(false, false, t, dh, t, ds.data(), kh.data(), dqh.data(), false);
          kp::gemm<T>(true, false, t, dh, t, ds.data(), qh.data(), dkh.data(), false);
          for (std::size_t i = 0; i < t; ++i) {
            for (std::size_t j = 0; j < dh; ++j) {
              const std::size_t idx = i * d + h * dh + j;
              if (gq) (*gq)[idx] += dqh[i * dh + j];
              if (gk) (*gk)[idx] += dkh[i * dh + j];
              if (gv) (*gv)[idx] += dvh[i * dh + j];
            }
          }
        }
      });
}

// ---------------------------------------------------------------------------
// quantizer building blocks
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> gumbel_softmax(const Tensor<T>& logits, double temperature, bool hard,
                         const std::vector<T>& noise) {
  if (!(temperature > 0.0)) throw ArgumentError("gumbel_softmax: temperature must be > 0");
  if (noise.size() != logits.size()) throw ShapeError("gumbel_softmax: noise size mismatch");
  const std::size_t n = last_dim(logits.shape());
  const std::size_t rows = logits.size() / n;
  const T inv_tau = static_cast<T>(1.0 / temperature);
  std::vector<T> soft(logits.size());
  std::vector<T> scaled(n);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t i = 0; i < n; ++i) scaled[i] = (logits[r * n + i] + noise[r * n + i]) * inv_tau;
    softmax_row(scaled.data(), soft.data() + r * n, n);
  }
  std::vector<T> out = soft;
  if (hard) {
    for (std::size_t r = 0; r < rows; ++r) {
      T* row = out.data() + r * n;
      const std::size_t arg = static_cast<std::size_t>(std::max_element(row, row + n) - row);
      std::fill(row, row + n, T(0));
      row[arg] = T(1);
    }
  }
  return make_result<T>(logits.shape(), std::move(out), {logits},
                        [n, rows, inv_tau, soft = std::move(soft)](Node<T>& nd) {
                          auto* g = parent_grad(nd, 0);
                          for (std::size_t r = 0; r < rows; ++r)
                            softmax_row_backward(soft.data() + r * n, nd.grad.data() + r * n,
                                                 g->data() + r * n, n, inv_tau);
                        });
}

template <typename T>
Tensor<T> cosine_similarity(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.size() != b.size()) throw ShapeError("cosine_similarity: size mismatch");
  auto m = cosine_matrix(reshape(a, {1, a.size()}), reshape(b, {1, b.size()}));
  return reshape(m, {1});
}

template <typename T>
Tensor<T> cosine_matrix(const Tensor<T>& a, const Tensor<T>& b) {
  require_rank(a, 2, "cosine_matrix");
  require_rank(b, 2, "cosine_matrix");
  const std::size_t m = a.dim(0), nn = b.dim(0), d = a.dim(1);
  if (b.dim(1) != d) throw ShapeError("cosine_matrix: dimension mismatch");
  auto norms = [d](std::span<const T> x, std::size_t rows) {
    std::vector<T> out(rows);
    for (std::size_t r = 0; r < rows; ++r) {
      T s = 0;
      for (std::size_t i = 0; i < d; ++i) s += x[r * d + i] * x[r * d + i];
      out[r] = std::sqrt(s);
    }
    return out;
  };
  std::vector<T> na = norms(a.values(), m), nb = norms(b.values(), nn);
  std::vector<T> dots(m * nn);
  kp::gemm<T>(false, true, m, nn, d, a.values().data(), b.values().data(), dots.data(), false);
  std::vector<T> out(m * nn, T(0));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < nn; ++j)
      if (na[i] > T(0) && nb[j] > T(0)) out[i * nn + j] = dots[i * nn + j] / (na[i] * nb[j]);
  return make_result<T>(
      {m, nn}, out, {a, b},
      [m, nn, d, na = std::move(na), nb = std::move(nb), cos = out](Node<T>& node) {
        const auto& av = parent_value(node, 0);
        const auto& bv = parent_value(node, 1);
        auto* ga = parent_grad(node, 0);
        auto* gb = parent_grad(node, 1);
        // d cos / da = b / (|a||b|) - cos * a / |a|^2
        for (std::size_t i = 0; i < m; ++i) {
          if (na[i] == T(0)) continue;
          for (std::size_t j = 0; j < nn; ++j) {
            if (nb[j] == T(0)) continue;
            const T g = node.grad[i * nn + j];
            if (g == T(0)) continue;
            const T c = cos[i * nn + j];
            const T inv_ab = T(1) / (na[i] * nb[j]);
            for (std::size_t q = 0; q < d; ++q) {
              const T ai = av[i * d + q], bj = bv[j * d + q];
              if (ga) (*ga)[i * d + q] += g * (bj * inv_ab - c * ai / (na[i] * na[i]));
              if (gb) (*gb)[j * d + q] += g * (ai * inv_ab - c * bj / (nb[j] * nb[j]));
            }
          }
        }
      });
}

// ---------------------------------------------------------------------------
// indexing
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> gather_columns(const Tensor<T>& x, const std::vector<std::size_t>& idx, std::size_t width) {
  require_rank(x, 2, "gather_columns");
  const std::size_t rows = x.dim(0), cols = x.dim(1);
  if (idx.size() != rows * width) throw ShapeError("gather_columns: index count mismatch");
  std::vector<T> out(rows * width);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < width; ++j) {
      const std::size_t c = idx[r * width + j];
      if (c >= cols) throw ArgumentError("gather_columns: column index out of range");
      out[r * width + j] = x[r * cols + c];
    }
  }
  return make_result<T>({rows, width}, std::move(out), {x}, [rows, cols, width, idx](Node<T>& n) {
    auto* g = parent_grad(n, 0);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t j = 0; j < width; ++j) (*g)[r * cols + idx[r * width + j]] += n.grad[r * width + j];
  });
}

template <typename T>
Tensor<T> select_rows(const Tensor<T>& x, const std::vector<std::size_t>& rows) {
  require_rank(x, 2, "select_rows");
  const std::size_t d = x.dim(1);
  std::vector<T> out(rows.size() * d);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] >= x.dim(0)) throw ArgumentError("select_rows: row index out of range");
    std::copy_n(x.values().data() + rows[r] * d, d, out.data() + r * d);
  }
  return make_result<T>({rows.size(), d}, std::move(out), {x}, [d, rows](Node<T>& n) {
    auto* g = parent_grad(n, 0);
    for (std::size_t r = 0; r < rows.size(); ++r)
      for (std::size_t i = 0; i < d; ++i) (*g)[rows[r] * d + i] += n.grad[r * d + i];
  });
}

template <typename T>
Tensor<T> mask_rows(const Tensor<T>& x, const std::vector<std::uint8_t>& mask,
                    const Tensor<T>& replacement) {
  require_rank(x, 2, "mask_rows");
  const std::size_t rows = x.dim(0), d = x.dim(1);
  if (mask.size() != rows || replacement.size() != d) throw ShapeError("mask_rows: shape mismatch");
  std::vector<T> out(x.values().begin(), x.values().end());
  for (std::size_t r = 0; r < rows; ++r)
    if (mask[r]) std::copy_n(replacement.values().data(), d, out.data() + r * d);
  return make_result<T>(x.shape(), std::move(out), {x, replacement}, [rows, d, mask](Node<T>& n) {
    auto* gx = parent_grad(n, 0);
    auto* ge = parent_grad(n, 1);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t i = 0; i < d; ++i) {
        if (mask[r]) {
          if (ge) (*ge)[i] += n.grad[r * d + i];
        } else if (gx) {
          (*gx)[r * d + i] += n.grad[r * d + i];
        }
      }
    }
  });
}

template <typename T>
Tensor<T> concat_rows(const std::vector<Tensor<T>>& parts) {
  if (parts.empty()) throw ArgumentError("concat_rows: nothing to concatenate");
  const std::size_t d = parts[0].dim(1);
  std::size_t rows = 0;
  for (const auto& p : parts) {
    require_rank(p, 2, "concat_rows");
    if (p.dim(1) != d) throw ShapeError("concat_rows: column mismatch");
    rows += p.dim(0);
  }
  std::vector<T> out;
  out.reserve(rows * d);
  for (const auto& p : parts) out.insert(out.end(), p.values().begin(), p.values().end());
  return make_result<T>({rows, d}, std::move(out), parts, [](Node<T>& n) {
    std::size_t offset = 0;
    for (std::size_t p = 0; p < n.parents.size(); ++p) {
      const std::size_t len = n.parents[p]->value.size();
      if (auto* g = parent_grad(n, p)) {
        for (std::size_t i = 0; i < len; ++i) (*g)[i] += n.grad[offset + i];
      }
      offset += len;
    }
  });
}

template <typename T>
Tensor<T> concat_cols(const std::vector<Tensor<T>>& parts) {
  if (parts.empty()) throw ArgumentError("concat_cols: nothing to concatenate");
  const std::size_t rows = parts[0].dim(0);
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const auto& p : parts) {
    require_rank(p, 2, "concat_cols");
    if (p.dim(0) != rows) throw ShapeError("concat_cols: row mismatch");
    widths.push_back(p.dim(1));
    total += p.dim(1);
  }
  std::vector<T> out(rows * total);
  std::size_t c0 = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    for (std::size_t r = 0; r < rows; ++r)
      std::copy_n(parts[p].values().data() + r * widths[p], widths[p], out.data() + r * total + c0);
    c0 += widths[p];
  }
  return make_result<T>({rows, total}, std::move(out), parts, [rows, total, widths](Node<T>& n) {
    std::size_t c0 = 0;
    for (std::size_t p = 0; p < widths.size(); ++p) {
      if (auto* g = parent_grad(n, p)) {
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t i = 0; i < widths[p]; ++i) (*g)[r * widths[p] + i] += n.grad[r * total + c0 + i];
      }
      c0 += widths[p];
    }
  });
}

template <typename T>
Tensor<T> slice_cols(const Tensor<T>& x, std::size_t start, std::size_t len) {
  require_rank(x, 2, "slice_cols");
  const std::size_t rows = x.dim(0), cols = x.dim(1);
  if (start + len > cols) throw ShapeError("slice_cols: range out of bounds");
  std::vector<T> out(rows * len);
  for (std::size_t r = 0; r < rows; ++r)
    std::copy_n(x.values().data() + r * cols + start, len, out.data() + r * len);
  return make_result<T>({rows, len}, std::move(out), {x}, [rows, cols, start, len](Node<T>& n) {
    auto* g = parent_grad(n, 0);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t i = 0; i < len; ++i) (*g)[r * cols + start + i] += n.grad[r * len + i];
  });
}

// ---------------------------------------------------------------------------
// reductions
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> mean_rows(const Tensor<T>& x) {
  require_rank(x, 2, "mean_rows");
  const std::size_t rows = x.dim(0), d = x.dim(1);
  if (rows == 0) throw ShapeError("mean_rows: no rows");
  std::vector<T> out(d, T(0));
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t i = 0; i < d; ++i) out[i] += x[r * d + i];
  for (auto& v : out) v /= static_cast<T>(rows);
  return make_result<T>({d}, std::move(out), {x}, [rows, d](Node<T>& n) {
    auto* g = parent_grad(n, 0);
    const T f = T(1) / static_cast<T>(rows);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t i = 0; i < d; ++i) (*g)[r * d + i] += n.grad[i] * f;
  });
}

template <typename T>
Tensor<T> max_rows(const Tensor<T>& x) {
  require_rank(x, 2, "max_rows");
  const std::size_t rows = x.dim(0), d = x.dim(1);
  if (rows == 0) throw ShapeError("max_rows: no rows");
  std::vector<T> out(d);
  std::vector<std::size_t> arg(d, 0);
  for (std::size_t i = 0; i < d; ++i) {
    out[i] = x[i];
    for (std::size_t r = 1; r < rows; ++r) {
      if (x[r * d + i] > out[i]) {
        out[i] = x[r * d + i];
        arg[i] = r;
      }
    }
  }
  return make_result<T>({d}, std::move(out), {x}, [d, arg = std::move(arg)](Node<T>& n) {
    auto* g = parent_grad(n, 0);
    for (std::size_t i = 0; i < d; ++i) (*g)[arg[i] * d + i] += n.grad[i];
  });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
  T s = 0;
  for (T v : x.values()) s += v;
  return make_result<T>({1}, {s}, {x}, [](Node<T>& n) {
    auto* g = parent_grad(n, 0);
    for (auto& v : *g) v += n.grad[0];
  });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& x) {
  return scale(sum(x), T(1) / static_cast<T>(x.size()));
}

template <typename T>
Tensor<T> dropout(const Tensor<T>& x, double p, Rng& rng) {
  if (p <= 0.0) return x;
  if (p >= 1.0) throw ArgumentError("dropout: probability must be < 1");
  const T keep_scale = static_cast<T>(1.0 / (1.0 - p));
  std::vector<T> m(x.size());
  for (auto& v : m) v = rng.uniform() >= p ? keep_scale : T(0);
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * m[i];
  return make_result<T>(x.shape(), std::move(out), {x}, [m = std::move(m)](Node<T>& n) {
    auto* g = parent_grad(n, 0);
    for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += n.grad[i] * m[i];
  });
}

template <typename T>
Tensor<T> perplexity(const Tensor<T>& p) {
  T h = 0;
  for (T v : p.values())
    if (v > T(0)) h -= v * std::log(v);
  const T perp = std::exp(h);
  return make_result<T>({1}, {perp}, {p}, [perp](Node<T>& n) {
    const auto& pv = parent_value(n, 0);
    auto* g = parent_grad(n, 0);
    for (std::size_t i = 0; i < g->size(); ++i) {
      const T v = std::max(pv[i], static_cast<T>(1e-12));
      (*g)[i] += n.grad[0] * perp * (-std::log(v) - T(1));
    }
  });
}

// ---------------------------------------------------------------------------

#define VOCREP_INSTANTIATE_OPS(T)                                                                  \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                     \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                                     \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                                     \
  template Tensor<T> scale(const Tensor<T>&, T);                                                  \
  template Tensor<T> add_row(const Tensor<T>&, const Tensor<T>&);                                 \
  template Tensor<T> reshape(const Tensor<T>&, Shape);                                            \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);                                  \
  template Tensor<T> transpose(const Tensor<T>&);                                                 \
  template Tensor<T> linear(const Tensor<T>&, const Tensor<T>&);                                  \
  template Tensor<T> linear(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);                \
  template Tensor<T> conv1d(const Tensor<T>&, const Tensor<T>&, const Conv1dOptions&);            \
  template Tensor<T> conv1d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,                 \
                            const Conv1dOptions&);                                                \
  template Tensor<T> layer_norm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, double);    \
  template Tensor<T> gelu(const Tensor<T>&);                                                      \
  template Tensor<T> relu(const Tensor<T>&);                                                      \
  template Tensor<T> softmax(const Tensor<T>&);                                                   \
  template Tensor<T> cross_entropy(const Tensor<T>&, const std::vector<std::size_t>&);            \
  template Tensor<T> cross_entropy(const Tensor<T>&, std::size_t);                                \
  template Tensor<T> attention(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, std::size_t, \
                               std::vector<T>*);                                                  \
  template Tensor<T> gumbel_softmax(const Tensor<T>&, double, bool, const std::vector<T>&);       \
  template Tensor<T> cosine_similarity(const Tensor<T>&, const Tensor<T>&);                       \
  template Tensor<T> cosine_matrix(const Tensor<T>&, const Tensor<T>&);                           \
  template Tensor<T> gather_columns(const Tensor<T>&, const std::vector<std::size_t>&,            \
                                    std::size_t);                                                 \
  template Tensor<T> select_rows(const Tensor<T>&, const std::vector<std::size_t>&);              \
  template Tensor<T> mask_rows(const Tensor<T>&, const std::vector<std::uint8_t>&,                \
                               const Tensor<T>&);                                                 \
  template Tensor<T> concat_rows(const std::vector<Tensor<T>>&);                                  \
  template Tensor<T> concat_cols(const std::vector<Tensor<T>>&);                                  \
  template Tensor<T> slice_cols(const Tensor<T>&, std::size_t, std::size_t);                      \
  template Tensor<T> mean_rows(const Tensor<T>&);                                                 \
  template Tensor<T> max_rows(const Tensor<T>&);                                                  \
  template Tensor<T> sum(const Tensor<T>&);                                                       \
  template Tensor<T> mean(const Tensor<T>&);                                                      \
  template Tensor<T> dropout(const Tensor<T>&, double, Rng&);                                     \
  template Tensor<T> perplexity(const Tensor<T>&);

VOCREP_INSTANTIATE_OPS(float)
VOCREP_INSTANTIATE_OPS(double)

#undef VOCREP_INSTANTIATE_OPS

}  // namespace vocrep::nn
