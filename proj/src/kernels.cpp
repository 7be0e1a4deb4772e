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

#include "vocrep/kernels.hpp"

#include <omp.h>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <vector>

namespace vocrep::kernels {

namespace {

using std::size_t;
using Index = std::ptrdiff_t;

template <typename T>
T a_at(bool trans, const T* a, size_t m, size_t k, size_t i, size_t p) {
  return trans ? a[p * m + i] : a[i * k + p];
}

template <typename T>
T b_at(bool trans, const T* b, size_t n, size_t k, size_t p, size_t j) {
  return trans ? b[j * k + p] : b[p * n + j];
}

double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

double kaiser(double u, double beta) {
  if (u <= -1.0 || u >= 1.0) return 0.0;
  return std::cyl_bessel_i(0.0, beta * std::sqrt(1.0 - u * u)) / std::cyl_bessel_i(0.0, beta);
}

struct ResampleFilter {
  double cutoff;
  double half_width;  // in input samples
  double tap(double tau, double beta) const {
    return cutoff * sinc(cutoff * tau) * kaiser(tau / half_width, beta);
  }
};

ResampleFilter make_filter(double ratio) {
  const double cutoff = std::min(1.0, ratio);
  return {cutoff, kResampleHalfTaps / cutoff};
}

}  // namespace

void set_num_threads(int n) {
  if (n > 0) omp_set_num_threads(n);
}

int num_threads() { return omp_get_max_threads(); }

// ---------------------------------------------------------------------------
// serial reference
// ---------------------------------------------------------------------------
namespace serial {

template <typename T>
void conv1d_forward(const Conv1dGeometry& g, std::span<const T> x, std::span<const T> w,
                    std::span<const T> bias, std::span<T> y) {
  const size_t lout = g.out_length();
  const size_t ipg = g.in_per_group();
  const size_t opg = g.out_per_group();
  for (size_t co = 0; co < g.out_channels; ++co) {
    const size_t ci0 = (co / opg) * ipg;
    for (size_t t = 0; t < lout; ++t) {
      T acc = bias.empty() ? T(0) : bias[co];
      for (size_t ci = 0; ci < ipg; ++ci) {
        for (size_t k = 0; k < g.kernel; ++k) {
          const Index p = static_cast<Index>(t * g.stride + k) - static_cast<Index>(g.pad_left);
          if (p < 0 || p >= static_cast<Index>(g.length)) continue;
          acc += w[(co * ipg + ci) * g.kernel + k] * x[(ci0 + ci) * g.length + p];
        }
      }
      y[co * lout + t] = acc;
    }
  }
}

template <typename T>
void conv1d_backward_input(const Conv1dGeometry& g, std::span<const T> w, std::span<const T> dy,
                           std::span<T> dx) {
  const size_t lout = g.out_length();
  const size_t ipg = g.in_per_group();
  const size_t opg = g.out_per_group();
  for (size_t co = 0; co < g.out_channels; ++co) {
    const size_t ci0 = (co / opg) * ipg;
    for (size_t t = 0; t < lout; ++t) {
      const T d = dy[co * lout + t];
      for (size_t ci = 0; ci < ipg; ++ci) {
        for (size_t k = 0; k < g.kernel; ++k) {
          const Index p = static_cast<Index>(t * g.stride + k) - static_cast<Index>(g.pad_left);
          if (p < 0 || p >= static_cast<Index>(g.length)) continue;
          dx[(ci0 + ci) * g.length + p] += w[(co * ipg + ci) * g.kernel + k] * d;
        }
      }
    }
  }
}

template <typename T>
void conv1d_backward_weight(const Conv1dGeometry& g, std::span<const T> x, std::span<const T> dy,
                            std::span<T> dw, std::span<T> dbias) {
  const size_t lout = g.out_length();
  const size_t ipg = g.in_per_group();
  const size_t opg = g.out_per_group();
  for (size_t co = 0; co < g.out_channels; ++co) {
    const size_t ci0 = (co / opg) * ipg;
    for (size_t ci = 0; ci < ipg; ++ci) {
      for (size_t k = 0; k < g.kernel; ++k) {
        T acc = 0;
        for (size_t t = 0; t < lout; ++t) {
          const Index p = static_cast<Index>(t * g.stride + k) - static_cast<Index>(g.pad_left);
          if (p < 0 || p >= static_cast<Index>(g.length)) continue;
          acc += dy[co * lout + t] * x[(ci0 + ci) * g.length + p];
        }
        dw[(co * ipg + ci) * g.kernel + k] += acc;
      }
    }
    if (!dbias.empty()) {
      T acc = 0;
      for (size_t t = 0; t < lout; ++t) acc += dy[co * lout + t];
      dbias[co] += acc;
    }
  }
}

template <typename T>
void gemm(bool trans_a, bool trans_b, size_t m, size_t n, size_t k, const T* a, const T* b, T* c,
          bool accumulate) {
  for (size_t i = 0; i < m; ++i) {
    for (size_t j = 0; j < n; ++j) {
      T acc = 0;
      for (size_t p = 0; p < k; ++p) {
        acc += a_at(trans_a, a, m, k, i, p) * b_at(trans_b, b, n, k, p, j);
      }
      c[i * n + j] = accumulate ? c[i * n + j] + acc : acc;
    }
  }
}

void resample(std::span<const float> in, int source_hz, int target_hz, double beta,
              std::span<float> out) {
  const ResampleFilter f = make_filter(static_cast<double>(target_hz) / source_hz);
  const Index len = static_cast<Index>(in.size());
  for (size_t n = 0; n < out.size(); ++n) {
    const double t = static_cast<double>(n) * source_hz / target_hz;
    const auto lo = static_cast<Index>(std::ceil(t - f.half_width));
    const auto hi = static_cast<Index>(std::floor(t + f.half_width));
    double acc = 0.0;
    for (Index j = std::max<Index>(lo, 0); j <= std::min(hi, len - 1); ++j) {
      acc += static_cast<double>(in[j]) * f.tap(t - static_cast<double>(j), beta);
    }
    out[n] = static_cast<float>(acc);
  }
}

template <typename T>
void pairwise_sq_distances(std::span<const T> x, size_t n, size_t d, std::span<T> out) {
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < n; ++j) {
      T acc = 0;
      for (size_t q = 0; q < d; ++q) {
        const T diff = x[i * d + q] - x[j * d + q];
        acc += diff * diff;
      }
      out[i * n + j] = acc;
    }
  }
}

double tsne_gradient(std::span<const double> y, std::span<const double> p, size_t n,
                     double exaggeration, std::span<double> grad) {
  std::vector<double> num(n * n, 0.0);
  double z = 0.0;
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double dx = y[2 * i] - y[2 * j];
      const double dy = y[2 * i + 1] - y[2 * j + 1];
      num[i * n + j] = 1.0 / (1.0 + dx * dx + dy * dy);
      z += num[i * n + j];
    }
  }
  for (size_t i = 0; i < n; ++i) {
    double gx = 0.0, gy = 0.0;
    for (size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double w = (exaggeration * p[i * n + j] - num[i * n + j] / z) * num[i * n + j];
      gx += w * (y[2 * i] - y[2 * j]);
      gy += w * (y[2 * i + 1] - y[2 * j + 1]);
    }
    grad[2 * i] = 4.0 * gx;
    grad[2 * i + 1] = 4.0 * gy;
  }
  return z;
}

}  // namespace serial

// ---------------------------------------------------------------------------
// OpenMP
// ---------------------------------------------------------------------------
namespace parallel {

template <typename T>
void conv1d_forward(const Conv1dGeometry& g, std::span<const T> x, std::span<const T> w,
                    std::span<const T> bias, std::span<T> y) {
  const Index lout = static_cast<Index>(g.out_length());
  const size_t ipg = g.in_per_group();
  const size_t opg = g.out_per_group();
  const Index cout = static_cast<Index>(g.out_channels);
  const Index len = static_cast<Index>(g.length);
  const Index pad = static_cast<Index>(g.pad_left);
#pragma omp parallel for collapse(2) schedule(static)
  for (Index co = 0; co < cout; ++co) {
    for (Index t = 0; t < lout; ++t) {
      const size_t ci0 = (static_cast<size_t>(co) / opg) * ipg;
      T acc = bias.empty() ? T(0) : bias[co];
      const Index start = t * static_cast<Index>(g.stride) - pad;
      for (size_t ci = 0; ci < ipg; ++ci) {
        const T* wrow = w.data() + (co * ipg + ci) * g.kernel;
        const T* xrow = x.data() + (ci0 + ci) * g.length;
        for (size_t k = 0; k < g.kernel; ++k) {
          const Index p = start + static_cast<Index>(k);
          if (p < 0 || p >= len) continue;
          acc += wrow[k] * xrow[p];
        }
      }
      y[co * lout + t] = acc;
    }
  }
}

template <typename T>
void conv1d_backward_input(const Conv1dGeometry& g, std::span<const T> w, std::span<const T> dy,
                           std::span<T> dx) {
  const Index lout = static_cast<Index>(g.out_length());
  const size_t ipg = g.in_per_group();
  const size_t opg = g.out_per_group();
  const Index cin = static_cast<Index>(g.in_channels);
  const Index len = static_cast<Index>(g.length);
  const Index stride = static_cast<Index>(g.stride);
  // Gather form: each input element collects from the outputs that read it.
#pragma omp parallel for collapse(2) schedule(static)
  for (Index c = 0; c < cin; ++c) {
    for (Index p = 0; p < len; ++p) {
      const size_t grp = static_cast<size_t>(c) / ipg;
      const size_t ci = static_cast<size_t>(c) % ipg;
      const Index pp = p + static_cast<Index>(g.pad_left);
      T acc = 0;
      for (size_t co = grp * opg; co < (grp + 1) * opg; ++co) {
        for (size_t k = 0; k < g.kernel; ++k) {
          const Index off = pp - static_cast<Index>(k);
          if (off < 0 || off % stride != 0) continue;
          const Index t = off / stride;
          if (t >= lout) continue;
          acc += w[(co * ipg + ci) * g.kernel + k] * dy[co * lout + t];
        }
      }
      dx[c * len + p] += acc;
    }
  }
}

template <typename T>
void conv1d_backward_weight(const Conv1dGeometry& g, std::span<const T> x, std::span<const T> dy,
                            std::span<T> dw, std::span<T> dbias) {
  const Index lout = static_cast<Index>(g.out_length());
  const size_t ipg = g.in_per_group();
  const size_t opg = g.out_per_group();
  const Index cout = static_cast<Index>(g.out_channels);
  const Index taps = static_cast<Index>(ipg * g.kernel);
  const Index len = static_cast<Index>(g.length);
#pragma omp parallel for collapse(2) schedule(static)
  for (Index co = 0; co < cout; ++co) {
    for (Index r = 0; r < taps; ++r) {
      const size_t ci = static_cast<size_t>(r) / g.kernel;
      const size_t k = static_cast<size_t>(r) % g.kernel;
      const size_t ci0 = (static_cast<size_t>(co) / opg) * ipg;
      const T* xrow = x.data() + (ci0 + ci) * g.length;
      const T* drow = dy.data() + co * lout;
      T acc = 0;
      for (Index t = 0; t < lout; ++t) {
        const Index p = t * static_cast<Index>(g.stride) + static_cast<Index>(k) -
                        static_cast<Index>(g.pad_left);
        if (p < 0 || p >= len) continue;
        acc += drow[t] * xrow[p];
      }
      dw[co * taps + r] += acc;
    }
  }
  if (!dbias.empty()) {
#pragma omp parallel for schedule(static)
    for (Index co = 0; co < cout; ++co) {
      T acc = 0;
      for (Index t = 0; t < lout; ++t) acc += dy[co * lout + t];
      dbias[co] += acc;
    }
  }
}

template <typename T>
void gemm(bool trans_a, bool trans_b, size_t m, size_t n, size_t k, const T* a, const T* b, T* c,
          bool accumulate) {
  const Index rows = static_cast<Index>(m);
#pragma omp parallel for schedule(static) if (m * n * k > 4096)
  for (Index i = 0; i < rows; ++i) {
    std::vector<T> acc(n, T(0));
    for (size_t p = 0; p < k; ++p) {
      const T aip = a_at(trans_a, a, m, k, static_cast<size_t>(i), p);
      if (trans_b) {
        for (size_t j = 0; j < n; ++j) acc[j] += aip * b[j * k + p];
      } else {
        const T* brow = b + p * n;
        for (size_t j = 0; j < n; ++j) acc[j] += aip * brow[j];
      }
    }
    T* crow = c + i * n;
    for (size_t j = 0; j < n; ++j) crow[j] = accumulate ? crow[j] + acc[j] : acc[j];
  }
}

void resample(std::span<const float> in, int source_hz, int target_hz, double beta,
              std::span<float> out) {
  // Polyphase table over the reduced rational ratio; taps for one phase are
  // shared by every output landing on that phase.
  const ResampleFilter f = make_filter(static_cast<double>(target_hz) / source_hz);
  auto up = static_cast<std::uint64_t>(target_hz);
  auto down = static_cast<std::uint64_t>(source_hz);
  const std::uint64_t g = std::gcd(up, down);
  up /= g;
  down /= g;
  const bool tabulate = up <= 65536;

  const Index reach = static_cast<Index>(std::ceil(f.half_width)) + 1;
  const Index width = 2 * reach + 1;
  std::vector<double> table;
  if (tabulate) {
    table.assign(static_cast<size_t>(up * width), 0.0);
    for (std::uint64_t ph = 0; ph < up; ++ph) {
      const double frac = static_cast<double>(ph) / static_cast<double>(up);
      for (Index o = -reach; o <= reach; ++o) {
        const double tau = frac - static_cast<double>(o);
        table[ph * width + (o + reach)] = std::abs(tau) <= f.half_width ? f.tap(tau, beta) : 0.0;
      }
    }
  }
  const Index len = static_cast<Index>(in.size());
  const Index nout = static_cast<Index>(out.size());
#pragma omp parallel for schedule(static)
  for (Index n = 0; n < nout; ++n) {
    const std::uint64_t pos = static_cast<std::uint64_t>(n) * down;
    const Index base = static_cast<Index>(pos / up);
    const std::uint64_t ph = pos % up;
    const double frac = static_cast<double>(ph) / static_cast<double>(up);
    double acc = 0.0;
    for (Index o = -reach; o <= reach; ++o) {
      const Index j = base + o;
      if (j < 0 || j >= len) continue;
      const double tap = tabulate ? table[ph * width + (o + reach)]
                                  : (std::abs(frac - o) <= f.half_width ? f.tap(frac - o, beta) : 0.0);
      acc += static_cast<double>(in[j]) * tap;
    }
    out[n] = static_cast<float>(acc);
  }
}

template <typename T>
void pairwise_sq_distances(std::span<const T> x, size_t n, size_t d, std::span<T> out) {
  const Index rows = static_cast<Index>(n);
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < rows; ++i) {
    const T* xi = x.data() + i * d;
    for (size_t j = 0; j < n; ++j) {
      const T* xj = x.data() + j * d;
      T acc = 0;
      for (size_t q = 0; q < d; ++q) {
        const T diff = xi[q] - xj[q];
        acc += diff * diff;
      }
      out[i * n + j] = acc;
    }
  }
}

double tsne_gradient(std::span<const double> y, std::span<const double> p, size_t n,
                     double exaggeration, std::span<double> grad) {
  const Index rows = static_cast<Index>(n);
  std::vector<double> row_z(n, 0.0);
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < rows; ++i) {
    double acc = 0.0;
    for (size_t j = 0; j < n; ++j) {
      if (static_cast<size_t>(i) == j) continue;
      const double dx = y[2 * i] - y[2 * j];
      const double dy = y[2 * i + 1] - y[2 * j + 1];
      acc += 1.0 / (1.0 + dx * dx + dy * dy);
    }
    row_z[i] = acc;
  }
  double z = 0.0;
  for (double r : row_z) z += r;
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < rows; ++i) {
    double gx = 0.0, gy = 0.0;
    for (size_t j = 0; j < n; ++j) {
      if (static_cast<size_t>(i) == j) continue;
      const double dx = y[2 * i] - y[2 * j];
      const double dy = y[2 * i + 1] - y[2 * j + 1];
      const double num = 1.0 / (1.0 + dx * dx + dy * dy);
      const double w = (exaggeration * p[i * n + j] - num / z) * num;
      gx += w * dx;
      gy += w * dy;
    }
    grad[2 * i] = 4.0 * gx;
    grad[2 * i + 1] = 4.0 * gy;
  }
  return z;
}

}  // namespace parallel

#define VOCREP_INSTANTIATE(NS, T)                                                               \
  template void NS::conv1d_forward<T>(const Conv1dGeometry&, std::span<const T>,               \
                                      std::span<const T>, std::span<const T>, std::span<T>);    \
  template void NS::conv1d_backward_input<T>(const Conv1dGeometry&, std::span<const T>,        \
                                             std::span<const T>, std::span<T>);                 \
  template void NS::conv1d_backward_weight<T>(const Conv1dGeometry&, std::span<const T>,       \
                                              std::span<const T>, std::span<T>, std::span<T>);  \
  template void NS::gemm<T>(bool, bool, size_t, size_t, size_t, const T*, const T*, T*, bool); \
  template void NS::pairwise_sq_distances<T>(std::span<const T>, size_t, size_t, std::span<T>);

VOCREP_INSTANTIATE(serial, float)
VOCREP_INSTANTIATE(serial, double)
VOCREP_INSTANTIATE(parallel, float)
VOCREP_INSTANTIATE(parallel, double)

#undef VOCREP_INSTANTIATE

}  // namespace vocrep::kernels
