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

#pragma once

#include <cstddef>
#include <span>

// Data-parallel inner loops. Every kernel exists twice: `serial` is the plain
// reference kept for tests and benchmarks, `parallel` is the OpenMP version
// used by the library. Parallel kernels split work over output elements only,
// so results never depend on the thread count.
namespace vocrep::kernels {

struct Conv1dGeometry {
  std::size_t in_channels = 1;
  std::size_t length = 0;
  std::size_t out_channels = 1;
  std::size_t kernel = 1;
  std::size_t stride = 1;
  std::size_t pad_left = 0;
  std::size_t pad_right = 0;
  std::size_t groups = 1;

  std::size_t padded_length() const { return length + pad_left + pad_right; }
  std::size_t out_length() const { return (padded_length() - kernel) / stride + 1; }
  std::size_t in_per_group() const { return in_channels / groups; }
  std::size_t out_per_group() const { return out_channels / groups; }
};

/// Half-width (in zero crossings at the lower rate) of the resampling filter.
inline constexpr int kResampleHalfTaps = 16;

#define VOCREP_KERNEL_DECLS                                                                     \
  /* y[co, t] = b[co] + sum_{ci in group, k} w[co, ci, k] * xpad[ci, t*stride + k] */          \
  template <typename T>                                                                         \
  void conv1d_forward(const Conv1dGeometry& g, std::span<const T> x, std::span<const T> w,     \
                      std::span<const T> bias, std::span<T> y);                                 \
  /* dx += conv1d^T(dy) */                                                                      \
  template <typename T>                                                                         \
  void conv1d_backward_input(const Conv1dGeometry& g, std::span<const T> w,                    \
                             std::span<const T> dy, std::span<T> dx);                           \
  /* dw += dy (*) x, dbias += sum_t dy (dbias may be empty) */                                  \
  template <typename T>                                                                         \
  void conv1d_backward_weight(const Conv1dGeometry& g, std::span<const T> x,                   \
                              std::span<const T> dy, std::span<T> dw, std::span<T> dbias);      \
  /* C[m x n] (+)= op(A)[m x k] * op(B)[k x n], row-major */                                    \
  template <typename T>                                                                         \
  void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k,           \
            const T* a, const T* b, T* c, bool accumulate);                                     \
  /* Kaiser-windowed sinc interpolation from source_hz to target_hz */                         \
  void resample(std::span<const float> in, int source_hz, int target_hz, double beta,          \
                std::span<float> out);                                                          \
  /* out[i, j] = |x_i - x_j|^2 for n rows of dimension d */                                     \
  template <typename T>                                                                         \
  void pairwise_sq_distances(std::span<const T> x, std::size_t n, std::size_t d,               \
                             std::span<T> out);                                                 \
  /* t-SNE gradient for 2-D points; returns the normalizer Z = sum_{i!=j} (1+|yi-yj|^2)^-1 */   \
  double tsne_gradient(std::span<const double> y, std::span<const double> p, std::size_t n,    \
                       double exaggeration, std::span<double> grad);

namespace serial {
VOCREP_KERNEL_DECLS
}  // namespace serial

namespace parallel {
VOCREP_KERNEL_DECLS
}  // namespace parallel

#undef VOCREP_KERNEL_DECLS

/// Number of worker threads used by the parallel kernels (0 leaves the
/// OpenMP default in place).
void set_num_threads(int n);
int num_threads();

}  // namespace vocrep::kernels
