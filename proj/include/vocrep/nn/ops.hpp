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

#include <cstdint>
#include <vector>

#include "vocrep/nn/tensor.hpp"
#include "vocrep/rng.hpp"

// Differentiable operations. Matrices are row-major [rows x cols]; a "row
// vector" is rank 1. Scalars have shape [1].
namespace vocrep::nn {

struct Conv1dOptions {
  std::size_t stride = 1;
  std::size_t pad_left = 0;
  std::size_t pad_right = 0;
  std::size_t groups = 1;
};

inline constexpr double kLayerNormEps = 1e-5;

template <typename T> Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> scale(const Tensor<T>& a, T factor);
/// x[R x C] + b[C] broadcast over rows.
template <typename T> Tensor<T> add_row(const Tensor<T>& x, const Tensor<T>& b);
template <typename T> Tensor<T> reshape(const Tensor<T>& x, Shape shape);

template <typename T> Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> transpose(const Tensor<T>& x);
/// x[R x in] * w[out x in]^T (+ b[out]).
template <typename T> Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& w);
template <typename T> Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b);

/// x[C_in x L], w[C_out x C_in/groups x K] -> [C_out x L_out]. No padding
/// unless requested explicitly through `opt`.
template <typename T>
Tensor<T> conv1d(const Tensor<T>& x, const Tensor<T>& w, const Conv1dOptions& opt = {});
template <typename T>
Tensor<T> conv1d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias,
                 const Conv1dOptions& opt = {});

/// Normalizes over the last axis, then applies gain and bias.
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gain, const Tensor<T>& bias,
                     double eps = kLayerNormEps);
template <typename T> Tensor<T> gelu(const Tensor<T>& x);
template <typename T> Tensor<T> relu(const Tensor<T>& x);
/// Softmax over the last axis.
template <typename T> Tensor<T> softmax(const Tensor<T>& x);

/// Mean cross-entropy of logits rows ([n] or [R x n]) against class indices.
template <typename T>
Tensor<T> cross_entropy(const Tensor<T>& logits, const std::vector<std::size_t>& targets);
template <typename T> Tensor<T> cross_entropy(const Tensor<T>& logits, std::size_t target);

/// Scaled dot-product attention over `num_heads` column blocks of q, k, v
/// ([T x d] each, full bidirectional). When `weights` is given it receives the
/// per-head attention matrices, [num_heads x T x T].
template <typename T>
Tensor<T> attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v,
                    std::size_t num_heads, std::vector<T>* weights = nullptr);

/// Row-wise softmax((logits + noise) / temperature). With `hard` the forward
/// value is the one-hot argmax while the backward pass uses the soft Jacobian.
template <typename T>
Tensor<T> gumbel_softmax(const Tensor<T>& logits, double temperature, bool hard,
                         const std::vector<T>& noise);

/// a.b / (|a||b|), 0 when either norm vanishes.
template <typename T> Tensor<T> cosine_similarity(const Tensor<T>& a, const Tensor<T>& b);
/// Pairwise cosine similarities of rows: [M x d], [N x d] -> [M x N].
template <typename T> Tensor<T> cosine_matrix(const Tensor<T>& a, const Tensor<T>& b);

/// out[i, j] = x[i, idx[i * width + j]].
template <typename T>
Tensor<T> gather_columns(const Tensor<T>& x, const std::vector<std::size_t>& idx, std::size_t width);
template <typename T>
Tensor<T> select_rows(const Tensor<T>& x, const std::vector<std::size_t>& rows);
/// Rows where mask != 0 are replaced by `replacement` [d].
template <typename T>
Tensor<T> mask_rows(const Tensor<T>& x, const std::vector<std::uint8_t>& mask,
                    const Tensor<T>& replacement);
template <typename T> Tensor<T> concat_rows(const std::vector<Tensor<T>>& parts);
template <typename T> Tensor<T> concat_cols(const std::vector<Tensor<T>>& parts);
template <typename T> Tensor<T> slice_cols(const Tensor<T>& x, std::size_t start, std::size_t len);

/// [R x d] -> [d]
template <typename T> Tensor<T> mean_rows(const Tensor<T>& x);
template <typename T> Tensor<T> max_rows(const Tensor<T>& x);
template <typename T> Tensor<T> sum(const Tensor<T>& x);
template <typename T> Tensor<T> mean(const Tensor<T>& x);

/// Inverted dropout; identity when p == 0.
template <typename T> Tensor<T> dropout(const Tensor<T>& x, double p, Rng& rng);

/// exp of the natural-log entropy of a distribution [n].
template <typename T> Tensor<T> perplexity(const Tensor<T>& p);

}  // namespace vocrep::nn
