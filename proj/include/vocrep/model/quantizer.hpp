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

#include "vocrep/config.hpp"
#include "vocrep/model/params.hpp"
#include "vocrep/rng.hpp"

namespace vocrep::model {

template <typename T>
struct QuantizedTargets {
  Tensor<T> vectors;              // [N x output_dim]
  /// softmax(logits) per group without Gumbel noise, [N x G*V]; feeds the
  /// diversity penalty.
  Tensor<T> probs;
  /// Gumbel-perturbed soft distribution per frame and group, [N x G x V].
  std::vector<T> code_probs;
  std::vector<std::size_t> code_ids;  // [N x G]
};

/// max(floor, start * decay^step)
double anneal_temperature(std::uint64_t step, const QuantizerConfig& cfg);

/// (G*V - sum_g exp(H(mean_n p[n, g]))) / (G*V) over rows of `probs` [N x G*V].
template <typename T>
Tensor<T> diversity_loss(const Tensor<T>& probs, std::size_t groups, std::size_t entries);

/// Product quantizer with G codebooks of V entries, selected per frame by a
/// hard Gumbel-softmax with straight-through gradients.
template <typename T>
class Quantizer {
 public:
  Quantizer(const QuantizerConfig& cfg, std::size_t input_dim, NamedParams<T>& registry);

  /// `z` is [N x input_dim]. `noise` holds N*G*V Gumbel draws, or is empty for
  /// noise-free selection.
  QuantizedTargets<T> forward(const Tensor<T>& z, double temperature, const std::vector<T>& noise,
                              bool hard = true) const;

  /// Draws the noise vector for `frames` frames.
  std::vector<T> sample_noise(std::size_t frames, Rng& rng) const;

  const QuantizerConfig& config() const { return cfg_; }

 private:
  QuantizerConfig cfg_;
  Tensor<T> logits_w_, logits_b_;
  std::vector<Tensor<T>> codebooks_;
  Tensor<T> proj_w_, proj_b_;
};

extern template class Quantizer<float>;
extern template class Quantizer<double>;

}  // namespace vocrep::model
