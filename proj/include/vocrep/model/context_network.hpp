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

/// Per-frame span mask: every frame starts a span of `span` frames with
/// probability `p`; spans may overlap and are clipped at the end. If no span
/// was drawn one start is picked uniformly so at least one span is masked.
/// Throws InputTooShortError when frames < span.
std::vector<std::uint8_t> sample_mask(std::size_t frames, double p, std::size_t span, Rng& rng);

/// Replaces rows of `x` [T x d] where mask is set by `embedding` [d].
template <typename T>
Tensor<T> apply_mask(const Tensor<T>& x, const std::vector<std::uint8_t>& mask,
                     const Tensor<T>& embedding);

/// Positional convolution followed by pre-norm transformer blocks and a final
/// layer norm. Owns the learned mask embedding.
template <typename T>
class ContextNetwork {
 public:
  ContextNetwork(const ContextConfig& cfg, NamedParams<T>& registry);

  /// [T x model_dim] -> [T x model_dim]. `rng` drives dropout and layerdrop
  /// and may be null, which runs the network as in evaluation.
  Tensor<T> forward(const Tensor<T>& x, Rng* rng = nullptr) const;

  const Tensor<T>& mask_embedding() const { return mask_emb_; }
  const ContextConfig& config() const { return cfg_; }

  /// Attention matrices of the last forward call with `keep_attention` set,
  /// [blocks][heads x T x T].
  mutable std::vector<std::vector<T>> last_attention;
  bool keep_attention = false;

 private:
  struct Linear {
    Tensor<T> weight, bias;
  };
  struct Block {
    Tensor<T> attn_gain, attn_bias;
    Linear q, k, v, out;
    Tensor<T> ffn_gain, ffn_bias;
    Linear fc1, fc2;
  };

  Tensor<T> run_block(const Block& b, const Tensor<T>& x, Rng* rng, std::size_t index) const;

  ContextConfig cfg_;
  Tensor<T> pos_w_, pos_b_, mask_emb_;
  std::vector<Block> blocks_;
  Tensor<T> final_gain_, final_bias_;
};

extern template class ContextNetwork<float>;
extern template class ContextNetwork<double>;

}  // namespace vocrep::model
