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

#include "vocrep/config.hpp"
#include "vocrep/model/context_network.hpp"
#include "vocrep/model/feature_encoder.hpp"
#include "vocrep/model/params.hpp"
#include "vocrep/model/quantizer.hpp"

namespace vocrep::model {

/// Encoder, quantizer and context network wired together, plus the
/// projections between them:
///
///   wave -> encoder -> feature_norm -+-> feature_proj -> (mask) -> context -> final_proj
///                                    +-> quantizer (targets)
///
/// Parameters are created zero-filled; call init_scratch or load a checkpoint.
template <typename T>
class Model {
 public:
  explicit Model(const RunConfig& cfg);
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  /// wave [L] -> normalized latent frames [T' x channels].
  Tensor<T> latent(const Tensor<T>& wave) const;
  /// normalized latent frames -> [T' x model_dim].
  Tensor<T> project(const Tensor<T>& latent) const;
  /// Unmasked context frames [T' x model_dim] for a waveform.
  Tensor<T> context_frames(const Tensor<T>& wave, Rng* dropout_rng = nullptr) const;
  /// Context frames -> target space [N x output_dim].
  Tensor<T> to_target_space(const Tensor<T>& context) const;

  NamedParams<T>& params() { return registry_; }
  const NamedParams<T>& params() const { return registry_; }
  /// Copies parameter values (not graphs) from a model of the same shape.
  void copy_values_from(const Model& other);

  const RunConfig& config() const { return cfg_; }

 private:
  RunConfig cfg_;
  NamedParams<T> registry_;

 public:
  FeatureEncoder<T> encoder;
  Tensor<T> feature_norm_gain, feature_norm_bias;
  Tensor<T> feature_proj_w, feature_proj_b;
  Quantizer<T> quantizer;
  ContextNetwork<T> context;
  Tensor<T> final_proj_w, final_proj_b;
};

extern template class Model<float>;
extern template class Model<double>;

}  // namespace vocrep::model
