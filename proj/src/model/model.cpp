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

#include "vocrep/model/model.hpp"

#include <algorithm>

#include "vocrep/error.hpp"
#include "vocrep/nn/ops.hpp"

namespace vocrep::model {

template <typename T>
Model<T>::Model(const RunConfig& cfg)
    : cfg_(cfg),
      encoder(cfg.encoder, registry_),
      feature_norm_gain(register_param(registry_, "feature_norm.gain", {cfg.encoder.channels})),
      feature_norm_bias(register_param(registry_, "feature_norm.bias", {cfg.encoder.channels})),
      feature_proj_w(register_param(registry_, "feature_proj.weight",
                                    {cfg.context.model_dim, cfg.encoder.channels})),
      feature_proj_b(register_param(registry_, "feature_proj.bias", {cfg.context.model_dim})),
      quantizer(cfg.quantizer, cfg.encoder.channels, registry_),
      context(cfg.context, registry_),
      final_proj_w(register_param(registry_, "final_proj.weight",
                                  {cfg.quantizer.output_dim, cfg.context.model_dim})),
      final_proj_b(register_param(registry_, "final_proj.bias", {cfg.quantizer.output_dim})) {}

template <typename T>
Tensor<T> Model<T>::latent(const Tensor<T>& wave) const {
  return nn::layer_norm(encoder.forward(wave), feature_norm_gain, feature_norm_bias);
}

template <typename T>
Tensor<T> Model<T>::project(const Tensor<T>& latent) const {
  return nn::linear(latent, feature_proj_w, feature_proj_b);
}

template <typename T>
Tensor<T> Model<T>::context_frames(const Tensor<T>& wave, Rng* dropout_rng) const {
  return context.forward(project(latent(wave)), dropout_rng);
}

template <typename T>
Tensor<T> Model<T>::to_target_space(const Tensor<T>& c) const {
  return nn::linear(c, final_proj_w, final_proj_b);
}

template <typename T>
void Model<T>::copy_values_from(const Model& other) {
  if (other.registry_.size() != registry_.size()) {
    throw ShapeError("copy_values_from: parameter count differs");
  }
  for (std::size_t i = 0; i < registry_.size(); ++i) {
    auto& dst = registry_[i].second;
    const auto& src = other.registry_[i].second;
    if (dst.shape() != src.shape()) {
      throw ShapeError("copy_values_from: shape mismatch for " + registry_[i].first);
    }
    std::copy(src.values().begin(), src.values().end(), dst.mutable_values().begin());
  }
}

template class Model<float>;
template class Model<double>;

}  // namespace vocrep::model
