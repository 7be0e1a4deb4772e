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

#include "vocrep/model/feature_encoder.hpp"

#include <string>

#include "vocrep/error.hpp"
#include "vocrep/nn/ops.hpp"

namespace vocrep::model {

ReceptiveField receptive_field(const EncoderConfig& cfg) {
  cfg.validate();
  // Walk the stack from the input: each layer widens the field by (K-1)
  // times the hop accumulated below it.
  ReceptiveField rf{1, 1};
  for (std::size_t i = 0; i < cfg.kernels.size(); ++i) {
    rf.samples += (cfg.kernels[i] - 1) * rf.stride_samples;
    rf.stride_samples *= cfg.strides[i];
  }
  return rf;
}

std::size_t output_frames(const EncoderConfig& cfg, std::size_t num_samples) {
  std::size_t len = num_samples;
  for (std::size_t i = 0; i < cfg.kernels.size(); ++i) {
    if (len < cfg.kernels[i]) return 0;
    len = (len - cfg.kernels[i]) / cfg.strides[i] + 1;
  }
  return len;
}

template <typename T>
FeatureEncoder<T>::FeatureEncoder(const EncoderConfig& cfg, NamedParams<T>& registry) : cfg_(cfg) {
  cfg_.validate();
  std::size_t in_channels = 1;
  for (std::size_t i = 0; i < cfg_.kernels.size(); ++i) {
    const std::string id = std::to_string(i);
    Block b;
    b.weight = register_param(registry, "encoder.conv." + id + ".weight",
                              {cfg_.channels, in_channels, cfg_.kernels[i]});
    b.bias = register_param(registry, "encoder.conv." + id + ".bias", {cfg_.channels});
    if (cfg_.layer_norm) {
      b.gain = register_param(registry, "encoder.norm." + id + ".gain", {cfg_.channels});
      b.shift = register_param(registry, "encoder.norm." + id + ".bias", {cfg_.channels});
    }
    blocks_.push_back(std::move(b));
    in_channels = cfg_.channels;
  }
}

template <typename T>
Tensor<T> FeatureEncoder<T>::forward(const Tensor<T>& wave) const {
  const std::size_t n = wave.size();
  const auto rf = receptive_field(cfg_);
  if (n < rf.samples) {
    throw InputTooShortError("encoder: input of " + std::to_string(n) +
                             " samples is shorter than the receptive field (" +
                             std::to_string(rf.samples) + ")");
  }
  Tensor<T> x = wave.rank() == 2 ? wave : nn::reshape(wave, {1, n});
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const Block& b = blocks_[i];
    nn::Conv1dOptions opt;
    opt.stride = cfg_.strides[i];
    x = nn::conv1d(x, b.weight, b.bias, opt);           // [C x L']
    Tensor<T> frames = nn::transpose(x);                 // [L' x C]
    if (cfg_.layer_norm) frames = nn::layer_norm(frames, b.gain, b.shift);
    frames = nn::gelu(frames);
    x = i + 1 < blocks_.size() ? nn::transpose(frames) : frames;
  }
  return x;
}

template class FeatureEncoder<float>;
template class FeatureEncoder<double>;

}  // namespace vocrep::model
