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
#include <vector>

#include "vocrep/config.hpp"
#include "vocrep/model/params.hpp"

namespace vocrep::model {

struct ReceptiveField {
  std::size_t samples = 0;
  std::size_t stride_samples = 0;
};

/// Receptive field and hop of the conv stack, in input samples.
ReceptiveField receptive_field(const EncoderConfig& cfg);

/// Frames produced for `num_samples` inputs (0 when the input is shorter than
/// the receptive field).
std::size_t output_frames(const EncoderConfig& cfg, std::size_t num_samples);

/// Stack of {conv1d (no padding) -> layer norm over channels -> GELU} blocks
/// turning a waveform into latent frames Z.
template <typename T>
class FeatureEncoder {
 public:
  FeatureEncoder(const EncoderConfig& cfg, NamedParams<T>& registry);

  /// [L] or [1 x L] samples -> [T' x channels]. Throws InputTooShortError
  /// below the receptive field.
  Tensor<T> forward(const Tensor<T>& wave) const;

  const EncoderConfig& config() const { return cfg_; }

 private:
  struct Block {
    Tensor<T> weight, bias, gain, shift;
  };
  EncoderConfig cfg_;
  std::vector<Block> blocks_;
};

extern template class FeatureEncoder<float>;
extern template class FeatureEncoder<double>;

}  // namespace vocrep::model
