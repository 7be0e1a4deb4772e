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

namespace vocrep::nn {

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename T>
struct AdamState {
  std::uint64_t step = 0;
  std::vector<T> m;
  std::vector<T> v;
};

/// One bias-corrected Adam update of `param` from its accumulated gradient.
/// A parameter without a gradient buffer is treated as having zero gradient.
template <typename T>
void adam_step(Tensor<T>& param, AdamState<T>& state, double lr, const AdamHyper& hyper = {});

/// Rescales all gradients so their joint L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
template <typename T>
double clip_grad_norm(std::vector<Tensor<T>>& params, double max_norm);

/// Adam over a fixed list of parameters.
template <typename T>
class Adam {
 public:
  explicit Adam(std::vector<Tensor<T>> params, AdamHyper hyper = {});

  void zero_grad();
  void step(double lr);

  std::vector<Tensor<T>>& params() { return params_; }
  const std::vector<AdamState<T>>& states() const { return states_; }
  std::vector<AdamState<T>>& states() { return states_; }

 private:
  std::vector<Tensor<T>> params_;
  std::vector<AdamState<T>> states_;
  AdamHyper hyper_;
};

extern template class Adam<float>;
extern template class Adam<double>;

}  // namespace vocrep::nn
