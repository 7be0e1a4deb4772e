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
#include <string>
#include <utility>
#include <vector>

#include "vocrep/nn/tensor.hpp"

namespace vocrep::model {

using nn::Shape;
using nn::Tensor;

template <typename T>
using NamedParams = std::vector<std::pair<std::string, Tensor<T>>>;

/// Creates a zero-filled trainable tensor and registers it under `name`.
template <typename T>
Tensor<T> register_param(NamedParams<T>& registry, std::string name, Shape shape) {
  auto t = Tensor<T>::zeros(std::move(shape), true);
  registry.emplace_back(std::move(name), t);
  return t;
}

/// Scratch initialization by parameter role, each tensor drawn from its own
/// substream of `seed` so the result does not depend on registration order:
///   *.weight, *.codebook.*  uniform(-1/sqrt(fan_in), 1/sqrt(fan_in))
///   *.bias                  0
///   *.gain                  1
///   *mask_emb               uniform(-0.1, 0.1)
/// fan_in is the product of all dimensions but the first.
template <typename T>
void init_scratch(NamedParams<T>& params, std::uint64_t seed);

}  // namespace vocrep::model
