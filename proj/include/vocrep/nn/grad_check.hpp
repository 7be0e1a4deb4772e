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

#include <functional>
#include <vector>

#include "vocrep/nn/tensor.hpp"

namespace vocrep::nn {

using ScalarFn = std::function<Tensor<double>(const std::vector<Tensor<double>>&)>;

struct GradCheckResult {
  /// Largest per-input relative error |a - n| / (|a| + |n|) in the L2 sense.
  double max_relative_error = 0.0;
  std::vector<std::vector<double>> analytic;
  std::vector<std::vector<double>> numeric;
};

/// Central differences (f(x+h) - f(x-h)) / 2h for every coordinate of every
/// input.
std::vector<std::vector<double>> numeric_gradient(const ScalarFn& f,
                                                  std::vector<Tensor<double>> inputs,
                                                  double h = 1e-4);

/// Compares the backpropagated gradient of `f` against central differences.
/// Inputs are marked as requiring gradients internally.
GradCheckResult grad_check(const ScalarFn& f, std::vector<Tensor<double>> inputs, double h = 1e-4);

/// Single-input convenience overload.
double grad_check(const std::function<Tensor<double>(const Tensor<double>&)>& f,
                  const Tensor<double>& point, double h = 1e-4);

}  // namespace vocrep::nn
