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

#include "vocrep/nn/optim.hpp"

#include <cmath>

namespace vocrep::nn {

template <typename T>
void adam_step(Tensor<T>& param, AdamState<T>& state, double lr, const AdamHyper& hyper) {
  const std::size_t n = param.size();
  if (state.m.size() != n) {
    state.m.assign(n, T(0));
    state.v.assign(n, T(0));
  }
  ++state.step;
  const double bc1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(state.step));
  auto values = param.mutable_values();
  auto grad = param.grad();
  for (std::size_t i = 0; i < n; ++i) {
    const double g = grad.empty() ? 0.0 : static_cast<double>(grad[i]);
    const double m = hyper.beta1 * state.m[i] + (1.0 - hyper.beta1) * g;
    const double v = hyper.beta2 * state.v[i] + (1.0 - hyper.beta2) * g * g;
    state.m[i] = static_cast<T>(m);
    state.v[i] = static_cast<T>(v);
    const double m_hat = m / bc1;
    const double v_hat = v / bc2;
    values[i] = static_cast<T>(values[i] - lr * m_hat / (std::sqrt(v_hat) + hyper.eps));
  }
}

template <typename T>
double clip_grad_norm(std::vector<Tensor<T>>& params, double max_norm) {
  double sq = 0.0;
  for (const auto& p : params)
    for (T g : p.grad()) sq += static_cast<double>(g) * static_cast<double>(g);
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double f = max_norm / norm;
    for (auto& p : params) {
      if (!p.has_grad()) continue;
      for (T& g : p.mutable_grad()) g = static_cast<T>(g * f);
    }
  }
  return norm;
}

template <typename T>
Adam<T>::Adam(std::vector<Tensor<T>> params, AdamHyper hyper)
    : params_(std::move(params)), states_(params_.size()), hyper_(hyper) {}

template <typename T>
void Adam<T>::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

template <typename T>
void Adam<T>::step(double lr) {
  for (std::size_t i = 0; i < params_.size(); ++i) adam_step(params_[i], states_[i], lr, hyper_);
}

template void adam_step(Tensor<float>&, AdamState<float>&, double, const AdamHyper&);
template void adam_step(Tensor<double>&, AdamState<double>&, double, const AdamHyper&);
template double clip_grad_norm(std::vector<Tensor<float>>&, double);
template double clip_grad_norm(std::vector<Tensor<double>>&, double);
template class Adam<float>;
template class Adam<double>;

}  // namespace vocrep::nn
