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

#include "vocrep/nn/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace vocrep::nn {

namespace {

std::vector<Tensor<double>> fresh_copies(const std::vector<Tensor<double>>& inputs, bool track) {
  std::vector<Tensor<double>> out;
  out.reserve(inputs.size());
  for (const auto& t : inputs) {
    auto c = t.clone();
    c.set_requires_grad(track);
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace

std::vector<std::vector<double>> numeric_gradient(const ScalarFn& f,
                                                  std::vector<Tensor<double>> inputs, double h) {
  auto work = fresh_copies(inputs, false);
  std::vector<std::vector<double>> grads;
  for (auto& t : work) {
    std::vector<double> g(t.size());
    auto vals = t.mutable_values();
    for (std::size_t i = 0; i < vals.size(); ++i) {
      const double x0 = vals[i];
      vals[i] = x0 + h;
      const double fp = f(work).item();
      vals[i] = x0 - h;
      const double fm = f(work).item();
      vals[i] = x0;
      g[i] = (fp - fm) / (2.0 * h);
    }
    grads.push_back(std::move(g));
  }
  return grads;
}

GradCheckResult grad_check(const ScalarFn& f, std::vector<Tensor<double>> inputs, double h) {
  GradCheckResult r;
  auto tracked = fresh_copies(inputs, true);
  f(tracked).backward();
  for (const auto& t : tracked) {
    std::vector<double> g(t.size(), 0.0);
    if (t.has_grad()) std::copy(t.grad().begin(), t.grad().end(), g.begin());
    r.analytic.push_back(std::move(g));
  }
  r.numeric = numeric_gradient(f, inputs, h);
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    double diff = 0.0, na = 0.0, nn = 0.0;
    for (std::size_t i = 0; i < r.analytic[k].size(); ++i) {
      const double a = r.analytic[k][i], n = r.numeric[k][i];
      diff += (a - n) * (a - n);
      na += a * a;
      nn += n * n;
    }
    const double denom = std::sqrt(na) + std::sqrt(nn);
    const double rel = denom > 0.0 ? std::sqrt(diff) / denom : 0.0;
    r.max_relative_error = std::max(r.max_relative_error, rel);
  }
  return r;
}

double grad_check(const std::function<Tensor<double>(const Tensor<double>&)>& f,
                  const Tensor<double>& point, double h) {
  ScalarFn wrapped = [&f](const std::vector<Tensor<double>>& in) { return f(in[0]); };
  return grad_check(wrapped, {point}, h).max_relative_error;
}

}  // namespace vocrep::nn
