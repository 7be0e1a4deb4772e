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

#include "vocrep/model/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "vocrep/error.hpp"
#include "vocrep/nn/ops.hpp"

namespace vocrep::model {

double anneal_temperature(std::uint64_t step, const QuantizerConfig& cfg) {
  const double t = cfg.temperature_start * std::pow(cfg.temperature_decay, static_cast<double>(step));
  return std::max(cfg.temperature_floor, t);
}

template <typename T>
Tensor<T> diversity_loss(const Tensor<T>& probs, std::size_t groups, std::size_t entries) {
  if (probs.rank() != 2 || probs.dim(1) != groups * entries) {
    throw ShapeError("diversity_loss: expected [N x " + std::to_string(groups * entries) +
                     "], got " + nn::shape_str(probs.shape()));
  }
  if (probs.dim(0) == 0) throw ArgumentError("diversity_loss: empty batch");
  const auto avg = nn::reshape(nn::mean_rows(probs), {1, groups * entries});
  Tensor<T> total;
  for (std::size_t g = 0; g < groups; ++g) {
    auto pg = nn::reshape(nn::slice_cols(avg, g * entries, entries), {entries});
    auto perp = nn::perplexity(pg);
    total = g == 0 ? perp : nn::add(total, perp);
  }
  const T gv = static_cast<T>(groups * entries);
  return nn::scale(nn::sub(Tensor<T>::scalar(gv), total), T(1) / gv);
}

template <typename T>
Quantizer<T>::Quantizer(const QuantizerConfig& cfg, std::size_t input_dim, NamedParams<T>& registry)
    : cfg_(cfg) {
  cfg_.validate();
  const std::size_t gv = cfg_.groups * cfg_.entries;
  logits_w_ = register_param(registry, "quantizer.logits.weight", {gv, input_dim});
  logits_b_ = register_param(registry, "quantizer.logits.bias", {gv});
  for (std::size_t g = 0; g < cfg_.groups; ++g) {
    codebooks_.push_back(register_param(registry, "quantizer.codebook." + std::to_string(g),
                                        {cfg_.entries, cfg_.entry_dim}));
  }
  proj_w_ = register_param(registry, "quantizer.proj.weight",
                           {cfg_.output_dim, cfg_.groups * cfg_.entry_dim});
  proj_b_ = register_param(registry, "quantizer.proj.bias", {cfg_.output_dim});
}

template <typename T>
std::vector<T> Quantizer<T>::sample_noise(std::size_t frames, Rng& rng) const {
  std::vector<T> noise(frames * cfg_.groups * cfg_.entries);
  for (auto& v : noise) v = static_cast<T>(rng.gumbel());
  return noise;
}

template <typename T>
QuantizedTargets<T> Quantizer<T>::forward(const Tensor<T>& z, double temperature,
                                          const std::vector<T>& noise, bool hard) const {
  if (z.rank() != 2) throw ShapeError("quantizer: expected [N x d] input");
  const std::size_t n = z.dim(0), G = cfg_.groups, V = cfg_.entries;
  if (!noise.empty() && noise.size() != n * G * V) {
    throw ArgumentError("quantizer: noise must hold N*G*V values");
  }
  const auto logits = nn::linear(z, logits_w_, logits_b_);  // [N x G*V]

  QuantizedTargets<T> out;
  out.code_probs.resize(n * G * V);
  out.code_ids.resize(n * G);
  std::vector<Tensor<T>> selected, probs;
  for (std::size_t g = 0; g < G; ++g) {
    const auto lg = nn::slice_cols(logits, g * V, V);
    std::vector<T> ng(n * V, T(0));
    if (!noise.empty()) {
      for (std::size_t i = 0; i < n; ++i)
        std::copy_n(noise.begin() + (i * G + g) * V, V, ng.begin() + i * V);
    }
    const auto onehot = nn::gumbel_softmax(lg, temperature, hard, ng);  // [N x V]
    const auto soft = hard ? nn::gumbel_softmax(lg.detach(), temperature, false, ng) : onehot;
    for (std::size_t i = 0; i < n; ++i) {
      const T* row = soft.values().data() + i * V;
      std::copy_n(row, V, out.code_probs.begin() + (i * G + g) * V);
      out.code_ids[i * G + g] = static_cast<std::size_t>(std::max_element(row, row + V) - row);
    }
    selected.push_back(nn::matmul(onehot, codebooks_[g]));  // [N x entry_dim]
    probs.push_back(nn::softmax(lg));
  }
  out.vectors = nn::linear(nn::concat_cols(selected), proj_w_, proj_b_);
  out.probs = nn::concat_cols(probs);
  return out;
}

template Tensor<float> diversity_loss(const Tensor<float>&, std::size_t, std::size_t);
template Tensor<double> diversity_loss(const Tensor<double>&, std::size_t, std::size_t);
template class Quantizer<float>;
template class Quantizer<double>;

}  // namespace vocrep::model
