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

#include "vocrep/model/context_network.hpp"

#include <string>

#include "vocrep/error.hpp"
#include "vocrep/nn/ops.hpp"

namespace vocrep::model {

std::vector<std::uint8_t> sample_mask(std::size_t frames, double p, std::size_t span, Rng& rng) {
  if (span == 0) throw ArgumentError("sample_mask: span must be positive");
  if (frames < span) {
    throw InputTooShortError("sample_mask: " + std::to_string(frames) +
                             " frames cannot hold a span of " + std::to_string(span));
  }
  std::vector<std::uint8_t> mask(frames, 0);
  bool any = false;
  auto mark = [&](std::size_t start) {
    for (std::size_t t = start; t < std::min(frames, start + span); ++t) mask[t] = 1;
    any = true;
  };
  for (std::size_t t = 0; t < frames; ++t)
    if (rng.uniform() < p) mark(t);
  if (!any) mark(static_cast<std::size_t>(rng.below(frames - span + 1)));
  return mask;
}

template <typename T>
Tensor<T> apply_mask(const Tensor<T>& x, const std::vector<std::uint8_t>& mask,
                     const Tensor<T>& embedding) {
  return nn::mask_rows(x, mask, embedding);
}

template <typename T>
ContextNetwork<T>::ContextNetwork(const ContextConfig& cfg, NamedParams<T>& registry) : cfg_(cfg) {
  cfg_.validate();
  const std::size_t d = cfg_.model_dim;
  pos_w_ = register_param(registry, "context.pos_conv.weight",
                          {d, d / cfg_.pos_conv_groups, cfg_.pos_conv_kernel});
  pos_b_ = register_param(registry, "context.pos_conv.bias", {d});
  mask_emb_ = register_param(registry, "context.mask_emb", {d});
  auto linear = [&](const std::string& name, std::size_t out, std::size_t in) {
    Linear l;
    l.weight = register_param(registry, name + ".weight", {out, in});
    l.bias = register_param(registry, name + ".bias", {out});
    return l;
  };
  for (std::size_t i = 0; i < cfg_.num_blocks; ++i) {
    const std::string p = "context.block." + std::to_string(i);
    Block b;
    b.attn_gain = register_param(registry, p + ".attn_norm.gain", {d});
    b.attn_bias = register_param(registry, p + ".attn_norm.bias", {d});
    b.q = linear(p + ".attn.q", d, d);
    b.k = linear(p + ".attn.k", d, d);
    b.v = linear(p + ".attn.v", d, d);
    b.out = linear(p + ".attn.out", d, d);
    b.ffn_gain = register_param(registry, p + ".ffn_norm.gain", {d});
    b.ffn_bias = register_param(registry, p + ".ffn_norm.bias", {d});
    b.fc1 = linear(p + ".ffn.fc1", cfg_.inner_dim, d);
    b.fc2 = linear(p + ".ffn.fc2", d, cfg_.inner_dim);
    blocks_.push_back(std::move(b));
  }
  final_gain_ = register_param(registry, "context.final_norm.gain", {d});
  final_bias_ = register_param(registry, "context.final_norm.bias", {d});
}

template <typename T>
Tensor<T> ContextNetwork<T>::run_block(const Block& b, const Tensor<T>& x, Rng* rng,
                                       std::size_t index) const {
  const double p = rng ? cfg_.dropout : 0.0;
  auto h = nn::layer_norm(x, b.attn_gain, b.attn_bias);
  auto q = nn::linear(h, b.q.weight, b.q.bias);
  auto k = nn::linear(h, b.k.weight, b.k.bias);
  auto v = nn::linear(h, b.v.weight, b.v.bias);
  std::vector<T>* weights = nullptr;
  if (keep_attention) weights = &last_attention[index];
  auto a = nn::linear(nn::attention(q, k, v, cfg_.num_heads, weights), b.out.weight, b.out.bias);
  if (p > 0.0) a = nn::dropout(a, p, *rng);
  auto y = nn::add(x, a);

  h = nn::layer_norm(y, b.ffn_gain, b.ffn_bias);
  h = nn::gelu(nn::linear(h, b.fc1.weight, b.fc1.bias));
  if (p > 0.0) h = nn::dropout(h, p, *rng);
  h = nn::linear(h, b.fc2.weight, b.fc2.bias);
  if (p > 0.0) h = nn::dropout(h, p, *rng);
  return nn::add(y, h);
}

template <typename T>
Tensor<T> ContextNetwork<T>::forward(const Tensor<T>& x, Rng* rng) const {
  if (x.rank() != 2 || x.dim(1) != cfg_.model_dim) {
    throw ShapeError("context: expected [T x " + std::to_string(cfg_.model_dim) + "], got " +
                     nn::shape_str(x.shape()));
  }
  if (x.dim(0) == 0) throw InputTooShortError("context: empty sequence");
  // Same-length grouped convolution; an even kernel pads one less on the right.
  nn::Conv1dOptions opt;
  opt.pad_left = cfg_.pos_conv_kernel / 2;
  opt.pad_right = cfg_.pos_conv_kernel - 1 - opt.pad_left;
  opt.groups = cfg_.pos_conv_groups;
  auto pos = nn::gelu(nn::transpose(nn::conv1d(nn::transpose(x), pos_w_, pos_b_, opt)));
  auto h = nn::add(x, pos);
  if (rng && cfg_.dropout > 0.0) h = nn::dropout(h, cfg_.dropout, *rng);

  if (keep_attention) last_attention.assign(blocks_.size(), {});
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    if (rng && cfg_.layerdrop > 0.0 && rng->uniform() < cfg_.layerdrop) continue;
    h = run_block(blocks_[i], h, rng, i);
  }
  return nn::layer_norm(h, final_gain_, final_bias_);
}

template Tensor<float> apply_mask(const Tensor<float>&, const std::vector<std::uint8_t>&,
                                  const Tensor<float>&);
template Tensor<double> apply_mask(const Tensor<double>&, const std::vector<std::uint8_t>&,
                                   const Tensor<double>&);
template class ContextNetwork<float>;
template class ContextNetwork<double>;

}  // namespace vocrep::model
