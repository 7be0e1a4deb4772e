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
#include <vector>

#include <json.hpp>

namespace vocrep {

using ojson = nlohmann::ordered_json;

struct EncoderConfig {
  std::size_t channels = 512;
  std::vector<std::size_t> strides{5, 2, 2, 2, 2, 2, 2};
  std::vector<std::size_t> kernels{10, 3, 3, 3, 3, 2, 2};
  bool layer_norm = true;

  /// Throws ConfigError on empty or mismatched stride/kernel lists.
  void validate() const;
};

struct QuantizerConfig {
  std::size_t groups = 2;
  std::size_t entries = 320;
  std::size_t entry_dim = 128;
  std::size_t output_dim = 256;
  double temperature_start = 2.0;
  double temperature_floor = 0.5;
  double temperature_decay = 0.999995;

  void validate() const;
};

struct ContextConfig {
  std::size_t num_blocks = 12;
  std::size_t model_dim = 768;
  std::size_t inner_dim = 3072;
  std::size_t num_heads = 8;
  std::size_t pos_conv_kernel = 128;
  std::size_t pos_conv_groups = 16;
  double dropout = 0.1;
  double layerdrop = 0.0;
  double mask_prob = 0.065;
  std::size_t mask_span = 10;

  void validate() const;
};

struct PretrainConfig {
  std::uint64_t total_updates = 400000;
  double peak_lr = 5e-4;
  double warmup_fraction = 0.08;
  double chunk_s = 10.0;
  std::size_t batch_clips = 8;
  std::size_t num_negatives = 100;
  double similarity_temperature = 0.1;
  double diversity_weight = 0.1;
  double grad_clip = 1.0;
  double valid_fraction = 0.05;
  /// 0 selects max(1, total_updates / 100).
  std::uint64_t validate_every = 0;
  /// 0 disables periodic checkpoints (best.ckpt and last.ckpt are always written).
  std::uint64_t checkpoint_every = 0;

  void validate() const;
  std::uint64_t validation_interval() const;
};

struct FinetuneConfig {
  std::size_t batch_size = 16;
  std::size_t max_epochs = 50;
  std::size_t patience = 5;
  std::uint64_t warmup_steps = 500;
  double peak_lr = 1e-4;
  std::string pooling = "mean";
  std::string head = "linear";
  bool freeze_encoder = false;
  int folds = 10;
  bool stratified = true;
  double valid_fraction = 0.1;
  double max_clip_s = 30.0;
  double grad_clip = 1.0;

  void validate() const;
};

struct RunConfig {
  std::string profile = "base";
  std::uint64_t seed = 0;
  bool deterministic = false;
  EncoderConfig encoder;
  QuantizerConfig quantizer;
  ContextConfig context;
  PretrainConfig pretrain;
  FinetuneConfig finetune;

  void validate() const;
};

/// "base" carries the full-size architecture and schedule; "desk" keeps the
/// same structure at sizes that train in seconds.
RunConfig make_profile(const std::string& name);

ojson to_json(const EncoderConfig& c);
ojson to_json(const QuantizerConfig& c);
ojson to_json(const ContextConfig& c);
ojson to_json(const PretrainConfig& c);
ojson to_json(const FinetuneConfig& c);
ojson to_json(const RunConfig& c);

/// Fields present in `j` override those already in `c`; unknown keys throw
/// ConfigError so typos do not pass silently.
void merge_json(EncoderConfig& c, const ojson& j);
void merge_json(QuantizerConfig& c, const ojson& j);
void merge_json(ContextConfig& c, const ojson& j);
void merge_json(PretrainConfig& c, const ojson& j);
void merge_json(FinetuneConfig& c, const ojson& j);
void merge_json(RunConfig& c, const ojson& j);

/// Starts from the profile named in the document (default "base") and applies
/// the remaining fields as overrides.
RunConfig run_config_from_json(const ojson& j);
RunConfig load_run_config(const std::string& path);

/// Pretty-printed JSON, two-space indent, trailing newline.
std::string dump_config(const RunConfig& c);

}  // namespace vocrep
