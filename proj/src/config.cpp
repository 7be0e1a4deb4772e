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

#include "vocrep/config.hpp"

#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "vocrep/error.hpp"

namespace vocrep {

namespace {

// One field list per struct, shared by serialization and merging.
template <typename C, typename V>
  requires std::is_same_v<std::remove_const_t<C>, EncoderConfig>
void visit(C& c, V&& v) {
  v("channels", c.channels);
  v("strides", c.strides);
  v("kernels", c.kernels);
  v("layer_norm", c.layer_norm);
}

template <typename C, typename V>
  requires std::is_same_v<std::remove_const_t<C>, QuantizerConfig>
void visit(C& c, V&& v) {
  v("groups", c.groups);
  v("entries", c.entries);
  v("entry_dim", c.entry_dim);
  v("output_dim", c.output_dim);
  v("temperature_start", c.temperature_start);
  v("temperature_floor", c.temperature_floor);
  v("temperature_decay", c.temperature_decay);
}

template <typename C, typename V>
  requires std::is_same_v<std::remove_const_t<C>, ContextConfig>
void visit(C& c, V&& v) {
  v("num_blocks", c.num_blocks);
  v("model_dim", c.model_dim);
  v("inner_dim", c.inner_dim);
  v("num_heads", c.num_heads);
  v("pos_conv_kernel", c.pos_conv_kernel);
  v("pos_conv_groups", c.pos_conv_groups);
  v("dropout", c.dropout);
  v("layerdrop", c.layerdrop);
  v("mask_prob", c.mask_prob);
  v("mask_span", c.mask_span);
}

template <typename C, typename V>
  requires std::is_same_v<std::remove_const_t<C>, PretrainConfig>
void visit(C& c, V&& v) {
  v("total_updates", c.total_updates);
  v("peak_lr", c.peak_lr);
  v("warmup_fraction", c.warmup_fraction);
  v("chunk_s", c.chunk_s);
  v("batch_clips", c.batch_clips);
  v("num_negatives", c.num_negatives);
  v("similarity_temperature", c.similarity_temperature);
  v("diversity_weight", c.diversity_weight);
  v("grad_clip", c.grad_clip);
  v("valid_fraction", c.valid_fraction);
  v("validate_every", c.validate_every);
  v("checkpoint_every", c.checkpoint_every);
}

template <typename C, typename V>
  requires std::is_same_v<std::remove_const_t<C>, FinetuneConfig>
void visit(C& c, V&& v) {
  v("batch_size", c.batch_size);
  v("max_epochs", c.max_epochs);
  v("patience", c.patience);
  v("warmup_steps", c.warmup_steps);
  v("peak_lr", c.peak_lr);
  v("pooling", c.pooling);
  v("head", c.head);
  v("freeze_encoder", c.freeze_encoder);
  v("folds", c.folds);
  v("stratified", c.stratified);
  v("valid_fraction", c.valid_fraction);
  v("max_clip_s", c.max_clip_s);
  v("grad_clip", c.grad_clip);
}

template <typename C>
ojson fields_to_json(const C& c) {
  ojson j = ojson::object();
  visit(c, [&](const char* key, const auto& field) { j[key] = field; });
  return j;
}

template <typename C>
void merge_fields(C& c, const ojson& j, const char* section) {
  if (!j.is_object()) throw ConfigError(std::string(section) + ": expected an object");
  std::set<std::string> known;
  visit(c, [&](const char* key, auto&) { known.insert(key); });
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw ConfigError(std::string(section) + ": unknown key '" + key + "'");
  }
  visit(c, [&](const char* key, auto& field) {
    if (!j.contains(key)) return;
    try {
      field = j[key].template get<std::decay_t<decltype(field)>>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string(section) + "." + key + ": " + e.what());
    }
  });
}

}  // namespace

void EncoderConfig::validate() const {
  if (channels == 0) throw ConfigError("encoder.channels must be positive");
  if (strides.empty() || strides.size() != kernels.size()) {
    throw ConfigError("encoder: strides and kernels must be non-empty and equally long");
  }
  for (std::size_t i = 0; i < strides.size(); ++i) {
    if (strides[i] == 0 || kernels[i] == 0) throw ConfigError("encoder: zero stride or kernel");
  }
}

void QuantizerConfig::validate() const {
  if (groups == 0 || entries == 0 || entry_dim == 0 || output_dim == 0) {
    throw ConfigError("quantizer: sizes must be positive");
  }
  if (!(temperature_floor > 0.0) || temperature_start < temperature_floor) {
    throw ConfigError("quantizer: need 0 < temperature_floor <= temperature_start");
  }
  if (!(temperature_decay > 0.0 && temperature_decay <= 1.0)) {
    throw ConfigError("quantizer: temperature_decay must lie in (0, 1]");
  }
}

void ContextConfig::validate() const {
  if (model_dim == 0 || num_heads == 0 || inner_dim == 0) throw ConfigError("context: zero size");
  if (model_dim % num_heads != 0) {
    throw ConfigError("context: model_dim " + std::to_string(model_dim) +
                      " not divisible by num_heads " + std::to_string(num_heads));
  }
  if (pos_conv_kernel == 0 || pos_conv_groups == 0 || model_dim % pos_conv_groups != 0) {
    throw ConfigError("context: pos_conv_groups must divide model_dim");
  }
  if (dropout < 0.0 || dropout >= 1.0 || layerdrop < 0.0 || layerdrop >= 1.0) {
    throw ConfigError("context: dropout and layerdrop must lie in [0, 1)");
  }
  if (mask_prob < 0.0 || mask_prob > 1.0 || mask_span == 0) {
    throw ConfigError("context: mask_prob must lie in [0, 1] and mask_span be positive");
  }
}

void PretrainConfig::validate() const {
  if (total_updates == 0) throw ConfigError("pretrain.total_updates must be positive");
  if (!(warmup_fraction > 0.0 && warmup_fraction < 1.0)) {
    throw ConfigError("pretrain.warmup_fraction must lie in (0, 1)");
  }
  if (num_negatives == 0) throw ConfigError("pretrain.num_negatives must be >= 1");
  if (!(similarity_temperature > 0.0)) throw ConfigError("pretrain.similarity_temperature must be > 0");
  if (batch_clips == 0) throw ConfigError("pretrain.batch_clips must be >= 1");
  if (!(chunk_s > 0.0)) throw ConfigError("pretrain.chunk_s must be > 0");
  if (!(valid_fraction > 0.0 && valid_fraction < 0.5)) {
    throw ConfigError("pretrain.valid_fraction must lie in (0, 0.5)");
  }
}

std::uint64_t PretrainConfig::validation_interval() const {
  if (validate_every > 0) return validate_every;
  return std::max<std::uint64_t>(1, total_updates / 100);
}

void FinetuneConfig::validate() const {
  if (batch_size == 0) throw ConfigError("finetune.batch_size must be >= 1");
  if (patience >= max_epochs) throw ConfigError("finetune.patience must be below max_epochs");
  if (pooling != "mean" && pooling != "max") throw ConfigError("finetune.pooling must be mean or max");
  if (head != "linear" && head != "mlp_relu") {
    throw ConfigError("finetune.head must be linear or mlp_relu");
  }
  if (folds < 2) throw ConfigError("finetune.folds must be >= 2");
  if (!(valid_fraction > 0.0 && valid_fraction < 0.5)) {
    throw ConfigError("finetune.valid_fraction must lie in (0, 0.5)");
  }
}

void RunConfig::validate() const {
  encoder.validate();
  quantizer.validate();
  context.validate();
  pretrain.validate();
  finetune.validate();
}

RunConfig make_profile(const std::string& name) {
  RunConfig c;
  c.profile = name;
  if (name == "base") return c;
  if (name != "desk") throw ConfigError("unknown profile '" + name + "' (expected base or desk)");

  c.encoder.channels = 8;
  c.quantizer.entries = 16;
  c.quantizer.entry_dim = 4;
  c.quantizer.output_dim = 8;
  // Reaches the temperature floor about 70% into the 300-update budget, as the
  // base decay does over 400k updates.
  c.quantizer.temperature_decay = 0.99336;
  c.context.num_blocks = 2;
  c.context.model_dim = 8;
  c.context.inner_dim = 32;
  c.context.num_heads = 2;
  c.context.pos_conv_kernel = 16;
  c.context.pos_conv_groups = 2;
  c.pretrain.total_updates = 300;
  c.pretrain.chunk_s = 1.0;
  c.pretrain.num_negatives = 20;
  c.finetune.warmup_steps = 10;
  // Learning rates scaled up for the few hundred updates a desk run gets.
  c.pretrain.peak_lr = 7e-3;
  c.finetune.peak_lr = 1e-2;
  return c;
}

ojson to_json(const EncoderConfig& c) { return fields_to_json(c); }
ojson to_json(const QuantizerConfig& c) { return fields_to_json(c); }
ojson to_json(const ContextConfig& c) { return fields_to_json(c); }
ojson to_json(const PretrainConfig& c) { return fields_to_json(c); }
ojson to_json(const FinetuneConfig& c) { return fields_to_json(c); }

ojson to_json(const RunConfig& c) {
  ojson j = ojson::object();
  j["profile"] = c.profile;
  j["seed"] = c.seed;
  j["deterministic"] = c.deterministic;
  j["encoder"] = to_json(c.encoder);
  j["quantizer"] = to_json(c.quantizer);
  j["context"] = to_json(c.context);
  j["pretrain"] = to_json(c.pretrain);
  j["finetune"] = to_json(c.finetune);
  return j;
}

void merge_json(EncoderConfig& c, const ojson& j) { merge_fields(c, j, "encoder"); }
void merge_json(QuantizerConfig& c, const ojson& j) { merge_fields(c, j, "quantizer"); }
void merge_json(ContextConfig& c, const ojson& j) { merge_fields(c, j, "context"); }
void merge_json(PretrainConfig& c, const ojson& j) { merge_fields(c, j, "pretrain"); }
void merge_json(FinetuneConfig& c, const ojson& j) { merge_fields(c, j, "finetune"); }

void merge_json(RunConfig& c, const ojson& j) {
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "profile") {
        // Applied by run_config_from_json before merging.
      } else if (key == "seed") {
        c.seed = value.get<std::uint64_t>();
      } else if (key == "deterministic") {
        c.deterministic = value.get<bool>();
      } else if (key == "encoder") {
        merge_json(c.encoder, value);
      } else if (key == "quantizer") {
        merge_json(c.quantizer, value);
      } else if (key == "context") {
        merge_json(c.context, value);
      } else if (key == "pretrain") {
        merge_json(c.pretrain, value);
      } else if (key == "finetune") {
        merge_json(c.finetune, value);
      } else {
        throw ConfigError("config: unknown key '" + key + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("config." + key + ": " + e.what());
    }
  }
}

RunConfig run_config_from_json(const ojson& j) {
  const std::string profile = j.is_object() && j.contains("profile")
                                  ? j["profile"].get<std::string>()
                                  : std::string("base");
  RunConfig c = make_profile(profile);
  merge_json(c, j);
  c.validate();
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  try {
    return run_config_from_json(ojson::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::string dump_config(const RunConfig& c) { return to_json(c).dump(2) + "\n"; }

}  // namespace vocrep
