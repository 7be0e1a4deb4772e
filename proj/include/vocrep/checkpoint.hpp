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
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vocrep/config.hpp"
#include "vocrep/model/params.hpp"
#include "vocrep/nn/optim.hpp"

namespace vocrep {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct TensorRecord {
  std::string name;
  nn::Shape shape;
  std::vector<float> values;
};

/// Binary container:
///   "VOC2" | u32 version | u64 n | n bytes of JSON header
///   then records {u16 name length, name, u8 dtype (0 = f32), u8 rank,
///                 u64 dims[rank], little-endian values}
/// The header carries the run configuration, update step, validation loss
/// and the number of leading parameter records; optimizer moments follow as
/// records named "adam.m.<param>" / "adam.v.<param>".
struct Checkpoint {
  ojson config = ojson::object();
  std::uint64_t update_step = 0;
  std::optional<double> validation_loss;
  std::vector<TensorRecord> params;
  std::vector<TensorRecord> optimizer;
  std::uint64_t optimizer_step = 0;

  const TensorRecord* find(const std::string& name) const;
};

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& c);
Checkpoint deserialize_checkpoint(std::span<const std::uint8_t> bytes);
void write_checkpoint(const std::filesystem::path& path, const Checkpoint& c);
Checkpoint read_checkpoint(const std::filesystem::path& path);

/// Snapshot of a parameter list (and optionally its Adam states).
Checkpoint make_checkpoint(const RunConfig& cfg, const model::NamedParams<float>& params,
                           std::uint64_t update_step, std::optional<double> validation_loss,
                           const std::vector<nn::AdamState<float>>* adam = nullptr);

struct LoadReport {
  std::vector<std::string> loaded;
  /// Declared by the model but absent from the file.
  std::vector<std::string> missing;
  /// Present in the file but unknown to the model.
  std::vector<std::string> unused;
};

/// Copies every same-name tensor into `params`. Any shape mismatch throws
/// IncompatibleCheckpointError listing all offending names with both shapes.
/// With `require_all`, missing names are also an error.
LoadReport load_params(const Checkpoint& c, model::NamedParams<float>& params, bool require_all);

}  // namespace vocrep
