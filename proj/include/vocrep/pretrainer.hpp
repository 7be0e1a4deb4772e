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
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "vocrep/checkpoint.hpp"
#include "vocrep/config.hpp"
#include "vocrep/model/model.hpp"
#include "vocrep/nn/optim.hpp"

namespace vocrep::pretrain {

using model::Model;
using nn::Tensor;

/// Linear warmup from 0 to peak over round(warmup_fraction * total) updates,
/// then linear decay to 0 at `total_updates`.
double lr_at(std::uint64_t step, const PretrainConfig& cfg);

/// Candidate target rows for each of `masked` query frames: row i holds i
/// itself followed by `k` distractors drawn uniformly from the other masked
/// frames (without replacement when more than k are available, with
/// replacement otherwise). A lone masked frame can only be its own distractor.
std::vector<std::size_t> sample_candidates(std::size_t masked, std::size_t k, Rng& rng);

/// Mean over query rows of -log softmax(cos(c_i, q_j) / kappa)[0], where j
/// runs over `candidates[i * (k + 1) .. (i + 1) * (k + 1))` and the first
/// entry is the positive. `context` is [M x d], `targets` [N x d].
template <typename T>
Tensor<T> contrastive_loss(const Tensor<T>& context, const Tensor<T>& targets,
                           const std::vector<std::size_t>& candidates, std::size_t k, double kappa);

/// Step with the lowest loss; earlier steps win ties.
std::uint64_t select_best(const std::vector<std::pair<std::uint64_t, double>>& history);

struct InitStrategy {
  enum class Kind { kScratch, kWarmStart };
  Kind kind = Kind::kScratch;
  std::filesystem::path checkpoint;
};

/// Scratch: seeded init_scratch. Warm start: loads every same-name tensor
/// (all declared names must be present with matching shapes).
LoadReport initialize(Model<float>& m, const InitStrategy& strategy, std::uint64_t seed);

struct StepLosses {
  std::uint64_t step = 0;  // update number, 1-based
  double lr = 0.0;
  double temperature = 0.0;
  double total = 0.0;
  double contrastive = 0.0;
  double diversity = 0.0;
  std::size_t masked_frames = 0;
  /// sum over groups of exp(H(mean code distribution)) in this batch.
  double code_perplexity = 0.0;
  std::optional<double> validation;
};

struct BatchLoss {
  Tensor<float> total, contrastive, diversity;
  std::size_t masked_frames = 0;
  double code_perplexity = 0.0;
};

/// Random sources for one batch evaluation.
struct BatchRngs {
  Rng mask, gumbel, negatives, dropout;
  bool use_gumbel = true;
  bool use_dropout = true;
};

/// Forward pass of the pretraining objective over a batch of clips.
BatchLoss batch_loss(const Model<float>& m, const std::vector<const std::vector<float>*>& clips,
                     double temperature, BatchRngs& rngs);

/// Owns the optimizer and the data order of one pretraining run.
class Pretrainer {
 public:
  /// `train` and `valid` are equal-length chunks at 16 kHz.
  Pretrainer(const RunConfig& cfg, Model<float>& m, std::vector<std::vector<float>> train,
             std::vector<std::vector<float>> valid);

  /// One optimizer update. Throws TrainingDivergedError on a non-finite loss.
  StepLosses step();

  /// Objective on `clips` without dropout or Gumbel noise, with masks and
  /// distractors drawn from a fixed substream so repeated calls are comparable.
  double evaluate(const std::vector<std::vector<float>>& clips) const;
  double validation_loss() const { return evaluate(valid_); }
  bool has_validation() const { return !valid_.empty(); }

  std::uint64_t updates_done() const { return step_; }
  const nn::Adam<float>& optimizer() const { return adam_; }
  const std::vector<std::vector<float>>& train_clips() const { return train_; }

 private:
  std::vector<const std::vector<float>*> next_batch();

  RunConfig cfg_;
  Model<float>& model_;
  std::vector<std::vector<float>> train_, valid_;
  nn::Adam<float> adam_;
  std::uint64_t step_ = 0;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
  std::uint64_t epoch_ = 0;
};

struct PretrainResult {
  std::vector<StepLosses> history;
  std::uint64_t best_step = 0;
  double best_validation = 0.0;
  double initial_train_loss = 0.0;
  double final_train_loss = 0.0;
  /// Parameters at best_step (the last step when no validation clips exist).
  Checkpoint best;
  Checkpoint last;
};

struct RunOptions {
  /// When set, writes loss.csv, best.ckpt, last.ckpt and periodic
  /// step-<n>.ckpt files here.
  std::optional<std::filesystem::path> out_dir;
  std::function<void(const StepLosses&)> on_step;
};

/// Full run: total_updates steps, validation every validation_interval()
/// updates (and after the last), best checkpoint by validation loss.
PretrainResult run_pretraining(const RunConfig& cfg, Model<float>& m,
                               std::vector<std::vector<float>> train,
                               std::vector<std::vector<float>> valid, const RunOptions& opt = {});

std::string loss_csv(const std::vector<StepLosses>& history);

}  // namespace vocrep::pretrain
