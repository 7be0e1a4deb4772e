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
#include <vector>

#include "vocrep/audio_io.hpp"
#include "vocrep/checkpoint.hpp"
#include "vocrep/config.hpp"
#include "vocrep/metrics.hpp"
#include "vocrep/model/model.hpp"
#include "vocrep/model/params.hpp"

namespace vocrep::finetune {

using model::Model;
using model::NamedParams;
using nn::Tensor;

/// [T' x d] -> [d]. "mean" averages frames, "max" takes the per-dimension
/// maximum. Throws ArgumentError on zero frames or an unknown mode.
template <typename T>
Tensor<T> pool(const Tensor<T>& frames, const std::string& mode);

/// Classification head over pooled features. "linear" is one affine map
/// (head.out.*); "mlp_relu" is affine -> ReLU -> affine with hidden width
/// equal to the input width (head.fc1.*, head.fc2.*).
template <typename T>
class Head {
 public:
  Head(const std::string& kind, std::size_t input_dim, std::size_t num_classes);

  /// [B x input_dim] or [input_dim] -> [B x num_classes]. Throws ConfigError
  /// when the input width does not match.
  Tensor<T> forward(const Tensor<T>& pooled) const;

  NamedParams<T>& params() { return params_; }
  const NamedParams<T>& params() const { return params_; }
  std::size_t input_dim() const { return input_dim_; }
  std::size_t num_classes() const { return num_classes_; }
  const std::string& kind() const { return kind_; }

 private:
  std::string kind_;
  std::size_t input_dim_, num_classes_;
  NamedParams<T> params_;
};

extern template class Head<float>;
extern template class Head<double>;

/// Linear warmup to peak_lr over warmup_steps, then linear decay to 0 at
/// total_steps. When total_steps <= warmup_steps the decay never starts: the
/// rate follows the warmup ramp and drops to 0 at total_steps.
double finetune_lr_at(std::uint64_t step, std::uint64_t total_steps, const FinetuneConfig& cfg);

/// Tracks validation UAR per epoch; an epoch counts as an improvement only if
/// it beats the best so far strictly.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience) : patience_(patience) {}

  /// Records the score of the next epoch (1-based). Returns true when
  /// training should stop after this epoch.
  bool update(double score);

  bool improved_last() const { return improved_last_; }
  std::size_t best_epoch() const { return best_epoch_; }
  double best_score() const { return best_; }
  std::size_t epochs_seen() const { return epochs_; }

 private:
  std::size_t patience_;
  std::size_t epochs_ = 0;
  std::size_t best_epoch_ = 0;
  double best_ = 0.0;
  bool improved_last_ = false;
};

struct LabeledWave {
  std::vector<float> samples;  // 16 kHz
  std::size_t label = 0;
  std::string path;
};

/// Loads every labeled entry of `m` (resampled, capped at max_clip_s).
/// Labels are indexed by their sorted position in `class_names`, which is
/// filled from the manifest. Throws ArgumentError when an entry has no label.
std::vector<LabeledWave> load_labeled(const audio::Manifest& m, double max_clip_s,
                                      std::vector<std::string>& class_names);

/// Audio classifier: a copy of the backbone plus a head.
class Classifier {
 public:
  Classifier(const RunConfig& cfg, std::size_t num_classes);

  Model<float>& backbone() { return backbone_; }
  const Model<float>& backbone() const { return backbone_; }
  Head<float>& head() { return head_; }
  const Head<float>& head() const { return head_; }

  /// Pooled context embedding of one clip (no dropout). Clips shorter than
  /// the encoder's receptive field are zero-padded up to it.
  Tensor<float> embed(const std::vector<float>& wave, Rng* dropout_rng = nullptr) const;
  std::vector<std::size_t> predict(const std::vector<LabeledWave>& clips) const;

  /// Backbone and head parameters under their registry names.
  NamedParams<float> all_params() const;

 private:
  RunConfig cfg_;
  Model<float> backbone_;
  Head<float> head_;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double valid_uar = 0.0;
  double lr = 0.0;
};

struct FoldTraining {
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  double best_valid_uar = 0.0;
  double final_train_accuracy = 0.0;
};

/// Trains `clf` with cross-entropy in shuffled mini-batches, monitoring
/// validation UAR each epoch, and restores the best epoch's weights before
/// returning. `stream` separates the data order of independent runs.
/// Throws DegenerateTaskError when the training labels hold a single class.
FoldTraining train_fold(Classifier& clf, const std::vector<LabeledWave>& train,
                        const std::vector<LabeledWave>& valid, const RunConfig& cfg,
                        std::uint64_t stream = 0);

/// Seeded stratified split of indices into (train, valid): each class gives
/// round(fraction * size) members (at least one when it has two or more) to
/// the validation side.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_holdout(
    const std::vector<std::size_t>& labels, double fraction, std::uint64_t seed, std::uint64_t stream);

struct CvOptions {
  std::string dataset;
  /// Backbone initialization; scratch init from cfg.seed when absent.
  std::optional<Checkpoint> base;
  std::function<void(int fold, const FoldTraining&, const metrics::Scores&)> on_fold;
};

/// For each fold: train on the remaining folds (minus a stratified inner
/// holdout for early stopping), evaluate on the fold. Throws SplitError on an
/// empty fold or a split that does not cover the clips.
metrics::MetricsReport cross_validate(const std::vector<LabeledWave>& clips,
                                      const std::vector<std::string>& class_names,
                                      const audio::FoldSplit& folds, const RunConfig& cfg,
                                      const CvOptions& opt = {});

struct ProbeFeatures {
  std::vector<std::string> paths;
  std::size_t dim = 0;
  std::vector<double> rows;  // [paths.size() x dim]

  /// CSV with header path,f0,f1,... Throws ArgumentError on ragged rows.
  static ProbeFeatures parse_csv(const std::string& text);
  static ProbeFeatures read_csv(const std::filesystem::path& path);
  std::string to_csv() const;
};

/// Same protocol as cross_validate with only an mlp_relu head over fixed
/// features. `labels[i]` belongs to feature row i.
metrics::MetricsReport probe_train(const ProbeFeatures& features, const std::vector<std::size_t>& labels,
                                   const std::vector<std::string>& class_names,
                                   const audio::FoldSplit& folds, const RunConfig& cfg,
                                   const CvOptions& opt = {});

}  // namespace vocrep::finetune
