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

#include <cmath>
#include <map>
#include <set>

#include <gtest/gtest.h>

#include "vocrep/config.hpp"
#include "vocrep/error.hpp"
#include "vocrep/finetuner.hpp"
#include "vocrep/synth.hpp"

using namespace vocrep;
using namespace vocrep::finetune;
using TD = nn::Tensor<double>;

namespace {

RunConfig quick_config() {
  auto cfg = make_profile("desk");
  cfg.finetune.max_epochs = 4;
  cfg.finetune.patience = 2;
  cfg.finetune.batch_size = 4;
  cfg.deterministic = true;
  return cfg;
}

std::vector<LabeledWave> sine_noise(std::size_t n, double seconds, std::uint64_t seed) {
  std::vector<LabeledWave> out;
  std::size_t i = 0;
  for (auto& c : synth::sine_vs_noise(n, seconds, seed)) {
    out.push_back({std::move(c.samples), c.label == "noise" ? 0u : 1u, "c" + std::to_string(i++)});
  }
  return out;
}

audio::FoldSplit split_for(const std::vector<LabeledWave>& clips, int k, std::uint64_t seed) {
  audio::Manifest m;
  for (const auto& c : clips) m.add({c.path, "toy", std::to_string(c.label), 0.0, 0});
  return audio::split_folds(m, k, seed, true);
}

}  // namespace

TEST(Pool, MeanAndMax) {
  const auto x = TD::from({3, 2}, {1, -4, 2, 5, 6, 0});
  const auto mean = pool(x, "mean");
  EXPECT_EQ(mean.shape(), nn::Shape{2});
  EXPECT_DOUBLE_EQ(mean[0], 3.0);
  EXPECT_DOUBLE_EQ(mean[1], 1.0 / 3.0);
  const auto mx = pool(x, "max");
  EXPECT_DOUBLE_EQ(mx[0], 6.0);
  EXPECT_DOUBLE_EQ(mx[1], 5.0);
  EXPECT_THROW(pool(x, "attn"), ArgumentError);
  EXPECT_THROW(pool(TD::zeros({0, 2}), "mean"), ArgumentError);
}

TEST(Head, ShapesAndParameterNames) {
  Head<double> lin("linear", 8, 3);
  ASSERT_EQ(lin.params().size(), 2u);
  EXPECT_EQ(lin.params()[0].first, "head.out.weight");
  EXPECT_EQ(lin.params()[0].second.shape(), (nn::Shape{3, 8}));
  EXPECT_EQ(lin.forward(TD::zeros({8})).shape(), (nn::Shape{1, 3}));
  EXPECT_EQ(lin.forward(TD::zeros({5, 8})).shape(), (nn::Shape{5, 3}));
  EXPECT_THROW(lin.forward(TD::zeros({7})), ConfigError);

  Head<double> mlp("mlp_relu", 4, 2);
  ASSERT_EQ(mlp.params().size(), 4u);
  EXPECT_EQ(mlp.params()[0].second.shape(), (nn::Shape{4, 4}));
  EXPECT_EQ(mlp.params()[2].second.shape(), (nn::Shape{2, 4}));
}

TEST(Schedule, FineTuneWarmupThenDecay) {
  FinetuneConfig f;  // 500 warmup steps to 1e-4
  EXPECT_EQ(finetune_lr_at(0, 2000, f), 0.0);
  EXPECT_DOUBLE_EQ(finetune_lr_at(250, 2000, f), 5e-5);
  EXPECT_DOUBLE_EQ(finetune_lr_at(500, 2000, f), 1e-4);
  EXPECT_DOUBLE_EQ(finetune_lr_at(1250, 2000, f), 5e-5);
  EXPECT_EQ(finetune_lr_at(2000, 2000, f), 0.0);
  EXPECT_THROW(finetune_lr_at(2001, 2000, f), ArgumentError);
  // Shorter than the warmup: ramp, then 0 at the end.
  EXPECT_DOUBLE_EQ(finetune_lr_at(100, 300, f), 2e-5);
  EXPECT_EQ(finetune_lr_at(300, 300, f), 0.0);
}

TEST(EarlyStopping, HaltsPatienceEpochsPastBest) {
  struct Script {
    std::vector<double> scores;
    std::size_t stop_epoch, best_epoch;
  };
  const std::vector<Script> scripts{
      {{0.5, 0.6, 0.6, 0.6, 0.6, 0.6, 0.6}, 7, 2},
      {{0.5, 0.6, 0.7, 0.6, 0.6, 0.6, 0.6, 0.6, 0.9}, 8, 3},
      {{0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.9}, 6, 1},  // ties do not count
      {{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7}, 0, 7},   // never stops
      {{0.9, 0.1, 0.95, 0.2, 0.2, 0.2, 0.2, 0.2}, 8, 3},
  };
  for (const auto& s : scripts) {
    EarlyStopping es(5);
    std::size_t stopped = 0;
    for (double v : s.scores) {
      if (es.update(v)) {
        stopped = es.epochs_seen();
        break;
      }
    }
    EXPECT_EQ(stopped, s.stop_epoch);
    EXPECT_EQ(es.best_epoch(), s.best_epoch);
    if (stopped) EXPECT_EQ(stopped - es.best_epoch(), 5u);
  }
}

TEST(Holdout, StratifiedPerClass) {
  std::vector<std::size_t> labels;
  for (int i = 0; i < 30; ++i) labels.push_back(0);
  for (int i = 0; i < 10; ++i) labels.push_back(1);
  for (int i = 0; i < 2; ++i) labels.push_back(2);
  labels.push_back(3);
  const auto [train, valid] = stratified_holdout(labels, 0.1, 1, 0);
  std::map<std::size_t, int> per;
  for (auto i : valid) ++per[labels[i]];
  EXPECT_EQ(per[0], 3);
  EXPECT_EQ(per[1], 1);
  EXPECT_EQ(per[2], 1);  // at least one when the class has two members
  EXPECT_EQ(per[3], 0);
  EXPECT_EQ(train.size() + valid.size(), labels.size());
}

TEST(Classifier, EmbedPadsShortClips) {
  const auto cfg = quick_config();
  Classifier clf(cfg, 2);
  model::init_scratch(clf.backbone().params(), 1);
  const auto e = clf.embed(std::vector<float>(100, 0.1f));
  EXPECT_EQ(e.shape(), nn::Shape{cfg.context.model_dim});
}

TEST(TrainFold, FrozenEncoderKeepsBackbone) {
  auto cfg = quick_config();
  cfg.finetune.freeze_encoder = true;
  const auto clips = sine_noise(12, 0.1, 3);
  Classifier clf(cfg, 2);
  model::init_scratch(clf.backbone().params(), 1);
  model::init_scratch(clf.head().params(), 1);
  std::vector<float> before;
  for (const auto& [n, t] : clf.backbone().params()) before.insert(before.end(), t.values().begin(), t.values().end());
  const auto r = train_fold(clf, {clips.begin(), clips.begin() + 10}, {clips.begin() + 10, clips.end()}, cfg);
  std::vector<float> after;
  for (const auto& [n, t] : clf.backbone().params()) after.insert(after.end(), t.values().begin(), t.values().end());
  EXPECT_EQ(before, after);
  EXPECT_GE(r.best_epoch, 1u);
  EXPECT_LE(r.history.size(), 4u);
}

TEST(TrainFold, RestoredWeightsReproduceBestUar) {
  auto cfg = quick_config();
  cfg.finetune.max_epochs = 6;
  const auto clips = sine_noise(24, 0.1, 5);
  const std::vector<LabeledWave> train(clips.begin(), clips.begin() + 16), valid(clips.begin() + 16, clips.end());
  Classifier clf(cfg, 2);
  model::init_scratch(clf.backbone().params(), 2);
  model::init_scratch(clf.head().params(), 2);
  const auto r = train_fold(clf, train, valid, cfg);
  const auto pred = clf.predict(valid);
  std::vector<std::size_t> truth;
  for (const auto& c : valid) truth.push_back(c.label);
  EXPECT_EQ(metrics::uar(metrics::ConfusionMatrix::from_labels(truth, pred, 2)), r.best_valid_uar);
  EXPECT_LE(r.history.size() - r.best_epoch, cfg.finetune.patience);
}

TEST(TrainFold, SingleClassIsDegenerate) {
  const auto cfg = quick_config();
  auto clips = sine_noise(4, 0.1, 3);
  for (auto& c : clips) c.label = 0;
  Classifier clf(cfg, 2);
  EXPECT_THROW(train_fold(clf, clips, {}, cfg), DegenerateTaskError);
}

TEST(CrossValidate, EveryClipTestedOnce) {
  const auto cfg = quick_config();
  const auto clips = sine_noise(16, 0.1, 4);
  const auto folds = split_for(clips, 4, 2);
  CvOptions opt;
  opt.dataset = "toy";
  int callbacks = 0;
  opt.on_fold = [&](int, const FoldTraining&, const metrics::Scores&) { ++callbacks; };
  const auto r = cross_validate(clips, {"noise", "sine"}, folds, cfg, opt);
  EXPECT_EQ(callbacks, 4);
  ASSERT_EQ(r.folds.size(), 4u);
  std::vector<int> seen(clips.size(), 0);
  for (const auto& p : r.predictions) {
    ++seen[p.index];
    EXPECT_EQ(folds.assignments[p.index], p.fold);
    EXPECT_EQ(p.truth, clips[p.index].label);
  }
  for (int s : seen) EXPECT_EQ(s, 1);
  EXPECT_EQ(r.pooled.total(), 16);
  EXPECT_EQ(r.config_fingerprint.size(), 16u);
}

TEST(CrossValidate, RejectsMismatchedSplit) {
  const auto cfg = quick_config();
  const auto clips = sine_noise(8, 0.1, 4);
  auto folds = split_for(clips, 2, 1);
  folds.assignments.pop_back();
  EXPECT_THROW(cross_validate(clips, {"noise", "sine"}, folds, cfg), SplitError);
}

TEST(Probe, SeparatesBlobs) {
  auto cfg = quick_config();
  cfg.finetune.max_epochs = 20;
  cfg.finetune.patience = 5;
  const auto b = synth::gaussian_blobs(60, 16, 2, 10.0, 1);
  ProbeFeatures f;
  f.dim = b.dim;
  f.rows = b.points;
  std::vector<std::size_t> labels;
  audio::Manifest m;
  for (std::size_t i = 0; i < b.n; ++i) {
    f.paths.push_back("p" + std::to_string(i));
    labels.push_back(b.labels[i] == b.labels[0] ? 0 : 1);
    m.add({f.paths.back(), "blobs", b.labels[i], 0.0, 0});
  }
  const auto r = probe_train(f, labels, {"a", "b"}, audio::split_folds(m, 4, 0, true), cfg);
  EXPECT_GE(r.aggregate.uar.mean, 0.95);
}

TEST(Probe, CsvRoundTripAndRaggedRows) {
  ProbeFeatures f;
  f.dim = 2;
  f.paths = {"a,b.wav", "c.wav"};
  f.rows = {0.5, -1.25, 3.0, 1e-7};
  const auto back = ProbeFeatures::parse_csv(f.to_csv());
  EXPECT_EQ(back.paths, f.paths);
  EXPECT_EQ(back.rows, f.rows);
  EXPECT_THROW(ProbeFeatures::parse_csv("path,f0,f1\nx,1\n"), ArgumentError);
}
