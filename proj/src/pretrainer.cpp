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

#include "vocrep/pretrainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "vocrep/error.hpp"
#include "vocrep/nn/ops.hpp"

namespace vocrep::pretrain {

double lr_at(std::uint64_t step, const PretrainConfig& cfg) {
  const std::uint64_t total = cfg.total_updates;
  if (step > total) {
    throw ArgumentError("lr_at: step " + std::to_string(step) + " beyond total " +
                        std::to_string(total));
  }
  const auto warmup_end =
      static_cast<std::uint64_t>(std::llround(cfg.warmup_fraction * static_cast<double>(total)));
  if (warmup_end > 0 && step <= warmup_end) {
    return cfg.peak_lr * static_cast<double>(step) / static_cast<double>(warmup_end);
  }
  if (warmup_end >= total) return 0.0;
  return cfg.peak_lr * static_cast<double>(total - step) / static_cast<double>(total - warmup_end);
}

std::vector<std::size_t> sample_candidates(std::size_t masked, std::size_t k, Rng& rng) {
  std::vector<std::size_t> out;
  out.reserve(masked * (k + 1));
  std::vector<std::size_t> others;
  for (std::size_t i = 0; i < masked; ++i) {
    out.push_back(i);
    const std::size_t n_other = masked - 1;
    if (n_other == 0) {
      out.insert(out.end(), k, i);
    } else if (n_other > k) {
      others.clear();
      for (std::size_t j = 0; j < masked; ++j)
        if (j != i) others.push_back(j);
      for (std::size_t s = 0; s < k; ++s) {
        const auto pick = s + static_cast<std::size_t>(rng.below(n_other - s));
        std::swap(others[s], others[pick]);
        out.push_back(others[s]);
      }
    } else {
      for (std::size_t s = 0; s < k; ++s) {
        auto j = static_cast<std::size_t>(rng.below(n_other));
        if (j >= i) ++j;
        out.push_back(j);
      }
    }
  }
  return out;
}

template <typename T>
Tensor<T> contrastive_loss(const Tensor<T>& context, const Tensor<T>& targets,
                           const std::vector<std::size_t>& candidates, std::size_t k,
                           double kappa) {
  if (!(kappa > 0.0)) throw ArgumentError("contrastive_loss: temperature must be > 0");
  if (context.rank() != 2 || context.dim(0) == 0) {
    throw ArgumentError("contrastive_loss: need at least one masked frame");
  }
  const std::size_t m = context.dim(0);
  if (candidates.size() != m * (k + 1)) {
    throw ArgumentError("contrastive_loss: expected " + std::to_string(m * (k + 1)) +
                        " candidate indices, got " + std::to_string(candidates.size()));
  }
  const auto sims = nn::cosine_matrix(context, targets);
  const auto logits = nn::scale(nn::gather_columns(sims, candidates, k + 1), static_cast<T>(1.0 / kappa));
  return nn::cross_entropy(logits, std::vector<std::size_t>(m, 0));
}

std::uint64_t select_best(const std::vector<std::pair<std::uint64_t, double>>& history) {
  if (history.empty()) throw ArgumentError("select_best: empty history");
  auto best = history.front();
  for (const auto& h : history)
    if (h.second < best.second) best = h;
  return best.first;
}

LoadReport initialize(Model<float>& m, const InitStrategy& strategy, std::uint64_t seed) {
  if (strategy.kind == InitStrategy::Kind::kScratch) {
    model::init_scratch(m.params(), seed);
    LoadReport r;
    for (const auto& [name, _] : m.params()) r.missing.push_back(name);
    return r;
  }
  // Fill everything first so names absent from the file still get a defined
  // value; load_params then overwrites and fails on any mismatch.
  model::init_scratch(m.params(), seed);
  return load_params(read_checkpoint(strategy.checkpoint), m.params(), true);
}

BatchLoss batch_loss(const Model<float>& m, const std::vector<const std::vector<float>*>& clips,
                     double temperature, BatchRngs& rngs) {
  if (clips.empty()) throw ArgumentError("batch_loss: empty batch");
  const auto& cfg = m.config();
  const std::size_t k = cfg.pretrain.num_negatives;
  Tensor<float> weighted_sum;
  std::vector<Tensor<float>> probs;
  std::size_t total_masked = 0;

  for (const auto* clip : clips) {
    const auto wave = Tensor<float>::from({clip->size()}, *clip);
    const auto lat = m.latent(wave);
    const std::size_t frames = lat.dim(0);
    const auto mask = model::sample_mask(frames, cfg.context.mask_prob, cfg.context.mask_span, rngs.mask);
    const auto x = model::apply_mask(m.project(lat), mask, m.context.mask_embedding());
    const auto c = m.context.forward(x, rngs.use_dropout ? &rngs.dropout : nullptr);

    std::vector<std::size_t> idx;
    for (std::size_t t = 0; t < frames; ++t)
      if (mask[t]) idx.push_back(t);
    const auto predictions = m.to_target_space(nn::select_rows(c, idx));
    const auto noise = rngs.use_gumbel ? m.quantizer.sample_noise(idx.size(), rngs.gumbel)
                                       : std::vector<float>{};
    const auto q = m.quantizer.forward(nn::select_rows(lat, idx), temperature, noise);
    const auto cand = sample_candidates(idx.size(), k, rngs.negatives);
    const auto lc = nn::scale(
        contrastive_loss(predictions, q.vectors, cand, k, cfg.pretrain.similarity_temperature),
        static_cast<float>(idx.size()));
    weighted_sum = total_masked == 0 ? lc : nn::add(weighted_sum, lc);
    total_masked += idx.size();
    probs.push_back(q.probs);
  }

  BatchLoss out;
  out.masked_frames = total_masked;
  out.contrastive = nn::scale(weighted_sum, 1.0f / static_cast<float>(total_masked));
  const std::size_t gv = cfg.quantizer.groups * cfg.quantizer.entries;
  out.diversity = model::diversity_loss(nn::concat_rows(probs), cfg.quantizer.groups, cfg.quantizer.entries);
  out.code_perplexity = static_cast<double>(gv) * (1.0 - static_cast<double>(out.diversity.item()));
  out.total = cfg.pretrain.diversity_weight == 0.0
                  ? out.contrastive
                  : nn::add(out.contrastive,
                            nn::scale(out.diversity, static_cast<float>(cfg.pretrain.diversity_weight)));
  return out;
}

Pretrainer::Pretrainer(const RunConfig& cfg, Model<float>& m, std::vector<std::vector<float>> train,
                       std::vector<std::vector<float>> valid)
    : cfg_(cfg),
      model_(m),
      train_(std::move(train)),
      valid_(std::move(valid)),
      adam_([&] {
        std::vector<Tensor<float>> ps;
        for (auto& [_, t] : m.params()) ps.push_back(t);
        return ps;
      }()) {
  cfg_.validate();
  if (train_.empty()) throw EmptyCorpusError("pretrain: no training chunks");
}

std::vector<const std::vector<float>*> Pretrainer::next_batch() {
  std::vector<const std::vector<float>*> batch;
  const std::size_t want = std::min(cfg_.pretrain.batch_clips, train_.size());
  while (batch.size() < want) {
    if (cursor_ == order_.size()) {
      order_.resize(train_.size());
      for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
      Rng rng = Rng::substream(cfg_.seed, "data", epoch_++);
      rng.shuffle(order_);
      cursor_ = 0;
    }
    batch.push_back(&train_[order_[cursor_++]]);
  }
  return batch;
}

StepLosses Pretrainer::step() {
  if (step_ >= cfg_.pretrain.total_updates) throw ArgumentError("pretrain: all updates already done");
  const auto batch = next_batch();
  const double temperature = model::anneal_temperature(step_, cfg_.quantizer);
  BatchRngs rngs{Rng::substream(cfg_.seed, "mask", step_), Rng::substream(cfg_.seed, "gumbel", step_),
                 Rng::substream(cfg_.seed, "negatives", step_),
                 Rng::substream(cfg_.seed, "dropout", step_), true, !cfg_.deterministic};
  auto loss = batch_loss(model_, batch, temperature, rngs);

  StepLosses s;
  s.step = step_ + 1;
  s.temperature = temperature;
  s.total = loss.total.item();
  s.contrastive = loss.contrastive.item();
  s.diversity = loss.diversity.item();
  s.masked_frames = loss.masked_frames;
  s.code_perplexity = loss.code_perplexity;
  if (!std::isfinite(s.total)) {
    std::ostringstream msg;
    msg << "pretrain: non-finite loss at update " << s.step << " (contrastive " << s.contrastive
        << ", diversity " << s.diversity << ", temperature " << temperature << ", lr "
        << lr_at(s.step, cfg_.pretrain) << ")";
    throw TrainingDivergedError(msg.str());
  }

  adam_.zero_grad();
  loss.total.backward();
  nn::clip_grad_norm(adam_.params(), cfg_.pretrain.grad_clip);
  s.lr = lr_at(s.step, cfg_.pretrain);
  adam_.step(s.lr);
  ++step_;
  return s;
}

double Pretrainer::evaluate(const std::vector<std::vector<float>>& clips) const {
  if (clips.empty()) throw ArgumentError("evaluate: no clips");
  BatchRngs rngs{Rng::substream(cfg_.seed, "eval.mask"), Rng::substream(cfg_.seed, "eval.gumbel"),
                 Rng::substream(cfg_.seed, "eval.negatives"), Rng::substream(cfg_.seed, "eval.dropout"),
                 false, false};
  const double temperature = model::anneal_temperature(step_, cfg_.quantizer);
  double sum = 0.0;
  std::size_t batches = 0;
  for (std::size_t start = 0; start < clips.size(); start += cfg_.pretrain.batch_clips) {
    std::vector<const std::vector<float>*> batch;
    for (std::size_t i = start; i < std::min(clips.size(), start + cfg_.pretrain.batch_clips); ++i)
      batch.push_back(&clips[i]);
    sum += batch_loss(model_, batch, temperature, rngs).total.item();
    ++batches;
  }
  return sum / static_cast<double>(batches);
}

PretrainResult run_pretraining(const RunConfig& cfg, Model<float>& m,
                               std::vector<std::vector<float>> train,
                               std::vector<std::vector<float>> valid, const RunOptions& opt) {
  Pretrainer trainer(cfg, m, std::move(train), std::move(valid));
  const auto& pc = cfg.pretrain;
  const std::uint64_t interval = pc.validation_interval();
  if (opt.out_dir) std::filesystem::create_directories(*opt.out_dir);

  PretrainResult result;
  result.initial_train_loss = trainer.evaluate(trainer.train_clips());
  std::vector<std::pair<std::uint64_t, double>> validations;
  for (std::uint64_t i = 0; i < pc.total_updates; ++i) {
    StepLosses s = trainer.step();
    const bool last = s.step == pc.total_updates;
    if (s.step % interval == 0 || last) {
      const double v = trainer.has_validation() ? trainer.validation_loss() : s.total;
      s.validation = v;
      validations.emplace_back(s.step, v);
      if (select_best(validations) == s.step) {
        result.best = make_checkpoint(cfg, m.params(), s.step, v);
        result.best_step = s.step;
        result.best_validation = v;
      }
    }
    if (opt.out_dir && pc.checkpoint_every > 0 && s.step % pc.checkpoint_every == 0) {
      write_checkpoint(*opt.out_dir / ("step-" + std::to_string(s.step) + ".ckpt"),
                       make_checkpoint(cfg, m.params(), s.step, s.validation, &trainer.optimizer().states()));
    }
    if (opt.on_step) opt.on_step(s);
    result.history.push_back(s);
  }
  result.final_train_loss = trainer.evaluate(trainer.train_clips());
  result.last = make_checkpoint(cfg, m.params(), trainer.updates_done(),
                                result.history.back().validation, &trainer.optimizer().states());
  if (opt.out_dir) {
    write_checkpoint(*opt.out_dir / "best.ckpt", result.best);
    write_checkpoint(*opt.out_dir / "last.ckpt", result.last);
    std::ofstream(*opt.out_dir / "loss.csv", std::ios::binary) << loss_csv(result.history);
  }
  return result;
}

std::string loss_csv(const std::vector<StepLosses>& history) {
  std::string out = "step,lr,temperature,total,contrastive,diversity,validation\n";
  char buf[256];
  for (const auto& s : history) {
    std::snprintf(buf, sizeof buf, "%llu,%.9g,%.9g,%.9g,%.9g,%.9g,",
                  static_cast<unsigned long long>(s.step), s.lr, s.temperature, s.total,
                  s.contrastive, s.diversity);
    out += buf;
    if (s.validation) {
      std::snprintf(buf, sizeof buf, "%.9g", *s.validation);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

template Tensor<float> contrastive_loss(const Tensor<float>&, const Tensor<float>&,
                                        const std::vector<std::size_t>&, std::size_t, double);
template Tensor<double> contrastive_loss(const Tensor<double>&, const Tensor<double>&,
                                         const std::vector<std::size_t>&, std::size_t, double);

}  // namespace vocrep::pretrain
