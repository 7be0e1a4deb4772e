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

#include "vocrep/finetuner.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include "vocrep/error.hpp"
#include "vocrep/nn/ops.hpp"
#include "vocrep/nn/optim.hpp"

namespace vocrep::finetune {

template <typename T>
Tensor<T> pool(const Tensor<T>& frames, const std::string& mode) {
  if (frames.rank() != 2 || frames.dim(0) == 0) throw ArgumentError("pool: need at least one frame");
  if (mode == "mean") return nn::mean_rows(frames);
  if (mode == "max") return nn::max_rows(frames);
  throw ArgumentError("pool: unknown mode '" + mode + "'");
}

template <typename T>
Head<T>::Head(const std::string& kind, std::size_t input_dim, std::size_t num_classes)
    : kind_(kind), input_dim_(input_dim), num_classes_(num_classes) {
  if (input_dim == 0 || num_classes == 0) throw ConfigError("head: zero input or class count");
  if (kind == "linear") {
    model::register_param(params_, "head.out.weight", {num_classes, input_dim});
    model::register_param(params_, "head.out.bias", {num_classes});
  } else if (kind == "mlp_relu") {
    model::register_param(params_, "head.fc1.weight", {input_dim, input_dim});
    model::register_param(params_, "head.fc1.bias", {input_dim});
    model::register_param(params_, "head.fc2.weight", {num_classes, input_dim});
    model::register_param(params_, "head.fc2.bias", {num_classes});
  } else {
    throw ConfigError("head: unknown kind '" + kind + "' (expected linear or mlp_relu)");
  }
}

template <typename T>
Tensor<T> Head<T>::forward(const Tensor<T>& pooled) const {
  const Tensor<T> x = pooled.rank() == 1 ? nn::reshape(pooled, {1, pooled.dim(0)}) : pooled;
  if (x.rank() != 2 || x.dim(1) != input_dim_) {
    throw ConfigError("head: expected " + std::to_string(input_dim_) + " input features, got " +
                      std::to_string(x.rank() == 2 ? x.dim(1) : x.size()));
  }
  if (kind_ == "linear") return nn::linear(x, params_[0].second, params_[1].second);
  const auto h = nn::relu(nn::linear(x, params_[0].second, params_[1].second));
  return nn::linear(h, params_[2].second, params_[3].second);
}

template class Head<float>;
template class Head<double>;

double finetune_lr_at(std::uint64_t step, std::uint64_t total_steps, const FinetuneConfig& cfg) {
  if (step > total_steps) {
    throw ArgumentError("finetune_lr_at: step " + std::to_string(step) + " beyond total " +
                        std::to_string(total_steps));
  }
  const std::uint64_t warm = cfg.warmup_steps;
  if (step == total_steps) return 0.0;
  if (warm > 0 && step <= warm) return cfg.peak_lr * static_cast<double>(step) / static_cast<double>(warm);
  return cfg.peak_lr * static_cast<double>(total_steps - step) /
         static_cast<double>(total_steps - warm);
}

bool EarlyStopping::update(double score) {
  ++epochs_;
  improved_last_ = epochs_ == 1 || score > best_;
  if (improved_last_) {
    best_ = score;
    best_epoch_ = epochs_;
  }
  return epochs_ - best_epoch_ >= patience_;
}

std::vector<LabeledWave> load_labeled(const audio::Manifest& m, double max_clip_s,
                                      std::vector<std::string>& class_names) {
  class_names = m.labels();
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < class_names.size(); ++i) index[class_names[i]] = i;
  const auto cap = static_cast<std::size_t>(std::llround(max_clip_s * audio::kSampleRate));
  std::vector<LabeledWave> out;
  for (const auto& e : m.entries()) {
    if (!e.label) throw ArgumentError("manifest entry " + e.path + " has no label");
    auto w = audio::load_audio(e.path);
    if (w.samples.size() > cap) w.samples.resize(cap);
    out.push_back({std::move(w.samples), index.at(*e.label), e.path});
  }
  return out;
}

Classifier::Classifier(const RunConfig& cfg, std::size_t num_classes)
    : cfg_(cfg), backbone_(cfg), head_(cfg.finetune.head, cfg.context.model_dim, num_classes) {}

Tensor<float> Classifier::embed(const std::vector<float>& wave, Rng* dropout_rng) const {
  const std::size_t need = model::receptive_field(cfg_.encoder).samples;
  auto samples = wave;
  if (samples.size() < need) samples.resize(need, 0.0f);
  const std::size_t len = samples.size();
  const auto w = Tensor<float>::from({len}, std::move(samples));
  return pool(backbone_.context_frames(w, dropout_rng), cfg_.finetune.pooling);
}

namespace {

std::size_t argmax_row(std::span<const float> row) {
  return static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
}

std::vector<std::size_t> predict_rows(const Head<float>& head, const std::vector<Tensor<float>>& feats) {
  std::vector<std::size_t> out;
  for (const auto& f : feats) {
    const auto logits = head.forward(f.detach());
    out.push_back(argmax_row(logits.values()));
  }
  return out;
}

double uar_of(const std::vector<std::size_t>& truth, const std::vector<std::size_t>& pred,
              std::size_t classes) {
  return metrics::uar(metrics::ConfusionMatrix::from_labels(truth, pred, classes));
}

// Everything train_fold and probe_train share: the schedule, batching,
// early stopping and best-epoch snapshots. `features(i, train, rng)` yields
// the pooled input of example i of the train (or valid) set.
struct FitJob {
  Head<float>& head;
  NamedParams<float> trainable;
  std::function<Tensor<float>(std::size_t, bool, Rng*)> features;
  std::vector<std::size_t> train_labels, valid_labels;
  bool use_dropout = false;
};

FoldTraining fit(FitJob& job, const RunConfig& cfg, std::uint64_t stream) {
  const auto& fc = cfg.finetune;
  const std::size_t classes = job.head.num_classes();
  if (std::set<std::size_t>(job.train_labels.begin(), job.train_labels.end()).size() < 2) {
    throw DegenerateTaskError("finetune: training labels hold a single class");
  }
  const std::size_t n = job.train_labels.size();
  const std::size_t per_epoch = (n + fc.batch_size - 1) / fc.batch_size;
  const std::uint64_t total = static_cast<std::uint64_t>(per_epoch) * fc.max_epochs;

  std::vector<Tensor<float>> tensors;
  for (auto& [_, t] : job.trainable) tensors.push_back(t);
  nn::Adam<float> adam(tensors);
  EarlyStopping stopper(fc.patience);
  std::vector<std::vector<float>> best(tensors.size());
  auto snapshot = [&] {
    for (std::size_t i = 0; i < tensors.size(); ++i)
      best[i].assign(tensors[i].values().begin(), tensors[i].values().end());
  };
  snapshot();

  // Without a validation side (tiny folds) the training set is monitored.
  const bool monitor_train = job.valid_labels.empty();
  const std::string tag = "." + std::to_string(stream);
  FoldTraining out;
  std::vector<std::size_t> order(n);
  std::uint64_t step = 0;
  for (std::size_t epoch = 1; epoch <= fc.max_epochs; ++epoch) {
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng::substream(cfg.seed, "finetune.data" + tag, epoch).shuffle(order);
    double loss_sum = 0.0;
    EpochRecord rec;
    rec.epoch = epoch;
    for (std::size_t start = 0; start < n; start += fc.batch_size) {
      const std::size_t end = std::min(n, start + fc.batch_size);
      Rng dropout = Rng::substream(cfg.seed, "finetune.dropout" + tag, step);
      std::vector<Tensor<float>> rows;
      std::vector<std::size_t> targets;
      for (std::size_t b = start; b < end; ++b) {
        const auto f = job.features(order[b], true, job.use_dropout ? &dropout : nullptr);
        rows.push_back(nn::reshape(f, {1, f.size()}));
        targets.push_back(job.train_labels[order[b]]);
      }
      const auto loss = nn::cross_entropy(job.head.forward(nn::concat_rows(rows)), targets);
      if (!std::isfinite(loss.item())) {
        throw TrainingDivergedError("finetune: non-finite loss at epoch " + std::to_string(epoch));
      }
      loss_sum += static_cast<double>(loss.item()) * static_cast<double>(end - start);
      adam.zero_grad();
      loss.backward();
      nn::clip_grad_norm(adam.params(), fc.grad_clip);
      rec.lr = finetune_lr_at(step + 1, total, fc);
      adam.step(rec.lr);
      ++step;
    }
    rec.train_loss = loss_sum / static_cast<double>(n);

    const auto& labels = monitor_train ? job.train_labels : job.valid_labels;
    std::vector<Tensor<float>> feats;
    for (std::size_t i = 0; i < labels.size(); ++i) feats.push_back(job.features(i, monitor_train, nullptr));
    rec.valid_uar = uar_of(labels, predict_rows(job.head, feats), classes);
    out.history.push_back(rec);
    const bool stop = stopper.update(rec.valid_uar);
    if (stopper.improved_last()) snapshot();
    if (stop) break;
  }

  for (std::size_t i = 0; i < tensors.size(); ++i) {
    std::copy(best[i].begin(), best[i].end(), tensors[i].mutable_values().begin());
  }
  out.best_epoch = stopper.best_epoch();
  out.best_valid_uar = stopper.best_score();
  std::vector<Tensor<float>> feats;
  for (std::size_t i = 0; i < n; ++i) feats.push_back(job.features(i, true, nullptr));
  out.final_train_accuracy = metrics::accuracy(
      metrics::ConfusionMatrix::from_labels(job.train_labels, predict_rows(job.head, feats), classes));
  return out;
}

std::vector<std::size_t> labels_of(const std::vector<LabeledWave>& clips) {
  std::vector<std::size_t> out;
  for (const auto& c : clips) out.push_back(c.label);
  return out;
}

std::string fingerprint(const RunConfig& cfg) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << fnv1a64(dump_config(cfg));
  return s.str();
}

void check_split(const audio::FoldSplit& folds, std::size_t n) {
  if (folds.assignments.size() != n) {
    throw SplitError("fold split covers " + std::to_string(folds.assignments.size()) +
                     " entries but " + std::to_string(n) + " were given");
  }
  for (int f = 0; f < folds.num_folds; ++f) {
    if (folds.members(f).empty()) throw SplitError("fold " + std::to_string(f) + " has no entries");
  }
}

}  // namespace

std::vector<std::size_t> Classifier::predict(const std::vector<LabeledWave>& clips) const {
  std::vector<Tensor<float>> feats;
  for (const auto& c : clips) feats.push_back(embed(c.samples));
  return predict_rows(head_, feats);
}

NamedParams<float> Classifier::all_params() const {
  NamedParams<float> out = backbone_.params();
  out.insert(out.end(), head_.params().begin(), head_.params().end());
  return out;
}

FoldTraining train_fold(Classifier& clf, const std::vector<LabeledWave>& train,
                        const std::vector<LabeledWave>& valid, const RunConfig& cfg,
                        std::uint64_t stream) {
  FitJob job{clf.head(), {}, {}, labels_of(train), labels_of(valid), !cfg.deterministic};
  if (cfg.finetune.freeze_encoder) {
    // A frozen backbone is a fixed feature extractor: embed every clip once.
    job.trainable = clf.head().params();
    job.use_dropout = false;
    std::vector<Tensor<float>> tr, va;
    for (const auto& c : train) tr.push_back(clf.embed(c.samples).detach());
    for (const auto& c : valid) va.push_back(clf.embed(c.samples).detach());
    job.features = [tr = std::move(tr), va = std::move(va)](std::size_t i, bool is_train, Rng*) {
      return is_train ? tr[i] : va[i];
    };
  } else {
    job.trainable = clf.all_params();
    job.features = [&](std::size_t i, bool is_train, Rng* rng) {
      return clf.embed(is_train ? train[i].samples : valid[i].samples, rng);
    };
  }
  return fit(job, cfg, stream);
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_holdout(
    const std::vector<std::size_t>& labels, double fraction, std::uint64_t seed, std::uint64_t stream) {
  std::map<std::size_t, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < labels.size(); ++i) groups[labels[i]].push_back(i);
  Rng rng = Rng::substream(seed, "finetune.holdout", stream);
  std::vector<std::size_t> train, valid;
  for (auto& [_, members] : groups) {
    rng.shuffle(members);
    auto take = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(members.size())));
    if (take == 0 && members.size() >= 2) take = 1;
    valid.insert(valid.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(take));
    train.insert(train.end(), members.begin() + static_cast<std::ptrdiff_t>(take), members.end());
  }
  std::sort(train.begin(), train.end());
  std::sort(valid.begin(), valid.end());
  return {train, valid};
}

metrics::MetricsReport cross_validate(const std::vector<LabeledWave>& clips,
                                      const std::vector<std::string>& class_names,
                                      const audio::FoldSplit& folds, const RunConfig& cfg,
                                      const CvOptions& opt) {
  cfg.validate();
  check_split(folds, clips.size());
  metrics::MetricsReport report;
  report.dataset = opt.dataset;
  report.config_fingerprint = fingerprint(cfg);
  report.class_names = class_names;
  report.pooled = metrics::ConfusionMatrix(class_names.size());

  for (int fold = 0; fold < folds.num_folds; ++fold) {
    const auto test_idx = folds.members(fold);
    const auto rest = folds.complement(fold);
    std::vector<std::size_t> rest_labels;
    for (auto i : rest) rest_labels.push_back(clips[i].label);
    const auto [inner_train, inner_valid] =
        stratified_holdout(rest_labels, cfg.finetune.valid_fraction, cfg.seed, static_cast<std::uint64_t>(fold));
    std::vector<LabeledWave> train, valid, test;
    for (auto i : inner_train) train.push_back(clips[rest[i]]);
    for (auto i : inner_valid) valid.push_back(clips[rest[i]]);
    for (auto i : test_idx) test.push_back(clips[i]);

    Classifier clf(cfg, class_names.size());
    model::init_scratch(clf.backbone().params(), cfg.seed);
    if (opt.base) load_params(*opt.base, clf.backbone().params(), true);
    model::init_scratch(clf.head().params(), cfg.seed);
    const auto training = train_fold(clf, train, valid, cfg, static_cast<std::uint64_t>(fold));

    const auto predicted = clf.predict(test);
    const auto cm = metrics::ConfusionMatrix::from_labels(labels_of(test), predicted, class_names.size());
    for (std::size_t t = 0; t < test.size(); ++t)
      report.predictions.push_back({fold, test_idx[t], test[t].label, predicted[t]});
    report.pooled += cm;
    metrics::FoldResult row;
    row.fold = fold;
    row.scores = metrics::score(cm);
    row.num_test = test.size();
    row.epochs_run = training.history.size();
    row.best_epoch = training.best_epoch;
    report.folds.push_back(row);
    if (opt.on_fold) opt.on_fold(fold, training, row.scores);
  }
  report.finalize();
  return report;
}

ProbeFeatures ProbeFeatures::parse_csv(const std::string& text) {
  ProbeFeatures pf;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("path", 0) != 0) {
    throw ArgumentError("probe features: expected a header starting with 'path'");
  }
  pf.dim = static_cast<std::size_t>(std::count(line.begin(), line.end(), ','));
  if (pf.dim == 0) throw ArgumentError("probe features: header has no feature columns");
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t pos = 0;
    if (line.front() == '"') {
      std::string path;
      std::size_t i = 1;
      for (; i < line.size(); ++i) {
        if (line[i] != '"') {
          path += line[i];
        } else if (i + 1 < line.size() && line[i + 1] == '"') {
          path += '"';
          ++i;
        } else {
          break;
        }
      }
      if (i >= line.size()) throw ArgumentError("probe features: unterminated quote on line " + std::to_string(lineno));
      pf.paths.push_back(std::move(path));
      pos = i + 1;
      if (pos < line.size() && line[pos] != ',') {
        throw ArgumentError("probe features: text after closing quote on line " + std::to_string(lineno));
      }
      if (pos == line.size()) pos = std::string::npos;
    } else {
      pos = line.find(',');
      pf.paths.push_back(line.substr(0, pos));
    }
    if (pos == std::string::npos) throw ArgumentError("probe features: line " + std::to_string(lineno) + " has no values");
    std::size_t count = 0;
    while (pos != std::string::npos) {
      const std::size_t next = line.find(',', pos + 1);
      const std::string cell = line.substr(pos + 1, next == std::string::npos ? std::string::npos : next - pos - 1);
      double v = 0.0;
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (res.ec != std::errc() || res.ptr != cell.data() + cell.size() || !std::isfinite(v)) {
        throw ArgumentError("probe features: bad value '" + cell + "' on line " + std::to_string(lineno));
      }
      pf.rows.push_back(v);
      ++count;
      pos = next;
    }
    if (count != pf.dim) {
      throw ArgumentError("probe features: line " + std::to_string(lineno) + " has " + std::to_string(count) +
                          " values, header declares " + std::to_string(pf.dim));
    }
  }
  return pf;
}

ProbeFeatures ProbeFeatures::read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return parse_csv(s.str());
}

std::string ProbeFeatures::to_csv() const {
  std::string out = "path";
  for (std::size_t d = 0; d < dim; ++d) out += ",f" + std::to_string(d);
  out += '\n';
  char buf[64];
  for (std::size_t i = 0; i < paths.size(); ++i) {
    if (paths[i].find_first_of(",\"\n") == std::string::npos) {
      out += paths[i];
    } else {
      out += '"';
      for (char ch : paths[i]) out += ch == '"' ? std::string("\"\"") : std::string(1, ch);
      out += '"';
    }
    for (std::size_t d = 0; d < dim; ++d) {
      std::snprintf(buf, sizeof buf, ",%.9g", rows[i * dim + d]);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

metrics::MetricsReport probe_train(const ProbeFeatures& features, const std::vector<std::size_t>& labels,
                                   const std::vector<std::string>& class_names,
                                   const audio::FoldSplit& folds, const RunConfig& cfg,
                                   const CvOptions& opt) {
  cfg.validate();
  if (labels.size() != features.paths.size()) {
    throw ArgumentError("probe: " + std::to_string(features.paths.size()) + " feature rows but " +
                        std::to_string(labels.size()) + " labels");
  }
  check_split(folds, labels.size());
  std::vector<Tensor<float>> rows;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    std::vector<float> v(features.rows.begin() + static_cast<std::ptrdiff_t>(i * features.dim),
                         features.rows.begin() + static_cast<std::ptrdiff_t>((i + 1) * features.dim));
    rows.push_back(Tensor<float>::from({features.dim}, std::move(v)));
  }

  metrics::MetricsReport report;
  report.dataset = opt.dataset;
  report.config_fingerprint = fingerprint(cfg);
  report.class_names = class_names;
  report.pooled = metrics::ConfusionMatrix(class_names.size());
  for (int fold = 0; fold < folds.num_folds; ++fold) {
    const auto test_idx = folds.members(fold);
    const auto rest = folds.complement(fold);
    std::vector<std::size_t> rest_labels;
    for (auto i : rest) rest_labels.push_back(labels[i]);
    const auto [inner_train, inner_valid] =
        stratified_holdout(rest_labels, cfg.finetune.valid_fraction, cfg.seed, static_cast<std::uint64_t>(fold));
    std::vector<std::size_t> train_rows, valid_rows;
    for (auto i : inner_train) train_rows.push_back(rest[i]);
    for (auto i : inner_valid) valid_rows.push_back(rest[i]);

    Head<float> head("mlp_relu", features.dim, class_names.size());
    model::init_scratch(head.params(), cfg.seed);
    FitJob job{head, head.params(),
               [&](std::size_t i, bool is_train, Rng*) { return rows[is_train ? train_rows[i] : valid_rows[i]]; },
               {}, {}, false};
    for (auto i : train_rows) job.train_labels.push_back(labels[i]);
    for (auto i : valid_rows) job.valid_labels.push_back(labels[i]);
    const auto training = fit(job, cfg, static_cast<std::uint64_t>(fold));

    std::vector<Tensor<float>> test_feats;
    std::vector<std::size_t> truth;
    for (auto i : test_idx) {
      test_feats.push_back(rows[i]);
      truth.push_back(labels[i]);
    }
    const auto predicted = predict_rows(head, test_feats);
    const auto cm = metrics::ConfusionMatrix::from_labels(truth, predicted, class_names.size());
    for (std::size_t t = 0; t < test_idx.size(); ++t)
      report.predictions.push_back({fold, test_idx[t], truth[t], predicted[t]});
    report.pooled += cm;
    metrics::FoldResult row;
    row.fold = fold;
    row.scores = metrics::score(cm);
    row.num_test = test_idx.size();
    row.epochs_run = training.history.size();
    row.best_epoch = training.best_epoch;
    report.folds.push_back(row);
    if (opt.on_fold) opt.on_fold(fold, training, row.scores);
  }
  report.finalize();
  return report;
}

template Tensor<float> pool(const Tensor<float>&, const std::string&);
template Tensor<double> pool(const Tensor<double>&, const std::string&);

}  // namespace vocrep::finetune
