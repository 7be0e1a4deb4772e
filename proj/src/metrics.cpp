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

#include "vocrep/metrics.hpp"

#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "vocrep/error.hpp"

namespace vocrep::metrics {

ConfusionMatrix::ConfusionMatrix(std::size_t num_classes)
    : n_(num_classes), counts_(num_classes * num_classes, 0) {}

ConfusionMatrix ConfusionMatrix::from_labels(const std::vector<std::size_t>& truth,
                                             const std::vector<std::size_t>& predicted,
                                             std::size_t num_classes) {
  if (truth.size() != predicted.size()) {
    throw ArgumentError("confusion matrix: " + std::to_string(truth.size()) + " labels vs " +
                        std::to_string(predicted.size()) + " predictions");
  }
  ConfusionMatrix cm(num_classes);
  for (std::size_t i = 0; i < truth.size(); ++i) cm.add(truth[i], predicted[i]);
  return cm;
}

void ConfusionMatrix::add(std::size_t truth, std::size_t predicted, std::int64_t count) {
  if (truth >= n_ || predicted >= n_) {
    throw ArgumentError("confusion matrix: class index out of range for " + std::to_string(n_) +
                        " classes");
  }
  counts_[truth * n_ + predicted] += count;
}

std::int64_t ConfusionMatrix::row_sum(std::size_t c) const {
  std::int64_t s = 0;
  for (std::size_t p = 0; p < n_; ++p) s += at(c, p);
  return s;
}

std::int64_t ConfusionMatrix::col_sum(std::size_t c) const {
  std::int64_t s = 0;
  for (std::size_t t = 0; t < n_; ++t) s += at(t, c);
  return s;
}

std::int64_t ConfusionMatrix::total() const {
  std::int64_t s = 0;
  for (auto v : counts_) s += v;
  return s;
}

std::int64_t ConfusionMatrix::trace() const {
  std::int64_t s = 0;
  for (std::size_t c = 0; c < n_; ++c) s += at(c, c);
  return s;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  if (other.n_ != n_) throw ArgumentError("confusion matrix: class count mismatch");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  return *this;
}

double uar(const ConfusionMatrix& cm) {
  double sum = 0.0;
  std::size_t classes = 0;
  for (std::size_t c = 0; c < cm.num_classes(); ++c) {
    const auto support = cm.row_sum(c);
    if (support == 0) continue;
    sum += static_cast<double>(cm.at(c, c)) / static_cast<double>(support);
    ++classes;
  }
  if (classes == 0) throw UndefinedMetricError("uar: no class has any instances");
  return sum / static_cast<double>(classes);
}

double accuracy(const ConfusionMatrix& cm) {
  const auto total = cm.total();
  if (total == 0) throw UndefinedMetricError("accuracy: empty confusion matrix");
  return static_cast<double>(cm.trace()) / static_cast<double>(total);
}

double f1_macro(const ConfusionMatrix& cm) {
  double sum = 0.0;
  std::size_t classes = 0;
  for (std::size_t c = 0; c < cm.num_classes(); ++c) {
    const auto support = cm.row_sum(c);
    const auto predicted = cm.col_sum(c);
    if (support == 0 && predicted == 0) continue;
    ++classes;
    const auto tp = cm.at(c, c);
    if (tp == 0) continue;
    // 2PR/(P+R) with P = tp/predicted, R = tp/support.
    sum += 2.0 * static_cast<double>(tp) / static_cast<double>(support + predicted);
  }
  if (classes == 0) throw UndefinedMetricError("f1_macro: empty confusion matrix");
  return sum / static_cast<double>(classes);
}

Scores score(const ConfusionMatrix& cm) { return {uar(cm), accuracy(cm), f1_macro(cm)}; }

MeanStd mean_std(const std::vector<double>& values) {
  if (values.empty()) throw ArgumentError("aggregate: no rows");
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(values.size());
  return {mean, std::sqrt(var)};
}

Aggregate aggregate(const std::vector<Scores>& rows) {
  if (rows.empty()) throw ArgumentError("aggregate: no rows");
  std::vector<double> u, a, f;
  for (const auto& r : rows) {
    u.push_back(r.uar);
    a.push_back(r.accuracy);
    f.push_back(r.f1_macro);
  }
  return {mean_std(u), mean_std(a), mean_std(f)};
}

namespace {

std::string three_decimals(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  std::string s = buf;
  if (s.rfind("0.", 0) == 0) s.erase(0, 1);
  else if (s.rfind("-0.", 0) == 0) s.erase(1, 1);
  return s;
}

}  // namespace

std::string format_mean_std(const MeanStd& m) {
  return three_decimals(m.mean) + "±" + three_decimals(m.std);
}

std::string format_aggregate(const Aggregate& a) {
  return "UAR " + format_mean_std(a.uar) + "  Acc " + format_mean_std(a.accuracy) + "  F1 " +
         format_mean_std(a.f1_macro);
}

void MetricsReport::finalize() {
  std::vector<Scores> rows;
  for (const auto& f : folds) rows.push_back(f.scores);
  aggregate = metrics::aggregate(rows);
}

std::string MetricsReport::to_json() const {
  using ojson = nlohmann::ordered_json;
  ojson j;
  j["dataset"] = dataset;
  j["config_fingerprint"] = config_fingerprint;
  j["std"] = "population";
  j["classes"] = class_names;
  j["folds"] = ojson::array();
  for (const auto& f : folds) {
    j["folds"].push_back({{"fold", f.fold},
                          {"uar", f.scores.uar},
                          {"accuracy", f.scores.accuracy},
                          {"f1_macro", f.scores.f1_macro},
                          {"num_test", f.num_test},
                          {"epochs_run", f.epochs_run},
                          {"best_epoch", f.best_epoch}});
  }
  auto ms = [](const MeanStd& m) { return ojson{{"mean", m.mean}, {"std", m.std}}; };
  j["aggregate"] = {{"uar", ms(aggregate.uar)},
                    {"accuracy", ms(aggregate.accuracy)},
                    {"f1_macro", ms(aggregate.f1_macro)}};
  ojson cm = ojson::array();
  for (std::size_t t = 0; t < pooled.num_classes(); ++t) {
    ojson row = ojson::array();
    for (std::size_t p = 0; p < pooled.num_classes(); ++p) row.push_back(pooled.at(t, p));
    cm.push_back(row);
  }
  j["confusion_matrix"] = cm;
  return j.dump(2) + "\n";
}

std::string MetricsReport::to_csv() const {
  std::string out = "fold,uar,accuracy,f1_macro,uar_std,accuracy_std,f1_macro_std\n";
  char buf[256];
  for (const auto& f : folds) {
    std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g,%.9g,,,\n", f.fold, f.scores.uar, f.scores.accuracy,
                  f.scores.f1_macro);
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "aggregate,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", aggregate.uar.mean,
                aggregate.accuracy.mean, aggregate.f1_macro.mean, aggregate.uar.std,
                aggregate.accuracy.std, aggregate.f1_macro.std);
  out += buf;
  return out;
}

}  // namespace vocrep::metrics
