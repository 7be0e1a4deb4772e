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

namespace vocrep::metrics {

/// counts[t * n + p]: instances of true class t predicted as p.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t num_classes = 0);
  /// Throws ArgumentError on length mismatch or a label outside [0, n).
  static ConfusionMatrix from_labels(const std::vector<std::size_t>& truth,
                                     const std::vector<std::size_t>& predicted,
                                     std::size_t num_classes);

  void add(std::size_t truth, std::size_t predicted, std::int64_t count = 1);
  std::int64_t at(std::size_t truth, std::size_t predicted) const { return counts_[truth * n_ + predicted]; }
  std::size_t num_classes() const { return n_; }
  std::int64_t row_sum(std::size_t c) const;
  std::int64_t col_sum(std::size_t c) const;
  std::int64_t total() const;
  std::int64_t trace() const;

  ConfusionMatrix& operator+=(const ConfusionMatrix& other);

 private:
  std::size_t n_;
  std::vector<std::int64_t> counts_;
};

/// Mean recall over classes with nonzero support. UndefinedMetricError when
/// the matrix is empty.
double uar(const ConfusionMatrix& cm);
double accuracy(const ConfusionMatrix& cm);
/// Mean per-class F1. Classes with neither support nor predictions are left
/// out; a class with zero precision and recall contributes 0.
double f1_macro(const ConfusionMatrix& cm);

struct Scores {
  double uar = 0.0;
  double accuracy = 0.0;
  double f1_macro = 0.0;
};
Scores score(const ConfusionMatrix& cm);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population
};
MeanStd mean_std(const std::vector<double>& values);

struct Aggregate {
  MeanStd uar, accuracy, f1_macro;
};
/// Throws ArgumentError on an empty list.
Aggregate aggregate(const std::vector<Scores>& rows);

/// Three decimals with the leading zero dropped: 0.661, 0.206 -> ".661±.206".
std::string format_mean_std(const MeanStd& m);
/// "UAR .XXX±.YYY  Acc .XXX±.YYY  F1 .XXX±.YYY"
std::string format_aggregate(const Aggregate& a);

struct FoldResult {
  int fold = 0;
  Scores scores;
  std::size_t num_test = 0;
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;
};

struct Prediction {
  int fold = 0;
  std::size_t index = 0;  // position in the evaluated set
  std::size_t truth = 0, predicted = 0;
};

struct MetricsReport {
  std::string dataset;
  std::vector<FoldResult> folds;
  Aggregate aggregate;
  /// fnv1a64 of the serialized run configuration, hex.
  std::string config_fingerprint;
  std::vector<std::string> class_names;
  /// Confusion matrix summed over folds.
  ConfusionMatrix pooled{0};
  /// Per-instance test predictions (not part of the JSON/CSV forms).
  std::vector<Prediction> predictions;

  /// Recomputes `aggregate` from the fold rows.
  void finalize();
  std::string to_json() const;
  /// One row per fold plus an "aggregate" row carrying the means; the std
  /// columns are filled only on that row.
  std::string to_csv() const;
};

}  // namespace vocrep::metrics
