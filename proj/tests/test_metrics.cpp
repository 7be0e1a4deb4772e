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
#include <set>

#include <gtest/gtest.h>
#include <json.hpp>

#include "vocrep/error.hpp"
#include "vocrep/metrics.hpp"
#include "vocrep/rng.hpp"

using namespace vocrep;
using namespace vocrep::metrics;

namespace {

using Labels = std::vector<std::size_t>;

// Counts straight from the label lists, no confusion matrix.
struct Oracle {
  double uar = 0, acc = 0, f1 = 0;
};

Oracle brute_force(const Labels& t, const Labels& p) {
  std::set<std::size_t> truth_classes(t.begin(), t.end());
  std::set<std::size_t> any_classes = truth_classes;
  any_classes.insert(p.begin(), p.end());
  auto count = [&](auto pred) {
    double n = 0;
    for (std::size_t i = 0; i < t.size(); ++i) n += pred(t[i], p[i]) ? 1 : 0;
    return n;
  };
  Oracle o;
  o.acc = count([](auto a, auto b) { return a == b; }) / static_cast<double>(t.size());
  for (auto c : truth_classes) {
    o.uar += count([c](auto a, auto b) { return a == c && b == c; }) / count([c](auto a, auto) { return a == c; });
  }
  o.uar /= static_cast<double>(truth_classes.size());
  for (auto c : any_classes) {
    const double tp = count([c](auto a, auto b) { return a == c && b == c; });
    const double pp = count([c](auto, auto b) { return b == c; });
    const double ap = count([c](auto a, auto) { return a == c; });
    const double prec = pp > 0 ? tp / pp : 0.0;
    const double rec = ap > 0 ? tp / ap : 0.0;
    o.f1 += prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0;
  }
  o.f1 /= static_cast<double>(any_classes.size());
  return o;
}

}  // namespace

TEST(Metrics, AgreeWithBruteForceOnRandomSets) {
  Rng rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t k = 2 + rng.below(6);
    const std::size_t n = 1 + rng.below(60);
    Labels t(n), p(n);
    for (auto& v : t) v = rng.below(k);
    for (std::size_t i = 0; i < n; ++i) p[i] = rng.uniform() < 0.5 ? t[i] : rng.below(k);
    const auto cm = ConfusionMatrix::from_labels(t, p, k);
    const auto o = brute_force(t, p);
    ASSERT_NEAR(uar(cm), o.uar, 1e-12) << trial;
    ASSERT_NEAR(accuracy(cm), o.acc, 1e-12) << trial;
    ASSERT_NEAR(f1_macro(cm), o.f1, 1e-12) << trial;
  }
}

TEST(Metrics, AccuracyIsPriorWeightedRecall) {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    Labels t(40), p(40);
    for (auto& v : t) v = rng.below(4);
    for (auto& v : p) v = rng.below(4);
    const auto cm = ConfusionMatrix::from_labels(t, p, 4);
    double weighted = 0;
    for (std::size_t c = 0; c < 4; ++c) {
      if (cm.row_sum(c) == 0) continue;
      const double prior = static_cast<double>(cm.row_sum(c)) / cm.total();
      weighted += prior * static_cast<double>(cm.at(c, c)) / cm.row_sum(c);
    }
    EXPECT_NEAR(weighted, accuracy(cm), 1e-15);
  }
}

TEST(Metrics, UarIgnoresClassFrequency) {
  // 90 of class 0 all right, 10 of class 1 all wrong: accuracy .9, UAR .5.
  Labels t(100, 0), p(100, 0);
  for (std::size_t i = 90; i < 100; ++i) t[i] = 1;
  const auto cm = ConfusionMatrix::from_labels(t, p, 2);
  EXPECT_DOUBLE_EQ(accuracy(cm), 0.9);
  EXPECT_DOUBLE_EQ(uar(cm), 0.5);
}

TEST(Metrics, MissingPredictedClassLowersF1BelowTwoThirds) {
  const auto cm = ConfusionMatrix::from_labels({0, 1, 2}, {0, 1, 1}, 3);
  EXPECT_NEAR(f1_macro(cm), (1.0 + 2.0 / 3.0 + 0.0) / 3.0, 1e-15);
  EXPECT_NEAR(uar(cm), 2.0 / 3.0, 1e-15);
}

TEST(Metrics, ErrorsAndEdgeCases) {
  EXPECT_THROW(ConfusionMatrix::from_labels({0, 1}, {0}, 2), ArgumentError);
  EXPECT_THROW(ConfusionMatrix::from_labels({0, 3}, {0, 1}, 2), ArgumentError);
  EXPECT_THROW(uar(ConfusionMatrix(3)), UndefinedMetricError);
  // Classes absent from both sides do not dilute F1.
  EXPECT_DOUBLE_EQ(f1_macro(ConfusionMatrix::from_labels({0, 1}, {0, 1}, 5)), 1.0);
}

TEST(Aggregate, PopulationStd) {
  const auto m = mean_std({0.5, 0.7, 0.9});
  EXPECT_NEAR(m.mean, 0.7, 1e-15);
  EXPECT_NEAR(m.std, std::sqrt(0.08 / 3.0), 1e-15);
  EXPECT_THROW(mean_std({}), ArgumentError);
}

TEST(Aggregate, TableFormat) {
  EXPECT_EQ(format_mean_std({0.661, 0.206}), ".661±.206");
  EXPECT_EQ(format_mean_std({0.6614, 0.2056}), ".661±.206");
  EXPECT_EQ(format_mean_std({1.0, 0.0}), "1.000±.000");
  const auto a = aggregate({{0.5, 0.6, 0.55}, {0.7, 0.8, 0.75}});
  EXPECT_EQ(format_aggregate(a), "UAR .600±.100  Acc .700±.100  F1 .650±.100");
}

TEST(Report, JsonAndCsvForms) {
  MetricsReport r;
  r.dataset = "toy";
  r.class_names = {"a", "b"};
  r.pooled = ConfusionMatrix::from_labels({0, 1, 1, 0}, {0, 1, 0, 0}, 2);
  for (int f = 0; f < 2; ++f) {
    FoldResult fr;
    fr.fold = f;
    fr.scores = {f == 0 ? 1.0 : 0.5, f == 0 ? 1.0 : 0.5, f == 0 ? 1.0 : 1.0 / 3.0};
    fr.num_test = 2;
    r.folds.push_back(fr);
  }
  r.finalize();
  EXPECT_NEAR(r.aggregate.uar.mean, 0.75, 1e-15);
  EXPECT_NEAR(r.aggregate.uar.std, 0.25, 1e-15);
  const auto j = nlohmann::ordered_json::parse(r.to_json());
  EXPECT_EQ(j["std"], "population");
  EXPECT_EQ(j["folds"].size(), 2u);
  EXPECT_EQ(j["confusion_matrix"][1][0], 1);
  const auto csv = r.to_csv();
  EXPECT_EQ(csv.rfind("fold,uar,accuracy,f1_macro,uar_std,accuracy_std,f1_macro_std\n", 0), 0u);
  EXPECT_NE(csv.find("\naggregate,0.75,0.75,"), std::string::npos);
}
