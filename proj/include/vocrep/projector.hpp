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

namespace vocrep::project {

/// Row-normalized Gaussian affinities p_{j|i} from squared distances
/// [n x n], with each row's precision found by bisection (at most 200 steps)
/// so that exp(H_i) matches `perplexity`.
/// Throws ArgumentError on non-finite distances or perplexity outside (1, n).
std::vector<double> conditional_affinities(const std::vector<double>& sq_dist, std::size_t n,
                                           double perplexity, std::vector<double>* precisions = nullptr);

/// Perplexity exp(H) of row i of a conditional affinity matrix.
double row_perplexity(const std::vector<double>& cond, std::size_t n, std::size_t i);

/// (P + P^T) / 2n.
std::vector<double> joint_affinities(const std::vector<double>& cond, std::size_t n);

struct TsneOptions {
  double perplexity = 30.0;
  std::size_t iterations = 1000;
  double learning_rate = 200.0;
  double exaggeration = 12.0;
  std::size_t exaggeration_iters = 250;
  double momentum_initial = 0.5;
  double momentum_final = 0.8;
  std::size_t momentum_switch = 250;
  std::uint64_t seed = 0;
};

struct Projection2D {
  std::vector<double> points;  // [n x 2], column means zero
  double final_kl = 0.0;
  std::size_t iterations_run = 0;
  /// (iteration, KL) every 50 iterations and after the last one. Iteration
  /// numbers count completed updates.
  std::vector<std::pair<std::size_t, double>> kl_history;

  double kl_at(std::size_t iteration) const;
};

/// Exact t-SNE of `n` rows of dimension `dim`. Throws TooFewPointsError for
/// n < 5 and ArgumentError on NaN input or n > 20000.
Projection2D tsne(const std::vector<double>& x, std::size_t n, std::size_t dim, const TsneOptions& opt = {});

/// Mean silhouette coefficient (Euclidean) of `points` [n x dim] under
/// `labels`. Points alone in their cluster score 0.
double silhouette(const std::vector<double>& points, std::size_t n, std::size_t dim,
                  const std::vector<std::string>& labels);

/// Empty labels are shown as "unlabeled".
std::string display_label(const std::string& label);

/// SVG 1.1 scatter plot, one palette color per label (sorted), with a
/// legend. Throws LegendOverflowError beyond 20 distinct labels.
std::string render_scatter(const Projection2D& p, const std::vector<std::string>& labels,
                           const std::string& title = "t-SNE");

/// path,label,x,y
std::string projection_csv(const Projection2D& p, const std::vector<std::string>& paths,
                           const std::vector<std::string>& labels);

}  // namespace vocrep::project
