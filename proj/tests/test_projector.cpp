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
#include <limits>
#include <numeric>

#include <gtest/gtest.h>

#include "vocrep/error.hpp"
#include "vocrep/projector.hpp"
#include "vocrep/synth.hpp"

using namespace vocrep;
using namespace vocrep::project;

namespace {

std::vector<double> sq_distances(const std::vector<double>& x, std::size_t n, std::size_t d) {
  std::vector<double> out(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0;
      for (std::size_t k = 0; k < d; ++k) s += (x[i * d + k] - x[j * d + k]) * (x[i * d + k] - x[j * d + k]);
      out[i * n + j] = s;
    }
  return out;
}

}  // namespace

TEST(Affinities, RowsHitTargetPerplexity) {
  const auto b = synth::gaussian_blobs(20, 5, 3, 4.0, 2);
  const auto d = sq_distances(b.points, b.n, b.dim);
  const auto cond = conditional_affinities(d, b.n, 10.0);
  for (std::size_t i = 0; i < b.n; ++i) {
    EXPECT_NEAR(row_perplexity(cond, b.n, i), 10.0, 1e-6);
    EXPECT_EQ(cond[i * b.n + i], 0.0);
    double s = 0;
    for (std::size_t j = 0; j < b.n; ++j) s += cond[i * b.n + j];
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(Affinities, JointIsSymmetricAndSumsToOne) {
  const auto b = synth::gaussian_blobs(50, 64, 2, 10.0, 1);
  const auto cond = conditional_affinities(sq_distances(b.points, b.n, b.dim), b.n, 30.0);
  const auto p = joint_affinities(cond, b.n);
  EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-9);
  for (std::size_t i = 0; i < b.n; ++i)
    for (std::size_t j = 0; j < b.n; ++j) EXPECT_EQ(p[i * b.n + j], p[j * b.n + i]);
}

TEST(Affinities, UniformWhenAllEquidistant) {
  // Four corners of a regular simplex: every row is uniform over the others.
  const std::size_t n = 4;
  std::vector<double> d(n * n, 2.0);
  for (std::size_t i = 0; i < n; ++i) d[i * n + i] = 0.0;
  const auto cond = conditional_affinities(d, n, 2.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) EXPECT_NEAR(cond[i * n + j], i == j ? 0.0 : 1.0 / 3.0, 1e-12);
}

TEST(Affinities, RejectsBadInput) {
  std::vector<double> d(9, 1.0);
  EXPECT_THROW(conditional_affinities(d, 3, 3.0), ArgumentError);
  EXPECT_THROW(conditional_affinities(d, 3, 1.0), ArgumentError);
  d[1] = std::numeric_limits<double>::infinity();
  EXPECT_THROW(conditional_affinities(d, 3, 2.0), ArgumentError);
}

TEST(Silhouette, HandComputed) {
  // 1-D points {0, 1} label a, {4} label b.
  // a(0) = 1, b(0) = 4 -> 0.75; a(1) = 1, b(1) = 3 -> 2/3; singleton -> 0.
  const std::vector<double> pts{0, 1, 4};
  EXPECT_NEAR(silhouette(pts, 3, 1, {"a", "a", "b"}), (0.75 + 2.0 / 3.0 + 0.0) / 3.0, 1e-15);
  EXPECT_THROW(silhouette(pts, 3, 1, {"a", "a", "a"}), ArgumentError);
}

TEST(Tsne, SeparatesBlobsDeterministically) {
  const auto b = synth::gaussian_blobs(50, 64, 2, 10.0, 3);
  TsneOptions opt;
  opt.seed = 5;
  const auto p1 = tsne(b.points, b.n, b.dim, opt);
  const auto p2 = tsne(b.points, b.n, b.dim, opt);
  EXPECT_EQ(p1.points, p2.points);
  EXPECT_EQ(p1.final_kl, p2.final_kl);
  EXPECT_GE(silhouette(p1.points, b.n, 2, b.labels), 0.3);
  EXPECT_LT(p1.final_kl, p1.kl_at(250));
  opt.seed = 6;
  EXPECT_NE(tsne(b.points, b.n, b.dim, opt).points, p1.points);
  double cx = 0, cy = 0;
  for (std::size_t i = 0; i < b.n; ++i) {
    cx += p1.points[2 * i];
    cy += p1.points[2 * i + 1];
  }
  EXPECT_NEAR(cx / b.n, 0.0, 1e-9);
  EXPECT_NEAR(cy / b.n, 0.0, 1e-9);
}

TEST(Tsne, InvariantToRotatingTheInput) {
  // A 90-degree rotation in the first two axes keeps every distance.
  const auto b = synth::gaussian_blobs(15, 4, 2, 6.0, 9);
  auto rotated = b.points;
  for (std::size_t i = 0; i < b.n; ++i) {
    rotated[i * 4] = -b.points[i * 4 + 1];
    rotated[i * 4 + 1] = b.points[i * 4];
  }
  TsneOptions opt;
  opt.perplexity = 5.0;
  opt.iterations = 300;
  EXPECT_EQ(tsne(b.points, b.n, b.dim, opt).points, tsne(rotated, b.n, b.dim, opt).points);
}

TEST(Tsne, InputChecks) {
  EXPECT_THROW(tsne(std::vector<double>(8), 4, 2), TooFewPointsError);
  std::vector<double> x(20, 1.0);
  x[3] = std::nan("");
  EXPECT_THROW(tsne(x, 10, 2), ArgumentError);
}

TEST(Render, LegendAndOverflow) {
  Projection2D p;
  p.points = {0, 0, 1, 1, 2, 0};
  const auto svg = render_scatter(p, {"b", "", "a"});
  EXPECT_EQ(svg.rfind("<?xml", 0), 0u);
  EXPECT_NE(svg.find(">unlabeled<"), std::string::npos);
  EXPECT_LT(svg.find(">a<"), svg.find(">b<"));
  std::vector<std::string> many;
  Projection2D big;
  for (int i = 0; i < 21; ++i) {
    many.push_back("c" + std::to_string(i));
    big.points.push_back(i);
    big.points.push_back(0);
  }
  EXPECT_THROW(render_scatter(big, many), LegendOverflowError);
  EXPECT_EQ(display_label(""), "unlabeled");
}

TEST(Render, CsvQuotesFields) {
  Projection2D p;
  p.points = {0.5, -1};
  EXPECT_EQ(projection_csv(p, {"a,b.wav"}, {"x"}), "path,label,x,y\n\"a,b.wav\",x,0.5,-1\n");
}
