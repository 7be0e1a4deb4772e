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

#include "vocrep/projector.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <set>

#include "vocrep/error.hpp"
#include "vocrep/kernels.hpp"
#include "vocrep/rng.hpp"

namespace vocrep::project {

namespace kp = kernels::parallel;

namespace {

constexpr int kMaxBisection = 200;
constexpr int kDistanceBits = 21;

// Rounds to kDistanceBits significant bits. The optimization is chaotic, so
// rounding-level differences in the input (a rotated copy of the same data)
// would otherwise grow into a different final layout.
double snap(double v) {
  if (v == 0.0) return 0.0;
  int e = 0;
  const double m = std::frexp(v, &e);
  return std::ldexp(std::nearbyint(std::ldexp(m, kDistanceBits)), e - kDistanceBits);
}

// Entropy (nats) of row i under precision beta; fills `row` with the
// normalized affinities. Distances are shifted by the row minimum, which
// leaves the normalized distribution unchanged and avoids underflow.
double row_entropy(const double* d, std::size_t n, std::size_t i, double dmin, double beta,
                   std::vector<double>& row) {
  double sum = 0.0, weighted = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    if (j == i) {
      row[j] = 0.0;
      continue;
    }
    const double shifted = d[j] - dmin;
    row[j] = std::exp(-beta * shifted);
    sum += row[j];
    weighted += shifted * row[j];
  }
  for (std::size_t j = 0; j < n; ++j) row[j] /= sum;
  return std::log(sum) + beta * weighted / sum;
}

}  // namespace

std::vector<double> conditional_affinities(const std::vector<double>& sq_dist, std::size_t n,
                                           double perplexity, std::vector<double>* precisions) {
  if (sq_dist.size() != n * n) throw ArgumentError("affinities: distance matrix is not n x n");
  if (!(perplexity > 1.0) || !(perplexity < static_cast<double>(n))) {
    throw ArgumentError("affinities: perplexity " + std::to_string(perplexity) + " must lie in (1, " +
                        std::to_string(n) + ")");
  }
  for (double v : sq_dist) {
    if (!std::isfinite(v)) throw ArgumentError("affinities: non-finite distance");
  }
  const double target = std::log(perplexity);
  std::vector<double> out(n * n, 0.0), row(n);
  if (precisions) precisions->assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double* d = sq_dist.data() + i * n;
    double dmin = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) dmin = std::min(dmin, d[j]);
    double beta = 1.0, lo = 0.0, hi = std::numeric_limits<double>::infinity();
    // Bisect until the bracket stops shrinking rather than stopping at the
    // tolerance: an early exit would make beta jump with rounding-level input
    // changes (e.g. a rotated copy of the data).
    for (int it = 0; it < kMaxBisection; ++it) {
      const double h = row_entropy(d, n, i, dmin, beta, row);
      if (h == target) break;
      const double prev = beta;
      if (h > target) {
        lo = beta;
        beta = std::isinf(hi) ? beta * 2.0 : 0.5 * (beta + hi);
      } else {
        hi = beta;
        beta = 0.5 * (beta + lo);
      }
      if (beta == prev) break;
    }
    row_entropy(d, n, i, dmin, beta, row);
    std::copy(row.begin(), row.end(), out.begin() + static_cast<std::ptrdiff_t>(i * n));
    if (precisions) (*precisions)[i] = beta;
  }
  return out;
}

double row_perplexity(const std::vector<double>& cond, std::size_t n, std::size_t i) {
  double h = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double p = cond[i * n + j];
    if (p > 0.0) h -= p * std::log(p);
  }
  return std::exp(h);
}

std::vector<double> joint_affinities(const std::vector<double>& cond, std::size_t n) {
  std::vector<double> p(n * n);
  const double denom = 2.0 * static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) p[i * n + j] = (cond[i * n + j] + cond[j * n + i]) / denom;
  return p;
}

double Projection2D::kl_at(std::size_t iteration) const {
  for (const auto& [it, kl] : kl_history)
    if (it == iteration) return kl;
  throw ArgumentError("projection: no KL recorded at iteration " + std::to_string(iteration));
}

namespace {

double kl_divergence(const std::vector<double>& p, const std::vector<double>& y, std::size_t n) {
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double dx = y[2 * i] - y[2 * j], dy = y[2 * i + 1] - y[2 * j + 1];
      z += 1.0 / (1.0 + dx * dx + dy * dy);
    }
  double kl = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double pij = p[i * n + j];
      if (i == j || pij <= 0.0) continue;
      const double dx = y[2 * i] - y[2 * j], dy = y[2 * i + 1] - y[2 * j + 1];
      const double q = 1.0 / (1.0 + dx * dx + dy * dy) / z;
      kl += pij * std::log(pij / q);
    }
  return kl;
}

}  // namespace

Projection2D tsne(const std::vector<double>& x, std::size_t n, std::size_t dim, const TsneOptions& opt) {
  if (n < 5) throw TooFewPointsError("t-SNE needs at least 5 points, got " + std::to_string(n));
  if (n > 20000) throw ArgumentError("t-SNE: exact method limited to 20000 points");
  if (x.size() != n * dim) throw ArgumentError("t-SNE: input is not n x dim");
  for (double v : x) {
    if (std::isnan(v)) throw ArgumentError("t-SNE: NaN in input");
  }

  std::vector<double> dist(n * n);
  kp::pairwise_sq_distances<double>(x, n, dim, dist);
  for (auto& v : dist) v = snap(v);
  const auto p = joint_affinities(conditional_affinities(dist, n, opt.perplexity), n);

  Rng rng = Rng::substream(opt.seed, "tsne");
  Projection2D out;
  auto& y = out.points;
  y.resize(2 * n);
  for (auto& v : y) v = 1e-4 * rng.normal();
  std::vector<double> grad(2 * n), update(2 * n, 0.0), gains(2 * n, 1.0);

  for (std::size_t it = 0; it < opt.iterations; ++it) {
    const double exaggeration = it < opt.exaggeration_iters ? opt.exaggeration : 1.0;
    const double momentum = it < opt.momentum_switch ? opt.momentum_initial : opt.momentum_final;
    kp::tsne_gradient(y, p, n, exaggeration, grad);
    for (std::size_t k = 0; k < 2 * n; ++k) {
      // Delta-bar-delta gains of the reference implementation.
      gains[k] = (grad[k] > 0.0) != (update[k] > 0.0) ? gains[k] + 0.2 : gains[k] * 0.8;
      gains[k] = std::max(gains[k], 0.01);
      update[k] = momentum * update[k] - opt.learning_rate * gains[k] * grad[k];
      y[k] += update[k];
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      mx += y[2 * i];
      my += y[2 * i + 1];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[2 * i] -= mx;
      y[2 * i + 1] -= my;
    }
    const std::size_t done = it + 1;
    if (done % 50 == 0 || done == opt.iterations) out.kl_history.emplace_back(done, kl_divergence(p, y, n));
  }
  out.iterations_run = opt.iterations;
  out.final_kl = out.kl_history.empty() ? kl_divergence(p, y, n) : out.kl_history.back().second;
  return out;
}

double silhouette(const std::vector<double>& points, std::size_t n, std::size_t dim,
                  const std::vector<std::string>& labels) {
  if (labels.size() != n || points.size() != n * dim) throw ArgumentError("silhouette: size mismatch");
  std::map<std::string, std::size_t> ids;
  for (const auto& l : labels) ids.emplace(l, ids.size());
  if (ids.size() < 2) throw ArgumentError("silhouette: need at least two labels");
  std::vector<std::size_t> cluster(n), sizes(ids.size(), 0);
  for (std::size_t i = 0; i < n; ++i) {
    cluster[i] = ids[labels[i]];
    ++sizes[cluster[i]];
  }
  std::vector<double> dist(n * n);
  kp::pairwise_sq_distances<double>(points, n, dim, dist);
  double total = 0.0;
  std::vector<double> sums(ids.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (sizes[cluster[i]] == 1) continue;
    std::fill(sums.begin(), sums.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) sums[cluster[j]] += std::sqrt(dist[i * n + j]);
    const double a = sums[cluster[i]] / static_cast<double>(sizes[cluster[i]] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < sums.size(); ++c)
      if (c != cluster[i]) b = std::min(b, sums[c] / static_cast<double>(sizes[c]));
    const double denom = std::max(a, b);
    if (denom > 0.0) total += (b - a) / denom;
  }
  return total / static_cast<double>(n);
}

std::string display_label(const std::string& label) { return label.empty() ? "unlabeled" : label; }

namespace {

constexpr std::array<const char*, 20> kPalette{
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2",
    "#7f7f7f", "#bcbd22", "#17becf", "#aec7e8", "#ffbb78", "#98df8a", "#ff9896",
    "#c5b0d5", "#c49c94", "#f7b6d2", "#c7c7c7", "#dbdb8d", "#9edae5"};

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string render_scatter(const Projection2D& p, const std::vector<std::string>& labels,
                           const std::string& title) {
  const std::size_t n = p.points.size() / 2;
  if (labels.size() != n) throw ArgumentError("render_scatter: one label per point required");
  std::set<std::string> distinct;
  for (const auto& l : labels) distinct.insert(display_label(l));
  if (distinct.size() > kPalette.size()) {
    throw LegendOverflowError(std::to_string(distinct.size()) + " labels exceed the " +
                              std::to_string(kPalette.size()) +
                              "-color legend; export the projection CSV and plot it externally");
  }
  std::map<std::string, std::size_t> color;
  for (const auto& l : distinct) color.emplace(l, color.size());

  constexpr double kPlot = 440.0, kMargin = 30.0, kLegendX = 500.0;
  double xmin = 0, xmax = 0, ymin = 0, ymax = 0;
  for (std::size_t i = 0; i < n; ++i) {
    xmin = i == 0 ? p.points[0] : std::min(xmin, p.points[2 * i]);
    xmax = i == 0 ? p.points[0] : std::max(xmax, p.points[2 * i]);
    ymin = i == 0 ? p.points[1] : std::min(ymin, p.points[2 * i + 1]);
    ymax = i == 0 ? p.points[1] : std::max(ymax, p.points[2 * i + 1]);
  }
  const double span = std::max({xmax - xmin, ymax - ymin, 1e-12});

  std::string svg;
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
                "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"%d\" height=\"%d\">\n"
                "<rect width=\"100%%\" height=\"100%%\" fill=\"white\"/>\n"
                "<text x=\"%.0f\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">%s</text>\n",
                700, static_cast<int>(kPlot + 2 * kMargin), kMargin, xml_escape(title).c_str());
  svg += buf;
  svg += "<g id=\"points\">\n";
  for (std::size_t i = 0; i < n; ++i) {
    const double cx = kMargin + (p.points[2 * i] - xmin) / span * kPlot;
    const double cy = kMargin + kPlot - (p.points[2 * i + 1] - ymin) / span * kPlot;
    std::snprintf(buf, sizeof buf, "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"3\" fill=\"%s\"/>\n", cx, cy,
                  kPalette[color.at(display_label(labels[i]))]);
    svg += buf;
  }
  svg += "</g>\n<g id=\"legend\" font-family=\"sans-serif\" font-size=\"12\">\n";
  std::size_t row = 0;
  for (const auto& [label, c] : color) {
    const double y = kMargin + 18.0 * static_cast<double>(row++);
    std::snprintf(buf, sizeof buf,
                  "<rect x=\"%.0f\" y=\"%.0f\" width=\"10\" height=\"10\" fill=\"%s\"/>"
                  "<text x=\"%.0f\" y=\"%.0f\">",
                  kLegendX, y, kPalette[c], kLegendX + 16, y + 9);
    svg += buf;
    svg += xml_escape(label) + "</text>\n";
  }
  svg += "</g>\n</svg>\n";
  return svg;
}

std::string projection_csv(const Projection2D& p, const std::vector<std::string>& paths,
                           const std::vector<std::string>& labels) {
  const std::size_t n = p.points.size() / 2;
  if (paths.size() != n || labels.size() != n) throw ArgumentError("projection_csv: size mismatch");
  std::string out = "path,label,x,y\n";
  char buf[96];
  for (std::size_t i = 0; i < n; ++i) {
    std::snprintf(buf, sizeof buf, ",%.9g,%.9g\n", p.points[2 * i], p.points[2 * i + 1]);
    out += csv_field(paths[i]) + "," + csv_field(labels[i]) + buf;
  }
  return out;
}

}  // namespace vocrep::project
