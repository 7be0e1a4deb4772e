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
#include <vector>

#include <gtest/gtest.h>

#include "vocrep/kernels.hpp"
#include "vocrep/rng.hpp"

using namespace vocrep;
using namespace vocrep::kernels;

namespace {

std::vector<float> noise(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<float> v(n);
  for (auto& x : v) x = static_cast<float>(rng.normal());
  return v;
}

template <typename Fn>
auto at_threads(int n, Fn fn) {
  set_num_threads(n);
  auto r = fn();
  set_num_threads(0);
  return r;
}

void expect_close(const std::vector<float>& a, const std::vector<float>& b, double tol) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], tol) << i;
}

}  // namespace

TEST(Kernels, Conv1dMatchesDirectLoop) {
  Conv1dGeometry g{4, 13, 6, 3, 2, 1, 2, 2};
  const auto x = noise(g.in_channels * g.length, 1);
  const auto w = noise(g.out_channels * g.in_per_group() * g.kernel, 2);
  const auto b = noise(g.out_channels, 3);
  std::vector<float> y(g.out_channels * g.out_length());
  serial::conv1d_forward<float>(g, x, w, b, y);
  for (std::size_t co = 0; co < g.out_channels; ++co) {
    const std::size_t grp = co / g.out_per_group();
    for (std::size_t t = 0; t < g.out_length(); ++t) {
      double acc = b[co];
      for (std::size_t ci = 0; ci < g.in_per_group(); ++ci)
        for (std::size_t k = 0; k < g.kernel; ++k) {
          const long pos = static_cast<long>(t * g.stride + k) - static_cast<long>(g.pad_left);
          if (pos < 0 || pos >= static_cast<long>(g.length)) continue;
          acc += w[(co * g.in_per_group() + ci) * g.kernel + k] *
                 x[(grp * g.in_per_group() + ci) * g.length + static_cast<std::size_t>(pos)];
        }
      EXPECT_NEAR(y[co * g.out_length() + t], acc, 1e-5);
    }
  }
}

TEST(Kernels, GemmMatchesDirectLoop) {
  const std::size_t m = 5, n = 7, k = 3;
  const auto a = noise(k * m, 4);  // stored transposed: [k x m]
  const auto b = noise(k * n, 5);
  std::vector<float> c(m * n, 1.0f);
  serial::gemm<float>(true, false, m, n, k, a.data(), b.data(), c.data(), true);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 1.0;
      for (std::size_t p = 0; p < k; ++p) acc += a[p * m + i] * b[p * n + j];
      EXPECT_NEAR(c[i * n + j], acc, 1e-5);
    }
}

TEST(Kernels, ConvIndependentOfThreadCount) {
  Conv1dGeometry g{8, 200, 8, 5, 3, 2, 2, 2};
  const auto x = noise(g.in_channels * g.length, 6);
  const auto w = noise(g.out_channels * g.in_per_group() * g.kernel, 7);
  const auto b = noise(g.out_channels, 8);
  const auto dy = noise(g.out_channels * g.out_length(), 9);
  auto run = [&](bool par) {
    std::vector<float> y(dy.size()), dx(x.size()), dw(w.size()), db(b.size());
    if (par) {
      parallel::conv1d_forward<float>(g, x, w, b, y);
      parallel::conv1d_backward_input<float>(g, w, dy, dx);
      parallel::conv1d_backward_weight<float>(g, x, dy, dw, db);
    } else {
      serial::conv1d_forward<float>(g, x, w, b, y);
      serial::conv1d_backward_input<float>(g, w, dy, dx);
      serial::conv1d_backward_weight<float>(g, x, dy, dw, db);
    }
    return std::vector<std::vector<float>>{y, dx, dw, db};
  };
  const auto one = at_threads(1, [&] { return run(true); });
  const auto three = at_threads(3, [&] { return run(true); });
  const auto ref = run(false);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(one[i], three[i]);
    expect_close(one[i], ref[i], 1e-4);
  }
}

TEST(Kernels, GemmIndependentOfThreadCount) {
  const std::size_t m = 33, n = 17, k = 29;
  const auto a = noise(m * k, 10);
  const auto b = noise(n * k, 11);
  for (bool ta : {false, true})
    for (bool tb : {false, true}) {
      auto run = [&](bool par) {
        std::vector<float> c(m * n);
        (par ? parallel::gemm<float> : serial::gemm<float>)(ta, tb, m, n, k, a.data(), b.data(), c.data(), false);
        return c;
      };
      const auto one = at_threads(1, [&] { return run(true); });
      EXPECT_EQ(one, at_threads(3, [&] { return run(true); }));
      expect_close(one, run(false), 1e-4);
    }
}

TEST(Kernels, ResampleIndependentOfThreadCount) {
  const auto in = noise(4410, 12);
  auto run = [&](bool par) {
    std::vector<float> r(1600);
    (par ? parallel::resample : serial::resample)(in, 44100, 16000, 8.6, r);
    return r;
  };
  const auto one = at_threads(1, [&] { return run(true); });
  EXPECT_EQ(one, at_threads(3, [&] { return run(true); }));
  expect_close(one, run(false), 1e-5);
}

TEST(Kernels, TsneKernelsIndependentOfThreadCount) {
  const std::size_t n = 40;
  std::vector<double> x(n * 3), y(n * 2), p(n * n, 1.0 / (n * (n - 1)));
  Rng rng(13);
  for (auto& v : x) v = rng.normal();
  for (auto& v : y) v = rng.normal();
  for (std::size_t i = 0; i < n; ++i) p[i * n + i] = 0.0;
  auto run = [&](bool par) {
    std::vector<double> d(n * n), g(n * 2);
    double z;
    if (par) {
      parallel::pairwise_sq_distances<double>(x, n, 3, d);
      z = parallel::tsne_gradient(y, p, n, 12.0, g);
    } else {
      serial::pairwise_sq_distances<double>(x, n, 3, d);
      z = serial::tsne_gradient(y, p, n, 12.0, g);
    }
    d.insert(d.end(), g.begin(), g.end());
    d.push_back(z);
    return d;
  };
  const auto one = at_threads(1, [&] { return run(true); });
  EXPECT_EQ(one, at_threads(3, [&] { return run(true); }));
  const auto ref = run(false);
  for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(one[i], ref[i], 1e-9 * (1 + std::abs(ref[i])));
}
