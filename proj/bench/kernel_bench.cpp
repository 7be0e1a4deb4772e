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

// Serial reference vs OpenMP kernels. Sizes follow the first encoder layer on
// a 10 s chunk, a transformer projection and a 500-point t-SNE step.

#include <vector>

#include <benchmark/benchmark.h>

#include "vocrep/kernels.hpp"
#include "vocrep/rng.hpp"

using namespace vocrep;
using namespace vocrep::kernels;

namespace {

template <typename T>
std::vector<T> noise(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<T> v(n);
  for (auto& x : v) x = static_cast<T>(rng.normal());
  return v;
}

template <bool Parallel>
void BM_Conv1dForward(benchmark::State& state) {
  const Conv1dGeometry g{1, 160000, 64, 10, 5, 0, 0, 1};
  const auto x = noise<float>(g.length, 1);
  const auto w = noise<float>(g.out_channels * g.kernel, 2);
  const auto b = noise<float>(g.out_channels, 3);
  std::vector<float> y(g.out_channels * g.out_length());
  for (auto _ : state) {
    if constexpr (Parallel)
      parallel::conv1d_forward<float>(g, x, w, b, y);
    else
      serial::conv1d_forward<float>(g, x, w, b, y);
    benchmark::DoNotOptimize(y.data());
  }
}

template <bool Parallel>
void BM_Gemm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = noise<float>(n * n, 4), b = noise<float>(n * n, 5);
  std::vector<float> c(n * n);
  for (auto _ : state) {
    (Parallel ? parallel::gemm<float> : serial::gemm<float>)(false, true, n, n, n, a.data(), b.data(), c.data(),
                                                              false);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n * n * n));
}

template <bool Parallel>
void BM_Resample(benchmark::State& state) {
  const auto in = noise<float>(441000, 6);
  std::vector<float> out(160000);
  for (auto _ : state) {
    (Parallel ? parallel::resample : serial::resample)(in, 44100, 16000, 8.6, out);
    benchmark::DoNotOptimize(out.data());
  }
}

template <bool Parallel>
void BM_TsneStep(benchmark::State& state) {
  const std::size_t n = 500;
  const auto y = noise<double>(n * 2, 7);
  std::vector<double> p(n * n, 1.0 / static_cast<double>(n * (n - 1))), grad(n * 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize((Parallel ? parallel::tsne_gradient : serial::tsne_gradient)(y, p, n, 12.0, grad));
  }
}

}  // namespace

BENCHMARK(BM_Conv1dForward<false>)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Conv1dForward<true>)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Gemm<false>)->Arg(128)->Arg(512);
BENCHMARK(BM_Gemm<true>)->Arg(128)->Arg(512);
BENCHMARK(BM_Resample<false>)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Resample<true>)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TsneStep<false>)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TsneStep<true>)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
