// Copyright 2026 The TableQA-Adv Authors.
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

// Serial vs OpenMP kernels at attack- and training-sized shapes.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "tqa/kernels.h"

namespace {

std::vector<double> Random(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

template <bool kParallel>
void BM_MatVec(benchmark::State& state) {
  const int rows = static_cast<int>(state.range(0)), cols = 128;
  const auto a = Random(static_cast<std::size_t>(rows) * cols, 1);
  const auto x = Random(cols, 2);
  std::vector<double> y(rows);
  for (auto _ : state) {
    if (kParallel) {
      tqa::kernels::omp::MatVec(a, rows, cols, x, y);
    } else {
      tqa::kernels::serial::MatVec(a, rows, cols, x, y);
    }
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * rows * cols);
}

template <bool kParallel>
void BM_ProjectRows(benchmark::State& state) {
  const int vocab = static_cast<int>(state.range(0)), dim = 32, n = 16;
  const auto table = Random(static_cast<std::size_t>(vocab) * dim, 3);
  const auto grads = Random(static_cast<std::size_t>(n) * dim, 4);
  std::vector<double> out(static_cast<std::size_t>(n) * vocab);
  for (auto _ : state) {
    if (kParallel) {
      tqa::kernels::omp::ProjectRows(table, vocab, dim, grads, n, out);
    } else {
      tqa::kernels::serial::ProjectRows(table, vocab, dim, grads, n, out);
    }
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * n * vocab * dim);
}

template <bool kParallel>
void BM_PairwiseSqDist(benchmark::State& state) {
  const int vocab = static_cast<int>(state.range(0)), dim = 32;
  const auto table = Random(static_cast<std::size_t>(vocab) * dim, 5);
  std::vector<double> out(static_cast<std::size_t>(vocab) * vocab);
  for (auto _ : state) {
    if (kParallel) {
      tqa::kernels::omp::PairwiseSqDist(table, vocab, dim, out);
    } else {
      tqa::kernels::serial::PairwiseSqDist(table, vocab, dim, out);
    }
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * vocab * vocab * dim);
}

BENCHMARK(BM_MatVec<false>)->Arg(256)->Arg(1024)->Arg(4096);
BENCHMARK(BM_MatVec<true>)->Arg(256)->Arg(1024)->Arg(4096);
BENCHMARK(BM_ProjectRows<false>)->Arg(500)->Arg(2000);
BENCHMARK(BM_ProjectRows<true>)->Arg(500)->Arg(2000);
BENCHMARK(BM_PairwiseSqDist<false>)->Arg(500)->Arg(1000);
BENCHMARK(BM_PairwiseSqDist<true>)->Arg(500)->Arg(1000);

}  // namespace

BENCHMARK_MAIN();
