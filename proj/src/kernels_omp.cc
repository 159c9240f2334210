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

#include <omp.h>

#include <cstddef>

#include "tqa/kernels.h"

namespace tqa::kernels {
namespace omp {

void MatVec(std::span<const double> a, int rows, int cols,
            std::span<const double> x, std::span<double> y) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < rows; ++i) {
    const double* row = a.data() + static_cast<std::size_t>(i) * cols;
    double sum = 0.0;
    for (int j = 0; j < cols; ++j) sum += row[j] * x[j];
    y[i] = sum;
  }
}

void MatTVecAccum(std::span<const double> a, int rows, int cols,
                  std::span<const double> x, std::span<double> y) {
#pragma omp parallel for schedule(static)
  for (int j = 0; j < cols; ++j) {
    double sum = 0.0;
    for (int i = 0; i < rows; ++i) {
      sum += a[static_cast<std::size_t>(i) * cols + j] * x[i];
    }
    y[j] += sum;
  }
}

void OuterAccum(std::span<double> a, int rows, int cols,
                std::span<const double> u, std::span<const double> v) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < rows; ++i) {
    const double ui = u[i];
    if (ui == 0.0) continue;
    double* row = a.data() + static_cast<std::size_t>(i) * cols;
    for (int j = 0; j < cols; ++j) row[j] += ui * v[j];
  }
}

void ProjectRows(std::span<const double> table, int vocab, int dim,
                 std::span<const double> grads, int n,
                 std::span<double> out) {
#pragma omp parallel for collapse(2) schedule(static)
  for (int i = 0; i < n; ++i) {
    for (int v = 0; v < vocab; ++v) {
      const double* g = grads.data() + static_cast<std::size_t>(i) * dim;
      const double* e = table.data() + static_cast<std::size_t>(v) * dim;
      double sum = 0.0;
      for (int k = 0; k < dim; ++k) sum += e[k] * g[k];
      out[static_cast<std::size_t>(i) * vocab + v] = sum;
    }
  }
}

void PairwiseSqDist(std::span<const double> table, int vocab, int dim,
                    std::span<double> out) {
#pragma omp parallel for schedule(dynamic, 8)
  for (int a = 0; a < vocab; ++a) {
    const double* ea = table.data() + static_cast<std::size_t>(a) * dim;
    for (int b = 0; b < vocab; ++b) {
      const double* eb = table.data() + static_cast<std::size_t>(b) * dim;
      double sum = 0.0;
      for (int k = 0; k < dim; ++k) {
        const double d = ea[k] - eb[k];
        sum += d * d;
      }
      out[static_cast<std::size_t>(a) * vocab + b] = sum;
    }
  }
}

}  // namespace omp

namespace {
bool UseParallel(long work) {
  return work >= kParallelThreshold && omp_get_max_threads() > 1 &&
         !omp_in_parallel();
}
}  // namespace

void SetNumThreads(int n) {
  if (n > 0) omp_set_num_threads(n);
}

int NumThreads() { return omp_get_max_threads(); }

void MatVec(std::span<const double> a, int rows, int cols,
            std::span<const double> x, std::span<double> y) {
  if (UseParallel(static_cast<long>(rows) * cols)) {
    omp::MatVec(a, rows, cols, x, y);
  } else {
    serial::MatVec(a, rows, cols, x, y);
  }
}

void MatTVecAccum(std::span<const double> a, int rows, int cols,
                  std::span<const double> x, std::span<double> y) {
  if (UseParallel(static_cast<long>(rows) * cols)) {
    omp::MatTVecAccum(a, rows, cols, x, y);
  } else {
    serial::MatTVecAccum(a, rows, cols, x, y);
  }
}

void OuterAccum(std::span<double> a, int rows, int cols,
                std::span<const double> u, std::span<const double> v) {
  if (UseParallel(static_cast<long>(rows) * cols)) {
    omp::OuterAccum(a, rows, cols, u, v);
  } else {
    serial::OuterAccum(a, rows, cols, u, v);
  }
}

void ProjectRows(std::span<const double> table, int vocab, int dim,
                 std::span<const double> grads, int n, std::span<double> out) {
  if (UseParallel(static_cast<long>(vocab) * dim * n)) {
    omp::ProjectRows(table, vocab, dim, grads, n, out);
  } else {
    serial::ProjectRows(table, vocab, dim, grads, n, out);
  }
}

void PairwiseSqDist(std::span<const double> table, int vocab, int dim,
                    std::span<double> out) {
  if (UseParallel(static_cast<long>(vocab) * vocab * dim)) {
    omp::PairwiseSqDist(table, vocab, dim, out);
  } else {
    serial::PairwiseSqDist(table, vocab, dim, out);
  }
}

}  // namespace tqa::kernels
