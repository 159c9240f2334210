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

#include "tqa/kernels.h"

#include <cstddef>

namespace tqa::kernels::serial {

void MatVec(std::span<const double> a, int rows, int cols,
            std::span<const double> x, std::span<double> y) {
  for (int i = 0; i < rows; ++i) {
    const double* row = a.data() + static_cast<std::size_t>(i) * cols;
    double sum = 0.0;
    for (int j = 0; j < cols; ++j) sum += row[j] * x[j];
    y[i] = sum;
  }
}

void MatTVecAccum(std::span<const double> a, int rows, int cols,
                  std::span<const double> x, std::span<double> y) {
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
  for (int i = 0; i < n; ++i) {
    const double* g = grads.data() + static_cast<std::size_t>(i) * dim;
    for (int v = 0; v < vocab; ++v) {
      const double* e = table.data() + static_cast<std::size_t>(v) * dim;
      double sum = 0.0;
      for (int k = 0; k < dim; ++k) sum += e[k] * g[k];
      out[static_cast<std::size_t>(i) * vocab + v] = sum;
    }
  }
}

void PairwiseSqDist(std::span<const double> table, int vocab, int dim,
                    std::span<double> out) {
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

}  // namespace tqa::kernels::serial
