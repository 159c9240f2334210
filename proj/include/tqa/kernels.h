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

#ifndef TQA_KERNELS_H_
#define TQA_KERNELS_H_

// Dense double-precision kernels used by the autodiff tape and the attack
// scorers. Every kernel exists twice: a serial reference in
// tqa::kernels::serial and an OpenMP version in tqa::kernels::omp. Both
// compute each output element with the same loop order, so results are
// bit-identical regardless of thread count.

#include <span>

namespace tqa::kernels {

namespace serial {

// y = A x, with A row-major rows x cols.
void MatVec(std::span<const double> a, int rows, int cols,
            std::span<const double> x, std::span<double> y);
// y += A^T x.
void MatTVecAccum(std::span<const double> a, int rows, int cols,
                  std::span<const double> x, std::span<double> y);
// A += u v^T.
void OuterAccum(std::span<double> a, int rows, int cols,
                std::span<const double> u, std::span<const double> v);
// out[i * vocab + v] = dot(table[v], grads[i]) for n positions.
void ProjectRows(std::span<const double> table, int vocab, int dim,
                 std::span<const double> grads, int n,
                 std::span<double> out);
// out[a * vocab + b] = ||table[a] - table[b]||^2.
void PairwiseSqDist(std::span<const double> table, int vocab, int dim,
                    std::span<double> out);

}  // namespace serial

namespace omp {

void MatVec(std::span<const double> a, int rows, int cols,
            std::span<const double> x, std::span<double> y);
void MatTVecAccum(std::span<const double> a, int rows, int cols,
                  std::span<const double> x, std::span<double> y);
void OuterAccum(std::span<double> a, int rows, int cols,
                std::span<const double> u, std::span<const double> v);
void ProjectRows(std::span<const double> table, int vocab, int dim,
                 std::span<const double> grads, int n,
                 std::span<double> out);
void PairwiseSqDist(std::span<const double> table, int vocab, int dim,
                    std::span<double> out);

}  // namespace omp

// Work (rows * cols) above which the dispatching entry points use OpenMP.
inline constexpr long kParallelThreshold = 1L << 16;

// Sets the OpenMP thread count used by the parallel paths (<= 0 keeps the
// runtime default).
void SetNumThreads(int n);
int NumThreads();

// Dispatching entry points.
void MatVec(std::span<const double> a, int rows, int cols,
            std::span<const double> x, std::span<double> y);
void MatTVecAccum(std::span<const double> a, int rows, int cols,
                  std::span<const double> x, std::span<double> y);
void OuterAccum(std::span<double> a, int rows, int cols,
                std::span<const double> u, std::span<const double> v);
void ProjectRows(std::span<const double> table, int vocab, int dim,
                 std::span<const double> grads, int n, std::span<double> out);
void PairwiseSqDist(std::span<const double> table, int vocab, int dim,
                    std::span<double> out);

}  // namespace tqa::kernels

#endif  // TQA_KERNELS_H_
