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


#ifndef TQA_TESTS_TEST_UTIL_H_
#define TQA_TESTS_TEST_UTIL_H_

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <string>
#include <functional>
#include <random>
#include <unistd.h>
#include <vector>

#include "tqa/autodiff.h"
#include "tqa/corpus.h"

namespace tqa::testing {

// Fresh directory under the system temp dir, unique per call.
inline std::filesystem::path TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  auto dir = std::filesystem::temp_directory_path() /
             ("tqa_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// |a - b| / max(|a|, |b|, floor).
inline double RelErr(double a, double b, double floor = 1e-5) {
  return std::fabs(a - b) / std::max({std::fabs(a), std::fabs(b), floor});
}

// Small synthetic corpus shared by several suites.
inline const Dataset& MiniCorpus() {
  static const Dataset d = SynthesizeMiniCorpus(3, 8, 160);
  return d;
}

// Worst relative error between the tape gradient of a scalar function of
// several inputs and central differences with step h. `rows[k]`, when
// given, makes input k a matrix with that many rows.
inline double MaxGradError(const std::vector<std::vector<double>>& inputs,
                           const std::function<ad::Var(ad::Tape&, const std::vector<ad::Var>&)>& f,
                           std::vector<int> rows = {}, double h = 1e-5, double floor = 1e-5) {
  rows.resize(inputs.size(), 0);
  auto leaves = [&](ad::Tape& t, const std::vector<std::vector<double>>& xs) {
    std::vector<ad::Var> vs;
    for (std::size_t k = 0; k < xs.size(); ++k) {
      const int r = rows[k] > 0 ? rows[k] : static_cast<int>(xs[k].size());
      vs.push_back(t.Input(xs[k], r, static_cast<int>(xs[k].size()) / r));
    }
    return vs;
  };
  ad::Tape tape;
  const std::vector<ad::Var> vars = leaves(tape, inputs);
  tape.Backward(f(tape, vars));
  double worst = 0.0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const auto g = tape.grad(vars[k]);
    for (std::size_t j = 0; j < inputs[k].size(); ++j) {
      auto eval = [&](double delta) {
        auto moved = inputs;
        moved[k][j] += delta;
        ad::Tape t;
        return t.scalar(f(t, leaves(t, moved)));
      };
      const double fd = (eval(h) - eval(-h)) / (2 * h);
      worst = std::max(worst, RelErr(g[j], fd, floor));
    }
  }
  return worst;
}

inline std::vector<double> RandomVector(std::size_t n, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

}  // namespace tqa::testing

#endif  // TQA_TESTS_TEST_UTIL_H_
