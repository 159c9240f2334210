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

#ifndef TQA_PARAMS_H_
#define TQA_PARAMS_H_

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tqa {

using Rng = std::mt19937_64;

// Base class for every error this library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Parameter {
  std::string name;
  int rows = 0;
  int cols = 0;
  std::vector<double> value;

  std::size_t size() const { return value.size(); }
};

// Ordered, named collection of dense parameters.
class ParamStore {
 public:
  int Add(std::string name, int rows, int cols);

  Parameter& at(int index) { return params_[index]; }
  const Parameter& at(int index) const { return params_[index]; }
  int size() const { return static_cast<int>(params_.size()); }
  std::size_t NumValues() const;

  // Returns -1 when no parameter carries the name.
  int Find(const std::string& name) const;

  // Uniform(-scale, scale) initialization of one parameter.
  void InitUniform(int index, double scale, Rng& rng);
  void Zero(int index);

  bool AllFinite() const;

  // Flat copy in declaration order; used for determinism checks.
  std::vector<double> Flatten() const;
  // Inverse of Flatten().
  void Assign(std::span<const double> flat);

 private:
  std::vector<Parameter> params_;
};

// Gradient accumulator aligned with a ParamStore.
class GradSink {
 public:
  explicit GradSink(const ParamStore& store);

  const ParamStore* store() const { return store_; }
  std::span<double> Grad(int index) { return grads_[index]; }
  std::span<const double> Grad(int index) const { return grads_[index]; }
  void Zero();
  double SquaredNorm() const;
  void Scale(double factor);

 private:
  const ParamStore* store_;
  std::vector<std::vector<double>> grads_;
};

// Adam with constant learning rate.
class Adam {
 public:
  Adam(ParamStore& store, double learning_rate, double beta1 = 0.9,
       double beta2 = 0.999, double epsilon = 1e-8);

  void Step(const GradSink& grads);
  long steps() const { return step_; }

 private:
  ParamStore* store_;
  double lr_, beta1_, beta2_, eps_;
  long step_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

// 64-bit FNV-1a over a list of strings; identifies a vocabulary.
std::uint64_t HashStrings(std::span<const std::string> items);

// Binary checkpoint: "TQACKPT\0", format version, kind tag, integer dims,
// vocabularies, then named parameter blobs.
struct CheckpointHeader {
  std::string kind;
  std::vector<std::int64_t> dims;
  std::vector<std::vector<std::string>> vocabs;
  std::vector<std::uint64_t> vocab_hashes;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

void WriteCheckpoint(const std::string& path, const CheckpointHeader& header,
                     const ParamStore& store);
// Reads the header and fills `store`, which must already declare parameters
// with matching names and shapes (or be empty, in which case they are
// created).
CheckpointHeader ReadCheckpoint(const std::string& path, ParamStore& store);
CheckpointHeader ReadCheckpointHeader(const std::string& path);

}  // namespace tqa

#endif  // TQA_PARAMS_H_
