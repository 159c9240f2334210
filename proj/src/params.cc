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

#include "tqa/params.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace tqa {

int ParamStore::Add(std::string name, int rows, int cols) {
  if (Find(name) >= 0) throw Error("duplicate parameter " + name);
  Parameter p;
  p.name = std::move(name);
  p.rows = rows;
  p.cols = cols;
  p.value.assign(static_cast<std::size_t>(rows) * cols, 0.0);
  params_.push_back(std::move(p));
  return static_cast<int>(params_.size()) - 1;
}

std::size_t ParamStore::NumValues() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.size();
  return n;
}

int ParamStore::Find(const std::string& name) const {
  for (int i = 0; i < size(); ++i) {
    if (params_[i].name == name) return i;
  }
  return -1;
}

void ParamStore::InitUniform(int index, double scale, Rng& rng) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  for (double& x : params_[index].value) x = dist(rng);
}

void ParamStore::Zero(int index) {
  std::fill(params_[index].value.begin(), params_[index].value.end(), 0.0);
}

bool ParamStore::AllFinite() const {
  for (const auto& p : params_) {
    for (double x : p.value) {
      if (!std::isfinite(x)) return false;
    }
  }
  return true;
}

std::vector<double> ParamStore::Flatten() const {
  std::vector<double> out;
  out.reserve(NumValues());
  for (const auto& p : params_) out.insert(out.end(), p.value.begin(), p.value.end());
  return out;
}

void ParamStore::Assign(std::span<const double> flat) {
  if (flat.size() != NumValues()) throw Error("flat parameter vector has the wrong size");
  std::size_t off = 0;
  for (auto& p : params_) {
    std::copy(flat.begin() + off, flat.begin() + off + p.value.size(), p.value.begin());
    off += p.value.size();
  }
}

GradSink::GradSink(const ParamStore& store) : store_(&store) {
  grads_.resize(store.size());
  for (int i = 0; i < store.size(); ++i) grads_[i].assign(store.at(i).size(), 0.0);
}

void GradSink::Zero() {
  for (auto& g : grads_) std::fill(g.begin(), g.end(), 0.0);
}

double GradSink::SquaredNorm() const {
  double s = 0.0;
  for (const auto& g : grads_) {
    for (double x : g) s += x * x;
  }
  return s;
}

void GradSink::Scale(double factor) {
  for (auto& g : grads_) {
    for (double& x : g) x *= factor;
  }
}

Adam::Adam(ParamStore& store, double learning_rate, double beta1, double beta2,
           double epsilon)
    : store_(&store), lr_(learning_rate), beta1_(beta1), beta2_(beta2),
      eps_(epsilon) {
  m_.resize(store.size());
  v_.resize(store.size());
  for (int i = 0; i < store.size(); ++i) {
    m_[i].assign(store.at(i).size(), 0.0);
    v_[i].assign(store.at(i).size(), 0.0);
  }
}

void Adam::Step(const GradSink& grads) {
  ++step_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(step_));
  for (int i = 0; i < store_->size(); ++i) {
    auto g = grads.Grad(i);
    auto& value = store_->at(i).value;
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t k = 0; k < value.size(); ++k) {
      m[k] = beta1_ * m[k] + (1.0 - beta1_) * g[k];
      v[k] = beta2_ * v[k] + (1.0 - beta2_) * g[k] * g[k];
      value[k] -= lr_ * (m[k] / c1) / (std::sqrt(v[k] / c2) + eps_);
    }
  }
}

std::uint64_t HashStrings(std::span<const std::string> items) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](unsigned char c) {
    h ^= c;
    h *= 1099511628211ULL;
  };
  for (const auto& s : items) {
    for (unsigned char c : s) mix(c);
    mix(0xff);
  }
  return h;
}

namespace {

constexpr char kMagic[8] = {'T', 'Q', 'A', 'C', 'K', 'P', 'T', '\0'};

template <typename T>
void Put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

void PutString(std::ostream& out, const std::string& s) {
  Put<std::uint64_t>(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

template <typename T>
T Get(std::istream& in, const std::string& path) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw Error("truncated checkpoint " + path);
  return v;
}

std::string GetString(std::istream& in, const std::string& path) {
  const auto n = Get<std::uint64_t>(in, path);
  if (n > (1u << 26)) throw Error("corrupt checkpoint " + path);
  std::string s(n, '\0');
  in.read(s.data(), static_cast<std::streamsize>(n));
  if (!in) throw Error("truncated checkpoint " + path);
  return s;
}

CheckpointHeader ReadHeader(std::istream& in, const std::string& path) {
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0) {
    throw Error("not a checkpoint: " + path);
  }
  const auto version = Get<std::uint32_t>(in, path);
  if (version != kCheckpointVersion) {
    throw Error("unsupported checkpoint version " + std::to_string(version) +
                " in " + path);
  }
  CheckpointHeader h;
  h.kind = GetString(in, path);
  const auto ndims = Get<std::uint64_t>(in, path);
  for (std::uint64_t i = 0; i < ndims; ++i) h.dims.push_back(Get<std::int64_t>(in, path));
  const auto nvocab = Get<std::uint64_t>(in, path);
  for (std::uint64_t i = 0; i < nvocab; ++i) {
    const auto hash = Get<std::uint64_t>(in, path);
    const auto n = Get<std::uint64_t>(in, path);
    std::vector<std::string> words;
    words.reserve(n);
    for (std::uint64_t k = 0; k < n; ++k) words.push_back(GetString(in, path));
    if (HashStrings(words) != hash) {
      throw Error("vocabulary hash mismatch in " + path);
    }
    h.vocabs.push_back(std::move(words));
    h.vocab_hashes.push_back(hash);
  }
  return h;
}

}  // namespace

void WriteCheckpoint(const std::string& path, const CheckpointHeader& header,
                     const ParamStore& store) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint " + path);
  out.write(kMagic, 8);
  Put<std::uint32_t>(out, kCheckpointVersion);
  PutString(out, header.kind);
  Put<std::uint64_t>(out, header.dims.size());
  for (auto d : header.dims) Put<std::int64_t>(out, d);
  Put<std::uint64_t>(out, header.vocabs.size());
  for (const auto& words : header.vocabs) {
    Put<std::uint64_t>(out, HashStrings(words));
    Put<std::uint64_t>(out, words.size());
    for (const auto& w : words) PutString(out, w);
  }
  Put<std::uint64_t>(out, static_cast<std::uint64_t>(store.size()));
  for (int i = 0; i < store.size(); ++i) {
    const auto& p = store.at(i);
    PutString(out, p.name);
    Put<std::int32_t>(out, p.rows);
    Put<std::int32_t>(out, p.cols);
    out.write(reinterpret_cast<const char*>(p.value.data()),
              static_cast<std::streamsize>(p.value.size() * sizeof(double)));
  }
  if (!out) throw Error("failed writing checkpoint " + path);
}

CheckpointHeader ReadCheckpointHeader(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path);
  return ReadHeader(in, path);
}

CheckpointHeader ReadCheckpoint(const std::string& path, ParamStore& store) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path);
  CheckpointHeader h = ReadHeader(in, path);
  const bool create = store.size() == 0;
  const auto n = Get<std::uint64_t>(in, path);
  if (!create && n != static_cast<std::uint64_t>(store.size())) {
    throw Error("parameter count mismatch in " + path);
  }
  for (std::uint64_t i = 0; i < n; ++i) {
    const std::string name = GetString(in, path);
    const auto rows = Get<std::int32_t>(in, path);
    const auto cols = Get<std::int32_t>(in, path);
    int index = create ? store.Add(name, rows, cols) : store.Find(name);
    if (index < 0) throw Error("unknown parameter " + name + " in " + path);
    auto& p = store.at(index);
    if (p.rows != rows || p.cols != cols) {
      throw Error("shape mismatch for " + name + " in " + path);
    }
    in.read(reinterpret_cast<char*>(p.value.data()),
            static_cast<std::streamsize>(p.value.size() * sizeof(double)));
    if (!in) throw Error("truncated checkpoint " + path);
  }
  return h;
}

}  // namespace tqa
