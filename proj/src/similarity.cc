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

#include "tqa/similarity.h"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "tqa/params.h"

namespace tqa {

const std::vector<double>* WordEmbeddings::Find(const std::string& word) const {
  const auto it = vectors.find(word);
  return it == vectors.end() ? nullptr : &it->second;
}

WordEmbeddings TrainWordEmbeddings(std::span<const Tokens> sentences, int dim, int window,
                                   int min_count) {
  std::map<std::string, int> counts;
  for (const auto& s : sentences) {
    for (const auto& w : s) ++counts[w];
  }
  std::vector<std::string> words;
  std::unordered_map<std::string, int> index;
  for (const auto& [w, c] : counts) {
    if (c >= min_count) {
      index[w] = static_cast<int>(words.size());
      words.push_back(w);
    }
  }
  const int n = static_cast<int>(words.size());
  WordEmbeddings out;
  out.dim = dim;
  if (n == 0) return out;

  Eigen::MatrixXd co = Eigen::MatrixXd::Zero(n, n);
  for (const auto& s : sentences) {
    for (int i = 0; i < static_cast<int>(s.size()); ++i) {
      const auto wi = index.find(s[i]);
      if (wi == index.end()) continue;
      for (int j = std::max(0, i - window); j <= std::min<int>(s.size() - 1, i + window); ++j) {
        if (j == i) continue;
        const auto wj = index.find(s[j]);
        if (wj != index.end()) co(wi->second, wj->second) += 1.0;
      }
    }
  }
  const Eigen::VectorXd row = co.rowwise().sum();
  const double total = row.sum();
  Eigen::MatrixXd ppmi = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (co(i, j) > 0) ppmi(i, j) = std::max(0.0, std::log(co(i, j) * total / (row(i) * row(j))));
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(ppmi);
  const Eigen::VectorXd& vals = solver.eigenvalues();  // ascending
  const Eigen::MatrixXd& vecs = solver.eigenvectors();
  for (int i = 0; i < n; ++i) out.vectors[words[i]].assign(dim, 0.0);
  for (int k = 0; k < dim && k < n; ++k) {
    const int col = n - 1 - k;
    if (vals(col) <= 0) break;
    const double s = std::sqrt(vals(col));
    // Fix the sign so the largest-magnitude entry is positive.
    Eigen::Index arg;
    vecs.col(col).cwiseAbs().maxCoeff(&arg);
    const double sign = vecs(arg, col) < 0 ? -1.0 : 1.0;
    for (int i = 0; i < n; ++i) out.vectors[words[i]][k] = sign * vecs(i, col) * s;
  }
  return out;
}

double LengthPenalty(int ref_len, int hyp_len) {
  const double hi = std::max(ref_len, hyp_len), lo = std::min(ref_len, hyp_len);
  if (lo <= 0) return 0.0;
  return std::exp(1.0 - hi / lo);
}

EmbeddingSimilarity::EmbeddingSimilarity(WordEmbeddings embeddings, double alpha)
    : emb_(std::move(embeddings)), alpha_(alpha) {}

namespace {

std::vector<double> MeanEmbedding(const WordEmbeddings& emb, const Tokens& s, bool* any) {
  std::vector<double> m(emb.dim, 0.0);
  int n = 0;
  for (const auto& w : s) {
    const auto* v = emb.Find(w);
    if (!v) continue;
    for (int k = 0; k < emb.dim; ++k) m[k] += (*v)[k];
    ++n;
  }
  *any = n > 0;
  if (n > 0) {
    for (double& x : m) x /= n;
  }
  return m;
}

}  // namespace

double EmbeddingSimilarity::Score(const Tokens& reference, const Tokens& hypothesis) const {
  if (reference == hypothesis) return 1.0;
  bool any_r = false, any_h = false;
  const auto r = MeanEmbedding(emb_, reference, &any_r);
  const auto h = MeanEmbedding(emb_, hypothesis, &any_h);
  double cos = 0.0;
  if (any_r && any_h) {
    double dot = 0.0, nr = 0.0, nh = 0.0;
    for (int k = 0; k < emb_.dim; ++k) {
      dot += r[k] * h[k];
      nr += r[k] * r[k];
      nh += h[k] * h[k];
    }
    if (nr > 0 && nh > 0) cos = dot / std::sqrt(nr * nh);
  }
  const double lp = LengthPenalty(static_cast<int>(reference.size()), static_cast<int>(hypothesis.size()));
  return std::clamp(cos, 0.0, 1.0) * std::pow(lp, alpha_);
}

double SimileScore(const Tokens& reference, const Tokens& hypothesis, const SimilarityScorer& scorer) {
  if (reference.empty() || hypothesis.empty()) throw Error("similarity of an empty sequence");
  return scorer.Score(reference, hypothesis);
}

void SaveWordEmbeddings(const std::string& path, const WordEmbeddings& emb) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out.precision(17);
  std::map<std::string, std::vector<double>> sorted(emb.vectors.begin(), emb.vectors.end());
  out << sorted.size() << ' ' << emb.dim << '\n';
  for (const auto& [w, v] : sorted) {
    out << w;
    for (double x : v) out << ' ' << x;
    out << '\n';
  }
}

WordEmbeddings LoadWordEmbeddings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path);
  WordEmbeddings emb;
  std::size_t n = 0;
  if (!(in >> n >> emb.dim)) throw Error(path + ": bad embedding header");
  for (std::size_t i = 0; i < n; ++i) {
    std::string w;
    std::vector<double> v(emb.dim);
    in >> w;
    for (double& x : v) in >> x;
    if (!in) throw Error(path + ": truncated embedding file");
    emb.vectors[w] = std::move(v);
  }
  return emb;
}

}  // namespace tqa
