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

#ifndef TQA_SIMILARITY_H_
#define TQA_SIMILARITY_H_

#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "tqa/text.h"

namespace tqa {

// Sentence-level semantic similarity in [0, 1].
class SimilarityScorer {
 public:
  virtual ~SimilarityScorer() = default;
  virtual double Score(const Tokens& reference, const Tokens& hypothesis) const = 0;
  virtual std::string name() const = 0;
};

struct WordEmbeddings {
  int dim = 0;
  std::unordered_map<std::string, std::vector<double>> vectors;

  const std::vector<double>* Find(const std::string& word) const;
};

// Positive PMI co-occurrence counts within a symmetric window, factorized by
// a symmetric eigendecomposition; rows are U_k * sqrt(lambda_k) over the top
// positive eigenvalues.
WordEmbeddings TrainWordEmbeddings(std::span<const Tokens> sentences, int dim = 32, int window = 2,
                                   int min_count = 1);

// Length penalty exp(1 - max(|r|, |h|) / min(|r|, |h|)).
double LengthPenalty(int ref_len, int hyp_len);

// max(0, cos(mean(r), mean(h))) * LP^alpha. Identical sequences score 1.
// Words without an embedding are skipped; a sentence with no known word has
// cosine 0 against anything but itself.
class EmbeddingSimilarity : public SimilarityScorer {
 public:
  explicit EmbeddingSimilarity(WordEmbeddings embeddings, double alpha = 0.25);
  double Score(const Tokens& reference, const Tokens& hypothesis) const override;
  std::string name() const override { return "simile"; }
  const WordEmbeddings& embeddings() const { return emb_; }

 private:
  WordEmbeddings emb_;
  double alpha_;
};

// Errors on empty input, then delegates to the scorer.
double SimileScore(const Tokens& reference, const Tokens& hypothesis, const SimilarityScorer& scorer);

void SaveWordEmbeddings(const std::string& path, const WordEmbeddings& emb);
WordEmbeddings LoadWordEmbeddings(const std::string& path);

}  // namespace tqa

#endif  // TQA_SIMILARITY_H_
