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

#ifndef TQA_LOCAL_ATTACKS_H_
#define TQA_LOCAL_ATTACKS_H_

// White-box single-token attacks. Each one linearizes the adversarial loss
// around the question embeddings and picks the substitution (position i,
// token v) minimizing (E[v] - y_i)^T dL/dy_i. Entity positions are never
// edited.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tqa/delex.h"
#include "tqa/evaluation.h"
#include "tqa/target_model.h"

namespace tqa {

struct SubstitutionScore {
  int position = 0;
  int token = 0;  // target vocabulary id
  double score = 0.0;
};

// The attacked input: the lexical question with entity positions masked.
struct AttackInput {
  Tokens question;
  std::vector<bool> entity;  // per position
  GoldLabels gold;
};
AttackInput MakeAttackInput(const DelexExample& example);

// Scores every (position, candidate) pair from a precomputed input gradient.
// candidates[i] lists target vocabulary ids allowed at position i; entity
// positions must have no candidates. Throws when no position has any.
std::vector<SubstitutionScore> ScoreSubstitutions(const InputGradient& grad, const TargetModel& model,
                                                  std::span<const std::vector<int>> candidates);
// Lowest score, ties to the lowest (position, token id).
SubstitutionScore BestSubstitution(std::span<const SubstitutionScore> scores);

// Non-special vocabulary ids other than the original token at every
// non-entity position.
std::vector<std::vector<int>> UnconstrainedCandidates(const AttackInput& input, const TargetModel& model);

// k nearest non-special tokens of every vocabulary entry by Euclidean
// distance in the target's embedding table, excluding the entry itself. Ties
// go to the lower id.
class NeighborIndex {
 public:
  NeighborIndex(const TargetModel& model, int k);
  const std::vector<int>& Neighbors(int id) const { return neighbors_.at(id); }
  int k() const { return k_; }

 private:
  int k_;
  std::vector<std::vector<int>> neighbors_;
};
std::vector<std::vector<int>> KnnCandidates(const AttackInput& input, const TargetModel& model,
                                            const NeighborIndex& index);

inline constexpr int kDefaultNeighbors = 10;

AttackRecord AttackUnconstrained(const DelexExample& example, const Table& table, const TargetModel& model);
AttackRecord AttackKnn(const DelexExample& example, const Table& table, const TargetModel& model,
                       const NeighborIndex& index);
AttackRecord AttackKnn(const DelexExample& example, const Table& table, const TargetModel& model,
                       int k = kDefaultNeighbors);

// Picks the position whose replacement by the unknown embedding scores
// lowest, then turns the token into an out-of-vocabulary string by a seeded
// adjacent swap or a character insertion.
AttackRecord AttackCharSwap(const DelexExample& example, const Table& table, const TargetModel& model,
                            std::uint64_t seed);
// The string edit on its own. Single-character tokens always get an
// insertion. The result is never in `vocab`.
std::string PerturbToken(const std::string& token, const Vocab& vocab, Rng& rng);

}  // namespace tqa

#endif  // TQA_LOCAL_ATTACKS_H_
