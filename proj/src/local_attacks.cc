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

#include "tqa/local_attacks.h"

#include <algorithm>
#include <cctype>
#include <numeric>

#include "tqa/kernels.h"

namespace tqa {

namespace {

bool IsSpecial(const std::string& w) {
  return w == kPad || w == kUnk || w == kBos || w == kEos || w == kSep;
}

bool HasAlpha(const std::string& w) {
  return std::any_of(w.begin(), w.end(), [](unsigned char c) { return std::isalpha(c); });
}

}  // namespace

AttackInput MakeAttackInput(const DelexExample& example) {
  AttackInput in;
  in.question = example.original_question;
  in.entity.assign(in.question.size(), false);
  std::vector<std::optional<Span>> spans;
  for (const auto& s : example.value_spans) {
    for (int i = s.start; i <= s.end; ++i) in.entity.at(i) = true;
    spans.push_back(s);
  }
  in.gold = MakeGoldLabels(example.sql, spans);
  return in;
}

std::vector<SubstitutionScore> ScoreSubstitutions(const InputGradient& grad, const TargetModel& model,
                                                  std::span<const std::vector<int>> candidates) {
  const int n = static_cast<int>(grad.gradients.size());
  const int dim = model.dims().embed;
  const int vocab = model.vocab().size();
  if (static_cast<int>(candidates.size()) != n) throw Error("candidate sets do not match the question length");
  bool any = false;
  for (const auto& c : candidates) any = any || !c.empty();
  if (!any) throw Error("no substitution candidates at any position");

  std::vector<double> flat(static_cast<std::size_t>(n) * dim);
  for (int i = 0; i < n; ++i) std::copy(grad.gradients[i].begin(), grad.gradients[i].end(), flat.begin() + i * dim);
  std::vector<double> proj(static_cast<std::size_t>(n) * vocab);
  kernels::ProjectRows(model.params().at(model.embedding_index()).value, vocab, dim, flat, n, proj);

  std::vector<SubstitutionScore> out;
  for (int i = 0; i < n; ++i) {
    if (candidates[i].empty()) continue;
    // Same summation order as the projection kernel, so an unchanged token
    // scores exactly zero.
    double yg = 0.0;
    for (int d = 0; d < dim; ++d) yg += grad.embeddings[i][d] * grad.gradients[i][d];
    for (int v : candidates[i]) {
      if (v < 0 || v >= vocab) throw Error("candidate outside the vocabulary");
      out.push_back({i, v, proj[static_cast<std::size_t>(i) * vocab + v] - yg});
    }
  }
  return out;
}

SubstitutionScore BestSubstitution(std::span<const SubstitutionScore> scores) {
  if (scores.empty()) throw Error("no substitution scores");
  SubstitutionScore best = scores[0];
  for (const auto& s : scores) {
    if (s.score < best.score ||
        (s.score == best.score && std::tie(s.position, s.token) < std::tie(best.position, best.token))) {
      best = s;
    }
  }
  return best;
}

std::vector<std::vector<int>> UnconstrainedCandidates(const AttackInput& input, const TargetModel& model) {
  const Vocab& vocab = model.vocab();
  std::vector<std::vector<int>> out(input.question.size());
  for (std::size_t i = 0; i < input.question.size(); ++i) {
    if (input.entity[i]) continue;
    const int orig = vocab.Id(input.question[i]);
    for (int v = 0; v < vocab.size(); ++v) {
      if (v != orig && !IsSpecial(vocab.Word(v))) out[i].push_back(v);
    }
  }
  return out;
}

NeighborIndex::NeighborIndex(const TargetModel& model, int k) : k_(k) {
  if (k < 1) throw Error("k must be at least 1");
  const Vocab& vocab = model.vocab();
  const int v = vocab.size(), dim = model.dims().embed;
  std::vector<double> dist(static_cast<std::size_t>(v) * v);
  kernels::PairwiseSqDist(model.params().at(model.embedding_index()).value, v, dim, dist);
  neighbors_.resize(v);
  for (int a = 0; a < v; ++a) {
    std::vector<int> ids;
    for (int b = 0; b < v; ++b) {
      if (b != a && !IsSpecial(vocab.Word(b))) ids.push_back(b);
    }
    const std::size_t keep = std::min<std::size_t>(ids.size(), static_cast<std::size_t>(k));
    const double* row = dist.data() + static_cast<std::size_t>(a) * v;
    std::partial_sort(ids.begin(), ids.begin() + keep, ids.end(), [row](int x, int y) {
      return row[x] != row[y] ? row[x] < row[y] : x < y;
    });
    ids.resize(keep);
    std::sort(ids.begin(), ids.end());
    neighbors_[a] = std::move(ids);
  }
}

std::vector<std::vector<int>> KnnCandidates(const AttackInput& input, const TargetModel& model,
                                            const NeighborIndex& index) {
  std::vector<std::vector<int>> out(input.question.size());
  for (std::size_t i = 0; i < input.question.size(); ++i) {
    if (!input.entity[i]) out[i] = index.Neighbors(model.vocab().Id(input.question[i]));
  }
  return out;
}

namespace {

AttackRecord Substitute(const DelexExample& example, const Table& table, const TargetModel& model,
                        const std::string& method,
                        const std::function<std::vector<std::vector<int>>(const AttackInput&)>& candidates) {
  const AttackInput input = MakeAttackInput(example);
  const InputGradient grad = ComputeInputGradient(input.question, input.gold, table, model);
  const auto scores = ScoreSubstitutions(grad, model, candidates(input));
  const SubstitutionScore best = BestSubstitution(scores);
  Tokens adv = input.question;
  adv[best.position] = model.vocab().Word(best.token);
  return MakeRecord(example, table, model, std::move(adv), method, best.position);
}

}  // namespace

AttackRecord AttackUnconstrained(const DelexExample& example, const Table& table, const TargetModel& model) {
  return Substitute(example, table, model, "unconstrained",
                    [&](const AttackInput& in) { return UnconstrainedCandidates(in, model); });
}

AttackRecord AttackKnn(const DelexExample& example, const Table& table, const TargetModel& model,
                       const NeighborIndex& index) {
  return Substitute(example, table, model, "knn",
                    [&](const AttackInput& in) { return KnnCandidates(in, model, index); });
}

AttackRecord AttackKnn(const DelexExample& example, const Table& table, const TargetModel& model, int k) {
  return AttackKnn(example, table, model, NeighborIndex(model, k));
}

std::string PerturbToken(const std::string& token, const Vocab& vocab, Rng& rng) {
  if (token.empty()) throw Error("cannot perturb an empty token");
  std::uniform_int_distribution<int> letter('a', 'z');
  for (int attempt = 0; attempt < 64; ++attempt) {
    std::string s = token;
    const int len = static_cast<int>(s.size());
    const bool swap = len > 1 && std::bernoulli_distribution(0.5)(rng);
    if (swap) {
      const int i = std::uniform_int_distribution<int>(0, len - 2)(rng);
      std::swap(s[i], s[i + 1]);
    } else {
      const int lo = len > 1 ? 1 : 0;
      const int hi = len > 1 ? len - 1 : 1;
      const int i = std::uniform_int_distribution<int>(lo, hi)(rng);
      s.insert(s.begin() + i, static_cast<char>(letter(rng)));
    }
    if (s != token && !vocab.Contains(s)) return s;
  }
  std::string s = token;
  while (vocab.Contains(s) || s == token) s.push_back(static_cast<char>(letter(rng)));
  return s;
}

AttackRecord AttackCharSwap(const DelexExample& example, const Table& table, const TargetModel& model,
                            std::uint64_t seed) {
  const AttackInput input = MakeAttackInput(example);
  std::vector<std::vector<int>> candidates(input.question.size());
  bool any = false;
  for (std::size_t i = 0; i < input.question.size(); ++i) {
    if (!input.entity[i] && HasAlpha(input.question[i])) {
      candidates[i] = {model.vocab().unk()};
      any = true;
    }
  }
  if (!any) throw Error("charswap: no eligible token position");
  const InputGradient grad = ComputeInputGradient(input.question, input.gold, table, model);
  const SubstitutionScore best = BestSubstitution(ScoreSubstitutions(grad, model, candidates));
  Rng rng(seed);
  Tokens adv = input.question;
  adv[best.position] = PerturbToken(adv[best.position], model.vocab(), rng);
  return MakeRecord(example, table, model, std::move(adv), "charswap", best.position);
}

}  // namespace tqa
