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

#include "tqa/pipeline.h"

#include <exception>

#include "tqa/local_attacks.h"
#include "tqa/objectives.h"

namespace tqa {

std::vector<DelexExample> DelexDataset(const Dataset& data, bool delexicalize, int* failures) {
  std::vector<DelexExample> out;
  int failed = 0;
  for (const auto& e : data.examples) {
    DelexResult r = Delexicalize(e, data.TableFor(e), delexicalize);
    if (auto* d = std::get_if<DelexExample>(&r)) {
      out.push_back(std::move(*d));
    } else {
      ++failed;
    }
  }
  if (failures) *failures = failed;
  return out;
}

Dataset CorrectSubset(const Dataset& data, const TargetModel& target) {
  const int n = static_cast<int>(data.examples.size());
  std::vector<char> ok(n, 0);
#pragma omp parallel for schedule(dynamic, 4)
  for (int i = 0; i < n; ++i) {
    const Example& e = data.examples[i];
    ok[i] = SameQuery(PredictQuery(e.question, data.TableFor(e), target), e.sql);
  }
  Dataset out;
  out.tables = data.tables;
  for (int i = 0; i < n; ++i) {
    if (!ok[i]) continue;
    out.examples.push_back(data.examples[i]);
    if (i < static_cast<int>(data.recorded_answers.size())) out.recorded_answers.push_back(data.recorded_answers[i]);
  }
  return out;
}

AttackMethod ParseAttackMethod(const std::string& name) {
  if (name == "unconstrained") return AttackMethod::kUnconstrained;
  if (name == "knn") return AttackMethod::kKnn;
  if (name == "charswap") return AttackMethod::kCharSwap;
  if (name == "sage" || name == "wseq_s" || name == "wseq" || name == "seq2seq" || name == "generator") {
    return AttackMethod::kGenerator;
  }
  throw Error("unknown attack method '" + name +
              "' (expected unconstrained, knn, charswap or a generator variant)");
}

Tokens GenerateQuestion(const DelexExample& example, const GeneratorModel& generator, int max_len) {
  GenerateOptions opt;
  opt.mode = DecodeMode::kGreedy;
  opt.max_len = max_len;
  const auto hyps = Generate(example.sql_tokens, generator, opt);
  return RelexicalizeLenient(hyps.front().tokens, example.entity_map);
}

std::vector<AttackRecord> RunAttack(const std::vector<DelexExample>& examples,
                                    const std::map<std::string, Table>& tables, const TargetModel& target,
                                    const GeneratorModel* generator, const AttackOptions& options) {
  if (options.method == AttackMethod::kGenerator && !generator) throw Error("generator attack without a generator");
  std::optional<NeighborIndex> index;
  if (options.method == AttackMethod::kKnn) index.emplace(target, options.k);
  const int n = static_cast<int>(examples.size());
  std::vector<AttackRecord> out(n);
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 2)
  for (int i = 0; i < n; ++i) {
    try {
      const DelexExample& ex = examples[i];
      const auto it = tables.find(ex.table_id);
      if (it == tables.end()) throw Error("unknown table " + ex.table_id);
      const Table& table = it->second;
      switch (options.method) {
        case AttackMethod::kUnconstrained:
          out[i] = AttackUnconstrained(ex, table, target);
          break;
        case AttackMethod::kKnn:
          out[i] = AttackKnn(ex, table, target, *index);
          break;
        case AttackMethod::kCharSwap:
          out[i] = AttackCharSwap(ex, table, target, options.seed * 1000003ULL + static_cast<std::uint64_t>(i));
          break;
        case AttackMethod::kGenerator:
          out[i] = MakeRecord(ex, table, target, GenerateQuestion(ex, *generator, options.max_len),
                              options.generator_name);
          break;
      }
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace tqa
