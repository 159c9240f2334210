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

#ifndef TQA_PIPELINE_H_
#define TQA_PIPELINE_H_

// Glue between the modules: delexicalizing datasets, selecting the examples
// a target answers correctly and running attacks over them.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tqa/corpus.h"
#include "tqa/delex.h"
#include "tqa/evaluation.h"
#include "tqa/target_model.h"
#include "tqa/wseq.h"

namespace tqa {

// Delexicalizes every example; coverage failures are skipped and counted.
std::vector<DelexExample> DelexDataset(const Dataset& data, bool delexicalize, int* failures = nullptr);

// Examples whose predicted query matches the gold query.
Dataset CorrectSubset(const Dataset& data, const TargetModel& target);

enum class AttackMethod { kUnconstrained, kKnn, kCharSwap, kGenerator };
AttackMethod ParseAttackMethod(const std::string& name);

struct AttackOptions {
  AttackMethod method = AttackMethod::kUnconstrained;
  int k = 10;
  std::uint64_t seed = 1;
  std::string generator_name = "sage";  // record label for generator attacks
  int max_len = 30;
};

// One record per example. Generator attacks decode greedily (z = mu) and
// relexicalize the result; they need `generator`.
std::vector<AttackRecord> RunAttack(const std::vector<DelexExample>& examples,
                                    const std::map<std::string, Table>& tables, const TargetModel& target,
                                    const GeneratorModel* generator, const AttackOptions& options);

// Greedy generation for one example, relexicalized.
Tokens GenerateQuestion(const DelexExample& example, const GeneratorModel& generator, int max_len = 30);

}  // namespace tqa

#endif  // TQA_PIPELINE_H_
