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

#include "tqa/augment.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "json.hpp"
#include "tqa/evaluation.h"

namespace tqa {

AugmentationSet GenerateAdversarialSet(const GeneratorModel& generator, const std::vector<DelexExample>& split,
                                       double size_fraction, const std::string& provenance, std::uint64_t seed,
                                       int max_len) {
  if (size_fraction < 0 || size_fraction > 1) throw Error("size fraction must be within [0, 1]");
  AugmentationSet aug;
  aug.provenance = provenance;
  std::vector<std::size_t> order(split.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t k = static_cast<std::size_t>(std::llround(size_fraction * static_cast<double>(split.size())));
  order.resize(k);
  std::sort(order.begin(), order.end());
  aug.selected = static_cast<int>(k);
  const int n = static_cast<int>(k);
  std::vector<Tokens> generated(n);
#pragma omp parallel for schedule(dynamic, 2)
  for (int i = 0; i < n; ++i) generated[i] = GenerateQuestion(split[order[i]], generator, max_len);
  for (int i = 0; i < n; ++i) {
    const DelexExample& src = split[order[i]];
    const Tokens& q = generated[i];
    bool ok = !q.empty() && CoversEntities(q, src.entity_map);
    if (ok) {
      for (const auto& s : LocateEntities(q, src.sql)) ok = ok && s.has_value();
    }
    if (!ok) {
      ++aug.coverage_failures;
      continue;
    }
    Example e;
    e.question_text = Join(q);
    e.question = q;
    e.sql = src.sql;
    e.table_id = src.table_id;
    aug.examples.push_back(std::move(e));
  }
  return aug;
}

TargetModel RetrainWithAugmentation(const Dataset& base, const AugmentationSet& aug, const Dataset& dev,
                                    const TargetTrainConfig& config, TargetDims dims, TargetTrainLog* log) {
  Dataset all = base;
  all.examples.insert(all.examples.end(), aug.examples.begin(), aug.examples.end());
  all.recorded_answers.clear();
  return TrainTarget(all, dev, config, dims, log);
}

std::vector<RobustnessRow> RobustnessSuite(const TargetModel& model, const std::vector<std::string>& methods,
                                           const Dataset& split,
                                           const std::map<std::string, const GeneratorModel*>& generators,
                                           const AttackOptions& base_options) {
  const Dataset correct = CorrectSubset(split, model);
  const auto examples = DelexDataset(correct, true);
  std::vector<RobustnessRow> rows;
  for (const auto& name : methods) {
    AttackOptions opt = base_options;
    opt.method = ParseAttackMethod(name);
    const GeneratorModel* gen = nullptr;
    if (opt.method == AttackMethod::kGenerator) {
      const auto it = generators.find(name);
      if (it == generators.end() || !it->second) throw Error("no generator for attack " + name);
      gen = it->second;
      opt.generator_name = name;
    }
    RobustnessRow row;
    row.method = name;
    row.m = static_cast<int>(examples.size());
    if (!examples.empty()) {
      const auto records = RunAttack(examples, split.tables, model, gen, opt);
      const FlipRates fr = ComputeFlipRates(records);
      row.qfr = fr.qfr;
      row.afr = fr.afr;
    }
    rows.push_back(row);
  }
  return rows;
}

void WriteAugmentationSet(const std::string& path, const AugmentationSet& aug) {
  WriteExamples(path, aug.examples);
  std::ofstream side(path + ".provenance.json");
  if (!side) throw Error("cannot write " + path + ".provenance.json");
  nlohmann::json j = {{"provenance", aug.provenance},
                      {"selected", aug.selected},
                      {"kept", aug.examples.size()},
                      {"coverage_failures", aug.coverage_failures}};
  side << j.dump(2) << '\n';
}

}  // namespace tqa
