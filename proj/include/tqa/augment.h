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

#ifndef TQA_AUGMENT_H_
#define TQA_AUGMENT_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tqa/corpus.h"
#include "tqa/delex.h"
#include "tqa/pipeline.h"
#include "tqa/target_model.h"
#include "tqa/wseq.h"

namespace tqa {

struct AugmentationSet {
  std::vector<Example> examples;  // adversarial question, source gold SQL
  std::string provenance;         // which target the generator attacked
  int selected = 0;               // source examples used
  int coverage_failures = 0;      // generations dropped
};

// One greedy generation per selected source example. The first
// round(size_fraction * n) examples of a seeded shuffle are selected;
// generations that miss an entity are dropped and counted.
AugmentationSet GenerateAdversarialSet(const GeneratorModel& generator, const std::vector<DelexExample>& split,
                                       double size_fraction, const std::string& provenance, std::uint64_t seed,
                                       int max_len = 30);

// Trains a fresh target on base examples plus the augmentation set, with a
// vocabulary over the union.
TargetModel RetrainWithAugmentation(const Dataset& base, const AugmentationSet& aug, const Dataset& dev,
                                    const TargetTrainConfig& config, TargetDims dims = {},
                                    TargetTrainLog* log = nullptr);

struct RobustnessRow {
  std::string method;
  int m = 0;
  double qfr = 0.0;
  double afr = 0.0;
};
// Attacks the examples of `split` that `model` answers correctly. Generator
// attacks use `generators` keyed by method name ("sage").
std::vector<RobustnessRow> RobustnessSuite(const TargetModel& model, const std::vector<std::string>& methods,
                                           const Dataset& split,
                                           const std::map<std::string, const GeneratorModel*>& generators,
                                           const AttackOptions& base_options);

// WikiSQL-format JSON-lines plus a sidecar with the provenance and counts.
void WriteAugmentationSet(const std::string& path, const AugmentationSet& aug);

}  // namespace tqa

#endif  // TQA_AUGMENT_H_
