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

#ifndef TQA_OBJECTIVES_H_
#define TQA_OBJECTIVES_H_

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tqa/autodiff.h"
#include "tqa/delex.h"
#include "tqa/similarity.h"
#include "tqa/target_model.h"
#include "tqa/wseq.h"

namespace tqa {

enum class Variant { kSeq2seq, kWseq, kWseqS, kSage };
const char* VariantName(Variant v);
Variant ParseVariant(const std::string& name);

struct TrainConfig {
  double lambda_wseq = 1.0;
  double lambda_sim = 0.8;
  double lambda_adv = 0.1;
  double learning_rate = 0.001;
  int batch_size = 16;
  int epochs = 10;
  int hypotheses = 6;
  int max_len = 30;
  double tau = 1.0;
  double clip_norm = 5.0;
  // Epochs at the start that train only the wseq objective.
  int warm_start_epochs = 0;
  // Dev examples used for checkpoint selection (0 = all).
  int dev_subset = 64;
  std::uint64_t seed = 1;
  Variant variant = Variant::kSage;
  bool delex = true;
  GeneratorDims dims;
};

// Everything a generator loss needs besides the batch.
struct LossContext {
  const std::map<std::string, Table>* tables = nullptr;
  const TargetModel* target = nullptr;       // sage only
  const SimilarityScorer* scorer = nullptr;  // wseq_s and sage
};

// Recorded randomness of one sage loss evaluation: per example, the Gumbel
// samples of its hypothesis set. Replaying makes the loss a smooth function
// of the generator parameters.
struct SageTrace {
  std::vector<std::vector<SampleTrace>> samples;
};

struct LossTerms {
  ad::Var total;
  ad::Var reconstruction;
  ad::Var mmd;  // invalid when not part of the objective
  ad::Var sim;
  ad::Var adv;
  double Value(const ad::Tape& tape, ad::Var v) const { return v.valid() ? tape.scalar(v) : 0.0; }
};

// Teacher-forced -sum log p over the batch. `sample_z` draws z from the
// posterior (one latent noise vector per example, in batch order); otherwise
// z = mu.
struct EncodedBatch {
  std::vector<GeneratorModel::Encoded> enc;
  std::vector<ExtendedVocab> ext;
  std::vector<ad::Var> z;
};
EncodedBatch EncodeBatch(ad::Tape& tape, const GeneratorModel& model, std::span<const DelexExample> batch,
                         bool sample_z, Rng& rng);
ad::Var ReconstructionLossVar(ad::Tape& tape, const GeneratorModel& model,
                              std::span<const DelexExample> batch, const EncodedBatch& encoded);
// Prior draws for the MMD term, n x latent.
std::vector<std::vector<double>> DrawPrior(int n, int latent, Rng& rng);

// Plain-value conveniences with their own seeded noise.
double ReconstructionLoss(std::span<const DelexExample> batch, const GeneratorModel& model, bool sample_z,
                          std::uint64_t seed);
// reconstruction + lambda * MMD(z, prior). Throws for batches smaller than 2.
double WseqLoss(std::span<const DelexExample> batch, const GeneratorModel& model, double lambda_wseq,
                std::uint64_t seed);

// sum_h (1 - sim_h) * softmax(log_probs)_h. Renormalizes in log space.
ad::Var MinRiskLossVar(ad::Tape& tape, std::span<const ad::Var> log_probs, std::span<const double> sims);
double MinRiskLoss(std::span<const double> log_probs, std::span<const double> sims);
// Hypotheses scored against `reference` with the scorer; both sides are
// relexicalized with `map` first when given.
double MinRiskLoss(const Tokens& reference, std::span<const Hypothesis> hypotheses,
                   const SimilarityScorer& scorer, const EntityMap* map = nullptr);

// Placeholders known to `map` become their surface tokens; others stay.
Tokens RelexicalizeLenient(const Tokens& tokens, const EntityMap& map);

// Adversarial loss of one differentiable sample against the frozen target.
// Zero (an invalid Var) when the relexicalized sample misses an entity.
ad::Var SampleAdversarialLoss(ad::Tape& tape, const DiffSample& sample, const ExtendedVocab& ext,
                              const DelexExample& example, const Table& table, const TargetModel& target);

// The objective of `config.variant` on one batch:
//   seq2seq  reconstruction with z = mu
//   wseq     reconstruction + lambda_wseq * MMD
//   wseq_s   wseq + lambda_sim * min-risk over a beam hypothesis set
//   sage     wseq + sum_x [lambda_sim * min-risk + lambda_adv * sum_h L_adv]
//            over Gumbel-Softmax samples
// `replay`/`record` apply to the sage samples.
LossTerms GeneratorLoss(ad::Tape& tape, const GeneratorModel& model, std::span<const DelexExample> batch,
                        const LossContext& ctx, const TrainConfig& config, Rng& rng,
                        const SageTrace* replay = nullptr, SageTrace* record = nullptr);
// The full sage objective regardless of config.variant.
LossTerms SageTotalLoss(ad::Tape& tape, const GeneratorModel& model, std::span<const DelexExample> batch,
                        const LossContext& ctx, const TrainConfig& config, Rng& rng,
                        const SageTrace* replay = nullptr, SageTrace* record = nullptr);

struct TrainLogRow {
  int epoch = 0;
  double total = 0.0;
  double reconstruction = 0.0;
  double mmd = 0.0;
  double sim = 0.0;
  double adv = 0.0;
  double dev_objective = 0.0;
};

// Vocabularies from the training split, Adam, per-epoch dev selection on the
// variant objective. Starts from `init` when given (its vocabularies are
// kept). Throws TrainingDiverged naming the first non-finite term.
GeneratorModel TrainGenerator(std::span<const DelexExample> train, std::span<const DelexExample> dev,
                              const LossContext& ctx, const TrainConfig& config,
                              const GeneratorModel* init = nullptr, std::vector<TrainLogRow>* log = nullptr);
void WriteTrainingCsv(const std::string& path, std::span<const TrainLogRow> log);

}  // namespace tqa

#endif  // TQA_OBJECTIVES_H_
