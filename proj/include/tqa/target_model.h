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

#ifndef TQA_TARGET_MODEL_H_
#define TQA_TARGET_MODEL_H_

// A small slot-classification TableQA model. Questions and headers share one
// embedding table; a bidirectional GRU encodes the question, another encodes
// each header independently, and column-attention heads predict
//   sc  select column          (softmax over columns)
//   sa  aggregation            (softmax over 6)
//   wn  number of conditions   (softmax over 0..max_conds)
//   wc  condition columns      (independent sigmoid per column)
//   wo  operator per condition (softmax over 3, given the column)
//   wv  value span per condition (start/end softmax over question positions,
//       given column and operator)

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tqa/autodiff.h"
#include "tqa/corpus.h"
#include "tqa/delex.h"
#include "tqa/params.h"
#include "tqa/text.h"

namespace tqa {

struct GoldLabels {
  int sc = 0;
  Agg sa = Agg::kNone;
  int wn = 0;
  std::vector<int> wc;
  std::vector<CondOp> wo;
  std::vector<std::optional<Span>> wv;

  // Number of labels in L_true, counting only located value spans.
  int NumLabels() const;
};

GoldLabels MakeGoldLabels(const SQLQuery& sql, std::vector<std::optional<Span>> spans);
// Gold labels for an example, with value spans located by the entity matcher.
GoldLabels GoldFor(const Example& example);

struct SlotDistributions {
  Tokens question;
  std::vector<double> sc;
  std::vector<double> sa;
  std::vector<double> wn;
  std::vector<double> wc;  // P(column is a condition column)
  // Per-condition heads, evaluated for the columns and operators below.
  std::vector<int> cond_columns;
  std::vector<CondOp> cond_ops;
  std::vector<std::vector<double>> wo;
  std::vector<std::vector<double>> wv_start;
  std::vector<std::vector<double>> wv_end;
};

struct TargetDims {
  int embed = 32;
  int hidden = 32;  // per direction
  int max_conds = 4;
};

struct TargetTrainConfig {
  int epochs = 12;
  int batch_size = 16;
  double learning_rate = 0.003;
  double clip_norm = 5.0;
  std::uint64_t seed = 1;
};

class TrainingDiverged : public Error {
 public:
  using Error::Error;
};

class TargetModel {
 public:
  TargetModel(Vocab vocab, TargetDims dims, std::uint64_t seed, bool zero_heads = false);

  static TargetModel Load(const std::string& path);
  void Save(const std::string& path) const;

  const Vocab& vocab() const { return vocab_; }
  const TargetDims& dims() const { return dims_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }
  int embedding_index() const { return emb_; }
  std::span<const double> EmbeddingRow(int id) const;
  std::vector<double> Embed(const std::string& token) const;

  // Graph pieces, usable on any tape.
  struct Encoded {
    std::vector<ad::Var> question_states;  // per token, 2*hidden
    ad::Var question_matrix;               // stacked question states
    std::vector<ad::Var> headers;          // per column, 2*hidden
  };
  Encoded Encode(ad::Tape& tape, std::span<const ad::Var> question_embeddings,
                 const Table& table) const;
  ad::Var ScLogits(ad::Tape& tape, const Encoded& enc) const;
  ad::Var SaLogits(ad::Tape& tape, const Encoded& enc) const;
  ad::Var WnLogits(ad::Tape& tape, const Encoded& enc) const;
  ad::Var WcLogits(ad::Tape& tape, const Encoded& enc) const;
  ad::Var WoLogits(ad::Tape& tape, const Encoded& enc, int column) const;
  std::pair<ad::Var, ad::Var> SpanLogits(ad::Tape& tape, const Encoded& enc, int column,
                                         CondOp op) const;

  // Embedding leaves for a token sequence (constants unless the tape's sink is
  // bound to this model's parameters).
  std::vector<ad::Var> EmbedTokens(ad::Tape& tape, const Tokens& tokens) const;

 private:
  struct GruIdx {
    int wx, wh, bx, bh;
  };
  GruIdx AddGru(const std::string& prefix, int in, int hidden);
  std::vector<ad::Var> RunGru(ad::Tape& tape, const GruIdx& g,
                              std::span<const ad::Var> inputs, bool reverse) const;
  ad::Var ColumnContext(ad::Tape& tape, const Encoded& enc, int att, int column) const;
  ad::Var Pooled(ad::Tape& tape, const Encoded& enc, int pool) const;
  void Initialize(std::uint64_t seed, bool zero_heads);
  TargetModel() = default;
  void Declare();

  Vocab vocab_;
  TargetDims dims_;
  ParamStore params_;
  int emb_ = -1;
  GruIdx qf_{}, qb_{}, hf_{}, hb_{};
  int pool_sa_ = -1, sa_w1_ = -1, sa_b1_ = -1, sa_w2_ = -1, sa_b2_ = -1;
  int pool_wn_ = -1, wn_w1_ = -1, wn_b1_ = -1, wn_w2_ = -1, wn_b2_ = -1;
  int att_sc_ = -1, sc_u_ = -1, sc_v_ = -1, sc_b_ = -1, sc_out_ = -1, sc_out_b_ = -1;
  int att_wc_ = -1, wc_u_ = -1, wc_v_ = -1, wc_b_ = -1, wc_out_ = -1, wc_out_b_ = -1;
  int att_wo_ = -1, wo_w1_ = -1, wo_b1_ = -1, wo_w2_ = -1, wo_b2_ = -1;
  int att_wv_ = -1, wv_qs_ = -1, wv_qe_ = -1, wv_qsb_ = -1, wv_qeb_ = -1;
  int wv_ps_ = -1, wv_pe_ = -1, wv_ws_ = -1, wv_we_ = -1;
  std::vector<int> head_outputs_;
};

// Vocabulary over training questions and all header tokens.
Vocab BuildTargetVocab(const Dataset& data);

SlotDistributions PredictSlots(const Tokens& question, const Table& table, const TargetModel& model);
// Argmax per slot; wc takes the top-wn columns by probability (ties to the
// lowest index); wv end is the argmax over positions >= start.
SQLQuery DecodeQuery(const SlotDistributions& dists);
SQLQuery PredictQuery(const Tokens& question, const Table& table, const TargetModel& model);

// -sum_{l in L_true} log(1 - p(l)), with p clamped to 1 - 1e-6. Per-condition
// heads are evaluated at the gold columns and operators.
inline constexpr double kAdvEpsilon = 1e-6;
ad::Var AdversarialLossVar(ad::Tape& tape, std::span<const ad::Var> question_embeddings,
                           const GoldLabels& gold, const Table& table, const TargetModel& model);
// Closed form over label probabilities; used for properties and tests.
double AdversarialLossFromProbs(std::span<const double> gold_probs, bool* saturated = nullptr);

struct AdvLossResult {
  double loss = 0.0;
  bool saturated = false;
};
AdvLossResult AdversarialLoss(std::span<const std::vector<double>> question_embeddings,
                              const GoldLabels& gold, const Table& table, const TargetModel& model);

struct InputGradient {
  double loss = 0.0;
  bool saturated = false;
  std::vector<std::vector<double>> embeddings;  // |y| x d, the embeddings used
  std::vector<std::vector<double>> gradients;   // |y| x d
};
InputGradient ComputeInputGradient(const Tokens& question, const GoldLabels& gold,
                                   const Table& table, const TargetModel& model);

// Cross-entropy over every slot (wc as per-column binary cross-entropy).
ad::Var SlotCrossEntropy(ad::Tape& tape, const Tokens& question, const GoldLabels& gold,
                         const Table& table, const TargetModel& model);

struct Accuracy {
  double q_acc = 0.0;
  double a_acc = 0.0;
  int n = 0;
};
Accuracy EvaluateAccuracy(const TargetModel& model, const Dataset& data);

struct TargetTrainLog {
  std::vector<double> epoch_loss;
  std::vector<double> dev_q_acc;
  int best_epoch = -1;
};
// Trains on `train`, keeping the parameters with the best dev Q-Acc (the last
// epoch when `dev` is empty).
TargetModel TrainTarget(const Dataset& train, const Dataset& dev, const TargetTrainConfig& config,
                        TargetDims dims = {}, TargetTrainLog* log = nullptr);
// Same, but starting from a given vocabulary.
TargetModel TrainTargetWithVocab(const Dataset& train, const Dataset& dev, Vocab vocab,
                                 const TargetTrainConfig& config, TargetDims dims,
                                 TargetTrainLog* log);

}  // namespace tqa

#endif  // TQA_TARGET_MODEL_H_
