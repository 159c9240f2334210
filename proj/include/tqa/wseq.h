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

#ifndef TQA_WSEQ_H_
#define TQA_WSEQ_H_

// Stochastic sequence-to-sequence question generator. A bidirectional GRU
// reads the linearized SQL, a diagonal Gaussian posterior over a latent code
// z is read off [h_fw_last; h_bw_first], and a GRU decoder initialized from z
// emits question tokens with general attention and a copy gate over source
// tokens.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tqa/autodiff.h"
#include "tqa/params.h"
#include "tqa/text.h"

namespace tqa {

struct GeneratorDims {
  int embed = 64;
  int hidden = 128;  // per encoder direction and decoder state
  int latent = 32;
};

inline constexpr double kLogSigmaMin = -6.0;
inline constexpr double kLogSigmaMax = 2.0;
inline constexpr int kMaxPlaceholders = 4;

// Output space of one source sequence: the target vocabulary followed by
// source tokens the target vocabulary lacks.
struct ExtendedVocab {
  const Vocab* target = nullptr;
  std::vector<std::string> extra;
  std::vector<int> source_ext;  // per source position, its extended id

  int size() const { return target->size() + static_cast<int>(extra.size()); }
  const std::string& Word(int id) const;
  // Extended id of a word: target id, then extra id, then <unk>.
  int Id(const std::string& word) const;
};

struct Posterior {
  std::vector<double> mu;
  std::vector<double> log_sigma;
};

struct Hypothesis {
  Tokens tokens;  // without <s> and </s>
  double log_prob = 0.0;
  std::vector<std::vector<double>> soft_history;  // per-step distributions
};

enum class DecodeMode { kGreedy, kBeam, kSample };

class GeneratorModel {
 public:
  GeneratorModel(Vocab source, Vocab target, GeneratorDims dims, std::uint64_t seed);

  static GeneratorModel Load(const std::string& path);
  void Save(const std::string& path) const;

  const Vocab& source_vocab() const { return source_; }
  const Vocab& target_vocab() const { return target_; }
  const GeneratorDims& dims() const { return dims_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }
  // Output-layer parameter indices (generation projection, copy gate).
  std::vector<int> OutputParams() const { return {out_w_, out_b_, gate_w_, gate_b_}; }

  ExtendedVocab Extend(const Tokens& source) const;

  struct Encoded {
    std::vector<ad::Var> states;  // per source token, 2*hidden
    ad::Var memory;               // stacked states
    ad::Var mu;
    ad::Var log_sigma;            // clamped to [kLogSigmaMin, kLogSigmaMax]
  };
  Encoded Encode(ad::Tape& tape, const Tokens& source) const;
  // z = mu + exp(log_sigma) * eps.
  ad::Var Reparameterize(ad::Tape& tape, const Encoded& enc, std::span<const double> eps) const;
  ad::Var InitialState(ad::Tape& tape, ad::Var z) const;

  struct Step {
    ad::Var probs;  // over the extended vocabulary
    ad::Var state;
    ad::Var gate;
    ad::Var attention;
  };
  // One decoder step. `gate_override` pins the copy gate (tests).
  Step DecodeStep(ad::Tape& tape, ad::Var prev_embedding, ad::Var state, const Encoded& enc,
                  const ExtendedVocab& ext, std::optional<double> gate_override = std::nullopt) const;
  // Decoder input embedding of an extended id (extras use <unk>).
  ad::Var InputEmbedding(ad::Tape& tape, int ext_id) const;
  int InputRow(int ext_id) const;
  ad::Var TargetTable(ad::Tape& tape) const;

 private:
  struct GruIdx {
    int wx, wh, bx, bh;
  };
  GeneratorModel() = default;
  GruIdx AddGru(const std::string& prefix, int in, int hidden);
  void Declare();
  void Initialize(std::uint64_t seed);

  Vocab source_, target_;
  GeneratorDims dims_;
  ParamStore params_;
  int src_emb_ = -1, tgt_emb_ = -1;
  GruIdx enc_f_{}, enc_b_{}, dec_{};
  int mu_w_ = -1, mu_b_ = -1, sig_w_ = -1, sig_b_ = -1;
  int init_w_ = -1, init_b_ = -1;
  int att_w_ = -1, o_w_ = -1, o_b_ = -1, out_w_ = -1, out_b_ = -1;
  int gate_w_ = -1, gate_b_ = -1;
};

// Source vocabulary over linearized SQL and target vocabulary over questions
// (placeholders et_0..et_3 always included).
Vocab BuildSourceVocab(std::span<const Tokens> sql_sequences);
Vocab BuildQuestionVocab(std::span<const Tokens> questions);

// Posterior of one source sequence (plain values).
Posterior EncodePosterior(const Tokens& source, const GeneratorModel& model);
std::vector<double> SampleLatent(const Posterior& post, Rng& rng);

// Inverse multiquadratic kernel C / (C + |x - y|^2).
double ImqKernel(std::span<const double> x, std::span<const double> y, double c);
// Unbiased MMD estimate between posterior codes and prior draws. Requires
// n >= 2 and equal batch sizes.
double MmdPenalty(std::span<const std::vector<double>> z_post,
                  std::span<const std::vector<double>> z_prior, double c);
ad::Var MmdPenaltyVar(ad::Tape& tape, std::span<const ad::Var> z_post,
                      std::span<const std::vector<double>> z_prior, double c);
inline double DefaultKernelConstant(int latent_dim) { return 2.0 * latent_dim; }

struct GumbelSample {
  int hard = 0;
  std::vector<double> soft;
};
// Standard Gumbel(0, 1) noise.
std::vector<double> GumbelNoise(int n, Rng& rng);
GumbelSample GumbelSoftmax(std::span<const double> logits, double tau, Rng& rng);
GumbelSample GumbelSoftmaxWithNoise(std::span<const double> logits, std::span<const double> noise,
                                    double tau);
// softmax((logits + noise) / tau) on the tape.
ad::Var GumbelSoftmaxVar(ad::Tape& tape, ad::Var logits, std::span<const double> noise, double tau);

// Distribution of one decoder step from plain inputs (used by tests and the
// normalization sweep).
std::vector<double> DecodeStepProbs(const GeneratorModel& model, const Tokens& source,
                                    int prev_ext_id, std::span<const double> state,
                                    std::optional<double> gate_override = std::nullopt);

struct GenerateOptions {
  DecodeMode mode = DecodeMode::kGreedy;
  int size = 1;
  int max_len = 30;
  double tau = 1.0;
  std::uint64_t seed = 0;  // sample mode only
  std::optional<double> gate_override;
};
std::vector<Hypothesis> Generate(const Tokens& source, const GeneratorModel& model,
                                 const GenerateOptions& options);

// Teacher-forced log p(target | source, z) on the tape. Question tokens are
// mapped to extended ids; the sequence is scored through </s>.
struct TeacherForced {
  ad::Var log_prob;
  std::vector<int> target_ids;
};
TeacherForced ScoreSequence(ad::Tape& tape, const GeneratorModel& model, const GeneratorModel::Encoded& enc,
                            const ExtendedVocab& ext, ad::Var z, const Tokens& target);

// A differentiable sample: Gumbel-Softmax at every step, straight-through
// embeddings fed back into the decoder.
struct SampleTrace {
  std::vector<double> eps;                 // latent noise
  std::vector<std::vector<double>> noise;  // per-step Gumbel noise
  std::vector<int> hard;                   // per-step extended ids
  std::vector<std::vector<double>> anchor; // per-step soft values at record time
};
struct DiffSample {
  Tokens tokens;                // without </s>
  std::vector<int> ids;         // extended ids, without </s>
  std::vector<ad::Var> soft;    // per emitted token
  // Replayed linearization anchors per emitted token; empty for fresh samples.
  std::vector<std::vector<double>> anchors;
  ad::Var log_prob;
  ad::Var z;
};
// Draws a sample, or replays `replay` when given (same noise, same tokens,
// fixed linearization anchors). The trace of the drawn sample is written to
// `record` when non-null.
DiffSample SampleDifferentiable(ad::Tape& tape, const GeneratorModel& model,
                                const GeneratorModel::Encoded& enc, const ExtendedVocab& ext,
                                int max_len, double tau, Rng& rng, const SampleTrace* replay = nullptr,
                                SampleTrace* record = nullptr);

}  // namespace tqa

#endif  // TQA_WSEQ_H_
