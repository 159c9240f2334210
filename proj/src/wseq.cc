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

#include "tqa/wseq.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "tqa/delex.h"

namespace tqa {

using ad::Tape;
using ad::Var;

namespace {

// Keeps log() finite when a probability underflows.
constexpr double kTiny = 1e-300;

int ArgmaxOf(std::span<const double> v) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(v.size()); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

}  // namespace

const std::string& ExtendedVocab::Word(int id) const {
  if (id < target->size()) return target->Word(id);
  return extra.at(id - target->size());
}

int ExtendedVocab::Id(const std::string& word) const {
  const int t = target->Find(word);
  if (t >= 0) return t;
  const auto it = std::find(extra.begin(), extra.end(), word);
  if (it != extra.end()) return target->size() + static_cast<int>(it - extra.begin());
  return target->unk();
}

// ---------------------------------------------------------------------------

GeneratorModel::GeneratorModel(Vocab source, Vocab target, GeneratorDims dims, std::uint64_t seed)
    : source_(std::move(source)), target_(std::move(target)), dims_(dims) {
  if (source_.unk() < 0 || target_.unk() < 0 || target_.Find(kEos) < 0 || target_.Find(kBos) < 0) {
    throw Error("generator vocabularies need the reserved entries");
  }
  Declare();
  Initialize(seed);
}

GeneratorModel::GruIdx GeneratorModel::AddGru(const std::string& prefix, int in, int hidden) {
  GruIdx g;
  g.wx = params_.Add(prefix + ".wx", 3 * hidden, in);
  g.wh = params_.Add(prefix + ".wh", 3 * hidden, hidden);
  g.bx = params_.Add(prefix + ".bx", 3 * hidden, 1);
  g.bh = params_.Add(prefix + ".bh", 3 * hidden, 1);
  return g;
}

void GeneratorModel::Declare() {
  const int e = dims_.embed, h = dims_.hidden, l = dims_.latent;
  src_emb_ = params_.Add("src_emb", source_.size(), e);
  tgt_emb_ = params_.Add("tgt_emb", target_.size(), e);
  enc_f_ = AddGru("enc_fw", e, h);
  enc_b_ = AddGru("enc_bw", e, h);
  mu_w_ = params_.Add("mu.w", l, 2 * h);
  mu_b_ = params_.Add("mu.b", l, 1);
  sig_w_ = params_.Add("sigma.w", l, 2 * h);
  sig_b_ = params_.Add("sigma.b", l, 1);
  init_w_ = params_.Add("init.w", h, l);
  init_b_ = params_.Add("init.b", h, 1);
  dec_ = AddGru("dec", e, h);
  att_w_ = params_.Add("att.w", h, 2 * h);
  o_w_ = params_.Add("o.w", h, 3 * h);
  o_b_ = params_.Add("o.b", h, 1);
  out_w_ = params_.Add("out.w", target_.size(), h);
  out_b_ = params_.Add("out.b", target_.size(), 1);
  gate_w_ = params_.Add("gate.w", 1, 3 * h + e);
  gate_b_ = params_.Add("gate.b", 1, 1);
}

void GeneratorModel::Initialize(std::uint64_t seed) {
  Rng rng(seed);
  for (int i = 0; i < params_.size(); ++i) {
    const Parameter& p = params_.at(i);
    if (i == src_emb_ || i == tgt_emb_) {
      params_.InitUniform(i, 0.1, rng);
    } else if (p.cols == 1) {
      params_.Zero(i);
    } else {
      params_.InitUniform(i, 1.0 / std::sqrt(static_cast<double>(p.cols)), rng);
    }
  }
}

void GeneratorModel::Save(const std::string& path) const {
  CheckpointHeader h;
  h.kind = "generator";
  h.dims = {dims_.embed, dims_.hidden, dims_.latent};
  h.vocabs = {source_.words(), target_.words()};
  WriteCheckpoint(path, h, params_);
}

GeneratorModel GeneratorModel::Load(const std::string& path) {
  const CheckpointHeader h = ReadCheckpointHeader(path);
  if (h.kind != "generator" || h.dims.size() != 3 || h.vocabs.size() != 2) {
    throw Error(path + " is not a generator checkpoint");
  }
  GeneratorModel m;
  m.source_ = Vocab(h.vocabs[0]);
  m.target_ = Vocab(h.vocabs[1]);
  m.dims_ = {static_cast<int>(h.dims[0]), static_cast<int>(h.dims[1]), static_cast<int>(h.dims[2])};
  m.Declare();
  ReadCheckpoint(path, m.params_);
  return m;
}

ExtendedVocab GeneratorModel::Extend(const Tokens& source) const {
  ExtendedVocab ext;
  ext.target = &target_;
  for (const auto& t : source) {
    const int id = target_.Find(t);
    if (id >= 0) {
      ext.source_ext.push_back(id);
      continue;
    }
    auto it = std::find(ext.extra.begin(), ext.extra.end(), t);
    if (it == ext.extra.end()) {
      ext.extra.push_back(t);
      it = ext.extra.end() - 1;
    }
    ext.source_ext.push_back(target_.size() + static_cast<int>(it - ext.extra.begin()));
  }
  return ext;
}

namespace {

std::vector<Var> RunGru(Tape& tape, const ParamStore& ps, int wx, int wh, int bx, int bh,
                        std::span<const Var> inputs, int hidden, bool reverse) {
  Var pwx = tape.Param(ps, wx), pwh = tape.Param(ps, wh);
  Var pbx = tape.Param(ps, bx), pbh = tape.Param(ps, bh);
  const int n = static_cast<int>(inputs.size());
  std::vector<Var> states(n);
  Var h = tape.Constant(std::vector<double>(hidden, 0.0));
  for (int k = 0; k < n; ++k) {
    const int i = reverse ? n - 1 - k : k;
    h = tape.Gru(pwx, pwh, pbx, pbh, inputs[i], h);
    states[i] = h;
  }
  return states;
}

}  // namespace

GeneratorModel::Encoded GeneratorModel::Encode(Tape& tape, const Tokens& source) const {
  if (source.empty()) throw Error("generator: empty source sequence");
  Var table = tape.Param(params_, src_emb_);
  std::vector<Var> embs;
  for (const auto& t : source) embs.push_back(tape.Row(table, source_.Id(t)));
  const int h = dims_.hidden;
  const auto fw = RunGru(tape, params_, enc_f_.wx, enc_f_.wh, enc_f_.bx, enc_f_.bh, embs, h, false);
  const auto bw = RunGru(tape, params_, enc_b_.wx, enc_b_.wh, enc_b_.bx, enc_b_.bh, embs, h, true);
  Encoded enc;
  for (std::size_t i = 0; i < fw.size(); ++i) enc.states.push_back(tape.Concat({fw[i], bw[i]}));
  enc.memory = tape.Stack(enc.states);
  Var last = tape.Concat({fw.back(), bw.front()});
  enc.mu = tape.Affine(tape.Param(params_, mu_w_), tape.Param(params_, mu_b_), last);
  enc.log_sigma = tape.Clamp(tape.Affine(tape.Param(params_, sig_w_), tape.Param(params_, sig_b_), last),
                             kLogSigmaMin, kLogSigmaMax);
  return enc;
}

Var GeneratorModel::Reparameterize(Tape& tape, const Encoded& enc, std::span<const double> eps) const {
  if (static_cast<int>(eps.size()) != dims_.latent) throw Error("latent noise has the wrong size");
  Var sigma = tape.Exp(enc.log_sigma);
  return tape.Add(enc.mu, tape.Mul(sigma, tape.Constant({eps.begin(), eps.end()})));
}

Var GeneratorModel::InitialState(Tape& tape, Var z) const {
  return tape.Tanh(tape.Affine(tape.Param(params_, init_w_), tape.Param(params_, init_b_), z));
}

Var GeneratorModel::TargetTable(Tape& tape) const { return tape.Param(params_, tgt_emb_); }

int GeneratorModel::InputRow(int ext_id) const {
  return ext_id < target_.size() ? ext_id : target_.unk();
}

Var GeneratorModel::InputEmbedding(Tape& tape, int ext_id) const {
  return tape.Row(TargetTable(tape), InputRow(ext_id));
}

GeneratorModel::Step GeneratorModel::DecodeStep(Tape& tape, Var prev_embedding, Var state,
                                                const Encoded& enc, const ExtendedVocab& ext,
                                                std::optional<double> gate_override) const {
  Step s;
  s.state = tape.Gru(tape.Param(params_, dec_.wx), tape.Param(params_, dec_.wh),
                     tape.Param(params_, dec_.bx), tape.Param(params_, dec_.bh), prev_embedding, state);
  // General attention: score_j = h^T W_a s_j.
  Var key = tape.MatTVec(tape.Param(params_, att_w_), s.state);
  s.attention = tape.Softmax(tape.MatVec(enc.memory, key));
  Var ctx = tape.MatTVec(enc.memory, s.attention);
  Var hc = tape.Concat({s.state, ctx});
  Var o = tape.Tanh(tape.Affine(tape.Param(params_, o_w_), tape.Param(params_, o_b_), hc));
  Var gen = tape.Softmax(tape.Affine(tape.Param(params_, out_w_), tape.Param(params_, out_b_), o));
  if (gate_override) {
    s.gate = tape.Scalar(*gate_override);
  } else {
    s.gate = tape.Sigmoid(tape.Affine(tape.Param(params_, gate_w_), tape.Param(params_, gate_b_),
                                      tape.Concat({s.state, ctx, prev_embedding})));
  }
  const int n = ext.size();
  Var copy = tape.ScatterAdd(s.attention, ext.source_ext, n);
  s.probs = tape.Add(tape.ScaleBy(s.gate, tape.Pad(gen, n)), tape.ScaleBy(tape.OneMinus(s.gate), copy));
  return s;
}

// ---------------------------------------------------------------------------

Vocab BuildSourceVocab(std::span<const Tokens> sql_sequences) {
  Vocab v = Vocab::WithSpecials();
  for (const auto& s : sql_sequences) {
    for (const auto& t : s) v.Add(t);
  }
  return v;
}

Vocab BuildQuestionVocab(std::span<const Tokens> questions) {
  Vocab v = Vocab::WithSpecials();
  for (int i = 0; i < kMaxPlaceholders; ++i) v.Add(Placeholder(i));
  for (const auto& q : questions) {
    for (const auto& t : q) v.Add(t);
  }
  return v;
}

Posterior EncodePosterior(const Tokens& source, const GeneratorModel& model) {
  Tape tape;
  const auto enc = model.Encode(tape, source);
  Posterior p;
  p.mu.assign(tape.value(enc.mu).begin(), tape.value(enc.mu).end());
  p.log_sigma.assign(tape.value(enc.log_sigma).begin(), tape.value(enc.log_sigma).end());
  return p;
}

std::vector<double> SampleLatent(const Posterior& post, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> z(post.mu.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double ls = std::clamp(post.log_sigma[i], kLogSigmaMin, kLogSigmaMax);
    z[i] = post.mu[i] + std::exp(ls) * normal(rng);
  }
  return z;
}

double ImqKernel(std::span<const double> x, std::span<const double> y, double c) {
  double d2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) d2 += (x[i] - y[i]) * (x[i] - y[i]);
  return c / (c + d2);
}

namespace {

void CheckMmdInputs(std::size_t n, std::size_t m, double c) {
  if (n < 2) throw Error("MMD estimate needs at least two latent codes (got " + std::to_string(n) + ")");
  if (n != m) throw Error("MMD estimate needs equal posterior and prior batch sizes");
  if (!(c > 0.0)) throw Error("MMD kernel constant must be positive");
}

}  // namespace

double MmdPenalty(std::span<const std::vector<double>> z_post,
                  std::span<const std::vector<double>> z_prior, double c) {
  const std::size_t n = z_post.size();
  CheckMmdInputs(n, z_prior.size(), c);
  double same = 0.0, cross = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) same += ImqKernel(z_post[i], z_post[j], c) + ImqKernel(z_prior[i], z_prior[j], c);
      cross += ImqKernel(z_post[i], z_prior[j], c);
    }
  }
  const double dn = static_cast<double>(n);
  return same / (dn * (dn - 1.0)) - 2.0 * cross / (dn * dn);
}

Var MmdPenaltyVar(Tape& tape, std::span<const Var> z_post,
                  std::span<const std::vector<double>> z_prior, double c) {
  const std::size_t n = z_post.size();
  CheckMmdInputs(n, z_prior.size(), c);
  std::vector<std::vector<double>> post;
  for (Var v : z_post) post.emplace_back(tape.value(v).begin(), tape.value(v).end());
  const double value = MmdPenalty(post, z_prior, c);
  std::vector<Var> parents(z_post.begin(), z_post.end());
  std::vector<std::vector<double>> prior(z_prior.begin(), z_prior.end());
  return tape.Custom(parents, {value}, 1, 1,
                     [parents, post = std::move(post), prior = std::move(prior), c](Tape& t, int self) {
                       const double g = t.GradOut(self)[0];
                       const double dn = static_cast<double>(parents.size());
                       // d/dx C/(C+|x-y|^2) = -2C (x-y) / (C+|x-y|^2)^2.
                       auto accum = [c](std::span<double> out, std::span<const double> x,
                                        std::span<const double> y, double w) {
                         double d2 = 0.0;
                         for (std::size_t k = 0; k < x.size(); ++k) d2 += (x[k] - y[k]) * (x[k] - y[k]);
                         const double f = -2.0 * c / ((c + d2) * (c + d2)) * w;
                         for (std::size_t k = 0; k < x.size(); ++k) out[k] += f * (x[k] - y[k]);
                       };
                       for (std::size_t i = 0; i < parents.size(); ++i) {
                         if (!t.needs_grad(parents[i])) continue;
                         auto gi = t.MutableGrad(parents[i].id);
                         for (std::size_t j = 0; j < parents.size(); ++j) {
                           if (j != i) accum(gi, post[i], post[j], 2.0 * g / (dn * (dn - 1.0)));
                           accum(gi, post[i], prior[j], -2.0 * g / (dn * dn));
                         }
                       }
                     });
}

std::vector<double> GumbelNoise(int n, Rng& rng) {
  std::uniform_real_distribution<double> uniform(std::numeric_limits<double>::min(), 1.0);
  std::vector<double> g(n);
  for (double& x : g) x = -std::log(-std::log(uniform(rng)));
  return g;
}

GumbelSample GumbelSoftmaxWithNoise(std::span<const double> logits, std::span<const double> noise,
                                    double tau) {
  if (!(tau > 0.0)) throw Error("Gumbel-Softmax temperature must be positive");
  if (logits.size() != noise.size()) throw Error("Gumbel noise has the wrong size");
  std::vector<double> scaled(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) scaled[i] = (logits[i] + noise[i]) / tau;
  GumbelSample s;
  s.soft = ad::SoftmaxOf(scaled);
  s.hard = ArgmaxOf(s.soft);
  return s;
}

GumbelSample GumbelSoftmax(std::span<const double> logits, double tau, Rng& rng) {
  const auto noise = GumbelNoise(static_cast<int>(logits.size()), rng);
  return GumbelSoftmaxWithNoise(logits, noise, tau);
}

Var GumbelSoftmaxVar(Tape& tape, Var logits, std::span<const double> noise, double tau) {
  if (!(tau > 0.0)) throw Error("Gumbel-Softmax temperature must be positive");
  Var shifted = tape.Add(logits, tape.Constant({noise.begin(), noise.end()}));
  return tape.Softmax(tape.Scale(shifted, 1.0 / tau));
}

std::vector<double> DecodeStepProbs(const GeneratorModel& model, const Tokens& source, int prev_ext_id,
                                    std::span<const double> state, std::optional<double> gate_override) {
  Tape tape;
  const auto enc = model.Encode(tape, source);
  const auto ext = model.Extend(source);
  const auto step = model.DecodeStep(tape, model.InputEmbedding(tape, prev_ext_id),
                                     tape.Constant({state.begin(), state.end()}), enc, ext, gate_override);
  return {tape.value(step.probs).begin(), tape.value(step.probs).end()};
}

// ---------------------------------------------------------------------------
// Decoding.

namespace {

struct Beam {
  Var state;
  int prev = 0;
  std::vector<int> ids;
  double log_prob = 0.0;
  std::vector<std::vector<double>> history;
};

Hypothesis ToHypothesis(const ExtendedVocab& ext, Beam b) {
  Hypothesis h;
  for (int id : b.ids) h.tokens.push_back(ext.Word(id));
  h.log_prob = b.log_prob;
  h.soft_history = std::move(b.history);
  return h;
}

std::vector<Hypothesis> BeamSearch(const Tokens& source, const GeneratorModel& model,
                                   const GenerateOptions& opt) {
  Tape tape;
  const auto enc = model.Encode(tape, source);
  const auto ext = model.Extend(source);
  const int eos = model.target_vocab().Find(kEos);
  std::vector<Beam> live(1);
  live[0].state = model.InitialState(tape, enc.mu);
  live[0].prev = model.target_vocab().Find(kBos);
  std::vector<Beam> finished;

  struct Cand {
    double score;
    int beam;
    int id;
  };
  for (int t = 0; t < opt.max_len && !live.empty(); ++t) {
    std::vector<Cand> cands;
    std::vector<Var> states(live.size());
    std::vector<std::vector<double>> probs(live.size());
    for (std::size_t b = 0; b < live.size(); ++b) {
      const auto step = model.DecodeStep(tape, model.InputEmbedding(tape, live[b].prev), live[b].state,
                                         enc, ext, opt.gate_override);
      states[b] = step.state;
      probs[b].assign(tape.value(step.probs).begin(), tape.value(step.probs).end());
      for (int v = 0; v < static_cast<int>(probs[b].size()); ++v) {
        cands.push_back({live[b].log_prob + std::log(probs[b][v] + kTiny), static_cast<int>(b), v});
      }
    }
    const std::size_t keep = std::min<std::size_t>(cands.size(), static_cast<std::size_t>(opt.size));
    std::partial_sort(cands.begin(), cands.begin() + keep, cands.end(), [](const Cand& a, const Cand& b) {
      if (a.score != b.score) return a.score > b.score;
      if (a.beam != b.beam) return a.beam < b.beam;
      return a.id < b.id;
    });
    std::vector<Beam> next;
    for (std::size_t k = 0; k < keep; ++k) {
      const Cand& c = cands[k];
      Beam nb;
      nb.state = states[c.beam];
      nb.prev = c.id;
      nb.ids = live[c.beam].ids;
      nb.log_prob = c.score;
      nb.history = live[c.beam].history;
      nb.history.push_back(probs[c.beam]);
      if (c.id == eos) {
        finished.push_back(std::move(nb));
      } else {
        nb.ids.push_back(c.id);
        next.push_back(std::move(nb));
      }
    }
    live = std::move(next);
  }
  for (auto& b : live) finished.push_back(std::move(b));
  std::stable_sort(finished.begin(), finished.end(),
                   [](const Beam& a, const Beam& b) { return a.log_prob > b.log_prob; });
  if (static_cast<int>(finished.size()) > opt.size) finished.resize(opt.size);
  std::vector<Hypothesis> out;
  for (auto& b : finished) out.push_back(ToHypothesis(ext, std::move(b)));
  return out;
}

Hypothesis SampleOne(const Tokens& source, const GeneratorModel& model, const GenerateOptions& opt,
                     Rng& rng) {
  Tape tape;
  const auto enc = model.Encode(tape, source);
  const auto ext = model.Extend(source);
  const int eos = model.target_vocab().Find(kEos);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> eps(model.dims().latent);
  for (double& e : eps) e = normal(rng);
  Var state = model.InitialState(tape, model.Reparameterize(tape, enc, eps));
  int prev = model.target_vocab().Find(kBos);
  Hypothesis h;
  for (int t = 0; t < opt.max_len; ++t) {
    const auto step = model.DecodeStep(tape, model.InputEmbedding(tape, prev), state, enc, ext,
                                       opt.gate_override);
    state = step.state;
    const auto p = tape.value(step.probs);
    std::vector<double> logits(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) logits[i] = std::log(p[i] + kTiny);
    auto g = GumbelSoftmax(logits, opt.tau, rng);
    h.log_prob += logits[g.hard];
    h.soft_history.push_back(std::move(g.soft));
    if (g.hard == eos) break;
    h.tokens.push_back(ext.Word(g.hard));
    prev = g.hard;
  }
  return h;
}

}  // namespace

std::vector<Hypothesis> Generate(const Tokens& source, const GeneratorModel& model,
                                 const GenerateOptions& options) {
  if (options.size < 1) throw Error("generate: size must be at least 1");
  if (options.mode == DecodeMode::kSample) {
    Rng rng(options.seed);
    std::vector<Hypothesis> out;
    for (int i = 0; i < options.size; ++i) out.push_back(SampleOne(source, model, options, rng));
    return out;
  }
  GenerateOptions o = options;
  if (o.mode == DecodeMode::kGreedy) o.size = 1;
  return BeamSearch(source, model, o);
}

TeacherForced ScoreSequence(Tape& tape, const GeneratorModel& model, const GeneratorModel::Encoded& enc,
                            const ExtendedVocab& ext, Var z, const Tokens& target) {
  TeacherForced out;
  for (const auto& t : target) out.target_ids.push_back(ext.Id(t));
  out.target_ids.push_back(model.target_vocab().Find(kEos));
  Var state = model.InitialState(tape, z);
  int prev = model.target_vocab().Find(kBos);
  std::vector<Var> terms;
  for (int id : out.target_ids) {
    const auto step = model.DecodeStep(tape, model.InputEmbedding(tape, prev), state, enc, ext);
    state = step.state;
    terms.push_back(tape.Log(tape.AddScalar(tape.Pick(step.probs, id), kTiny)));
    prev = id;
  }
  out.log_prob = tape.AddN(terms);
  return out;
}

DiffSample SampleDifferentiable(Tape& tape, const GeneratorModel& model, const GeneratorModel::Encoded& enc,
                                const ExtendedVocab& ext, int max_len, double tau, Rng& rng,
                                const SampleTrace* replay, SampleTrace* record) {
  const int eos = model.target_vocab().Find(kEos);
  SampleTrace trace;
  if (replay) {
    trace.eps = replay->eps;
  } else {
    std::normal_distribution<double> normal(0.0, 1.0);
    trace.eps.resize(model.dims().latent);
    for (double& e : trace.eps) e = normal(rng);
  }
  DiffSample out;
  out.z = model.Reparameterize(tape, enc, trace.eps);
  Var state = model.InitialState(tape, out.z);
  Var table = model.TargetTable(tape);
  std::vector<int> input_map(ext.size());
  for (int v = 0; v < ext.size(); ++v) input_map[v] = model.InputRow(v);
  Var prev = model.InputEmbedding(tape, model.target_vocab().Find(kBos));
  std::vector<Var> terms;
  const int steps = replay ? static_cast<int>(replay->hard.size()) : max_len;
  for (int t = 0; t < steps; ++t) {
    const auto step = model.DecodeStep(tape, prev, state, enc, ext);
    state = step.state;
    Var logp = tape.Log(tape.AddScalar(step.probs, kTiny));
    std::vector<double> noise = replay ? replay->noise[t] : GumbelNoise(ext.size(), rng);
    Var soft = GumbelSoftmaxVar(tape, logp, noise, tau);
    const int hard = replay ? replay->hard[t] : ArgmaxOf(tape.value(soft));
    std::vector<double> anchor = replay ? replay->anchor[t]
                                        : std::vector<double>(tape.value(soft).begin(), tape.value(soft).end());
    terms.push_back(tape.Pick(logp, hard));
    trace.noise.push_back(std::move(noise));
    trace.hard.push_back(hard);
    if (hard == eos) {
      trace.anchor.push_back(std::move(anchor));
      break;
    }
    out.tokens.push_back(ext.Word(hard));
    out.ids.push_back(hard);
    out.soft.push_back(soft);
    if (replay) out.anchors.push_back(anchor);
    prev = tape.EmbedST(table, soft, hard, input_map, replay ? std::span<const double>(anchor)
                                                             : std::span<const double>());
    trace.anchor.push_back(std::move(anchor));
  }
  out.log_prob = tape.AddN(terms);
  if (record) *record = std::move(trace);
  return out;
}

}  // namespace tqa
