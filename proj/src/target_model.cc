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

#include "tqa/target_model.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace tqa {

using ad::Tape;
using ad::Var;

int GoldLabels::NumLabels() const {
  int n = 3 + 2 * wn;
  for (const auto& s : wv) n += s ? 2 : 0;
  return n;
}

GoldLabels MakeGoldLabels(const SQLQuery& sql, std::vector<std::optional<Span>> spans) {
  GoldLabels g;
  g.sc = sql.sel;
  g.sa = sql.agg;
  g.wn = static_cast<int>(sql.conds.size());
  for (const auto& c : sql.conds) {
    g.wc.push_back(c.column);
    g.wo.push_back(c.op);
  }
  spans.resize(sql.conds.size());
  g.wv = std::move(spans);
  return g;
}

GoldLabels GoldFor(const Example& example) {
  return MakeGoldLabels(example.sql, LocateEntities(example.question, example.sql));
}

// ---------------------------------------------------------------------------
// Model definition.

TargetModel::TargetModel(Vocab vocab, TargetDims dims, std::uint64_t seed, bool zero_heads)
    : vocab_(std::move(vocab)), dims_(dims) {
  if (vocab_.unk() < 0) throw Error("target vocabulary needs an <unk> entry");
  Declare();
  Initialize(seed, zero_heads);
}

TargetModel::GruIdx TargetModel::AddGru(const std::string& prefix, int in, int hidden) {
  GruIdx g;
  g.wx = params_.Add(prefix + ".wx", 3 * hidden, in);
  g.wh = params_.Add(prefix + ".wh", 3 * hidden, hidden);
  g.bx = params_.Add(prefix + ".bx", 3 * hidden, 1);
  g.bh = params_.Add(prefix + ".bh", 3 * hidden, 1);
  return g;
}

void TargetModel::Declare() {
  const int e = dims_.embed, h = dims_.hidden, d = 2 * dims_.hidden;
  emb_ = params_.Add("emb", vocab_.size(), e);
  qf_ = AddGru("q_fw", e, h);
  qb_ = AddGru("q_bw", e, h);
  hf_ = AddGru("h_fw", e, h);
  hb_ = AddGru("h_bw", e, h);

  pool_sa_ = params_.Add("sa.pool", d, 1);
  sa_w1_ = params_.Add("sa.w1", h, d);
  sa_b1_ = params_.Add("sa.b1", h, 1);
  sa_w2_ = params_.Add("sa.w2", kNumAggs, h);
  sa_b2_ = params_.Add("sa.b2", kNumAggs, 1);

  pool_wn_ = params_.Add("wn.pool", d, 1);
  wn_w1_ = params_.Add("wn.w1", h, d);
  wn_b1_ = params_.Add("wn.b1", h, 1);
  wn_w2_ = params_.Add("wn.w2", dims_.max_conds + 1, h);
  wn_b2_ = params_.Add("wn.b2", dims_.max_conds + 1, 1);

  att_sc_ = params_.Add("sc.att", d, d);
  sc_u_ = params_.Add("sc.u", h, d);
  sc_v_ = params_.Add("sc.v", h, d);
  sc_b_ = params_.Add("sc.b", h, 1);
  sc_out_ = params_.Add("sc.out", 1, h);
  sc_out_b_ = params_.Add("sc.out_b", 1, 1);

  att_wc_ = params_.Add("wc.att", d, d);
  wc_u_ = params_.Add("wc.u", h, d);
  wc_v_ = params_.Add("wc.v", h, d);
  wc_b_ = params_.Add("wc.b", h, 1);
  wc_out_ = params_.Add("wc.out", 1, h);
  wc_out_b_ = params_.Add("wc.out_b", 1, 1);

  att_wo_ = params_.Add("wo.att", d, d);
  wo_w1_ = params_.Add("wo.w1", h, 2 * d);
  wo_b1_ = params_.Add("wo.b1", h, 1);
  wo_w2_ = params_.Add("wo.w2", kNumOps, h);
  wo_b2_ = params_.Add("wo.b2", kNumOps, 1);

  att_wv_ = params_.Add("wv.att", d, d);
  wv_qs_ = params_.Add("wv.qs", h, 2 * d + kNumOps);
  wv_qe_ = params_.Add("wv.qe", h, 2 * d + kNumOps);
  wv_qsb_ = params_.Add("wv.qs_b", h, 1);
  wv_qeb_ = params_.Add("wv.qe_b", h, 1);
  wv_ps_ = params_.Add("wv.ps", h, d);
  wv_pe_ = params_.Add("wv.pe", h, d);
  wv_ws_ = params_.Add("wv.ws", h, 1);
  wv_we_ = params_.Add("wv.we", h, 1);

  head_outputs_ = {sa_w2_, sa_b2_, wn_w2_, wn_b2_, sc_out_, sc_out_b_, wc_out_,
                   wc_out_b_, wo_w2_, wo_b2_, wv_ws_, wv_we_};
}

void TargetModel::Initialize(std::uint64_t seed, bool zero_heads) {
  Rng rng(seed);
  for (int i = 0; i < params_.size(); ++i) {
    const Parameter& p = params_.at(i);
    if (i == emb_) {
      params_.InitUniform(i, 0.5, rng);
    } else if (p.cols == 1 && (p.name.find(".b") != std::string::npos || p.name.ends_with("_b"))) {
      params_.Zero(i);
    } else {
      params_.InitUniform(i, 1.0 / std::sqrt(static_cast<double>(p.cols)), rng);
    }
  }
  if (zero_heads) {
    for (int i : head_outputs_) params_.Zero(i);
  }
}

void TargetModel::Save(const std::string& path) const {
  CheckpointHeader h;
  h.kind = "target";
  h.dims = {dims_.embed, dims_.hidden, dims_.max_conds};
  h.vocabs = {vocab_.words()};
  WriteCheckpoint(path, h, params_);
}

TargetModel TargetModel::Load(const std::string& path) {
  const CheckpointHeader h = ReadCheckpointHeader(path);
  if (h.kind != "target" || h.dims.size() != 3 || h.vocabs.size() != 1) {
    throw Error(path + " is not a target-model checkpoint");
  }
  TargetModel m;
  m.vocab_ = Vocab(h.vocabs[0]);
  m.dims_ = {static_cast<int>(h.dims[0]), static_cast<int>(h.dims[1]), static_cast<int>(h.dims[2])};
  m.Declare();
  ReadCheckpoint(path, m.params_);
  return m;
}

std::span<const double> TargetModel::EmbeddingRow(int id) const {
  const auto& v = params_.at(emb_).value;
  return std::span<const double>(v).subspan(static_cast<std::size_t>(id) * dims_.embed, dims_.embed);
}

std::vector<double> TargetModel::Embed(const std::string& token) const {
  auto row = EmbeddingRow(vocab_.Id(token));
  return {row.begin(), row.end()};
}

std::vector<Var> TargetModel::EmbedTokens(Tape& tape, const Tokens& tokens) const {
  Var table = tape.Param(params_, emb_);
  std::vector<Var> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(tape.Row(table, vocab_.Id(t)));
  return out;
}

std::vector<Var> TargetModel::RunGru(Tape& tape, const GruIdx& g, std::span<const Var> inputs,
                                     bool reverse) const {
  Var wx = tape.Param(params_, g.wx), wh = tape.Param(params_, g.wh);
  Var bx = tape.Param(params_, g.bx), bh = tape.Param(params_, g.bh);
  const int n = static_cast<int>(inputs.size());
  std::vector<Var> states(n);
  Var h = tape.Constant(std::vector<double>(dims_.hidden, 0.0));
  for (int k = 0; k < n; ++k) {
    const int i = reverse ? n - 1 - k : k;
    h = tape.Gru(wx, wh, bx, bh, inputs[i], h);
    states[i] = h;
  }
  return states;
}

TargetModel::Encoded TargetModel::Encode(Tape& tape, std::span<const Var> question_embeddings,
                                         const Table& table) const {
  if (question_embeddings.empty()) throw Error("empty question");
  Encoded enc;
  const auto fw = RunGru(tape, qf_, question_embeddings, false);
  const auto bw = RunGru(tape, qb_, question_embeddings, true);
  for (std::size_t i = 0; i < fw.size(); ++i) enc.question_states.push_back(tape.Concat({fw[i], bw[i]}));
  enc.question_matrix = tape.Stack(enc.question_states);
  for (const auto& header : table.HeaderTokens()) {
    Tokens toks = header.empty() ? Tokens{kUnk} : header;
    const auto embs = EmbedTokens(tape, toks);
    const auto hfw = RunGru(tape, hf_, embs, false);
    const auto hbw = RunGru(tape, hb_, embs, true);
    enc.headers.push_back(tape.Concat({hfw.back(), hbw.front()}));
  }
  return enc;
}

Var TargetModel::ColumnContext(Tape& tape, const Encoded& enc, int att, int column) const {
  Var key = tape.MatVec(tape.Param(params_, att), enc.headers[column]);
  Var alpha = tape.Softmax(tape.MatVec(enc.question_matrix, key));
  return tape.MatTVec(enc.question_matrix, alpha);
}

Var TargetModel::Pooled(Tape& tape, const Encoded& enc, int pool) const {
  Var alpha = tape.Softmax(tape.MatVec(enc.question_matrix, tape.Param(params_, pool)));
  return tape.MatTVec(enc.question_matrix, alpha);
}

namespace {

Var ColumnScores(Tape& tape, const ParamStore& ps, const TargetModel::Encoded& enc,
                 const std::function<Var(int)>& ctx, int u, int v, int b, int out, int out_b) {
  std::vector<Var> scores;
  Var pu = tape.Param(ps, u), pv = tape.Param(ps, v), pb = tape.Param(ps, b);
  Var po = tape.Param(ps, out), pob = tape.Param(ps, out_b);
  for (int c = 0; c < static_cast<int>(enc.headers.size()); ++c) {
    Var hidden = tape.Tanh(tape.Add(tape.Affine(pu, pb, ctx(c)), tape.MatVec(pv, enc.headers[c])));
    scores.push_back(tape.Affine(po, pob, hidden));
  }
  return tape.Concat(scores);
}

}  // namespace

Var TargetModel::ScLogits(Tape& tape, const Encoded& enc) const {
  return ColumnScores(tape, params_, enc, [&](int c) { return ColumnContext(tape, enc, att_sc_, c); },
                      sc_u_, sc_v_, sc_b_, sc_out_, sc_out_b_);
}

Var TargetModel::WcLogits(Tape& tape, const Encoded& enc) const {
  return ColumnScores(tape, params_, enc, [&](int c) { return ColumnContext(tape, enc, att_wc_, c); },
                      wc_u_, wc_v_, wc_b_, wc_out_, wc_out_b_);
}

Var TargetModel::SaLogits(Tape& tape, const Encoded& enc) const {
  Var hidden = tape.Tanh(tape.Affine(tape.Param(params_, sa_w1_), tape.Param(params_, sa_b1_),
                                     Pooled(tape, enc, pool_sa_)));
  return tape.Affine(tape.Param(params_, sa_w2_), tape.Param(params_, sa_b2_), hidden);
}

Var TargetModel::WnLogits(Tape& tape, const Encoded& enc) const {
  Var hidden = tape.Tanh(tape.Affine(tape.Param(params_, wn_w1_), tape.Param(params_, wn_b1_),
                                     Pooled(tape, enc, pool_wn_)));
  return tape.Affine(tape.Param(params_, wn_w2_), tape.Param(params_, wn_b2_), hidden);
}

Var TargetModel::WoLogits(Tape& tape, const Encoded& enc, int column) const {
  Var ctx = ColumnContext(tape, enc, att_wo_, column);
  Var hidden = tape.Tanh(tape.Affine(tape.Param(params_, wo_w1_), tape.Param(params_, wo_b1_),
                                     tape.Concat({ctx, enc.headers[column]})));
  return tape.Affine(tape.Param(params_, wo_w2_), tape.Param(params_, wo_b2_), hidden);
}

std::pair<Var, Var> TargetModel::SpanLogits(Tape& tape, const Encoded& enc, int column,
                                            CondOp op) const {
  Var ctx = ColumnContext(tape, enc, att_wv_, column);
  std::vector<double> onehot(kNumOps, 0.0);
  onehot[static_cast<int>(op)] = 1.0;
  Var cond = tape.Concat({ctx, enc.headers[column], tape.Constant(onehot)});
  Var qs = tape.Affine(tape.Param(params_, wv_qs_), tape.Param(params_, wv_qsb_), cond);
  Var qe = tape.Affine(tape.Param(params_, wv_qe_), tape.Param(params_, wv_qeb_), cond);
  Var ps = tape.Param(params_, wv_ps_), pe = tape.Param(params_, wv_pe_);
  Var ws = tape.Param(params_, wv_ws_), we = tape.Param(params_, wv_we_);
  std::vector<Var> starts, ends;
  for (Var state : enc.question_states) {
    starts.push_back(tape.Dot(ws, tape.Tanh(tape.Add(tape.MatVec(ps, state), qs))));
    ends.push_back(tape.Dot(we, tape.Tanh(tape.Add(tape.MatVec(pe, state), qe))));
  }
  return {tape.Concat(starts), tape.Concat(ends)};
}

Vocab BuildTargetVocab(const Dataset& data) {
  Vocab v = Vocab::WithSpecials();
  for (const auto& e : data.examples) {
    for (const auto& t : e.question) v.Add(t);
  }
  for (const auto& [id, table] : data.tables) {
    for (const auto& h : table.HeaderTokens()) {
      for (const auto& t : h) v.Add(t);
    }
  }
  return v;
}

// ---------------------------------------------------------------------------
// Inference.

namespace {

int Argmax(std::span<const double> v) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(v.size()); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

std::vector<double> SigmoidOf(std::span<const double> v) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-v[i]));
  return out;
}

// Top-k indices by descending value, ties broken by lower index.
std::vector<int> TopK(std::span<const double> v, int k) {
  std::vector<int> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return v[a] > v[b]; });
  idx.resize(std::min<std::size_t>(idx.size(), static_cast<std::size_t>(std::max(k, 0))));
  return idx;
}

}  // namespace

SlotDistributions PredictSlots(const Tokens& question, const Table& table, const TargetModel& model) {
  if (question.empty()) throw Error("predict_slots: empty question");
  Tape tape;
  const auto embs = model.EmbedTokens(tape, question);
  const auto enc = model.Encode(tape, embs, table);
  SlotDistributions d;
  d.question = question;
  d.sc = ad::SoftmaxOf(tape.value(model.ScLogits(tape, enc)));
  d.sa = ad::SoftmaxOf(tape.value(model.SaLogits(tape, enc)));
  d.wn = ad::SoftmaxOf(tape.value(model.WnLogits(tape, enc)));
  d.wc = SigmoidOf(tape.value(model.WcLogits(tape, enc)));
  const int wn = std::min(Argmax(d.wn), table.num_columns());
  for (int c : TopK(d.wc, wn)) {
    d.cond_columns.push_back(c);
    d.wo.push_back(ad::SoftmaxOf(tape.value(model.WoLogits(tape, enc, c))));
    const CondOp op = static_cast<CondOp>(Argmax(d.wo.back()));
    d.cond_ops.push_back(op);
    auto [s, e] = model.SpanLogits(tape, enc, c, op);
    d.wv_start.push_back(ad::SoftmaxOf(tape.value(s)));
    d.wv_end.push_back(ad::SoftmaxOf(tape.value(e)));
  }
  return d;
}

SQLQuery DecodeQuery(const SlotDistributions& dists) {
  SQLQuery q;
  q.sel = Argmax(dists.sc);
  q.agg = static_cast<Agg>(Argmax(dists.sa));
  const int wn = std::min<int>(Argmax(dists.wn), static_cast<int>(dists.wc.size()));
  for (int c : TopK(dists.wc, wn)) {
    Condition cond;
    cond.column = c;
    const auto it = std::find(dists.cond_columns.begin(), dists.cond_columns.end(), c);
    if (it == dists.cond_columns.end()) {
      q.conds.push_back(cond);
      continue;
    }
    const std::size_t k = static_cast<std::size_t>(it - dists.cond_columns.begin());
    cond.op = static_cast<CondOp>(Argmax(dists.wo[k]));
    const auto& st = dists.wv_start[k];
    const auto& en = dists.wv_end[k];
    if (!st.empty() && !dists.question.empty()) {
      const int start = Argmax(st);
      const int end = start + Argmax(std::span<const double>(en).subspan(start));
      std::vector<std::string> value(dists.question.begin() + start, dists.question.begin() + end + 1);
      cond.value = Join(value);
    }
    q.conds.push_back(cond);
  }
  return q;
}

SQLQuery PredictQuery(const Tokens& question, const Table& table, const TargetModel& model) {
  return DecodeQuery(PredictSlots(question, table, model));
}

// ---------------------------------------------------------------------------
// Losses.

double AdversarialLossFromProbs(std::span<const double> gold_probs, bool* saturated) {
  double loss = 0.0;
  bool sat = false;
  for (double p : gold_probs) {
    if (p > 1.0 - kAdvEpsilon) {
      p = 1.0 - kAdvEpsilon;
      sat = true;
    }
    loss -= std::log(1.0 - p);
  }
  if (saturated) *saturated = sat;
  return loss;
}

Var AdversarialLossVar(Tape& tape, std::span<const Var> question_embeddings, const GoldLabels& gold,
                       const Table& table, const TargetModel& model) {
  const auto enc = model.Encode(tape, question_embeddings, table);
  std::vector<Var> probs;
  probs.push_back(tape.Pick(tape.Softmax(model.ScLogits(tape, enc)), gold.sc));
  probs.push_back(tape.Pick(tape.Softmax(model.SaLogits(tape, enc)), static_cast<int>(gold.sa)));
  probs.push_back(tape.Pick(tape.Softmax(model.WnLogits(tape, enc)), gold.wn));
  if (gold.wn > 0) {
    Var wc = tape.Sigmoid(model.WcLogits(tape, enc));
    for (int k = 0; k < gold.wn; ++k) {
      probs.push_back(tape.Pick(wc, gold.wc[k]));
      probs.push_back(tape.Pick(tape.Softmax(model.WoLogits(tape, enc, gold.wc[k])),
                                static_cast<int>(gold.wo[k])));
      if (gold.wv[k]) {
        auto [s, e] = model.SpanLogits(tape, enc, gold.wc[k], gold.wo[k]);
        probs.push_back(tape.Pick(tape.Softmax(s), gold.wv[k]->start));
        probs.push_back(tape.Pick(tape.Softmax(e), gold.wv[k]->end));
      }
    }
  }
  Var p = tape.Concat(probs);
  return tape.Scale(tape.Sum(tape.Log1mClamped(p, kAdvEpsilon)), -1.0);
}

AdvLossResult AdversarialLoss(std::span<const std::vector<double>> question_embeddings,
                              const GoldLabels& gold, const Table& table, const TargetModel& model) {
  Tape tape;
  std::vector<Var> embs;
  for (const auto& e : question_embeddings) {
    if (static_cast<int>(e.size()) != model.dims().embed) throw Error("embedding dimension mismatch");
    embs.push_back(tape.Constant(e));
  }
  Var loss = AdversarialLossVar(tape, embs, gold, table, model);
  return {tape.scalar(loss), tape.saturations() > 0};
}

InputGradient ComputeInputGradient(const Tokens& question, const GoldLabels& gold, const Table& table,
                                   const TargetModel& model) {
  Tape tape;
  std::vector<Var> embs;
  InputGradient out;
  for (const auto& t : question) {
    auto row = model.EmbeddingRow(model.vocab().Id(t));
    out.embeddings.emplace_back(row.begin(), row.end());
    embs.push_back(tape.Input(out.embeddings.back()));
  }
  Var loss = AdversarialLossVar(tape, embs, gold, table, model);
  tape.Backward(loss);
  out.loss = tape.scalar(loss);
  out.saturated = tape.saturations() > 0;
  for (Var v : embs) out.gradients.push_back(tape.grad(v));
  return out;
}

namespace {

// log sigmoid(x) as log_softmax([x, 0])[0].
Var LogSigmoid(Tape& tape, Var x) {
  return tape.Pick(tape.LogSoftmax(tape.Concat({x, tape.Scalar(0.0)})), 0);
}

}  // namespace

Var SlotCrossEntropy(Tape& tape, const Tokens& question, const GoldLabels& gold, const Table& table,
                     const TargetModel& model) {
  const auto embs = model.EmbedTokens(tape, question);
  const auto enc = model.Encode(tape, embs, table);
  std::vector<Var> terms;
  terms.push_back(tape.Pick(tape.LogSoftmax(model.ScLogits(tape, enc)), gold.sc));
  terms.push_back(tape.Pick(tape.LogSoftmax(model.SaLogits(tape, enc)), static_cast<int>(gold.sa)));
  terms.push_back(tape.Pick(tape.LogSoftmax(model.WnLogits(tape, enc)),
                            std::min(gold.wn, model.dims().max_conds)));
  Var wc = model.WcLogits(tape, enc);
  for (int c = 0; c < table.num_columns(); ++c) {
    const bool positive = std::find(gold.wc.begin(), gold.wc.end(), c) != gold.wc.end();
    Var logit = tape.Pick(wc, c);
    terms.push_back(LogSigmoid(tape, positive ? logit : tape.Scale(logit, -1.0)));
  }
  for (int k = 0; k < gold.wn; ++k) {
    terms.push_back(tape.Pick(tape.LogSoftmax(model.WoLogits(tape, enc, gold.wc[k])),
                              static_cast<int>(gold.wo[k])));
    if (gold.wv[k]) {
      auto [s, e] = model.SpanLogits(tape, enc, gold.wc[k], gold.wo[k]);
      terms.push_back(tape.Pick(tape.LogSoftmax(s), gold.wv[k]->start));
      terms.push_back(tape.Pick(tape.LogSoftmax(e), gold.wv[k]->end));
    }
  }
  return tape.Scale(tape.AddN(terms), -1.0);
}

// ---------------------------------------------------------------------------
// Evaluation and training.

Accuracy EvaluateAccuracy(const TargetModel& model, const Dataset& data) {
  const int n = static_cast<int>(data.examples.size());
  std::vector<char> q_ok(n, 0), a_ok(n, 0);
#pragma omp parallel for schedule(dynamic, 4)
  for (int i = 0; i < n; ++i) {
    const Example& e = data.examples[i];
    const Table& t = data.TableFor(e);
    const SQLQuery pred = PredictQuery(e.question, t, model);
    q_ok[i] = SameQuery(pred, e.sql);
    a_ok[i] = q_ok[i] || SameAnswer(ExecuteOrError(pred, t), ExecuteOrError(e.sql, t));
  }
  Accuracy acc;
  acc.n = n;
  if (n == 0) return acc;
  acc.q_acc = static_cast<double>(std::count(q_ok.begin(), q_ok.end(), 1)) / n;
  acc.a_acc = static_cast<double>(std::count(a_ok.begin(), a_ok.end(), 1)) / n;
  return acc;
}

TargetModel TrainTargetWithVocab(const Dataset& train, const Dataset& dev, Vocab vocab,
                                 const TargetTrainConfig& config, TargetDims dims,
                                 TargetTrainLog* log) {
  if (train.empty()) throw Error("train_target: empty dataset");
  TargetModel model(std::move(vocab), dims, config.seed);
  Adam adam(model.params(), config.learning_rate);
  GradSink grads(model.params());
  Rng rng(config.seed ^ 0x9e3779b97f4a7c15ULL);

  std::vector<GoldLabels> golds;
  golds.reserve(train.size());
  for (const auto& e : train.examples) golds.push_back(GoldFor(e));

  std::vector<int> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> best = model.params().Flatten();
  double best_acc = -1.0;
  TargetTrainLog local_log;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t b = 0; b < order.size(); b += config.batch_size) {
      grads.Zero();
      const std::size_t end = std::min(order.size(), b + config.batch_size);
      for (std::size_t k = b; k < end; ++k) {
        const Example& e = train.examples[order[k]];
        Tape tape(&grads);
        Var loss = SlotCrossEntropy(tape, e.question, golds[order[k]], train.TableFor(e), model);
        const double value = tape.scalar(loss);
        if (!std::isfinite(value)) {
          throw TrainingDiverged("target training diverged at epoch " + std::to_string(epoch) +
                                 " (non-finite slot cross-entropy)");
        }
        total += value;
        tape.Backward(loss);
      }
      grads.Scale(1.0 / static_cast<double>(end - b));
      const double norm = std::sqrt(grads.SquaredNorm());
      if (!std::isfinite(norm)) throw TrainingDiverged("target training produced a non-finite gradient");
      if (config.clip_norm > 0 && norm > config.clip_norm) grads.Scale(config.clip_norm / norm);
      adam.Step(grads);
    }
    local_log.epoch_loss.push_back(total / static_cast<double>(order.size()));
    const double acc = dev.empty() ? static_cast<double>(epoch) : EvaluateAccuracy(model, dev).q_acc;
    local_log.dev_q_acc.push_back(dev.empty() ? 0.0 : acc);
    if (acc > best_acc) {
      best_acc = acc;
      best = model.params().Flatten();
      local_log.best_epoch = epoch;
    }
  }
  model.params().Assign(best);
  if (log) *log = std::move(local_log);
  return model;
}

TargetModel TrainTarget(const Dataset& train, const Dataset& dev, const TargetTrainConfig& config,
                        TargetDims dims, TargetTrainLog* log) {
  return TrainTargetWithVocab(train, dev, BuildTargetVocab(train), config, dims, log);
}

}  // namespace tqa
