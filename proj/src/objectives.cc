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

#include "tqa/objectives.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>

namespace tqa {

using ad::Tape;
using ad::Var;

const char* VariantName(Variant v) {
  switch (v) {
    case Variant::kSeq2seq: return "seq2seq";
    case Variant::kWseq: return "wseq";
    case Variant::kWseqS: return "wseq_s";
    case Variant::kSage: return "sage";
  }
  return "?";
}

Variant ParseVariant(const std::string& name) {
  for (Variant v : {Variant::kSeq2seq, Variant::kWseq, Variant::kWseqS, Variant::kSage}) {
    if (name == VariantName(v)) return v;
  }
  throw Error("unknown variant '" + name + "' (expected seq2seq, wseq, wseq_s or sage)");
}

EncodedBatch EncodeBatch(Tape& tape, const GeneratorModel& model, std::span<const DelexExample> batch,
                         bool sample_z, Rng& rng) {
  EncodedBatch out;
  std::normal_distribution<double> normal(0.0, 1.0);
  for (const auto& ex : batch) {
    out.enc.push_back(model.Encode(tape, ex.sql_tokens));
    out.ext.push_back(model.Extend(ex.sql_tokens));
    if (sample_z) {
      std::vector<double> eps(model.dims().latent);
      for (double& e : eps) e = normal(rng);
      out.z.push_back(model.Reparameterize(tape, out.enc.back(), eps));
    } else {
      out.z.push_back(out.enc.back().mu);
    }
  }
  return out;
}

Var ReconstructionLossVar(Tape& tape, const GeneratorModel& model, std::span<const DelexExample> batch,
                          const EncodedBatch& encoded) {
  std::vector<Var> terms;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    terms.push_back(
        ScoreSequence(tape, model, encoded.enc[i], encoded.ext[i], encoded.z[i], batch[i].question_tokens).log_prob);
  }
  return tape.Scale(tape.AddN(terms), -1.0);
}

std::vector<std::vector<double>> DrawPrior(int n, int latent, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::vector<double>> out(n, std::vector<double>(latent));
  for (auto& v : out) {
    for (double& x : v) x = normal(rng);
  }
  return out;
}

double ReconstructionLoss(std::span<const DelexExample> batch, const GeneratorModel& model, bool sample_z,
                          std::uint64_t seed) {
  Rng rng(seed);
  Tape tape;
  const auto eb = EncodeBatch(tape, model, batch, sample_z, rng);
  return tape.scalar(ReconstructionLossVar(tape, model, batch, eb));
}

double WseqLoss(std::span<const DelexExample> batch, const GeneratorModel& model, double lambda_wseq,
                std::uint64_t seed) {
  if (batch.size() < 2) throw Error("wseq loss needs a batch of at least 2 for the MMD estimate");
  TrainConfig cfg;
  cfg.variant = Variant::kWseq;
  cfg.lambda_wseq = lambda_wseq;
  Rng rng(seed);
  Tape tape;
  LossContext ctx;
  return tape.scalar(GeneratorLoss(tape, model, batch, ctx, cfg, rng).total);
}

Var MinRiskLossVar(Tape& tape, std::span<const Var> log_probs, std::span<const double> sims) {
  if (log_probs.empty()) throw Error("min-risk loss needs at least one hypothesis");
  if (log_probs.size() != sims.size()) throw Error("min-risk loss: score count mismatch");
  Var weights = tape.Softmax(tape.Concat(log_probs));
  std::vector<double> risk(sims.size());
  for (std::size_t i = 0; i < sims.size(); ++i) risk[i] = 1.0 - sims[i];
  return tape.Dot(weights, tape.Constant(risk));
}

double MinRiskLoss(std::span<const double> log_probs, std::span<const double> sims) {
  if (log_probs.empty()) throw Error("min-risk loss needs at least one hypothesis");
  if (log_probs.size() != sims.size()) throw Error("min-risk loss: score count mismatch");
  const auto w = ad::SoftmaxOf(log_probs);
  double loss = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) loss += (1.0 - sims[i]) * w[i];
  return loss;
}

Tokens RelexicalizeLenient(const Tokens& tokens, const EntityMap& map) {
  Tokens out;
  for (const auto& t : tokens) {
    const Tokens* surface = IsPlaceholder(t) ? map.Find(t) : nullptr;
    if (surface) {
      out.insert(out.end(), surface->begin(), surface->end());
    } else {
      out.push_back(t);
    }
  }
  return out;
}

double MinRiskLoss(const Tokens& reference, std::span<const Hypothesis> hypotheses,
                   const SimilarityScorer& scorer, const EntityMap* map) {
  std::vector<double> lp, sims;
  const Tokens ref = map ? RelexicalizeLenient(reference, *map) : reference;
  for (const auto& h : hypotheses) {
    lp.push_back(h.log_prob);
    const Tokens hyp = map ? RelexicalizeLenient(h.tokens, *map) : h.tokens;
    sims.push_back(hyp.empty() ? 0.0 : SimileScore(ref, hyp, scorer));
  }
  return MinRiskLoss(lp, sims);
}

Var SampleAdversarialLoss(Tape& tape, const DiffSample& sample, const ExtendedVocab& ext,
                          const DelexExample& example, const Table& table, const TargetModel& target) {
  const Tokens relex = RelexicalizeLenient(sample.tokens, example.entity_map);
  if (relex.empty()) return {};
  const auto spans = LocateMappedEntities(relex, example.entity_map);
  for (const auto& s : spans) {
    if (!s) return {};
  }
  const Vocab& tv = target.vocab();
  std::vector<int> map(ext.size());
  for (int v = 0; v < ext.size(); ++v) map[v] = IsPlaceholder(ext.Word(v)) ? -1 : tv.Id(ext.Word(v));
  Var table_var = tape.Param(target.params(), target.embedding_index());
  std::vector<Var> embs;
  for (std::size_t t = 0; t < sample.tokens.size(); ++t) {
    const Tokens* surface = IsPlaceholder(sample.tokens[t]) ? example.entity_map.Find(sample.tokens[t]) : nullptr;
    if (surface) {
      for (const auto& w : *surface) embs.push_back(tape.Row(table_var, tv.Id(w)));
    } else if (map[sample.ids[t]] < 0) {
      // A placeholder without an entity: the target sees an unknown word.
      embs.push_back(tape.Row(table_var, tv.unk()));
    } else {
      const std::span<const double> anchor =
          sample.anchors.empty() ? std::span<const double>() : std::span<const double>(sample.anchors[t]);
      embs.push_back(tape.EmbedST(table_var, sample.soft[t], sample.ids[t], map, anchor));
    }
  }
  std::vector<std::optional<Span>> located(spans.begin(), spans.end());
  const GoldLabels gold = MakeGoldLabels(example.sql, located);
  return AdversarialLossVar(tape, embs, gold, table, target);
}

namespace {

const Table& TableOf(const LossContext& ctx, const DelexExample& ex) {
  if (!ctx.tables) throw Error("loss context has no tables");
  const auto it = ctx.tables->find(ex.table_id);
  if (it == ctx.tables->end()) throw Error("unknown table " + ex.table_id);
  return it->second;
}

LossTerms BuildLoss(Tape& tape, const GeneratorModel& model, std::span<const DelexExample> batch,
                    const LossContext& ctx, const TrainConfig& config, Variant variant, Rng& rng,
                    const SageTrace* replay, SageTrace* record) {
  if (batch.empty()) throw Error("generator loss of an empty batch");
  LossTerms terms;
  const bool stochastic = variant != Variant::kSeq2seq;
  const EncodedBatch eb = EncodeBatch(tape, model, batch, stochastic, rng);
  terms.reconstruction = ReconstructionLossVar(tape, model, batch, eb);
  std::vector<Var> parts = {terms.reconstruction};
  if (stochastic) {
    if (batch.size() < 2) throw Error("wseq loss needs a batch of at least 2 for the MMD estimate");
    const auto prior = DrawPrior(static_cast<int>(batch.size()), model.dims().latent, rng);
    terms.mmd = MmdPenaltyVar(tape, eb.z, prior, DefaultKernelConstant(model.dims().latent));
    parts.push_back(tape.Scale(terms.mmd, config.lambda_wseq));
  }
  if (variant == Variant::kWseqS) {
    if (!ctx.scorer) throw Error("wseq_s needs a similarity scorer");
    std::vector<Var> sim_terms;
    GenerateOptions opt;
    opt.mode = DecodeMode::kBeam;
    opt.size = config.hypotheses;
    opt.max_len = config.max_len;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const auto hyps = Generate(batch[i].sql_tokens, model, opt);
      std::vector<Var> lp;
      std::vector<double> sims;
      for (const auto& h : hyps) {
        lp.push_back(ScoreSequence(tape, model, eb.enc[i], eb.ext[i], eb.enc[i].mu, h.tokens).log_prob);
        const Tokens hyp = RelexicalizeLenient(h.tokens, batch[i].entity_map);
        sims.push_back(hyp.empty() ? 0.0 : SimileScore(batch[i].original_question, hyp, *ctx.scorer));
      }
      sim_terms.push_back(MinRiskLossVar(tape, lp, sims));
    }
    terms.sim = tape.AddN(sim_terms);
    parts.push_back(tape.Scale(terms.sim, config.lambda_sim));
  }
  if (variant == Variant::kSage) {
    if (!ctx.scorer || !ctx.target) throw Error("sage needs a similarity scorer and a target model");
    if (replay && replay->samples.size() != batch.size()) throw Error("sage replay does not match the batch");
    if (record) record->samples.assign(batch.size(), {});
    std::vector<Var> sim_terms, adv_terms;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const Table& table = TableOf(ctx, batch[i]);
      std::vector<Var> lp;
      std::vector<double> sims;
      for (int h = 0; h < config.hypotheses; ++h) {
        SampleTrace trace;
        const DiffSample s = SampleDifferentiable(tape, model, eb.enc[i], eb.ext[i], config.max_len, config.tau,
                                                  rng, replay ? &replay->samples[i].at(h) : nullptr, &trace);
        if (record) record->samples[i].push_back(std::move(trace));
        lp.push_back(s.log_prob);
        const Tokens hyp = RelexicalizeLenient(s.tokens, batch[i].entity_map);
        sims.push_back(hyp.empty() ? 0.0 : SimileScore(batch[i].original_question, hyp, *ctx.scorer));
        Var adv = SampleAdversarialLoss(tape, s, eb.ext[i], batch[i], table, *ctx.target);
        if (adv.valid()) adv_terms.push_back(adv);
      }
      sim_terms.push_back(MinRiskLossVar(tape, lp, sims));
    }
    terms.sim = tape.AddN(sim_terms);
    terms.adv = adv_terms.empty() ? tape.Scalar(0.0) : tape.AddN(adv_terms);
    parts.push_back(tape.Scale(terms.sim, config.lambda_sim));
    parts.push_back(tape.Scale(terms.adv, config.lambda_adv));
  }
  terms.total = tape.AddN(parts);
  return terms;
}

}  // namespace

LossTerms GeneratorLoss(Tape& tape, const GeneratorModel& model, std::span<const DelexExample> batch,
                        const LossContext& ctx, const TrainConfig& config, Rng& rng, const SageTrace* replay,
                        SageTrace* record) {
  return BuildLoss(tape, model, batch, ctx, config, config.variant, rng, replay, record);
}

LossTerms SageTotalLoss(Tape& tape, const GeneratorModel& model, std::span<const DelexExample> batch,
                        const LossContext& ctx, const TrainConfig& config, Rng& rng, const SageTrace* replay,
                        SageTrace* record) {
  return BuildLoss(tape, model, batch, ctx, config, Variant::kSage, rng, replay, record);
}

// ---------------------------------------------------------------------------
// Training.

namespace {

// Batches of `size` in order; a trailing singleton joins the previous batch
// so every batch supports the MMD estimate.
std::vector<std::pair<std::size_t, std::size_t>> Batches(std::size_t n, int size) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  const std::size_t b = static_cast<std::size_t>(std::max(size, 2));
  for (std::size_t i = 0; i < n; i += b) out.push_back({i, std::min(n, i + b)});
  if (out.size() > 1 && out.back().second - out.back().first == 1) {
    out.pop_back();
    out.back().second = n;
  }
  return out;
}

void CheckFinite(const Tape& tape, const LossTerms& t, int epoch) {
  const std::pair<const char*, Var> named[] = {
      {"reconstruction", t.reconstruction}, {"mmd", t.mmd}, {"sim", t.sim}, {"adv", t.adv}, {"total", t.total}};
  for (const auto& [name, v] : named) {
    if (v.valid() && !std::isfinite(tape.scalar(v))) {
      throw TrainingDiverged(std::string("generator training diverged at epoch ") + std::to_string(epoch) +
                             ": non-finite " + name + " loss");
    }
  }
}

}  // namespace

GeneratorModel TrainGenerator(std::span<const DelexExample> train, std::span<const DelexExample> dev,
                              const LossContext& ctx, const TrainConfig& config, const GeneratorModel* init,
                              std::vector<TrainLogRow>* log) {
  if (train.size() < 2) throw Error("generator training needs at least two examples");
  std::optional<GeneratorModel> built;
  if (!init) {
    std::vector<Tokens> sql, questions;
    for (const auto& ex : train) {
      sql.push_back(ex.sql_tokens);
      questions.push_back(ex.question_tokens);
    }
    built.emplace(BuildSourceVocab(sql), BuildQuestionVocab(questions), config.dims, config.seed);
  }
  GeneratorModel model = init ? *init : std::move(*built);
  Adam adam(model.params(), config.learning_rate);
  GradSink grads(model.params());
  Rng rng(config.seed);

  std::vector<DelexExample> dev_set(dev.begin(), dev.end());
  if (config.dev_subset > 0 && dev_set.size() > static_cast<std::size_t>(config.dev_subset)) {
    dev_set.resize(config.dev_subset);
  }
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> best = model.params().Flatten();
  double best_dev = std::numeric_limits<double>::infinity();
  std::vector<TrainLogRow> rows;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    TrainConfig cfg = config;
    if (epoch < config.warm_start_epochs && cfg.variant != Variant::kSeq2seq) cfg.variant = Variant::kWseq;
    // Dev objectives of warm-up epochs are not comparable with later ones.
    if (epoch == config.warm_start_epochs) best_dev = std::numeric_limits<double>::infinity();
    std::shuffle(order.begin(), order.end(), rng);
    TrainLogRow row;
    row.epoch = epoch;
    for (const auto& [b, e] : Batches(order.size(), config.batch_size)) {
      std::vector<DelexExample> batch;
      for (std::size_t k = b; k < e; ++k) batch.push_back(train[order[k]]);
      grads.Zero();
      Tape tape(&grads);
      const LossTerms t = GeneratorLoss(tape, model, batch, ctx, cfg, rng);
      CheckFinite(tape, t, epoch);
      tape.Backward(t.total);
      const double norm = std::sqrt(grads.SquaredNorm());
      if (!std::isfinite(norm)) throw TrainingDiverged("generator training produced a non-finite gradient");
      if (config.clip_norm > 0 && norm > config.clip_norm) grads.Scale(config.clip_norm / norm);
      adam.Step(grads);
      row.total += t.Value(tape, t.total);
      row.reconstruction += t.Value(tape, t.reconstruction);
      row.mmd += t.Value(tape, t.mmd);
      row.sim += t.Value(tape, t.sim);
      row.adv += t.Value(tape, t.adv);
    }
    const double n = static_cast<double>(train.size());
    row.total /= n;
    row.reconstruction /= n;
    row.sim /= n;
    row.adv /= n;
    if (dev_set.size() >= 2) {
      Rng dev_rng(config.seed ^ 0x5bd1e995ULL);
      double sum = 0.0;
      for (const auto& [b, e] : Batches(dev_set.size(), config.batch_size)) {
        Tape tape;
        std::span<const DelexExample> batch(dev_set.data() + b, e - b);
        sum += tape.scalar(GeneratorLoss(tape, model, batch, ctx, cfg, dev_rng).total);
      }
      row.dev_objective = sum / static_cast<double>(dev_set.size());
      if (!std::isfinite(row.dev_objective)) throw TrainingDiverged("non-finite dev objective");
      if (row.dev_objective < best_dev) {
        best_dev = row.dev_objective;
        best = model.params().Flatten();
      }
    } else {
      best = model.params().Flatten();
    }
    rows.push_back(row);
  }
  model.params().Assign(best);
  if (log) *log = std::move(rows);
  return model;
}

void WriteTrainingCsv(const std::string& path, std::span<const TrainLogRow> log) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << "epoch,total,reconstruction,mmd,sim,adv,dev_objective\n";
  char line[256];
  for (const auto& r : log) {
    std::snprintf(line, sizeof(line), "%d,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g\n", r.epoch, r.total,
                  r.reconstruction, r.mmd, r.sim, r.adv, r.dev_objective);
    out << line;
  }
}

}  // namespace tqa
