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

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <variant>

#include "oracles.h"

namespace tqa {
namespace {

using testing::RelErr;

using testing::Fill;
using testing::MakeWorld;
using testing::ParamGradError;
using testing::World;

TEST(ReconstructionTest, UniformDecoderGivesLengthTimesLogVocab) {
  World w = MakeWorld();
  GeneratorModel& m = *w.generator;
  Fill(m, "gate.w", 0.0);
  Fill(m, "gate.b", 800.0);
  Fill(m, "out.w", 0.0);
  Fill(m, "out.b", 0.0);
  const double v = m.target_vocab().size();
  double want = 0;
  for (const auto& e : w.examples) want += (e.question_tokens.size() + 1) * std::log(v);
  EXPECT_NEAR(ReconstructionLoss(w.examples, m, false, 1), want, 1e-10);
  EXPECT_NEAR(ReconstructionLoss(w.examples, m, true, 2), want, 1e-10);
}

TEST(ReconstructionTest, CertainEndOfSentenceGivesZeroLoss) {
  World w = MakeWorld();
  GeneratorModel& m = *w.generator;
  Fill(m, "gate.w", 0.0);
  Fill(m, "gate.b", 800.0);
  Fill(m, "out.w", 0.0);
  Fill(m, "out.b", 0.0);
  m.params().at(m.params().Find("out.b")).value[m.target_vocab().Find(kEos)] = 1000.0;
  DelexExample e = w.examples[0];
  e.question_tokens.clear();
  EXPECT_NEAR(ReconstructionLoss(std::vector<DelexExample>{e}, m, false, 1), 0.0, 1e-12);
}

TEST(ReconstructionTest, ParameterGradientMatchesFiniteDifferences) {
  World w = MakeWorld(3);
  GeneratorModel& m = *w.generator;
  for (bool sample : {false, true}) {
    GradSink sink(m.params());
    {
      ad::Tape tape(&sink);
      Rng rng(5);
      const auto eb = EncodeBatch(tape, m, w.examples, sample, rng);
      tape.Backward(ReconstructionLossVar(tape, m, w.examples, eb));
    }
    EXPECT_LT(ParamGradError(m, sink, [&] { return ReconstructionLoss(w.examples, m, sample, 5); }), 1e-4);
  }
}

TEST(WseqTest, ZeroWeightIsReconstruction) {
  World w = MakeWorld();
  EXPECT_EQ(WseqLoss(w.examples, *w.generator, 0.0, 9), ReconstructionLoss(w.examples, *w.generator, true, 9));
}

TEST(WseqTest, ComposesReconstructionAndMmdOfRecordedLatents) {
  World w = MakeWorld(4);
  const GeneratorModel& m = *w.generator;
  const std::uint64_t seed = 13;
  // Replay the noise in the documented order: one eps per example, then prior draws.
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::vector<double>> z;
  for (const auto& e : w.examples) {
    const Posterior p = EncodePosterior(e.sql_tokens, m);
    std::vector<double> zi(m.dims().latent);
    for (int k = 0; k < m.dims().latent; ++k) zi[k] = p.mu[k] + std::exp(p.log_sigma[k]) * normal(rng);
    z.push_back(zi);
  }
  const auto prior = DrawPrior(2, m.dims().latent, rng);
  const double mmd = MmdPenalty(z, prior, 2.0 * m.dims().latent);
  const double recon = ReconstructionLoss(w.examples, m, true, seed);
  EXPECT_NEAR(WseqLoss(w.examples, m, 2.5, seed), recon + 2.5 * mmd, 1e-10);
}

TEST(WseqTest, BatchOfOneIsRejected) {
  World w = MakeWorld();
  EXPECT_THROW(WseqLoss(std::span(w.examples).first(1), *w.generator, 1.0, 1), Error);
}

TEST(WseqTest, ParameterGradientMatchesFiniteDifferences) {
  World w = MakeWorld(6);
  GeneratorModel& m = *w.generator;
  TrainConfig cfg;
  cfg.variant = Variant::kWseq;
  cfg.lambda_wseq = 3.0;
  const LossContext ctx = w.Context();
  GradSink sink(m.params());
  {
    ad::Tape tape(&sink);
    Rng rng(8);
    tape.Backward(GeneratorLoss(tape, m, w.examples, ctx, cfg, rng).total);
  }
  EXPECT_LT(ParamGradError(m, sink, [&] { return WseqLoss(w.examples, m, 3.0, 8); }), 1e-4);
}

TEST(SimilarityTest, IdentitySymmetryAndHandValue) {
  WordEmbeddings emb;
  emb.dim = 2;
  emb.vectors = {{"a", {1, 0}}, {"b", {0, 1}}, {"c", {1, 1}}};
  const EmbeddingSimilarity s(emb);
  EXPECT_EQ(s.Score({"a", "b"}, {"a", "b"}), 1.0);
  EXPECT_EQ(s.Score({"zz"}, {"zz"}), 1.0);
  EXPECT_NEAR(s.Score({"a", "b"}, {"a"}), std::sqrt(0.5) * std::exp(-0.25), 1e-15);
  EXPECT_EQ(s.Score({"a", "b"}, {"a"}), s.Score({"a"}, {"a", "b"}));
  EXPECT_EQ(s.Score({"a"}, {"b"}), 0.0);
  EXPECT_EQ(s.Score({"a"}, {"zz"}), 0.0);
  EXPECT_THROW(SimileScore({}, {"a"}, s), Error);
  EXPECT_NEAR(LengthPenalty(3, 6), std::exp(-1.0), 1e-15);
}

TEST(SimilarityTest, TrainedEmbeddingsRoundTrip) {
  const auto emb = TrainWordEmbeddings(std::vector<Tokens>{{"a", "b", "c"}, {"b", "c", "d"}}, 3);
  const auto path = (testing::TempDir("emb") / "e.txt").string();
  SaveWordEmbeddings(path, emb);
  const auto back = LoadWordEmbeddings(path);
  ASSERT_EQ(back.vectors.size(), emb.vectors.size());
  for (const auto& [w, v] : emb.vectors) {
    ASSERT_NE(back.Find(w), nullptr);
    EXPECT_EQ(*back.Find(w), v);
  }
}

TEST(MinRiskTest, HandValues) {
  const std::vector<double> lp = {std::log(0.5), std::log(0.25), std::log(0.25)};
  EXPECT_NEAR(MinRiskLoss(lp, std::vector<double>{1.0, 0.5, 0.0}), 0.375, 1e-15);
  // Shifting every log-probability leaves the loss unchanged.
  const std::vector<double> shifted = {lp[0] - 40, lp[1] - 40, lp[2] - 40};
  EXPECT_NEAR(MinRiskLoss(shifted, std::vector<double>{1.0, 0.5, 0.0}), 0.375, 1e-14);
  EXPECT_EQ(MinRiskLoss(std::vector<double>{-3.0}, std::vector<double>{1.0}), 0.0);
  EXPECT_THROW(MinRiskLoss(std::vector<double>{}, std::vector<double>{}), Error);
}

TEST(MinRiskTest, MatchesBruteForceOverFullSequenceSpace) {
  const Tokens words = {"a", "b", "c", "d"};
  WordEmbeddings emb;
  emb.dim = 3;
  emb.vectors = {{"a", {1, 0, 0}}, {"b", {0.5, 1, 0}}, {"c", {0, 0.3, 1}}, {"d", {0.2, 0.2, 0.2}}};
  const EmbeddingSimilarity scorer(emb);
  const Tokens ref = {"a", "c"};
  // A fixed per-step distribution over the four tokens plus a stop symbol.
  const auto space = testing::FullSequenceSpace(words, {0.3, 0.25, 0.2, 0.1}, 0.15, 3);
  ASSERT_EQ(space.size(), 84u);
  EXPECT_NEAR(MinRiskLoss(ref, space, scorer), testing::BruteMinRisk(ref, space, scorer), 1e-10);
}

TEST(MinRiskTest, GradientMatchesFiniteDifferences) {
  const std::vector<double> sims = {0.9, 0.1, 0.5, 0.3};
  EXPECT_LT(testing::MaxGradError({{-1.0}, {-2.5}, {-0.7}, {-3.0}},
                                  [&](ad::Tape& t, const std::vector<ad::Var>& v) {
                                    return MinRiskLossVar(t, v, sims);
                                  }),
            1e-6);
}

TEST(MinRiskTest, PlaceholdersAreRelexicalizedBeforeScoring) {
  EntityMap map;
  map.entries.push_back({"et_0", {"new", "york"}});
  EXPECT_EQ(RelexicalizeLenient({"in", "et_0", "et_1"}, map), (Tokens{"in", "new", "york", "et_1"}));
}

// The full objective on a micro configuration, with every random choice
// recorded once and replayed for each finite-difference evaluation.
TEST(SageTest, TotalLossGradientMatchesFiniteDifferences) {
  World w = MakeWorld(7);
  GeneratorModel& m = *w.generator;
  ASSERT_LE(m.target_vocab().size(), 20);
  // Favor the placeholder and the end marker so short samples cover the entity.
  auto& out_b = m.params().at(m.params().Find("out.b")).value;
  out_b[m.target_vocab().Find("et_0")] = 2.5;
  out_b[m.target_vocab().Find(kEos)] = 1.0;
  TrainConfig cfg;
  cfg.hypotheses = 2;
  cfg.max_len = 4;
  cfg.lambda_adv = 0.5;
  const LossContext ctx = w.Context();
  SageTrace trace;
  double recorded = 0;
  {
    ad::Tape tape;
    Rng rng(21);
    const LossTerms t = SageTotalLoss(tape, m, w.examples, ctx, cfg, rng, nullptr, &trace);
    recorded = tape.scalar(t.total);
    ASSERT_GT(t.Value(tape, t.adv), 0.0) << "no sample covered its entity";
  }
  GradSink sink(m.params());
  {
    ad::Tape tape(&sink);
    Rng rng(21);
    const LossTerms t = SageTotalLoss(tape, m, w.examples, ctx, cfg, rng, &trace);
    EXPECT_NEAR(tape.scalar(t.total), recorded, 1e-12);
    tape.Backward(t.total);
  }
  auto loss = [&] {
    ad::Tape tape;
    Rng rng(21);
    return tape.scalar(SageTotalLoss(tape, m, w.examples, ctx, cfg, rng, &trace).total);
  };
  EXPECT_LT(ParamGradError(m, sink, loss), 1e-3);
}

TEST(SageTest, AdversarialTermReachesOutputLayer) {
  World w = MakeWorld(8);
  GeneratorModel& m = *w.generator;
  auto& out_b = m.params().at(m.params().Find("out.b")).value;
  out_b[m.target_vocab().Find("et_0")] = 2.5;
  TrainConfig cfg;
  cfg.hypotheses = 3;
  cfg.max_len = 4;
  const LossContext ctx = w.Context();
  // Gradient of the adversarial part alone: total with lambda_adv minus total without.
  auto grad_with = [&](double lambda_adv) {
    TrainConfig c = cfg;
    c.lambda_adv = lambda_adv;
    GradSink sink(m.params());
    ad::Tape tape(&sink);
    Rng rng(3);
    const LossTerms t = SageTotalLoss(tape, m, w.examples, ctx, c, rng);
    tape.Backward(t.total);
    std::vector<double> g(sink.Grad(m.params().Find("out.w")).begin(), sink.Grad(m.params().Find("out.w")).end());
    return std::make_pair(g, t.Value(tape, t.adv));
  };
  const auto [g0, adv0] = grad_with(0.0);
  const auto [g1, adv1] = grad_with(1.0);
  ASSERT_GT(adv1, 0.0);
  double diff = 0;
  for (std::size_t i = 0; i < g0.size(); ++i) diff += std::fabs(g1[i] - g0[i]);
  EXPECT_GT(diff, 0.0);
  // The target is frozen: its parameters are untouched by a generator step.
  const auto before = w.target->params().Flatten();
  grad_with(1.0);
  EXPECT_EQ(w.target->params().Flatten(), before);
}

TEST(SageTest, ZeroWeightsReduceToWseqAndTermsAreNonNegative) {
  World w = MakeWorld(9);
  TrainConfig cfg;
  cfg.hypotheses = 2;
  cfg.max_len = 5;
  cfg.lambda_sim = 0.0;
  cfg.lambda_adv = 0.0;
  const LossContext ctx = w.Context();
  ad::Tape tape;
  Rng rng(4);
  const LossTerms t = SageTotalLoss(tape, *w.generator, w.examples, ctx, cfg, rng);
  EXPECT_NEAR(tape.scalar(t.total), t.Value(tape, t.reconstruction) + t.Value(tape, t.mmd), 1e-12);
  EXPECT_GE(t.Value(tape, t.sim), 0.0);
  EXPECT_GE(t.Value(tape, t.adv), 0.0);
  EXPECT_GE(t.Value(tape, t.reconstruction), 0.0);
}

TEST(TrainGeneratorTest, SameSeedSameParameters) {
  World w = MakeWorld(10);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 2;
  cfg.dims = {4, 4, 4};
  cfg.variant = Variant::kWseq;
  std::vector<TrainLogRow> log;
  const auto a = TrainGenerator(w.examples, w.examples, w.Context(), cfg, nullptr, &log);
  const auto b = TrainGenerator(w.examples, w.examples, w.Context(), cfg);
  EXPECT_EQ(a.params().Flatten(), b.params().Flatten());
  ASSERT_EQ(log.size(), 2u);
  EXPECT_GT(log[0].reconstruction, 0.0);
}

TEST(TrainGeneratorTest, VariantNamesRoundTrip) {
  for (Variant v : {Variant::kSeq2seq, Variant::kWseq, Variant::kWseqS, Variant::kSage}) {
    EXPECT_EQ(ParseVariant(VariantName(v)), v);
  }
  EXPECT_THROW(ParseVariant("vae"), Error);
}

}  // namespace
}  // namespace tqa
