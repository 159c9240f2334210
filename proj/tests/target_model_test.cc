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

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "test_util.h"

namespace tqa {
namespace {

using testing::RelErr;

constexpr TargetDims kMicro{6, 5, 4};

Dataset MedalData() {
  Dataset d;
  d.examples.push_back(MedalExample());
  d.tables.emplace(MedalTable().id, MedalTable());
  return d;
}

TargetModel MicroModel(std::uint64_t seed = 3, bool zero_heads = false) {
  return TargetModel(BuildTargetVocab(MedalData()), kMicro, seed, zero_heads);
}

double Total(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

TEST(TargetModelTest, DistributionsAreNormalized) {
  const TargetModel m = MicroModel();
  const auto d = PredictSlots(MedalExample().question, MedalTable(), m);
  EXPECT_NEAR(Total(d.sc), 1.0, 1e-12);
  EXPECT_NEAR(Total(d.sa), 1.0, 1e-12);
  EXPECT_NEAR(Total(d.wn), 1.0, 1e-12);
  EXPECT_EQ(d.sc.size(), 6u);
  EXPECT_EQ(d.sa.size(), static_cast<std::size_t>(kNumAggs));
  EXPECT_EQ(d.wn.size(), 5u);
  for (double p : d.wc) EXPECT_TRUE(p > 0 && p < 1);
  for (std::size_t k = 0; k < d.cond_columns.size(); ++k) {
    EXPECT_NEAR(Total(d.wo[k]), 1.0, 1e-12);
    EXPECT_NEAR(Total(d.wv_start[k]), 1.0, 1e-12);
    EXPECT_NEAR(Total(d.wv_end[k]), 1.0, 1e-12);
  }
}

TEST(TargetModelTest, ColumnScoresFollowColumnPermutation) {
  const TargetModel m = MicroModel();
  const Table t = MedalTable();
  Table p = t;
  const std::vector<int> perm = {3, 0, 5, 1, 4, 2};  // p column j is t column perm[j]
  for (int j = 0; j < 6; ++j) {
    p.headers[j] = t.headers[perm[j]];
    p.types[j] = t.types[perm[j]];
    for (std::size_t r = 0; r < t.rows.size(); ++r) p.rows[r][j] = t.rows[r][perm[j]];
  }
  const auto a = PredictSlots(MedalExample().question, t, m);
  const auto b = PredictSlots(MedalExample().question, p, m);
  for (int j = 0; j < 6; ++j) {
    EXPECT_NEAR(b.sc[j], a.sc[perm[j]], 1e-12);
    EXPECT_NEAR(b.wc[j], a.wc[perm[j]], 1e-12);
  }
}

TEST(TargetModelTest, ZeroHeadsGiveUniformDistributionsAndClosedFormLoss) {
  const TargetModel m = MicroModel(3, true);
  const Example e = MedalExample();
  const auto d = PredictSlots(e.question, MedalTable(), m);
  for (double p : d.sc) EXPECT_NEAR(p, 1.0 / 6, 1e-15);
  for (double p : d.sa) EXPECT_NEAR(p, 1.0 / 6, 1e-15);
  for (double p : d.wn) EXPECT_NEAR(p, 1.0 / 5, 1e-15);
  for (double p : d.wc) EXPECT_NEAR(p, 0.5, 1e-15);

  const GoldLabels gold = GoldFor(e);
  ASSERT_EQ(gold.NumLabels(), 7);
  const double n = static_cast<double>(e.question.size());
  const double want = -(std::log(5.0 / 6) + std::log(5.0 / 6) + std::log(4.0 / 5) + std::log(0.5) +
                        std::log(2.0 / 3) + 2 * std::log(1 - 1 / n));
  const auto g = ComputeInputGradient(e.question, gold, MedalTable(), m);
  EXPECT_NEAR(g.loss, want, 1e-12);
  EXPECT_FALSE(g.saturated);
}

TEST(TargetModelTest, AdversarialLossFromProbsMatchesDefinition) {
  const std::vector<double> p = {0.1, 0.5, 0.25};
  EXPECT_NEAR(AdversarialLossFromProbs(p), -(std::log(0.9) + std::log(0.5) + std::log(0.75)), 1e-15);
  bool sat = false;
  const std::vector<double> q = {1.0};
  EXPECT_NEAR(AdversarialLossFromProbs(q, &sat), -std::log(1e-6), 1e-6);
  EXPECT_TRUE(sat);
  EXPECT_EQ(AdversarialLossFromProbs(std::vector<double>{}), 0.0);
}

TEST(TargetModelTest, GoldLabelsCountOnlyLocatedSpans) {
  SQLQuery q;
  q.sel = 1;
  q.conds = {{0, CondOp::kEq, "a"}, {2, CondOp::kGt, "3"}};
  EXPECT_EQ(MakeGoldLabels(q, {Span{0, 0}, std::nullopt}).NumLabels(), 3 + 4 + 2);
  EXPECT_EQ(MakeGoldLabels(SQLQuery{}, {}).NumLabels(), 3);
}

TEST(TargetModelTest, InputGradientMatchesFiniteDifferences) {
  const TargetModel m = MicroModel(5);
  const Example e = MedalExample();
  const GoldLabels gold = GoldFor(e);
  const auto g = ComputeInputGradient(e.question, gold, MedalTable(), m);
  const double h = 1e-5;
  double worst = 0;
  for (std::size_t i = 0; i < g.embeddings.size(); ++i) {
    for (int j = 0; j < kMicro.embed; ++j) {
      auto up = g.embeddings, down = g.embeddings;
      up[i][j] += h;
      down[i][j] -= h;
      const double fd = (AdversarialLoss(up, gold, MedalTable(), m).loss -
                         AdversarialLoss(down, gold, MedalTable(), m).loss) / (2 * h);
      worst = std::max(worst, RelErr(g.gradients[i][j], fd));
    }
  }
  EXPECT_LT(worst, 1e-4);
}

TEST(TargetModelTest, ParameterGradientMatchesFiniteDifferences) {
  TargetModel m = MicroModel(6);
  const Example e = MedalExample();
  const GoldLabels gold = GoldFor(e);
  GradSink sink(m.params());
  {
    ad::Tape tape(&sink);
    const auto embs = m.EmbedTokens(tape, e.question);
    tape.Backward(AdversarialLossVar(tape, embs, gold, MedalTable(), m));
  }
  auto loss = [&] {
    ad::Tape tape;
    return tape.scalar(AdversarialLossVar(tape, m.EmbedTokens(tape, e.question), gold, MedalTable(), m));
  };
  const double h = 1e-5;
  double worst = 0;
  for (int i = 0; i < m.params().size(); ++i) {
    auto& v = m.params().at(i).value;
    for (std::size_t j = 0; j < v.size(); j += 1 + v.size() / 7) {
      const double keep = v[j];
      v[j] = keep + h;
      const double up = loss();
      v[j] = keep - h;
      const double down = loss();
      v[j] = keep;
      worst = std::max(worst, RelErr(sink.Grad(i)[j], (up - down) / (2 * h)));
    }
  }
  EXPECT_LT(worst, 1e-4);
}

TEST(TargetModelTest, CheckpointRoundTrip) {
  const TargetModel m = MicroModel(7);
  const auto path = (testing::TempDir("target") / "t.ckpt").string();
  m.Save(path);
  const TargetModel back = TargetModel::Load(path);
  EXPECT_EQ(back.params().Flatten(), m.params().Flatten());
  EXPECT_EQ(back.vocab().words(), m.vocab().words());
  const auto a = PredictSlots(MedalExample().question, MedalTable(), m);
  const auto b = PredictSlots(MedalExample().question, MedalTable(), back);
  EXPECT_EQ(a.sc, b.sc);
}

TEST(TargetModelTest, DecodeTakesSpanEndAfterStart) {
  SlotDistributions d;
  d.question = {"a", "b", "c", "d"};
  d.sc = {0.2, 0.8};
  d.sa = {1, 0, 0, 0, 0, 0};
  d.wn = {0, 1, 0};
  d.wc = {0.3, 0.9};
  d.cond_columns = {1};
  d.cond_ops = {CondOp::kEq};
  d.wo = {{0.1, 0.7, 0.2}};
  d.wv_start = {{0.1, 0.2, 0.6, 0.1}};
  d.wv_end = {{0.9, 0.0, 0.04, 0.06}};
  const SQLQuery q = DecodeQuery(d);
  EXPECT_EQ(q.sel, 1);
  ASSERT_EQ(q.conds.size(), 1u);
  EXPECT_EQ(q.conds[0].column, 1);
  EXPECT_EQ(q.conds[0].op, CondOp::kGt);
  EXPECT_EQ(q.conds[0].value, "c d");
}

TEST(TargetModelTest, TrainingReducesLossOnSmallSplit) {
  const Dataset& data = testing::MiniCorpus();
  const Splits s = SplitDataset(data, 0.5, 0.0);
  TargetTrainConfig cfg;
  cfg.epochs = 10;
  TargetTrainLog log;
  const TargetModel m = TrainTarget(s.train, Dataset{}, cfg, TargetDims{16, 16, 4}, &log);
  ASSERT_EQ(log.epoch_loss.size(), 10u);
  EXPECT_LT(log.epoch_loss.back(), 0.7 * log.epoch_loss.front());
  EXPECT_TRUE(m.params().AllFinite());
}

TEST(TargetModelTest, TrainingIsDeterministic) {
  const Splits s = SplitDataset(testing::MiniCorpus(), 0.25, 0.0);
  TargetTrainConfig cfg;
  cfg.epochs = 2;
  const auto a = TrainTarget(s.train, Dataset{}, cfg, TargetDims{8, 8, 4});
  const auto b = TrainTarget(s.train, Dataset{}, cfg, TargetDims{8, 8, 4});
  EXPECT_EQ(a.params().Flatten(), b.params().Flatten());
}

}  // namespace
}  // namespace tqa
