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

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "test_util.h"

namespace tqa {
namespace {

struct Fixture {
  Dataset data;
  std::vector<DelexExample> examples;
  std::unique_ptr<GeneratorModel> generator;
};

// An untrained generator pushed towards "et_0 </s>", so single-condition
// sources survive relexicalization and multi-condition ones do not.
Fixture MakeSetup() {
  Fixture s;
  s.data = SplitDataset(testing::MiniCorpus(), 0.5, 0.0).train;
  s.examples = DelexDataset(s.data, true);
  std::vector<Tokens> src, qs;
  for (const auto& e : s.examples) {
    src.push_back(e.sql_tokens);
    qs.push_back(e.question_tokens);
  }
  s.generator = std::make_unique<GeneratorModel>(BuildSourceVocab(src), BuildQuestionVocab(qs),
                                                 GeneratorDims{4, 4, 4}, 1);
  auto& ps = s.generator->params();
  for (const char* n : {"out.w", "gate.w"}) {
    auto& v = ps.at(ps.Find(n)).value;
    std::fill(v.begin(), v.end(), 0.0);
  }
  ps.at(ps.Find("gate.b")).value[0] = 50.0;
  auto& out_b = ps.at(ps.Find("out.b")).value;
  std::fill(out_b.begin(), out_b.end(), 0.0);
  out_b[s.generator->target_vocab().Find("et_0")] = 5.0;
  out_b[s.generator->target_vocab().Find(kEos)] = 4.0;
  return s;
}

TEST(AugmentTest, ZeroFractionSelectsNothing) {
  const Fixture s = MakeSetup();
  const auto aug = GenerateAdversarialSet(*s.generator, s.examples, 0.0, "t", 1, 4);
  EXPECT_EQ(aug.selected, 0);
  EXPECT_TRUE(aug.examples.empty());
  EXPECT_THROW(GenerateAdversarialSet(*s.generator, s.examples, 1.5, "t", 1), Error);
}

TEST(AugmentTest, AccountingAndGoldQueriesArePreserved) {
  const Fixture s = MakeSetup();
  const double f = 0.6;
  const auto aug = GenerateAdversarialSet(*s.generator, s.examples, f, "base.ckpt", 7, 4);
  EXPECT_EQ(aug.selected, static_cast<int>(std::llround(f * static_cast<double>(s.examples.size()))));
  EXPECT_EQ(aug.selected, static_cast<int>(aug.examples.size()) + aug.coverage_failures);
  EXPECT_GT(aug.examples.size(), 0u);
  EXPECT_GT(aug.coverage_failures, 0);
  EXPECT_EQ(aug.provenance, "base.ckpt");
  for (const auto& e : aug.examples) {
    const Table& t = s.data.TableFor(e);
    // The gold query is reused, so it answers the adversarial question exactly as before.
    bool found = false;
    for (const auto& src : s.data.examples) {
      if (src.table_id == e.table_id && src.sql == e.sql) {
        found = true;
        EXPECT_TRUE(SameAnswer(ExecuteSql(e.sql, t), ExecuteSql(src.sql, t)));
        break;
      }
    }
    EXPECT_TRUE(found);
    for (const auto& span : LocateEntities(e.question, e.sql)) EXPECT_TRUE(span.has_value());
  }
  const auto again = GenerateAdversarialSet(*s.generator, s.examples, f, "base.ckpt", 7, 4);
  ASSERT_EQ(again.examples.size(), aug.examples.size());
  for (std::size_t i = 0; i < aug.examples.size(); ++i) EXPECT_EQ(again.examples[i].question, aug.examples[i].question);
}

TEST(AugmentTest, EmptySetRetrainEqualsPlainTraining) {
  const Dataset base = SplitDataset(testing::MiniCorpus(), 0.25, 0.0).train;
  TargetTrainConfig cfg;
  cfg.epochs = 2;
  const TargetDims dims{8, 8, 4};
  const auto a = RetrainWithAugmentation(base, AugmentationSet{}, Dataset{}, cfg, dims);
  const auto b = TrainTarget(base, Dataset{}, cfg, dims);
  EXPECT_EQ(a.params().Flatten(), b.params().Flatten());
}

TEST(AugmentTest, RetrainVocabularyCoversAdversarialWords) {
  const Dataset base = SplitDataset(testing::MiniCorpus(), 0.25, 0.0).train;
  AugmentationSet aug;
  Example e = base.examples[0];
  e.question.push_back("zyzzyva");
  aug.examples.push_back(e);
  TargetTrainConfig cfg;
  cfg.epochs = 1;
  const auto m = RetrainWithAugmentation(base, aug, Dataset{}, cfg, TargetDims{8, 8, 4});
  EXPECT_TRUE(m.vocab().Contains("zyzzyva"));
}

TEST(AugmentTest, RobustnessSuiteAttacksCorrectSubset) {
  const Dataset split = SplitDataset(testing::MiniCorpus(), 0.5, 0.0).train;
  TargetTrainConfig cfg;
  cfg.epochs = 6;
  const TargetModel model = TrainTarget(split, Dataset{}, cfg, TargetDims{16, 16, 4});
  const auto rows = RobustnessSuite(model, {"knn", "unconstrained"}, split, {}, AttackOptions{});
  ASSERT_EQ(rows.size(), 2u);
  const int m = static_cast<int>(DelexDataset(CorrectSubset(split, model), true).size());
  for (const auto& r : rows) {
    EXPECT_EQ(r.m, m);
    EXPECT_LE(r.afr, 100.0);
    EXPECT_GE(r.qfr, 0.0);
  }
  EXPECT_THROW(RobustnessSuite(model, {"sage"}, split, {}, AttackOptions{}), Error);
}

TEST(AugmentTest, WritesExamplesAndProvenance) {
  const Fixture s = MakeSetup();
  const auto aug = GenerateAdversarialSet(*s.generator, s.examples, 0.5, "base.ckpt", 3, 4);
  const auto dir = testing::TempDir("aug");
  const auto path = (dir / "aug.jsonl").string();
  WriteAugmentationSet(path, aug);
  EXPECT_TRUE(std::filesystem::exists(path + ".provenance.json"));
  const Dataset back = LoadWikiSql(path, [&] {
    const auto t = (dir / "t.jsonl").string();
    WriteTables(t, s.data.tables);
    return t;
  }());
  EXPECT_EQ(back.size(), aug.examples.size());
}

}  // namespace
}  // namespace tqa
