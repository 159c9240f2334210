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


#include "tqa/corpus.h"

#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "oracles.h"

namespace tqa {
namespace {

TEST(ExecutorTest, MedalQueryReturnsOne) {
  const Table t = MedalTable();
  const Example e = MedalExample();
  const Answer a = ExecuteSql(e.sql, t);
  ASSERT_FALSE(a.error);
  ASSERT_FALSE(a.scalar);
  ASSERT_EQ(a.values.size(), 1u);
  EXPECT_EQ(a.values[0], "1");
}

TEST(ExecutorTest, RandomQueriesMatchRowFilter) {
  std::mt19937_64 rng(11);
  int checked = 0;
  while (checked < 50) {
    const auto [t, q] = testing::RandomQueryCase(rng);
    const auto want = testing::ExpectedAnswer(t, q);
    if (want.undefined) {
      EXPECT_THROW(ExecuteSql(q, t), ExecutionError);
      continue;
    }
    const Answer a = ExecuteSql(q, t);
    ASSERT_FALSE(a.error);
    EXPECT_EQ(a.scalar, want.scalar);
    if (want.scalar) {
      EXPECT_DOUBLE_EQ(a.number, want.number);
    } else {
      EXPECT_EQ(a.values, want.values);
    }
    ++checked;
  }
}

TEST(ExecutorTest, RejectsOutOfRangeColumns) {
  SQLQuery q;
  q.sel = 9;
  EXPECT_THROW(ExecuteSql(q, MedalTable()), Error);
  EXPECT_TRUE(ExecuteOrError(q, MedalTable()).error);
}

TEST(ExecutorTest, EqualityIsNumericOrCaseInsensitive) {
  const Table t = MedalTable();
  SQLQuery q;
  q.sel = 0;
  q.conds = {{1, CondOp::kEq, "  hungary "}};
  EXPECT_EQ(ExecuteSql(q, t).values, std::vector<std::string>{"2"});
  q.sel = 1;
  q.conds = {{0, CondOp::kEq, "4.0"}};
  EXPECT_EQ(ExecuteSql(q, t).values, std::vector<std::string>{"Ukraine"});
}

TEST(ExecutorTest, SameQueryIgnoresConditionOrderAndCase) {
  SQLQuery a;
  a.sel = 1;
  a.conds = {{0, CondOp::kEq, "Foo Bar"}, {2, CondOp::kGt, "3"}};
  SQLQuery b = a;
  std::swap(b.conds[0], b.conds[1]);
  b.conds[1].value = "foo bar";
  EXPECT_TRUE(SameQuery(a, b));
  b.conds[0].op = CondOp::kLt;
  EXPECT_FALSE(SameQuery(a, b));
}

TEST(AnswerTest, ScalarComparisonUsesRelativeTolerance) {
  EXPECT_TRUE(SameAnswer(Answer::Scalar(1e6), Answer::Scalar(1e6 + 1e-4)));
  EXPECT_FALSE(SameAnswer(Answer::Scalar(1.0), Answer::Scalar(1.001)));
  EXPECT_FALSE(SameAnswer(Answer::Failed(), Answer::Failed()));
}

TEST(CorpusTest, SynthesizerIsDeterministic) {
  const Dataset a = SynthesizeMiniCorpus(5, 4, 50);
  const Dataset b = SynthesizeMiniCorpus(5, 4, 50);
  ASSERT_EQ(a.size(), 50u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a.examples[i].question, b.examples[i].question);
    EXPECT_EQ(a.examples[i].sql, b.examples[i].sql);
  }
  const Dataset c = SynthesizeMiniCorpus(6, 4, 50);
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) differs |= a.examples[i].question != c.examples[i].question;
  EXPECT_TRUE(differs);
}

TEST(CorpusTest, SynthesizedAnswersMatchExecution) {
  const Dataset& d = testing::MiniCorpus();
  ASSERT_EQ(d.recorded_answers.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto& e = d.examples[i];
    EXPECT_TRUE(SameAnswer(ExecuteSql(e.sql, d.TableFor(e)), d.recorded_answers[i]));
  }
}

TEST(CorpusTest, WriteThenLoadRoundTrips) {
  const Dataset& d = testing::MiniCorpus();
  const auto dir = testing::TempDir("corpus");
  WriteTables((dir / "t.jsonl").string(), d.tables);
  WriteExamples((dir / "q.jsonl").string(), d.examples);
  const Dataset back = LoadWikiSql((dir / "q.jsonl").string(), (dir / "t.jsonl").string());
  ASSERT_EQ(back.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    EXPECT_EQ(back.examples[i].question, d.examples[i].question);
    EXPECT_TRUE(SameQuery(back.examples[i].sql, d.examples[i].sql));
    EXPECT_EQ(back.examples[i].table_id, d.examples[i].table_id);
  }
  EXPECT_EQ(back.tables.size(), d.tables.size());
}

TEST(CorpusTest, MalformedLinesRaise) {
  const auto dir = testing::TempDir("corpus_bad");
  const Dataset& d = testing::MiniCorpus();
  WriteTables((dir / "t.jsonl").string(), d.tables);
  std::ofstream((dir / "q.jsonl").string()) << "{not json\n";
  EXPECT_THROW(LoadWikiSql((dir / "q.jsonl").string(), (dir / "t.jsonl").string()), Error);
  EXPECT_THROW(LoadTables((dir / "missing.jsonl").string()), Error);
}

TEST(CorpusTest, SplitIsContiguous) {
  const Dataset& d = testing::MiniCorpus();
  const Splits s = SplitDataset(d, 0.5, 0.25);
  EXPECT_EQ(s.train.size() + s.dev.size() + s.test.size(), d.size());
  EXPECT_EQ(s.train.examples.front().question, d.examples.front().question);
  EXPECT_EQ(s.test.examples.back().question, d.examples.back().question);
}

TEST(TextTest, TokenizeSplitsPunctuationButKeepsDecimals) {
  EXPECT_EQ(Tokenize("What is 3.5, really?"), (Tokens{"what", "is", "3.5", ",", "really", "?"}));
}

}  // namespace
}  // namespace tqa
