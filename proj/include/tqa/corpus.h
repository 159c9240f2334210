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

#ifndef TQA_CORPUS_H_
#define TQA_CORPUS_H_

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tqa/params.h"
#include "tqa/text.h"

namespace tqa {

// WikiSQL aggregation vocabulary, in release index order.
enum class Agg : int { kNone = 0, kMax = 1, kMin = 2, kCount = 3, kSum = 4, kAvg = 5 };
inline constexpr int kNumAggs = 6;

// WikiSQL condition operators, in release index order.
enum class CondOp : int { kEq = 0, kGt = 1, kLt = 2 };
inline constexpr int kNumOps = 3;

enum class ColumnType { kText, kReal };

const char* AggName(Agg agg);      // "", "MAX", ...
const char* AggWord(Agg agg);      // "", "max", "min", "count", "sum", "avg"
const char* OpSymbol(CondOp op);   // "=", ">", "<"

class LoadError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class ExecutionError : public Error {
 public:
  using Error::Error;
};

struct Table {
  std::string id;
  std::vector<std::string> headers;
  std::vector<ColumnType> types;
  std::vector<std::vector<std::string>> rows;

  int num_columns() const { return static_cast<int>(headers.size()); }
  // Tokenized header names, one list per column.
  std::vector<Tokens> HeaderTokens() const;
  // Throws Error when a row or the types list disagrees with the headers.
  void Validate() const;
};

struct Condition {
  int column = 0;
  CondOp op = CondOp::kEq;
  std::string value;

  friend bool operator==(const Condition&, const Condition&) = default;
};

struct SQLQuery {
  int sel = 0;
  Agg agg = Agg::kNone;
  std::vector<Condition> conds;

  friend bool operator==(const SQLQuery&, const SQLQuery&) = default;
};

// Query-accuracy equality: sel and agg equal, conds equal as sets with
// values compared case-insensitively after trimming.
bool SameQuery(const SQLQuery& a, const SQLQuery& b);

// Throws Error if `sql` references columns outside `table`.
void ValidateQuery(const SQLQuery& sql, const Table& table);

struct Example {
  std::string question_text;
  Tokens question;
  SQLQuery sql;
  std::string table_id;
};

struct Answer {
  bool error = false;       // execution failed (predicted queries only)
  bool scalar = false;      // aggregated result
  double number = 0.0;      // valid when scalar
  std::vector<std::string> values;  // valid when !scalar

  static Answer Failed() { Answer a; a.error = true; return a; }
  static Answer Scalar(double x) { Answer a; a.scalar = true; a.number = x; return a; }
  std::string ToString() const;
};

// Executor value semantics: numeric equality when both answers are scalars
// (relative tolerance 1e-9), cellwise comparison for value lists. Error
// answers never compare equal.
bool SameAnswer(const Answer& a, const Answer& b);

// Numeric parse of a full cell (after trimming); nullopt if not a number.
std::optional<double> ParseNumber(const std::string& cell);
// Shortest round-trip decimal text, integers without a fractional part.
std::string FormatNumber(double x);
// Cell comparison used by EQ conditions and answer comparison.
bool CellEquals(const std::string& a, const std::string& b);

struct Dataset {
  std::vector<Example> examples;
  std::map<std::string, Table> tables;
  // Answers recorded by the synthesizer; empty for loaded data.
  std::vector<Answer> recorded_answers;

  const Table& TableFor(const Example& e) const;
  std::size_t size() const { return examples.size(); }
  bool empty() const { return examples.empty(); }
};

// Reads WikiSQL JSON-lines question and table files.
Dataset LoadWikiSql(const std::string& data_path, const std::string& tables_path);
std::map<std::string, Table> LoadTables(const std::string& tables_path);
void WriteTables(const std::string& path, const std::map<std::string, Table>& tables);
void WriteExamples(const std::string& path, const std::vector<Example>& examples);

// Filters rows by the conjunction of conditions, projects the select column
// and applies the aggregation.
Answer ExecuteSql(const SQLQuery& sql, const Table& table);
// As ExecuteSql but returns Answer::Failed() instead of throwing.
Answer ExecuteOrError(const SQLQuery& sql, const Table& table);

// Templated questions over generated tables. Identical arguments give an
// identical corpus.
Dataset SynthesizeMiniCorpus(std::uint64_t seed, int n_tables, int n_examples);

// Contiguous split into train/dev/test by fractions of the example list.
struct Splits {
  Dataset train, dev, test;
};
Splits SplitDataset(const Dataset& data, double train_fraction, double dev_fraction);

// A six-row medal table and a question over it, used by tests and examples.
Table MedalTable();
Example MedalExample();

}  // namespace tqa

#endif  // TQA_CORPUS_H_
