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


// Independent reference computations shared by the unit suites and the
// acceptance binary.

#ifndef TQA_TESTS_ORACLES_H_
#define TQA_TESTS_ORACLES_H_

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

#include "test_util.h"
#include "tqa/corpus.h"
#include "tqa/delex.h"
#include "tqa/local_attacks.h"
#include "tqa/objectives.h"
#include "tqa/similarity.h"
#include "tqa/target_model.h"
#include "tqa/wseq.h"

namespace tqa::testing {

// ---- execution -------------------------------------------------------------

struct QueryCase {
  Table table;
  SQLQuery query;
};

// Random table with integer and color cells plus a random query over it.
inline QueryCase RandomQueryCase(std::mt19937_64& rng) {
  auto pick = [&](int n) { return static_cast<int>(rng() % n); };
  const std::vector<std::string> words = {"red", "blue", "green", "amber"};
  QueryCase qc;
  Table& t = qc.table;
  t.id = "t";
  const int cols = 2 + pick(4), rows = 1 + pick(9);
  for (int c = 0; c < cols; ++c) {
    t.headers.push_back("h" + std::to_string(c));
    t.types.push_back(pick(2) ? ColumnType::kReal : ColumnType::kText);
  }
  for (int r = 0; r < rows; ++r) {
    std::vector<std::string> row;
    for (int c = 0; c < cols; ++c) {
      row.push_back(t.types[c] == ColumnType::kReal ? std::to_string(pick(10)) : words[pick(4)]);
    }
    t.rows.push_back(row);
  }
  SQLQuery& q = qc.query;
  q.sel = pick(cols);
  const int nc = pick(3);
  for (int i = 0; i < nc; ++i) {
    Condition c;
    c.column = pick(cols);
    if (t.types[c.column] == ColumnType::kText) {
      c.op = CondOp::kEq;
      c.value = words[pick(4)];
    } else {
      c.op = static_cast<CondOp>(pick(3));
      c.value = std::to_string(pick(10));
    }
    q.conds.push_back(c);
  }
  const bool numeric_sel = t.types[q.sel] == ColumnType::kReal;
  q.agg = numeric_sel ? static_cast<Agg>(pick(kNumAggs)) : (pick(2) ? Agg::kCount : Agg::kNone);
  return qc;
}

// Row filter written against integer cells only, independent of the
// executor's parsing rules.
inline std::vector<std::string> FilterRows(const Table& t, const SQLQuery& q) {
  std::vector<std::string> out;
  for (const auto& row : t.rows) {
    bool ok = true;
    for (const auto& c : q.conds) {
      const std::string& cell = row[c.column];
      if (t.types[c.column] == ColumnType::kText) {
        ok = ok && c.op == CondOp::kEq && cell == c.value;
      } else {
        const long a = std::stol(cell), b = std::stol(c.value);
        ok = ok && ((c.op == CondOp::kEq && a == b) || (c.op == CondOp::kGt && a > b) ||
                    (c.op == CondOp::kLt && a < b));
      }
    }
    if (ok) out.push_back(row[q.sel]);
  }
  return out;
}

struct OracleAnswer {
  bool undefined = false;  // MAX/MIN/AVG of nothing
  bool scalar = false;
  double number = 0.0;
  std::vector<std::string> values;
};

inline OracleAnswer ExpectedAnswer(const Table& t, const SQLQuery& q) {
  const auto rows = FilterRows(t, q);
  OracleAnswer a;
  if (q.agg == Agg::kNone) {
    a.values = rows;
    return a;
  }
  a.scalar = true;
  if (q.agg == Agg::kCount) {
    a.number = static_cast<double>(rows.size());
    return a;
  }
  std::vector<long> v;
  for (const auto& s : rows) v.push_back(std::stol(s));
  if (v.empty() && q.agg != Agg::kSum) {
    a.undefined = true;
    return a;
  }
  long sum = 0;
  for (long x : v) sum += x;
  if (q.agg == Agg::kSum) a.number = static_cast<double>(sum);
  if (q.agg == Agg::kAvg) a.number = static_cast<double>(sum) / static_cast<double>(v.size());
  if (q.agg == Agg::kMax) a.number = static_cast<double>(*std::max_element(v.begin(), v.end()));
  if (q.agg == Agg::kMin) a.number = static_cast<double>(*std::min_element(v.begin(), v.end()));
  return a;
}

// ---- MMD -------------------------------------------------------------------

inline double MmdDirect(const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b,
                        double c) {
  auto k = [c](const std::vector<double>& x, const std::vector<double>& y) {
    double d = 0;
    for (std::size_t i = 0; i < x.size(); ++i) d += (x[i] - y[i]) * (x[i] - y[i]);
    return c / (c + d);
  };
  const double n = static_cast<double>(a.size());
  double s1 = 0, s2 = 0, s3 = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < a.size(); ++j) {
      if (i != j) s1 += k(a[i], a[j]);
      if (i != j) s2 += k(b[i], b[j]);
      s3 += k(a[i], b[j]);
    }
  }
  return (s1 + s2) / (n * (n - 1)) - 2 * s3 / (n * n);
}

// ---- local attacks ---------------------------------------------------------

// A random question over a small word pool, one condition whose value
// appears in the question, and a random micro target model.
struct Instance {
  Table table;
  DelexExample example;
  std::unique_ptr<TargetModel> model;
};

inline Instance MakeInstance(std::uint64_t seed, int pool = 40) {
  Rng rng(seed);
  auto pick = [&](int n) { return static_cast<int>(rng() % static_cast<std::uint64_t>(n)); };
  std::vector<std::string> words;
  for (int i = 0; i < pool; ++i) words.push_back("w" + std::to_string(i));
  Instance in;
  in.table.id = "t" + std::to_string(seed);
  const int cols = 2 + pick(3);
  for (int c = 0; c < cols; ++c) {
    in.table.headers.push_back(words[pick(pool)]);
    in.table.types.push_back(ColumnType::kText);
  }
  in.table.rows.push_back(std::vector<std::string>(cols, "x"));
  Example e;
  e.table_id = in.table.id;
  const int len = 3 + pick(6);
  const int value_pos = pick(len);
  for (int i = 0; i < len; ++i) e.question.push_back(i == value_pos ? "val" : words[pick(pool)]);
  e.sql.sel = pick(cols);
  e.sql.agg = static_cast<Agg>(pick(kNumAggs));
  e.sql.conds = {{pick(cols), CondOp::kEq, "val"}};
  Dataset d;
  d.examples.push_back(e);
  Example filler;
  filler.question = Tokens(words.begin(), words.end());
  filler.table_id = in.table.id;
  d.examples.push_back(filler);
  d.tables.emplace(in.table.id, in.table);
  in.model = std::make_unique<TargetModel>(BuildTargetVocab(d), TargetDims{6, 5, 4}, seed);
  in.example = std::get<DelexExample>(Delexicalize(e, in.table));
  return in;
}

using Choice = std::tuple<double, int, int>;  // score, position, token

// Direct enumeration of (E[v] - y_i) . g_i over the candidate sets.
inline Choice Enumerate(const InputGradient& g, const TargetModel& m, const std::vector<std::vector<int>>& cands) {
  Choice best{1e300, -1, -1};
  for (std::size_t i = 0; i < cands.size(); ++i) {
    for (int v : cands[i]) {
      const auto row = m.EmbeddingRow(v);
      double s = 0.0;
      for (std::size_t d = 0; d < row.size(); ++d) s += (row[d] - g.embeddings[i][d]) * g.gradients[i][d];
      const Choice c{s, static_cast<int>(i), v};
      if (c < best) best = c;
    }
  }
  return best;
}

inline bool IsSpecial(const std::string& w) { return w.front() == '<' && w.back() == '>'; }

inline std::vector<std::vector<int>> AllowedTokens(const AttackInput& in, const TargetModel& m, bool exclude_self) {
  std::vector<std::vector<int>> out(in.question.size());
  for (std::size_t i = 0; i < in.question.size(); ++i) {
    if (in.entity[i]) continue;
    const int self = m.vocab().Id(in.question[i]);
    for (int v = 0; v < m.vocab().size(); ++v) {
      if (IsSpecial(m.vocab().Word(v))) continue;
      if (exclude_self && v == self) continue;
      out[i].push_back(v);
    }
  }
  return out;
}

// Neighbors by a direct distance loop.
inline std::vector<int> BruteNeighbors(const TargetModel& m, int a, int k) {
  std::vector<std::pair<double, int>> d;
  for (int b = 0; b < m.vocab().size(); ++b) {
    if (b == a || IsSpecial(m.vocab().Word(b))) continue;
    double s = 0;
    const auto ra = m.EmbeddingRow(a), rb = m.EmbeddingRow(b);
    for (std::size_t j = 0; j < ra.size(); ++j) s += (ra[j] - rb[j]) * (ra[j] - rb[j]);
    d.push_back({s, b});
  }
  std::sort(d.begin(), d.end());
  std::vector<int> out;
  for (int j = 0; j < k && j < static_cast<int>(d.size()); ++j) out.push_back(d[j].second);
  std::sort(out.begin(), out.end());
  return out;
}

// ---- generator objectives --------------------------------------------------

// Two questions over a two-column table.
struct World {
  std::map<std::string, Table> tables;
  std::vector<DelexExample> examples;
  std::unique_ptr<GeneratorModel> generator;
  std::unique_ptr<TargetModel> target;
  std::unique_ptr<EmbeddingSimilarity> scorer;

  LossContext Context() const { return {&tables, target.get(), scorer.get()}; }
};

inline World MakeWorld(std::uint64_t seed = 1, GeneratorDims dims = {4, 4, 4}) {
  World w;
  Table t;
  t.id = "m";
  t.headers = {"team", "wins"};
  t.types = {ColumnType::kText, ColumnType::kReal};
  t.rows = {{"lions", "3"}, {"bears", "5"}};
  w.tables.emplace(t.id, t);
  Dataset d;
  d.tables = w.tables;
  Example a;
  a.question = Tokenize("how many wins for lions");
  a.sql.sel = 1;
  a.sql.conds = {{0, CondOp::kEq, "lions"}};
  a.table_id = "m";
  Example b;
  b.question = Tokenize("team with wins over 3");
  b.sql.sel = 0;
  b.sql.conds = {{1, CondOp::kGt, "3"}};
  b.table_id = "m";
  d.examples = {a, b};
  std::vector<Tokens> src, qs;
  for (const auto& e : d.examples) {
    w.examples.push_back(std::get<DelexExample>(Delexicalize(e, t)));
    src.push_back(w.examples.back().sql_tokens);
    qs.push_back(w.examples.back().question_tokens);
  }
  w.generator = std::make_unique<GeneratorModel>(BuildSourceVocab(src), BuildQuestionVocab(qs), dims, seed);
  w.target = std::make_unique<TargetModel>(BuildTargetVocab(d), TargetDims{4, 4, 4}, seed + 1);
  std::vector<Tokens> corpus = {a.question, b.question, Tokenize("how many teams")};
  w.scorer = std::make_unique<EmbeddingSimilarity>(TrainWordEmbeddings(corpus, 4));
  return w;
}

inline void Fill(GeneratorModel& m, const std::string& name, double v) {
  auto& p = m.params().at(m.params().Find(name)).value;
  std::fill(p.begin(), p.end(), v);
}

// Central differences of `loss` over a spread of parameter entries against
// the gradient accumulated in `sink`.
inline double ParamGradError(ParamStore& params, const GradSink& sink, const std::function<double()>& loss,
                             int per_param = 5) {
  const double h = 1e-5;
  double worst = 0.0;
  for (int i = 0; i < params.size(); ++i) {
    auto& v = params.at(i).value;
    const std::size_t step = std::max<std::size_t>(1, v.size() / per_param);
    for (std::size_t j = 0; j < v.size(); j += step) {
      const double keep = v[j];
      v[j] = keep + h;
      const double up = loss();
      v[j] = keep - h;
      const double down = loss();
      v[j] = keep;
      worst = std::max(worst, RelErr(sink.Grad(i)[j], (up - down) / (2 * h)));
    }
  }
  return worst;
}

inline double ParamGradError(GeneratorModel& m, const GradSink& sink, const std::function<double()>& loss,
                             int per_param = 5) {
  return ParamGradError(m.params(), sink, loss, per_param);
}

// Every sequence of 1..max_len words under a fixed per-step distribution
// with a stop probability; the log-probabilities are exact.
inline std::vector<Hypothesis> FullSequenceSpace(const Tokens& words, const std::vector<double>& step, double stop,
                                                 int max_len) {
  std::vector<Hypothesis> space;
  const int v = static_cast<int>(words.size());
  for (int len = 1; len <= max_len; ++len) {
    int total = 1;
    for (int i = 0; i < len; ++i) total *= v;
    for (int code = 0; code < total; ++code) {
      Hypothesis h;
      double p = stop;
      for (int i = 0, c = code; i < len; ++i, c /= v) {
        h.tokens.push_back(words[c % v]);
        p *= step[c % v];
      }
      h.log_prob = std::log(p);
      space.push_back(h);
    }
  }
  return space;
}

// Expected (1 - similarity) by explicit renormalized summation.
inline double BruteMinRisk(const Tokens& ref, const std::vector<Hypothesis>& space, const SimilarityScorer& s) {
  long double num = 0, den = 0;
  for (const auto& h : space) {
    const long double p = std::exp(static_cast<long double>(h.log_prob));
    num += p * (1.0L - s.Score(ref, h.tokens));
    den += p;
  }
  return static_cast<double>(num / den);
}

}  // namespace tqa::testing

#endif  // TQA_TESTS_ORACLES_H_
