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

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace tqa {

using nlohmann::json;

const char* AggName(Agg agg) {
  static const char* kNames[] = {"", "MAX", "MIN", "COUNT", "SUM", "AVG"};
  return kNames[static_cast<int>(agg)];
}

const char* AggWord(Agg agg) {
  static const char* kWords[] = {"", "max", "min", "count", "sum", "avg"};
  return kWords[static_cast<int>(agg)];
}

const char* OpSymbol(CondOp op) {
  static const char* kSymbols[] = {"=", ">", "<"};
  return kSymbols[static_cast<int>(op)];
}

std::vector<Tokens> Table::HeaderTokens() const {
  std::vector<Tokens> out;
  out.reserve(headers.size());
  for (const auto& h : headers) out.push_back(Tokenize(h));
  return out;
}

void Table::Validate() const {
  if (types.size() != headers.size()) {
    throw Error("table " + id + ": types length differs from header length");
  }
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != headers.size()) {
      throw Error("table " + id + ": row " + std::to_string(r) + " has " +
                  std::to_string(rows[r].size()) + " cells, expected " +
                  std::to_string(headers.size()));
    }
  }
}

void ValidateQuery(const SQLQuery& sql, const Table& table) {
  const int n = table.num_columns();
  if (sql.sel < 0 || sql.sel >= n) throw Error("select column out of range");
  const int agg = static_cast<int>(sql.agg);
  if (agg < 0 || agg >= kNumAggs) throw Error("aggregation out of range");
  for (const auto& c : sql.conds) {
    if (c.column < 0 || c.column >= n) throw Error("condition column out of range");
    const int op = static_cast<int>(c.op);
    if (op < 0 || op >= kNumOps) throw Error("condition operator out of range");
  }
}

std::optional<double> ParseNumber(const std::string& cell) {
  const std::string s = Trim(cell);
  if (s.empty()) return std::nullopt;
  const char* begin = s.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end != begin + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::string FormatNumber(double x) {
  if (std::isfinite(x) && std::floor(x) == x && std::fabs(x) < 1e15) {
    return std::to_string(static_cast<long long>(x));
  }
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

bool CellEquals(const std::string& a, const std::string& b) {
  auto na = ParseNumber(a);
  auto nb = ParseNumber(b);
  if (na && nb) return *na == *nb;
  return ToLower(Trim(a)) == ToLower(Trim(b));
}

bool SameQuery(const SQLQuery& a, const SQLQuery& b) {
  if (a.sel != b.sel || a.agg != b.agg || a.conds.size() != b.conds.size()) return false;
  auto key = [](const Condition& c) {
    return std::to_string(c.column) + "|" + std::to_string(static_cast<int>(c.op)) +
           "|" + Join(Tokenize(c.value));
  };
  std::multiset<std::string> ka, kb;
  for (const auto& c : a.conds) ka.insert(key(c));
  for (const auto& c : b.conds) kb.insert(key(c));
  return ka == kb;
}

std::string Answer::ToString() const {
  if (error) return "<error>";
  if (scalar) return FormatNumber(number);
  return "[" + Join(values, ", ") + "]";
}

bool SameAnswer(const Answer& a, const Answer& b) {
  if (a.error || b.error) return false;
  if (a.scalar != b.scalar) return false;
  if (a.scalar) {
    const double scale = std::max({1.0, std::fabs(a.number), std::fabs(b.number)});
    return std::fabs(a.number - b.number) <= 1e-9 * scale;
  }
  if (a.values.size() != b.values.size()) return false;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    if (!CellEquals(a.values[i], b.values[i])) return false;
  }
  return true;
}

const Table& Dataset::TableFor(const Example& e) const {
  auto it = tables.find(e.table_id);
  if (it == tables.end()) throw LoadError("unknown table id " + e.table_id);
  return it->second;
}

// ---------------------------------------------------------------------------
// Execution.

namespace {

bool ConditionHolds(const Condition& c, const std::string& cell) {
  auto lhs = ParseNumber(cell);
  auto rhs = ParseNumber(c.value);
  switch (c.op) {
    case CondOp::kEq:
      if (lhs && rhs) return *lhs == *rhs;
      return ToLower(Trim(cell)) == ToLower(Trim(c.value));
    case CondOp::kGt:
      return lhs && rhs && *lhs > *rhs;
    case CondOp::kLt:
      return lhs && rhs && *lhs < *rhs;
  }
  return false;
}

std::vector<double> NumericColumn(const std::vector<std::string>& cells, Agg agg) {
  std::vector<double> out;
  out.reserve(cells.size());
  for (const auto& c : cells) {
    auto v = ParseNumber(c);
    if (!v) {
      throw ExecutionError(std::string(AggName(agg)) + " over non-numeric cell '" + c + "'");
    }
    out.push_back(*v);
  }
  return out;
}

}  // namespace

Answer ExecuteSql(const SQLQuery& sql, const Table& table) {
  ValidateQuery(sql, table);
  std::vector<std::string> projected;
  for (const auto& row : table.rows) {
    bool keep = true;
    for (const auto& c : sql.conds) {
      if (!ConditionHolds(c, row[c.column])) {
        keep = false;
        break;
      }
    }
    if (keep) projected.push_back(row[sql.sel]);
  }
  switch (sql.agg) {
    case Agg::kNone: {
      Answer a;
      a.values = std::move(projected);
      return a;
    }
    case Agg::kCount:
      return Answer::Scalar(static_cast<double>(projected.size()));
    case Agg::kSum: {
      double s = 0.0;
      for (double v : NumericColumn(projected, sql.agg)) s += v;
      return Answer::Scalar(s);
    }
    case Agg::kAvg: {
      if (projected.empty()) throw ExecutionError("AVG over an empty row set");
      double s = 0.0;
      const auto vals = NumericColumn(projected, sql.agg);
      for (double v : vals) s += v;
      return Answer::Scalar(s / static_cast<double>(vals.size()));
    }
    case Agg::kMax:
    case Agg::kMin: {
      if (projected.empty()) {
        throw ExecutionError(std::string(AggName(sql.agg)) + " over an empty row set");
      }
      const auto vals = NumericColumn(projected, sql.agg);
      return Answer::Scalar(sql.agg == Agg::kMax ? *std::max_element(vals.begin(), vals.end())
                                                 : *std::min_element(vals.begin(), vals.end()));
    }
  }
  throw ExecutionError("unknown aggregation");
}

Answer ExecuteOrError(const SQLQuery& sql, const Table& table) {
  try {
    return ExecuteSql(sql, table);
  } catch (const Error&) {
    return Answer::Failed();
  }
}

// ---------------------------------------------------------------------------
// JSON-lines IO.

namespace {

std::string CellText(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number()) return FormatNumber(v.get<double>());
  if (v.is_null()) return "";
  return v.dump();
}

Table ParseTable(const json& j) {
  Table t;
  t.id = j.at("id").get<std::string>();
  for (const auto& h : j.at("header")) t.headers.push_back(h.get<std::string>());
  if (j.contains("types")) {
    for (const auto& ty : j.at("types")) {
      t.types.push_back(ty.get<std::string>() == "real" ? ColumnType::kReal : ColumnType::kText);
    }
  } else {
    t.types.assign(t.headers.size(), ColumnType::kText);
  }
  for (const auto& row : j.at("rows")) {
    std::vector<std::string> cells;
    for (const auto& c : row) cells.push_back(CellText(c));
    t.rows.push_back(std::move(cells));
  }
  t.Validate();
  return t;
}

template <typename Fn>
void ForEachJsonLine(const std::string& path, Fn fn) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (Trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    try {
      fn(j, lineno);
    } catch (const json::exception& e) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const LoadError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

}  // namespace

std::map<std::string, Table> LoadTables(const std::string& tables_path) {
  std::map<std::string, Table> tables;
  ForEachJsonLine(tables_path, [&](const json& j, int) {
    Table t = ParseTable(j);
    tables[t.id] = std::move(t);
  });
  return tables;
}

Dataset LoadWikiSql(const std::string& data_path, const std::string& tables_path) {
  Dataset d;
  d.tables = LoadTables(tables_path);
  ForEachJsonLine(data_path, [&](const json& j, int lineno) {
    Example e;
    e.question_text = j.at("question").get<std::string>();
    e.question = Tokenize(e.question_text);
    e.table_id = j.at("table_id").get<std::string>();
    const json& sql = j.at("sql");
    e.sql.sel = sql.at("sel").get<int>();
    const int agg = sql.at("agg").get<int>();
    if (agg < 0 || agg >= kNumAggs) throw Error("aggregation index out of range");
    e.sql.agg = static_cast<Agg>(agg);
    for (const auto& c : sql.at("conds")) {
      Condition cond;
      cond.column = c.at(0).get<int>();
      const int op = c.at(1).get<int>();
      if (op < 0 || op >= kNumOps) throw Error("operator index out of range");
      cond.op = static_cast<CondOp>(op);
      cond.value = CellText(c.at(2));
      e.sql.conds.push_back(std::move(cond));
    }
    auto it = d.tables.find(e.table_id);
    if (it == d.tables.end()) {
      throw LoadError(data_path + ":" + std::to_string(lineno) +
                      ": unknown table_id '" + e.table_id + "'");
    }
    ValidateQuery(e.sql, it->second);
    d.examples.push_back(std::move(e));
  });
  return d;
}

void WriteTables(const std::string& path, const std::map<std::string, Table>& tables) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  for (const auto& [id, t] : tables) {
    json j;
    j["id"] = t.id;
    j["header"] = t.headers;
    json types = json::array();
    for (auto ty : t.types) types.push_back(ty == ColumnType::kReal ? "real" : "text");
    j["types"] = types;
    json rows = json::array();
    for (const auto& r : t.rows) {
      json row = json::array();
      for (std::size_t c = 0; c < r.size(); ++c) {
        auto num = ParseNumber(r[c]);
        if (t.types[c] == ColumnType::kReal && num) {
          row.push_back(*num);
        } else {
          row.push_back(r[c]);
        }
      }
      rows.push_back(row);
    }
    j["rows"] = rows;
    out << j.dump() << "\n";
  }
}

void WriteExamples(const std::string& path, const std::vector<Example>& examples) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  for (const auto& e : examples) {
    json j;
    j["question"] = e.question_text;
    j["table_id"] = e.table_id;
    json conds = json::array();
    for (const auto& c : e.sql.conds) {
      conds.push_back(json::array({c.column, static_cast<int>(c.op), c.value}));
    }
    j["sql"] = {{"sel", e.sql.sel}, {"agg", static_cast<int>(e.sql.agg)}, {"conds", conds}};
    out << j.dump() << "\n";
  }
}

// ---------------------------------------------------------------------------
// Synthesis.

namespace {

struct HeaderSpec {
  const char* name;
  ColumnType type;
  int lo, hi;  // numeric range for real columns
};

const std::vector<HeaderSpec>& HeaderPool() {
  static const std::vector<HeaderSpec> kPool = {
      {"rank", ColumnType::kReal, 1, 30},        {"gold", ColumnType::kReal, 0, 40},
      {"silver", ColumnType::kReal, 0, 40},      {"bronze", ColumnType::kReal, 0, 40},
      {"total", ColumnType::kReal, 0, 120},      {"year", ColumnType::kReal, 1950, 2020},
      {"wins", ColumnType::kReal, 0, 60},        {"losses", ColumnType::kReal, 0, 60},
      {"points", ColumnType::kReal, 0, 300},     {"goals", ColumnType::kReal, 0, 90},
      {"round", ColumnType::kReal, 1, 12},       {"votes", ColumnType::kReal, 100, 9000},
      {"attendance", ColumnType::kReal, 500, 90000},
      {"age", ColumnType::kReal, 16, 70},        {"draws", ColumnType::kReal, 0, 30},
      {"laps", ColumnType::kReal, 1, 200},       {"seats", ColumnType::kReal, 1, 400},
      {"episodes", ColumnType::kReal, 1, 50},    {"first elected", ColumnType::kReal, 1950, 2020},
      {"jersey number", ColumnType::kReal, 1, 99},
      {"nation", ColumnType::kText, 0, 0},       {"team", ColumnType::kText, 0, 0},
      {"player", ColumnType::kText, 0, 0},       {"city", ColumnType::kText, 0, 0},
      {"position", ColumnType::kText, 0, 0},     {"party", ColumnType::kText, 0, 0},
      {"school", ColumnType::kText, 0, 0},       {"venue", ColumnType::kText, 0, 0},
      {"opponent", ColumnType::kText, 0, 0},     {"driver", ColumnType::kText, 0, 0},
      {"director", ColumnType::kText, 0, 0},     {"network", ColumnType::kText, 0, 0},
      {"home team", ColumnType::kText, 0, 0},    {"away team", ColumnType::kText, 0, 0},
  };
  return kPool;
}

// Pseudo-words that never collide with template or header vocabulary.
std::string MakeName(Rng& rng) {
  static const char* kOnset[] = {"b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "kr", "tr", "st"};
  static const char* kVowel[] = {"a", "e", "i", "o", "u", "ai", "ou"};
  static const char* kCoda[] = {"", "n", "r", "l", "s", "th", "nd"};
  auto pick = [&rng](auto& arr) {
    const std::size_t n = std::size(arr);
    return std::string(arr[std::uniform_int_distribution<std::size_t>(0, n - 1)(rng)]);
  };
  const int syllables = std::uniform_int_distribution<int>(2, 3)(rng);
  std::string w;
  for (int i = 0; i < syllables; ++i) w += pick(kOnset) + pick(kVowel);
  w += pick(kCoda);
  return w;
}

std::vector<std::string> NamePool(Rng& rng, int n) {
  std::set<std::string> seen;
  std::vector<std::string> out;
  while (static_cast<int>(out.size()) < n) {
    std::string name = MakeName(rng);
    // One name in eight gets a second word.
    if (std::uniform_int_distribution<int>(0, 7)(rng) == 0) name += " " + MakeName(rng);
    if (seen.insert(name).second) out.push_back(name);
  }
  return out;
}

template <typename T>
const T& PickOne(const std::vector<T>& v, Rng& rng) {
  return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
}

int RandInt(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

const std::vector<std::string>& SelectPhrases(Agg agg) {
  static const std::vector<std::vector<std::string>> kPhrases = {
      {"what is the {}", "which {}", "name the {}", "tell me the {}"},
      {"what is the highest {}", "what is the maximum {}", "what is the largest {}"},
      {"what is the lowest {}", "what is the minimum {}", "what is the smallest {}"},
      {"how many {} are there", "what is the number of {}", "count the {}"},
      {"what is the total {}", "what is the sum of {}", "sum the {}"},
      {"what is the average {}", "what is the mean {}"},
  };
  return kPhrases[static_cast<int>(agg)];
}

const std::vector<std::string>& CondPhrases(CondOp op) {
  static const std::vector<std::vector<std::string>> kPhrases = {
      {"{c} is {v}", "{c} of {v}", "the {c} is {v}"},
      {"{c} over {v}", "{c} greater than {v}", "{c} more than {v}", "{c} above {v}"},
      {"{c} under {v}", "{c} less than {v}", "{c} below {v}", "{c} fewer than {v}"},
  };
  return kPhrases[static_cast<int>(op)];
}

std::string Fill(std::string pattern, const std::string& key, const std::string& text) {
  const auto pos = pattern.find(key);
  if (pos != std::string::npos) pattern.replace(pos, key.size(), text);
  return pattern;
}

// Direct filter used to record the intended answer while synthesizing.
Answer IntendedAnswer(const Table& t, const SQLQuery& q) {
  std::vector<std::string> cells;
  for (const auto& row : t.rows) {
    bool ok = true;
    for (const auto& c : q.conds) {
      const std::string& cell = row[c.column];
      if (t.types[c.column] == ColumnType::kText) {
        ok = ok && ToLower(cell) == ToLower(c.value);
      } else {
        const double a = std::stod(cell), b = std::stod(c.value);
        ok = ok && (c.op == CondOp::kEq ? a == b : c.op == CondOp::kGt ? a > b : a < b);
      }
    }
    if (ok) cells.push_back(row[q.sel]);
  }
  if (q.agg == Agg::kNone) {
    Answer a;
    a.values = cells;
    return a;
  }
  if (q.agg == Agg::kCount) return Answer::Scalar(static_cast<double>(cells.size()));
  double acc = q.agg == Agg::kMax ? -1e300 : q.agg == Agg::kMin ? 1e300 : 0.0;
  for (const auto& c : cells) {
    const double v = std::stod(c);
    if (q.agg == Agg::kMax) acc = std::max(acc, v);
    else if (q.agg == Agg::kMin) acc = std::min(acc, v);
    else acc += v;
  }
  if (q.agg == Agg::kAvg) acc /= static_cast<double>(cells.size());
  return Answer::Scalar(acc);
}

}  // namespace

Dataset SynthesizeMiniCorpus(std::uint64_t seed, int n_tables, int n_examples) {
  if (n_tables < 1) throw Error("n_tables must be >= 1");
  if (n_examples < 1) throw Error("n_examples must be >= 1");
  Rng rng(seed);
  const auto names = NamePool(rng, 400);
  const auto& pool = HeaderPool();

  Dataset d;
  std::vector<std::string> ids;
  for (int ti = 0; ti < n_tables; ++ti) {
    Table t;
    t.id = "synth-" + std::to_string(seed) + "-" + std::to_string(ti);
    std::vector<int> real_idx, text_idx;
    for (int i = 0; i < static_cast<int>(pool.size()); ++i) {
      (pool[i].type == ColumnType::kReal ? real_idx : text_idx).push_back(i);
    }
    std::shuffle(real_idx.begin(), real_idx.end(), rng);
    std::shuffle(text_idx.begin(), text_idx.end(), rng);
    const int n_real = RandInt(rng, 2, 4);
    const int n_text = RandInt(rng, 2, 3);
    std::vector<int> cols(real_idx.begin(), real_idx.begin() + n_real);
    cols.insert(cols.end(), text_idx.begin(), text_idx.begin() + n_text);
    std::shuffle(cols.begin(), cols.end(), rng);
    for (int c : cols) {
      t.headers.push_back(pool[c].name);
      t.types.push_back(pool[c].type);
    }
    const int n_rows = RandInt(rng, 5, 10);
    for (int r = 0; r < n_rows; ++r) {
      std::vector<std::string> row;
      for (int c : cols) {
        if (pool[c].type == ColumnType::kReal) {
          row.push_back(std::to_string(RandInt(rng, pool[c].lo, pool[c].hi)));
        } else {
          row.push_back(PickOne(names, rng));
        }
      }
      t.rows.push_back(std::move(row));
    }
    ids.push_back(t.id);
    d.tables[t.id] = std::move(t);
  }

  static const char* kFirstJoin[] = {"when", "where", "with", "for"};
  for (int ei = 0; ei < n_examples; ++ei) {
    const Table& t = d.tables.at(ids[RandInt(rng, 0, n_tables - 1)]);
    const int ncols = t.num_columns();
    SQLQuery q;
    q.agg = static_cast<Agg>(RandInt(rng, 0, kNumAggs - 1));
    const bool numeric_sel = q.agg == Agg::kMax || q.agg == Agg::kMin ||
                             q.agg == Agg::kSum || q.agg == Agg::kAvg;
    std::vector<int> sel_options;
    for (int c = 0; c < ncols; ++c) {
      if (!numeric_sel || t.types[c] == ColumnType::kReal) sel_options.push_back(c);
    }
    q.sel = PickOne(sel_options, rng);

    const int roll = RandInt(rng, 0, 19);
    int n_conds = roll < 3 ? 0 : roll < 14 ? 1 : 2;
    if (q.agg == Agg::kNone && n_conds == 0) n_conds = 1;
    std::vector<int> cond_cols;
    for (int c = 0; c < ncols; ++c) {
      if (c != q.sel) cond_cols.push_back(c);
    }
    std::shuffle(cond_cols.begin(), cond_cols.end(), rng);
    n_conds = std::min<int>(n_conds, static_cast<int>(cond_cols.size()));
    const auto& anchor = t.rows[RandInt(rng, 0, static_cast<int>(t.rows.size()) - 1)];
    for (int k = 0; k < n_conds; ++k) {
      Condition c;
      c.column = cond_cols[k];
      if (t.types[c.column] == ColumnType::kText) {
        c.op = CondOp::kEq;
        c.value = anchor[c.column];
      } else {
        c.op = static_cast<CondOp>(RandInt(rng, 0, kNumOps - 1));
        const int v = std::stoi(anchor[c.column]);
        const int delta = RandInt(rng, 1, 5);
        c.value = std::to_string(c.op == CondOp::kEq ? v : c.op == CondOp::kGt ? v - delta : v + delta);
      }
      q.conds.push_back(std::move(c));
    }

    std::string text = Fill(PickOne(SelectPhrases(q.agg), rng), "{}", t.headers[q.sel]);
    for (int k = 0; k < n_conds; ++k) {
      const auto& c = q.conds[k];
      text += k == 0 ? std::string(" ") + kFirstJoin[RandInt(rng, 0, 3)] + " " : std::string(" and ");
      text += Fill(Fill(PickOne(CondPhrases(c.op), rng), "{c}", t.headers[c.column]), "{v}", c.value);
    }
    text += " ?";

    Example e;
    e.question_text = text;
    e.question = Tokenize(text);
    e.sql = q;
    e.table_id = t.id;
    d.recorded_answers.push_back(IntendedAnswer(t, q));
    d.examples.push_back(std::move(e));
  }
  return d;
}

Splits SplitDataset(const Dataset& data, double train_fraction, double dev_fraction) {
  Splits s;
  const std::size_t n = data.examples.size();
  const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
  const auto n_dev = static_cast<std::size_t>(std::llround(dev_fraction * static_cast<double>(n)));
  for (Dataset* part : {&s.train, &s.dev, &s.test}) part->tables = data.tables;
  for (std::size_t i = 0; i < n; ++i) {
    Dataset& part = i < n_train ? s.train : i < n_train + n_dev ? s.dev : s.test;
    part.examples.push_back(data.examples[i]);
    if (i < data.recorded_answers.size()) part.recorded_answers.push_back(data.recorded_answers[i]);
  }
  return s;
}

Table MedalTable() {
  Table t;
  t.id = "medal-table";
  t.headers = {"Rank", "Nation", "Gold", "Silver", "Bronze", "Total"};
  t.types = {ColumnType::kReal, ColumnType::kText, ColumnType::kReal,
             ColumnType::kReal, ColumnType::kReal, ColumnType::kReal};
  t.rows = {{"1", "Russia", "2", "2", "2", "6"},  {"2", "France", "1", "0", "0", "1"},
            {"2", "Hungary", "1", "0", "0", "1"}, {"4", "Ukraine", "0", "1", "1", "2"},
            {"5", "Bulgaria", "0", "1", "0", "1"}, {"6", "Poland", "0", "0", "1", "1"}};
  return t;
}

Example MedalExample() {
  Example e;
  e.question_text = "What is the bronze value associated with ranks over 5?";
  e.question = Tokenize(e.question_text);
  e.sql.sel = 4;
  e.sql.agg = Agg::kNone;
  e.sql.conds = {{0, CondOp::kGt, "5"}};
  e.table_id = "medal-table";
  return e;
}

}  // namespace tqa
