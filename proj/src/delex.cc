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

#include "tqa/delex.h"

#include <cctype>
#include <fstream>

#include "json.hpp"

namespace tqa {

using nlohmann::json;

std::string Placeholder(int index) { return "et_" + std::to_string(index); }

bool IsPlaceholder(const std::string& token, int* index) {
  if (token.size() < 4 || token.compare(0, 3, "et_") != 0) return false;
  for (std::size_t i = 3; i < token.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(token[i]))) return false;
  }
  if (index) *index = std::stoi(token.substr(3));
  return true;
}

const Tokens* EntityMap::Find(const std::string& placeholder) const {
  for (const auto& e : entries) {
    if (e.placeholder == placeholder) return &e.surface;
  }
  return nullptr;
}

std::optional<Span> FindSurface(const Tokens& tokens, const Tokens& surface,
                                const std::vector<bool>& used) {
  if (surface.empty() || surface.size() > tokens.size()) return std::nullopt;
  const int n = static_cast<int>(tokens.size());
  const int m = static_cast<int>(surface.size());
  for (int s = 0; s + m <= n; ++s) {
    bool ok = true;
    for (int k = 0; k < m && ok; ++k) {
      if (!used.empty() && used[s + k]) ok = false;
      else if (ToLower(tokens[s + k]) != ToLower(surface[k])) ok = false;
    }
    if (ok) return Span{s, s + m - 1};
  }
  return std::nullopt;
}

std::vector<std::optional<Span>> LocateEntities(const Tokens& question, const SQLQuery& sql) {
  std::vector<bool> used(question.size(), false);
  std::vector<std::optional<Span>> out;
  for (const auto& c : sql.conds) {
    auto span = FindSurface(question, Tokenize(c.value), used);
    if (span) {
      for (int i = span->start; i <= span->end; ++i) used[i] = true;
    }
    out.push_back(span);
  }
  return out;
}

std::vector<std::optional<Span>> LocateMappedEntities(const Tokens& question, const EntityMap& map) {
  std::vector<bool> used(question.size(), false);
  std::vector<std::optional<Span>> out;
  for (const auto& e : map.entries) {
    auto span = FindSurface(question, e.surface, used);
    if (span) {
      for (int i = span->start; i <= span->end; ++i) used[i] = true;
    }
    out.push_back(span);
  }
  return out;
}

Tokens LinearizeSql(const SQLQuery& sql, const Table& table, const EntityMap* map) {
  ValidateQuery(sql, table);
  Tokens out = {"select"};
  if (sql.agg != Agg::kNone) out.push_back(AggWord(sql.agg));
  const auto headers = table.HeaderTokens();
  out.insert(out.end(), headers[sql.sel].begin(), headers[sql.sel].end());
  for (std::size_t i = 0; i < sql.conds.size(); ++i) {
    const auto& c = sql.conds[i];
    out.push_back("where");
    out.insert(out.end(), headers[c.column].begin(), headers[c.column].end());
    out.push_back(OpSymbol(c.op));
    if (map) {
      out.push_back(Placeholder(static_cast<int>(i)));
    } else {
      const Tokens value = Tokenize(c.value);
      out.insert(out.end(), value.begin(), value.end());
    }
  }
  return out;
}

DelexResult Delexicalize(const Example& example, const Table& table, bool delexicalize) {
  const auto spans = LocateEntities(example.question, example.sql);
  CoverageFailure failure;
  for (std::size_t i = 0; i < spans.size(); ++i) {
    if (!spans[i]) failure.missing.push_back(example.sql.conds[i].value);
  }
  if (!failure.missing.empty()) return failure;

  DelexExample d;
  d.original_question = example.question;
  d.sql = example.sql;
  d.table_id = example.table_id;
  d.delexicalized = delexicalize;
  for (std::size_t i = 0; i < spans.size(); ++i) {
    d.value_spans.push_back(*spans[i]);
    d.entity_map.entries.push_back({Placeholder(static_cast<int>(i)), Tokenize(example.sql.conds[i].value)});
  }
  d.sql_tokens = LinearizeSql(example.sql, table, delexicalize ? &d.entity_map : nullptr);
  if (!delexicalize) {
    d.question_tokens = example.question;
    return d;
  }
  std::vector<int> owner(example.question.size(), -1);
  for (std::size_t i = 0; i < spans.size(); ++i) {
    for (int p = spans[i]->start; p <= spans[i]->end; ++p) owner[p] = static_cast<int>(i);
  }
  for (std::size_t p = 0; p < example.question.size(); ++p) {
    if (owner[p] < 0) {
      d.question_tokens.push_back(example.question[p]);
    } else if (static_cast<int>(p) == spans[owner[p]]->start) {
      d.question_tokens.push_back(Placeholder(owner[p]));
    }
  }
  return d;
}

Tokens Relexicalize(const Tokens& tokens, const EntityMap& map) {
  Tokens out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) {
    if (!IsPlaceholder(t)) {
      out.push_back(t);
      continue;
    }
    const Tokens* surface = map.Find(t);
    if (!surface) throw DelexError("unknown placeholder " + t);
    out.insert(out.end(), surface->begin(), surface->end());
  }
  return out;
}

bool CoversEntities(const Tokens& question_tokens, const EntityMap& map) {
  std::vector<bool> used(question_tokens.size(), false);
  for (const auto& e : map.entries) {
    bool found = false;
    for (std::size_t i = 0; i < question_tokens.size(); ++i) {
      if (question_tokens[i] == e.placeholder) {
        found = true;
        break;
      }
    }
    if (!found) {
      auto span = FindSurface(question_tokens, e.surface, used);
      if (span) {
        for (int i = span->start; i <= span->end; ++i) used[i] = true;
        found = true;
      }
    }
    if (!found) return false;
  }
  return true;
}

void WriteDelexExamples(const std::string& path, const std::vector<DelexExample>& examples) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  for (const auto& d : examples) {
    json conds = json::array();
    for (std::size_t i = 0; i < d.sql.conds.size(); ++i) {
      const auto& c = d.sql.conds[i];
      conds.push_back(json::array({c.column, static_cast<int>(c.op),
                                   d.delexicalized ? Placeholder(static_cast<int>(i)) : c.value}));
    }
    json entities = json::array();
    for (const auto& e : d.entity_map.entries) {
      entities.push_back(json::array({e.placeholder, Join(e.surface)}));
    }
    json spans = json::array();
    for (const auto& s : d.value_spans) spans.push_back(json::array({s.start, s.end}));
    json j;
    j["question"] = Join(d.question_tokens);
    j["original_question"] = Join(d.original_question);
    j["table_id"] = d.table_id;
    j["sql"] = {{"sel", d.sql.sel}, {"agg", static_cast<int>(d.sql.agg)}, {"conds", conds}};
    j["sql_tokens"] = d.sql_tokens;
    j["entities"] = entities;
    j["value_spans"] = spans;
    j["delexicalized"] = d.delexicalized;
    out << j.dump() << "\n";
  }
}

std::vector<DelexExample> ReadDelexExamples(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::vector<DelexExample> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (Trim(line).empty()) continue;
    try {
      const json j = json::parse(line);
      DelexExample d;
      d.question_tokens = Tokenize(j.at("question").get<std::string>());
      d.original_question = Tokenize(j.at("original_question").get<std::string>());
      d.table_id = j.at("table_id").get<std::string>();
      d.sql_tokens = j.at("sql_tokens").get<Tokens>();
      d.delexicalized = j.value("delexicalized", true);
      for (const auto& e : j.at("entities")) {
        d.entity_map.entries.push_back({e.at(0).get<std::string>(), Tokenize(e.at(1).get<std::string>())});
      }
      const json& sql = j.at("sql");
      d.sql.sel = sql.at("sel").get<int>();
      d.sql.agg = static_cast<Agg>(sql.at("agg").get<int>());
      std::size_t i = 0;
      for (const auto& c : sql.at("conds")) {
        Condition cond{c.at(0).get<int>(), static_cast<CondOp>(c.at(1).get<int>()), ""};
        cond.value = i < d.entity_map.entries.size() ? Join(d.entity_map.entries[i].surface)
                                                     : c.at(2).get<std::string>();
        d.sql.conds.push_back(cond);
        ++i;
      }
      for (const auto& s : j.at("value_spans")) {
        d.value_spans.push_back({s.at(0).get<int>(), s.at(1).get<int>()});
      }
      out.push_back(std::move(d));
    } catch (const json::exception& e) {
      throw Error(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace tqa
