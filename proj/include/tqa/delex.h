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

#ifndef TQA_DELEX_H_
#define TQA_DELEX_H_

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "tqa/corpus.h"
#include "tqa/text.h"

namespace tqa {

// Inclusive token span [start, end].
struct Span {
  int start = 0;
  int end = 0;
  int length() const { return end - start + 1; }
  friend bool operator==(const Span&, const Span&) = default;
};

// "et_<i>".
std::string Placeholder(int index);
// True for tokens of the form et_<digits>; stores the index when non-null.
bool IsPlaceholder(const std::string& token, int* index = nullptr);

struct EntityEntry {
  std::string placeholder;
  Tokens surface;
};

// Placeholders et_0 ... et_{m-1} in condition order.
struct EntityMap {
  std::vector<EntityEntry> entries;

  const Tokens* Find(const std::string& placeholder) const;
  int size() const { return static_cast<int>(entries.size()); }
};

struct DelexExample {
  Tokens sql_tokens;          // linearized SQL (placeholders when delexicalized)
  Tokens question_tokens;     // question (placeholders when delexicalized)
  Tokens original_question;   // lexicalized question
  EntityMap entity_map;
  SQLQuery sql;               // gold query with original values
  std::vector<Span> value_spans;  // per condition, in original_question
  std::string table_id;
  bool delexicalized = true;
};

struct CoverageFailure {
  std::vector<std::string> missing;  // condition values without an occurrence
};

using DelexResult = std::variant<DelexExample, CoverageFailure>;

class DelexError : public Error {
 public:
  using Error::Error;
};

// First occurrence of `surface` as a contiguous token run in `tokens`, skipping
// positions already marked in `used`. Case-insensitive.
std::optional<Span> FindSurface(const Tokens& tokens, const Tokens& surface,
                                const std::vector<bool>& used = {});

// Locates every condition value in `question` in condition order; each match
// consumes its positions. Unmatched values give nullopt.
std::vector<std::optional<Span>> LocateEntities(const Tokens& question, const SQLQuery& sql);

// Replaces condition values by et_i in both the question and the linearized
// SQL. When `delexicalize` is false the entity map is still built (for
// coverage accounting) but the question and SQL keep surface forms.
DelexResult Delexicalize(const Example& example, const Table& table, bool delexicalize = true);

// Replaces each placeholder by its surface tokens. Throws DelexError naming an
// unknown placeholder.
Tokens Relexicalize(const Tokens& tokens, const EntityMap& map);

// "select" [agg] sel-header { "where" cond-header op value }*. Values are
// placeholders when `map` is non-null, lexical tokens otherwise.
Tokens LinearizeSql(const SQLQuery& sql, const Table& table, const EntityMap* map);

// True iff every entity appears either as its placeholder or as its surface
// token run.
bool CoversEntities(const Tokens& question_tokens, const EntityMap& map);

// Spans of each entity in a relexicalized question; nullopt where an entity
// is missing.
std::vector<std::optional<Span>> LocateMappedEntities(const Tokens& question, const EntityMap& map);

void WriteDelexExamples(const std::string& path, const std::vector<DelexExample>& examples);
std::vector<DelexExample> ReadDelexExamples(const std::string& path);

}  // namespace tqa

#endif  // TQA_DELEX_H_
