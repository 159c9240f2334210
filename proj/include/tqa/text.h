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

#ifndef TQA_TEXT_H_
#define TQA_TEXT_H_

#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace tqa {

using Tokens = std::vector<std::string>;

// Lowercases, splits on whitespace and separates the punctuation marks
// ? , ! ; : ( ) " into their own tokens. Periods and apostrophes stay inside
// tokens so numbers like 3.5 survive.
Tokens Tokenize(std::string_view text);

std::string Join(std::span<const std::string> tokens, std::string_view sep = " ");
std::string ToLower(std::string_view s);
std::string Trim(std::string_view s);

// Reserved vocabulary entries.
inline constexpr const char* kPad = "<pad>";
inline constexpr const char* kUnk = "<unk>";
inline constexpr const char* kBos = "<s>";
inline constexpr const char* kEos = "</s>";
inline constexpr const char* kSep = "<sep>";

class Vocab {
 public:
  Vocab() = default;
  explicit Vocab(std::vector<std::string> words);

  // Vocabulary with the reserved entries <pad> <unk> <s> </s> <sep> first.
  static Vocab WithSpecials();

  int Add(const std::string& word);
  // Returns the unknown id for missing words.
  int Id(const std::string& word) const;
  // Returns -1 for missing words.
  int Find(const std::string& word) const;
  bool Contains(const std::string& word) const { return Find(word) >= 0; }
  const std::string& Word(int id) const { return words_.at(id); }
  int size() const { return static_cast<int>(words_.size()); }
  const std::vector<std::string>& words() const { return words_; }
  int unk() const { return unk_; }

  std::vector<int> Ids(std::span<const std::string> tokens) const;

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, int> index_;
  int unk_ = -1;
};

}  // namespace tqa

#endif  // TQA_TEXT_H_
