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

#ifndef TQA_EVALUATION_H_
#define TQA_EVALUATION_H_

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "tqa/corpus.h"
#include "tqa/delex.h"
#include "tqa/similarity.h"
#include "tqa/target_model.h"
#include "tqa/text.h"

namespace tqa {

// Outcome of one adversarial question sent to a target model.
struct AttackRecord {
  Tokens original;
  Tokens adversarial;  // relexicalized
  std::string method;
  std::string table_id;
  int position = -1;  // substituted position for local attacks
  bool entity_ok = false;
  SQLQuery gold_sql;
  std::optional<SQLQuery> predicted_sql;  // only for entity_ok records
  Answer gold_answer;
  Answer predicted_answer;
  bool query_flipped = false;
  bool answer_flipped = false;
};

// Runs the target on `adversarial` when it covers every entity and fills the
// flip flags against the gold query and its answer.
AttackRecord MakeRecord(const DelexExample& example, const Table& table, const TargetModel& target,
                        Tokens adversarial, std::string method, int position = -1);

// 100 * v / m.
double ComputeEcr(std::span<const AttackRecord> records);
struct FlipRates {
  double qfr = 0.0;
  double afr = 0.0;
};
// 100 * l / m and 100 * a / m, flips counted among entity_ok records only.
FlipRates ComputeFlipRates(std::span<const AttackRecord> records);

// Corpus BLEU-4 in [0, 100]: clipped n-gram precisions, uniform weights,
// brevity penalty, add-one smoothing for n >= 2.
double CorpusBleu(std::span<const Tokens> references, std::span<const Tokens> hypotheses);

class LanguageModelAdapter {
 public:
  virtual ~LanguageModelAdapter() = default;
  // Natural-log probability of each word of `sentence` (end marker excluded).
  virtual std::vector<double> TokenLogProbs(const Tokens& sentence) const = 0;
  virtual std::string name() const = 0;
};

class UniformUnigramLm : public LanguageModelAdapter {
 public:
  explicit UniformUnigramLm(int vocab_size) : v_(vocab_size) {}
  std::vector<double> TokenLogProbs(const Tokens& sentence) const override;
  std::string name() const override { return "uniform"; }

 private:
  int v_;
};

// Interpolated trigram model. Each order contributes when its context was
// seen; weights of unseen contexts are renormalized away. A uniform term over
// the vocabulary plus <unk> keeps every probability positive.
class TrigramLm : public LanguageModelAdapter {
 public:
  explicit TrigramLm(std::span<const Tokens> sentences, double l3 = 0.5, double l2 = 0.3,
                     double l1 = 0.15, double l0 = 0.05);
  std::vector<double> TokenLogProbs(const Tokens& sentence) const override;
  std::string name() const override { return "trigram"; }
  double Prob(const std::string& u, const std::string& v, const std::string& w) const;

 private:
  std::unordered_map<std::string, double> uni_, bi_, tri_, ctx1_, ctx2_;
  double total_ = 0.0;
  double vocab_ = 0.0;
  double l3_, l2_, l1_, l0_;
};

// Mean over sentences of exp(mean negative log-probability per word).
double Perplexity(std::span<const Tokens> sentences, const LanguageModelAdapter& lm);

struct MethodMetrics {
  std::string method;
  int m = 0;
  double ecr = 0.0;
  double qfr = 0.0;
  double afr = 0.0;
  double bleu = 0.0;
  std::optional<double> similarity;
  std::optional<double> perplexity;
};

struct MetricsReport {
  std::string similarity_name;
  std::string lm_name;
  std::optional<double> original_perplexity;
  std::vector<MethodMetrics> methods;  // in order of first appearance
};

// Aggregates records per method. Similarity and perplexity are skipped when
// the corresponding scorer is null.
MetricsReport BuildReport(std::span<const AttackRecord> records, const SimilarityScorer* scorer,
                          const LanguageModelAdapter* lm);
std::string ReportJson(const MetricsReport& report);
std::string ReportText(const MetricsReport& report);

void WriteRecords(const std::string& path, std::span<const AttackRecord> records);
std::vector<AttackRecord> ReadRecords(const std::string& path);

}  // namespace tqa

#endif  // TQA_EVALUATION_H_
