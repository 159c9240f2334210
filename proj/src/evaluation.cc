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

#include "tqa/evaluation.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace tqa {

using nlohmann::json;

AttackRecord MakeRecord(const DelexExample& example, const Table& table, const TargetModel& target,
                        Tokens adversarial, std::string method, int position) {
  AttackRecord r;
  r.original = example.original_question;
  r.adversarial = std::move(adversarial);
  r.method = std::move(method);
  r.table_id = example.table_id;
  r.position = position;
  r.gold_sql = example.sql;
  r.gold_answer = ExecuteOrError(example.sql, table);
  r.entity_ok = !r.adversarial.empty() && CoversEntities(r.adversarial, example.entity_map);
  if (r.entity_ok) {
    r.predicted_sql = PredictQuery(r.adversarial, table, target);
    r.predicted_answer = ExecuteOrError(*r.predicted_sql, table);
    r.query_flipped = !SameQuery(*r.predicted_sql, r.gold_sql);
    r.answer_flipped = !SameAnswer(r.predicted_answer, r.gold_answer);
  }
  return r;
}

double ComputeEcr(std::span<const AttackRecord> records) {
  if (records.empty()) throw Error("Ecr of an empty record list");
  const auto v = std::count_if(records.begin(), records.end(), [](const auto& r) { return r.entity_ok; });
  return 100.0 * static_cast<double>(v) / static_cast<double>(records.size());
}

FlipRates ComputeFlipRates(std::span<const AttackRecord> records) {
  if (records.empty()) throw Error("flip rates of an empty record list");
  int l = 0, a = 0;
  for (const auto& r : records) {
    if (!r.entity_ok) continue;
    l += r.query_flipped;
    a += r.answer_flipped;
  }
  const double m = static_cast<double>(records.size());
  return {100.0 * l / m, 100.0 * a / m};
}

// ---------------------------------------------------------------------------
// BLEU.

namespace {

std::map<std::vector<std::string>, int> NGrams(const Tokens& s, int n) {
  std::map<std::vector<std::string>, int> out;
  for (int i = 0; i + n <= static_cast<int>(s.size()); ++i) ++out[Tokens(s.begin() + i, s.begin() + i + n)];
  return out;
}

}  // namespace

double CorpusBleu(std::span<const Tokens> references, std::span<const Tokens> hypotheses) {
  if (references.size() != hypotheses.size()) throw Error("BLEU: reference and hypothesis counts differ");
  if (references.empty()) throw Error("BLEU of an empty corpus");
  double match[4] = {0, 0, 0, 0}, total[4] = {0, 0, 0, 0};
  double ref_len = 0, hyp_len = 0;
  for (std::size_t k = 0; k < references.size(); ++k) {
    ref_len += references[k].size();
    hyp_len += hypotheses[k].size();
    for (int n = 1; n <= 4; ++n) {
      const auto h = NGrams(hypotheses[k], n);
      const auto r = NGrams(references[k], n);
      for (const auto& [g, c] : h) {
        const auto it = r.find(g);
        match[n - 1] += std::min(c, it == r.end() ? 0 : it->second);
        total[n - 1] += c;
      }
    }
  }
  if (match[0] == 0 || hyp_len == 0) return 0.0;
  double log_sum = std::log(match[0] / total[0]);
  for (int n = 2; n <= 4; ++n) log_sum += std::log((match[n - 1] + 1.0) / (total[n - 1] + 1.0));
  const double bp = hyp_len < ref_len ? std::exp(1.0 - ref_len / hyp_len) : 1.0;
  return 100.0 * bp * std::exp(log_sum / 4.0);
}

// ---------------------------------------------------------------------------
// Language models.

std::vector<double> UniformUnigramLm::TokenLogProbs(const Tokens& sentence) const {
  return std::vector<double>(sentence.size(), -std::log(static_cast<double>(v_)));
}

namespace {

const std::string kJoin = "\x1f";

std::string Key(const std::string& a, const std::string& b) { return a + kJoin + b; }
std::string Key(const std::string& a, const std::string& b, const std::string& c) {
  return a + kJoin + b + kJoin + c;
}

double Lookup(const std::unordered_map<std::string, double>& m, const std::string& k) {
  const auto it = m.find(k);
  return it == m.end() ? 0.0 : it->second;
}

}  // namespace

TrigramLm::TrigramLm(std::span<const Tokens> sentences, double l3, double l2, double l1, double l0)
    : l3_(l3), l2_(l2), l1_(l1), l0_(l0) {
  for (const auto& s : sentences) {
    Tokens padded = {kBos, kBos};
    padded.insert(padded.end(), s.begin(), s.end());
    padded.push_back(kEos);
    for (std::size_t i = 2; i < padded.size(); ++i) {
      uni_[padded[i]] += 1;
      total_ += 1;
      bi_[Key(padded[i - 1], padded[i])] += 1;
      ctx1_[padded[i - 1]] += 1;
      tri_[Key(padded[i - 2], padded[i - 1], padded[i])] += 1;
      ctx2_[Key(padded[i - 2], padded[i - 1])] += 1;
    }
  }
  vocab_ = static_cast<double>(uni_.size()) + 1.0;  // plus <unk>
}

double TrigramLm::Prob(const std::string& u, const std::string& v, const std::string& w) const {
  double p = l0_ / vocab_, weight = l0_;
  const double c2 = Lookup(ctx2_, Key(u, v));
  if (c2 > 0) {
    p += l3_ * Lookup(tri_, Key(u, v, w)) / c2;
    weight += l3_;
  }
  const double c1 = Lookup(ctx1_, v);
  if (c1 > 0) {
    p += l2_ * Lookup(bi_, Key(v, w)) / c1;
    weight += l2_;
  }
  if (total_ > 0) {
    p += l1_ * Lookup(uni_, w) / total_;
    weight += l1_;
  }
  return p / weight;
}

std::vector<double> TrigramLm::TokenLogProbs(const Tokens& sentence) const {
  std::vector<double> out;
  std::string u = kBos, v = kBos;
  for (const auto& raw : sentence) {
    const std::string& w = uni_.count(raw) ? raw : std::string(kUnk);
    out.push_back(std::log(Prob(u, v, w)));
    u = v;
    v = w;
  }
  return out;
}

double Perplexity(std::span<const Tokens> sentences, const LanguageModelAdapter& lm) {
  double sum = 0.0;
  int n = 0;
  for (const auto& s : sentences) {
    if (s.empty()) continue;
    const auto lp = lm.TokenLogProbs(s);
    if (lp.size() != s.size()) throw Error("language model returned the wrong number of scores");
    double nll = 0.0;
    for (double x : lp) nll -= x;
    sum += std::exp(nll / static_cast<double>(lp.size()));
    ++n;
  }
  if (n == 0) throw Error("perplexity of an empty corpus");
  return sum / n;
}

// ---------------------------------------------------------------------------
// Reports.

MetricsReport BuildReport(std::span<const AttackRecord> records, const SimilarityScorer* scorer,
                          const LanguageModelAdapter* lm) {
  MetricsReport report;
  if (scorer) report.similarity_name = scorer->name();
  if (lm) report.lm_name = lm->name();
  std::vector<std::string> order;
  std::map<std::string, std::vector<AttackRecord>> by_method;
  for (const auto& r : records) {
    if (!by_method.count(r.method)) order.push_back(r.method);
    by_method[r.method].push_back(r);
  }
  std::vector<Tokens> originals;
  for (const auto& name : order) {
    const auto& rs = by_method[name];
    MethodMetrics mm;
    mm.method = name;
    mm.m = static_cast<int>(rs.size());
    mm.ecr = ComputeEcr(rs);
    const FlipRates fr = ComputeFlipRates(rs);
    mm.qfr = fr.qfr;
    mm.afr = fr.afr;
    std::vector<Tokens> refs, hyps;
    for (const auto& r : rs) {
      refs.push_back(r.original);
      hyps.push_back(r.adversarial);
    }
    mm.bleu = CorpusBleu(refs, hyps);
    if (scorer) {
      double s = 0.0;
      for (const auto& r : rs) s += r.adversarial.empty() ? 0.0 : SimileScore(r.original, r.adversarial, *scorer);
      mm.similarity = 100.0 * s / static_cast<double>(rs.size());
    }
    if (lm) mm.perplexity = Perplexity(hyps, *lm);
    if (originals.empty()) originals = refs;
    report.methods.push_back(std::move(mm));
  }
  if (lm && !originals.empty()) report.original_perplexity = Perplexity(originals, *lm);
  return report;
}

std::string ReportJson(const MetricsReport& report) {
  json j;
  j["similarity"] = report.similarity_name;
  j["language_model"] = report.lm_name;
  j["original_perplexity"] = report.original_perplexity ? json(*report.original_perplexity) : json(nullptr);
  json methods = json::array();
  for (const auto& m : report.methods) {
    methods.push_back({{"method", m.method},
                       {"m", m.m},
                       {"ecr", m.ecr},
                       {"qfr", m.qfr},
                       {"afr", m.afr},
                       {"bleu", m.bleu},
                       {"similarity", m.similarity ? json(*m.similarity) : json(nullptr)},
                       {"perplexity", m.perplexity ? json(*m.perplexity) : json(nullptr)}});
  }
  j["methods"] = methods;
  return j.dump(2) + "\n";
}

std::string ReportText(const MetricsReport& report) {
  std::ostringstream out;
  char line[256];
  const std::string sim = report.similarity_name.empty() ? "sim" : report.similarity_name;
  std::snprintf(line, sizeof(line), "%-16s %6s %8s %8s %8s %8s %8s %10s\n", "method", "m", "Ecr", "Qfr",
                "Afr", "BLEU", sim.c_str(), "ppl");
  out << line;
  if (report.original_perplexity) {
    std::snprintf(line, sizeof(line), "%-16s %6s %8s %8s %8s %8s %8s %10.2f\n", "original", "-", "-", "-",
                  "-", "-", "-", *report.original_perplexity);
    out << line;
  }
  for (const auto& m : report.methods) {
    char ppl[32] = "-", sim_cell[32] = "-";
    if (m.perplexity) std::snprintf(ppl, sizeof(ppl), "%.2f", *m.perplexity);
    if (m.similarity) std::snprintf(sim_cell, sizeof(sim_cell), "%.2f", *m.similarity);
    std::snprintf(line, sizeof(line), "%-16s %6d %8.2f %8.2f %8.2f %8.2f %8s %10s\n", m.method.c_str(), m.m,
                  m.ecr, m.qfr, m.afr, m.bleu, sim_cell, ppl);
    out << line;
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Record IO.

namespace {

json SqlJson(const SQLQuery& q) {
  json conds = json::array();
  for (const auto& c : q.conds) conds.push_back(json::array({c.column, static_cast<int>(c.op), c.value}));
  return {{"sel", q.sel}, {"agg", static_cast<int>(q.agg)}, {"conds", conds}};
}

SQLQuery SqlFrom(const json& j) {
  SQLQuery q;
  q.sel = j.at("sel").get<int>();
  q.agg = static_cast<Agg>(j.at("agg").get<int>());
  for (const auto& c : j.at("conds")) {
    q.conds.push_back({c.at(0).get<int>(), static_cast<CondOp>(c.at(1).get<int>()), c.at(2).get<std::string>()});
  }
  return q;
}

json AnswerJson(const Answer& a) {
  return {{"error", a.error}, {"scalar", a.scalar}, {"number", a.number}, {"values", a.values}};
}

Answer AnswerFrom(const json& j) {
  Answer a;
  a.error = j.at("error").get<bool>();
  a.scalar = j.at("scalar").get<bool>();
  a.number = j.at("number").get<double>();
  a.values = j.at("values").get<std::vector<std::string>>();
  return a;
}

}  // namespace

void WriteRecords(const std::string& path, std::span<const AttackRecord> records) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  for (const auto& r : records) {
    json j;
    j["original"] = Join(r.original);
    j["adversarial"] = Join(r.adversarial);
    j["method"] = r.method;
    j["table_id"] = r.table_id;
    j["position"] = r.position;
    j["entity_ok"] = r.entity_ok;
    j["gold_sql"] = SqlJson(r.gold_sql);
    j["predicted_sql"] = r.predicted_sql ? SqlJson(*r.predicted_sql) : json(nullptr);
    j["gold_answer"] = AnswerJson(r.gold_answer);
    j["predicted_answer"] = AnswerJson(r.predicted_answer);
    j["query_flipped"] = r.query_flipped;
    j["answer_flipped"] = r.answer_flipped;
    out << j.dump() << '\n';
  }
}

std::vector<AttackRecord> ReadRecords(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot read " + path);
  std::vector<AttackRecord> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (Trim(line).empty()) continue;
    try {
      const json j = json::parse(line);
      AttackRecord r;
      r.original = Tokenize(j.at("original").get<std::string>());
      r.adversarial = Tokenize(j.at("adversarial").get<std::string>());
      r.method = j.at("method").get<std::string>();
      r.table_id = j.at("table_id").get<std::string>();
      r.position = j.at("position").get<int>();
      r.entity_ok = j.at("entity_ok").get<bool>();
      r.gold_sql = SqlFrom(j.at("gold_sql"));
      if (!j.at("predicted_sql").is_null()) r.predicted_sql = SqlFrom(j.at("predicted_sql"));
      r.gold_answer = AnswerFrom(j.at("gold_answer"));
      r.predicted_answer = AnswerFrom(j.at("predicted_answer"));
      r.query_flipped = j.at("query_flipped").get<bool>();
      r.answer_flipped = j.at("answer_flipped").get<bool>();
      out.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace tqa
