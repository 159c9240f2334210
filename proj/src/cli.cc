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

#include "tqa/cli.h"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "tqa/augment.h"
#include "tqa/corpus.h"
#include "tqa/evaluation.h"
#include "tqa/kernels.h"
#include "tqa/local_attacks.h"
#include "tqa/objectives.h"
#include "tqa/pipeline.h"
#include "tqa/similarity.h"
#include "tqa/target_model.h"
#include "tqa/wseq.h"

namespace tqa {

namespace fs = std::filesystem;
using nlohmann::json;

std::map<std::string, std::string> ReadConfigFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read config file " + path);
  std::map<std::string, std::string> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = Trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw Error(path + ":" + std::to_string(lineno) + ": expected key=value");
    out[Trim(t.substr(0, eq))] = Trim(t.substr(eq + 1));
  }
  return out;
}

namespace {

struct Settings {
  std::string config, data, tables, out, dev, test, target, generator, init, corpus;
  std::uint64_t seed = 1;
  std::string method = "unconstrained";
  std::string variant = "sage";
  int k = kDefaultNeighbors;
  int jobs = 0;
  // Corpus synthesis.
  int n_tables = 60;
  int n_examples = 2000;
  double train_fraction = 0.8;
  double dev_fraction = 0.1;
  // Target training.
  int target_epochs = 12;
  int target_batch = 16;
  double target_lr = 0.003;
  int target_embed = 32;
  int target_hidden = 32;
  // Generator training.
  int epochs = 10;
  int batch_size = 16;
  double lr = 0.001;
  double lambda_wseq = 1.0;
  double lambda_sim = 0.8;
  double lambda_adv = 0.1;
  int hypotheses = 6;
  int max_len = 30;
  double tau = 1.0;
  int warm_start_epochs = 0;
  int dev_subset = 64;
  bool delex = true;
  int embed = 64;
  int hidden = 128;
  int latent = 32;
  // Augmentation.
  double size_fraction = 1.0;
};

void AddCommon(CLI::App* app, Settings& s) {
  app->add_option("--config", s.config, "key=value config file");
  app->add_option("--seed", s.seed, "random seed");
  app->add_option("--out", s.out, "output directory")->required();
  app->add_option("--jobs", s.jobs, "threads for per-example phases");
}

void AddData(CLI::App* app, Settings& s) {
  app->add_option("--data", s.data, "WikiSQL-format questions (JSON lines)")->required();
  app->add_option("--tables", s.tables, "WikiSQL-format tables (JSON lines)")->required();
}

void AddTargetTraining(CLI::App* app, Settings& s) {
  app->add_option("--target-epochs", s.target_epochs);
  app->add_option("--target-batch", s.target_batch);
  app->add_option("--target-lr", s.target_lr);
  app->add_option("--target-embed", s.target_embed);
  app->add_option("--target-hidden", s.target_hidden);
}

void AddGeneratorTraining(CLI::App* app, Settings& s) {
  app->add_option("--variant", s.variant, "seq2seq, wseq, wseq_s or sage")
      ->check(CLI::IsMember({"seq2seq", "wseq", "wseq_s", "sage"}));
  app->add_option("--epochs", s.epochs);
  app->add_option("--batch-size", s.batch_size);
  app->add_option("--lr", s.lr);
  app->add_option("--lambda-wseq", s.lambda_wseq);
  app->add_option("--lambda-sim", s.lambda_sim);
  app->add_option("--lambda-adv", s.lambda_adv);
  app->add_option("--hypotheses", s.hypotheses);
  app->add_option("--max-len", s.max_len);
  app->add_option("--tau", s.tau);
  app->add_option("--warm-start-epochs", s.warm_start_epochs);
  app->add_option("--dev-subset", s.dev_subset);
  app->add_option("--embed", s.embed);
  app->add_option("--hidden", s.hidden);
  app->add_option("--latent", s.latent);
  app->add_option("--init", s.init, "generator checkpoint to start from");
}

TargetTrainConfig TargetConfig(const Settings& s) {
  TargetTrainConfig c;
  c.epochs = s.target_epochs;
  c.batch_size = s.target_batch;
  c.learning_rate = s.target_lr;
  c.seed = s.seed;
  return c;
}

TargetDims TargetDimsOf(const Settings& s) {
  TargetDims d;
  d.embed = s.target_embed;
  d.hidden = s.target_hidden;
  return d;
}

TrainConfig GeneratorConfig(const Settings& s) {
  TrainConfig c;
  c.lambda_wseq = s.lambda_wseq;
  c.lambda_sim = s.lambda_sim;
  c.lambda_adv = s.lambda_adv;
  c.learning_rate = s.lr;
  c.batch_size = s.batch_size;
  c.epochs = s.epochs;
  c.hypotheses = s.hypotheses;
  c.max_len = s.max_len;
  c.tau = s.tau;
  c.warm_start_epochs = s.warm_start_epochs;
  c.dev_subset = s.dev_subset;
  c.seed = s.seed;
  c.variant = ParseVariant(s.variant);
  c.delex = s.delex;
  c.dims = {s.embed, s.hidden, s.latent};
  return c;
}

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

void WriteJsonReport(const fs::path& dir, const json& j) {
  WriteText(dir / "report.json", j.dump(2) + "\n");
  std::ostringstream txt;
  for (const auto& [k, v] : j.items()) txt << k << ": " << (v.is_string() ? v.get<std::string>() : v.dump()) << "\n";
  WriteText(dir / "report.txt", txt.str());
}

Dataset LoadOptional(const std::string& path, const std::string& tables) {
  return path.empty() ? Dataset{} : LoadWikiSql(path, tables);
}

std::vector<Tokens> Questions(const Dataset& d) {
  std::vector<Tokens> out;
  for (const auto& e : d.examples) out.push_back(e.question);
  return out;
}

// --------------------------------------------------------------------------
// Subcommands.

void SynthCorpus(const Settings& s, std::ostream& out) {
  const Dataset data = SynthesizeMiniCorpus(s.seed, s.n_tables, s.n_examples);
  const Splits sp = SplitDataset(data, s.train_fraction, s.dev_fraction);
  const fs::path dir(s.out);
  WriteExamples((dir / "train.jsonl").string(), sp.train.examples);
  WriteExamples((dir / "dev.jsonl").string(), sp.dev.examples);
  WriteExamples((dir / "test.jsonl").string(), sp.test.examples);
  WriteTables((dir / "tables.jsonl").string(), data.tables);
  WriteJsonReport(dir, {{"examples", data.size()},
                        {"tables", data.tables.size()},
                        {"train", sp.train.size()},
                        {"dev", sp.dev.size()},
                        {"test", sp.test.size()}});
  out << "wrote " << data.size() << " examples over " << data.tables.size() << " tables to " << s.out << "\n";
}

void TrainTargetCmd(const Settings& s, std::ostream& out) {
  const Dataset train = LoadWikiSql(s.data, s.tables);
  const Dataset dev = LoadOptional(s.dev, s.tables);
  TargetTrainLog log;
  const TargetModel model = TrainTarget(train, dev, TargetConfig(s), TargetDimsOf(s), &log);
  const fs::path dir(s.out);
  model.Save((dir / "target.ckpt").string());
  std::ostringstream csv;
  csv << "epoch,loss,dev_q_acc\n";
  for (std::size_t i = 0; i < log.epoch_loss.size(); ++i) {
    char line[128];
    std::snprintf(line, sizeof(line), "%zu,%.10g,%.10g\n", i, log.epoch_loss[i], log.dev_q_acc[i]);
    csv << line;
  }
  WriteText(dir / "training.csv", csv.str());
  json report = {{"train_examples", train.size()}, {"best_epoch", log.best_epoch}};
  if (!dev.empty()) {
    const Accuracy acc = EvaluateAccuracy(model, dev);
    report["dev_q_acc"] = 100.0 * acc.q_acc;
    report["dev_a_acc"] = 100.0 * acc.a_acc;
    out << "dev Q-Acc " << 100.0 * acc.q_acc << " A-Acc " << 100.0 * acc.a_acc << "\n";
  }
  WriteJsonReport(dir, report);
}

void EvaluateCmd(const Settings& s, std::ostream& out) {
  const Dataset data = LoadWikiSql(s.data, s.tables);
  const TargetModel model = TargetModel::Load(s.target);
  const Accuracy acc = EvaluateAccuracy(model, data);
  WriteJsonReport(fs::path(s.out), {{"n", acc.n}, {"q_acc", 100.0 * acc.q_acc}, {"a_acc", 100.0 * acc.a_acc}});
  out << "Q-Acc " << 100.0 * acc.q_acc << " A-Acc " << 100.0 * acc.a_acc << " over " << acc.n << "\n";
}

void TrainGeneratorCmd(const Settings& s, std::ostream& out) {
  const Dataset train = LoadWikiSql(s.data, s.tables);
  const Dataset dev = LoadOptional(s.dev, s.tables);
  const TrainConfig cfg = GeneratorConfig(s);
  int failures = 0;
  const auto train_ex = DelexDataset(train, cfg.delex, &failures);
  const auto dev_ex = DelexDataset(dev, cfg.delex);
  std::optional<TargetModel> target;
  if (!s.target.empty()) target = TargetModel::Load(s.target);
  if (cfg.variant == Variant::kSage && !target) throw Error("train-generator --variant sage needs --target");
  const auto questions = Questions(train);
  const EmbeddingSimilarity scorer(TrainWordEmbeddings(questions));
  LossContext ctx;
  ctx.tables = &train.tables;
  ctx.target = target ? &*target : nullptr;
  ctx.scorer = &scorer;
  std::optional<GeneratorModel> init;
  if (!s.init.empty()) init = GeneratorModel::Load(s.init);
  std::vector<TrainLogRow> log;
  const GeneratorModel model = TrainGenerator(train_ex, dev_ex, ctx, cfg, init ? &*init : nullptr, &log);
  const fs::path dir(s.out);
  model.Save((dir / "generator.ckpt").string());
  SaveWordEmbeddings((dir / "simile.emb").string(), scorer.embeddings());
  WriteTrainingCsv((dir / "training.csv").string(), log);
  WriteJsonReport(dir, {{"variant", VariantName(cfg.variant)},
                        {"delex", cfg.delex},
                        {"train_examples", train_ex.size()},
                        {"coverage_failures", failures},
                        {"epochs", log.size()},
                        {"final_total", log.empty() ? 0.0 : log.back().total}});
  out << "trained " << VariantName(cfg.variant) << " generator on " << train_ex.size() << " examples\n";
}

struct Scorers {
  std::unique_ptr<EmbeddingSimilarity> sim;
  std::unique_ptr<TrigramLm> lm;
};

Scorers ScorersFrom(const Settings& s) {
  Scorers sc;
  if (s.corpus.empty()) return sc;
  const auto questions = Questions(LoadWikiSql(s.corpus, s.tables));
  sc.sim = std::make_unique<EmbeddingSimilarity>(TrainWordEmbeddings(questions));
  sc.lm = std::make_unique<TrigramLm>(questions);
  return sc;
}

void AttackCmd(const Settings& s, std::ostream& out) {
  const Dataset data = LoadWikiSql(s.data, s.tables);
  const TargetModel target = TargetModel::Load(s.target);
  AttackOptions opt;
  opt.method = ParseAttackMethod(s.method);
  opt.k = s.k;
  opt.seed = s.seed;
  opt.generator_name = s.method;
  opt.max_len = s.max_len;
  std::optional<GeneratorModel> gen;
  if (opt.method == AttackMethod::kGenerator) {
    if (s.generator.empty()) throw Error("attack --method " + s.method + " needs --generator");
    gen = GeneratorModel::Load(s.generator);
  }
  const Dataset correct = CorrectSubset(data, target);
  const auto examples = DelexDataset(correct, s.delex);
  const auto records = RunAttack(examples, data.tables, target, gen ? &*gen : nullptr, opt);
  const fs::path dir(s.out);
  WriteRecords((dir / "records.jsonl").string(), records);
  const Scorers sc = ScorersFrom(s);
  const MetricsReport report = BuildReport(records, sc.sim.get(), sc.lm.get());
  WriteText(dir / "report.json", ReportJson(report));
  WriteText(dir / "report.txt", ReportText(report));
  out << ReportText(report);
}

void AugmentCmd(const Settings& s, std::ostream& out) {
  const Dataset train = LoadWikiSql(s.data, s.tables);
  const Dataset dev = LoadOptional(s.dev, s.tables);
  const Dataset test = LoadOptional(s.test, s.tables);
  const TargetModel base = TargetModel::Load(s.target);
  const GeneratorModel gen = GeneratorModel::Load(s.generator);
  const auto examples = DelexDataset(train, s.delex);
  const AugmentationSet aug = GenerateAdversarialSet(gen, examples, s.size_fraction,
                                                     fs::path(s.target).filename().string(), s.seed, s.max_len);
  TargetTrainLog log;
  const TargetModel retrained = RetrainWithAugmentation(train, aug, dev, TargetConfig(s), TargetDimsOf(s), &log);
  const fs::path dir(s.out);
  WriteAugmentationSet((dir / "augmented.jsonl").string(), aug);
  retrained.Save((dir / "target.ckpt").string());
  json report = {{"provenance", aug.provenance},
                 {"selected", aug.selected},
                 {"kept", aug.examples.size()},
                 {"coverage_failures", aug.coverage_failures}};
  if (!test.empty()) {
    const Accuracy before = EvaluateAccuracy(base, test);
    const Accuracy after = EvaluateAccuracy(retrained, test);
    report["test_q_acc_before"] = 100.0 * before.q_acc;
    report["test_q_acc_after"] = 100.0 * after.q_acc;
    report["test_a_acc_before"] = 100.0 * before.a_acc;
    report["test_a_acc_after"] = 100.0 * after.a_acc;
  }
  WriteJsonReport(dir, report);
  out << "kept " << aug.examples.size() << " of " << aug.selected << " adversarial examples\n";
}

void ReportCmd(const Settings& s, std::ostream& out) {
  const auto records = ReadRecords(s.data);
  const Scorers sc = ScorersFrom(s);
  const MetricsReport report = BuildReport(records, sc.sim.get(), sc.lm.get());
  const fs::path dir(s.out);
  WriteText(dir / "report.json", ReportJson(report));
  WriteText(dir / "report.txt", ReportText(report));
  out << ReportText(report);
}

// Inserts config-file entries as flags ahead of the user's flags, so flags on
// the command line take precedence.
std::vector<std::string> ExpandConfig(const std::vector<std::string>& args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty() || args.empty()) return args;
  std::vector<std::string> out = {args[0]};
  for (const auto& [k, v] : ReadConfigFile(path)) {
    std::string key = k;
    std::replace(key.begin(), key.end(), '_', '-');
    out.push_back("--" + key + "=" + v);
  }
  out.insert(out.end(), args.begin() + 1, args.end());
  return out;
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Settings s;
  CLI::App app{"Adversarial question generation for table question answering", "tqa"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);

  auto* synth = app.add_subcommand("synth-corpus", "write a synthetic corpus and its splits");
  AddCommon(synth, s);
  synth->add_option("--n-tables", s.n_tables);
  synth->add_option("--n-examples", s.n_examples);
  synth->add_option("--train-fraction", s.train_fraction);
  synth->add_option("--dev-fraction", s.dev_fraction);

  auto* train_target = app.add_subcommand("train-target", "train the slot-classification target");
  AddCommon(train_target, s);
  AddData(train_target, s);
  train_target->add_option("--dev", s.dev);
  AddTargetTraining(train_target, s);

  auto* train_gen = app.add_subcommand("train-generator", "train a question generator");
  AddCommon(train_gen, s);
  AddData(train_gen, s);
  train_gen->add_option("--dev", s.dev);
  train_gen->add_option("--target", s.target, "target checkpoint (sage)");
  train_gen->add_option("--delex", s.delex);
  AddGeneratorTraining(train_gen, s);

  auto* attack = app.add_subcommand("attack", "attack a target on a split");
  AddCommon(attack, s);
  AddData(attack, s);
  attack->add_option("--target", s.target)->required();
  attack->add_option("--generator", s.generator);
  attack->add_option("--method", s.method)->check(CLI::IsMember({"unconstrained", "knn", "charswap", "sage", "wseq_s", "wseq", "seq2seq"}));
  attack->add_option("--k", s.k)->check(CLI::PositiveNumber);
  attack->add_option("--delex", s.delex);
  attack->add_option("--max-len", s.max_len);
  attack->add_option("--corpus", s.corpus, "questions for the similarity and language models");

  auto* evaluate = app.add_subcommand("evaluate", "query and answer accuracy of a target");
  AddCommon(evaluate, s);
  AddData(evaluate, s);
  evaluate->add_option("--target", s.target)->required();

  auto* augment = app.add_subcommand("augment", "adversarial data augmentation and retraining");
  AddCommon(augment, s);
  AddData(augment, s);
  augment->add_option("--target", s.target)->required();
  augment->add_option("--generator", s.generator)->required();
  augment->add_option("--dev", s.dev);
  augment->add_option("--test", s.test);
  augment->add_option("--size-fraction", s.size_fraction);
  augment->add_option("--delex", s.delex);
  augment->add_option("--max-len", s.max_len);
  AddTargetTraining(augment, s);

  auto* report = app.add_subcommand("report", "metrics over attack records");
  AddCommon(report, s);
  report->add_option("--data", s.data, "records.jsonl")->required();
  report->add_option("--tables", s.tables);
  report->add_option("--corpus", s.corpus);

  try {
    std::vector<std::string> argv = ExpandConfig(args);
    std::reverse(argv.begin(), argv.end());
    app.parse(argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "tqa: " << e.what() << "\n" << app.help();
    return 2;
  } catch (const std::exception& e) {
    err << "tqa: " << e.what() << "\n";
    return 2;
  }

  try {
    if (s.jobs > 0) kernels::SetNumThreads(s.jobs);
    if (!s.out.empty()) fs::create_directories(s.out);
    if (synth->parsed()) SynthCorpus(s, out);
    if (train_target->parsed()) TrainTargetCmd(s, out);
    if (train_gen->parsed()) TrainGeneratorCmd(s, out);
    if (attack->parsed()) AttackCmd(s, out);
    if (evaluate->parsed()) EvaluateCmd(s, out);
    if (augment->parsed()) AugmentCmd(s, out);
    if (report->parsed()) ReportCmd(s, out);
  } catch (const std::exception& e) {
    err << "tqa: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace tqa
