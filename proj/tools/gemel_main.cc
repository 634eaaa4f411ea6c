// Copyright 2026 The Gemel Authors.
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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gemel/binary_io.h"
#include "gemel/checks.h"
#include "gemel/config.h"
#include "gemel/decoder.h"
#include "gemel/entity_trie.h"
#include "gemel/errors.h"
#include "gemel/evaluator.h"
#include "gemel/kb_store.h"
#include "gemel/model_bundle.h"
#include "gemel/prompt.h"
#include "gemel/retrieval.h"
#include "gemel/synthetic.h"
#include "gemel/tokenizer.h"
#include "gemel/trainer.h"
#include "gemel/vision.h"
#include "json.hpp"

namespace {

using gemel::RunConfig;
using nlohmann::json;

constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;
constexpr int kExitValidation = 3;
constexpr int kExitSelftest = 4;

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> overrides;
};

RunConfig LoadConfig(const CommonOptions& common) {
  return gemel::LoadRunConfig(common.config_path, common.overrides);
}

std::string OutputPath(const RunConfig& cfg, const std::string& explicit_path,
                       const std::string& file_name) {
  if (!explicit_path.empty()) return explicit_path;
  std::filesystem::path dir = cfg.paths.output_dir.empty() ? "." : cfg.paths.output_dir;
  std::filesystem::create_directories(dir);
  return (dir / file_name).string();
}

std::string Require(const std::string& value, const std::string& key) {
  if (value.empty()) throw gemel::ValidationError("config key " + key + " is not set");
  return value;
}

std::string SplitPath(const RunConfig& cfg, const std::string& split) {
  if (split == "train") return Require(cfg.paths.train, "paths.train");
  if (split == "dev") return Require(cfg.paths.dev, "paths.dev");
  if (split == "test") return Require(cfg.paths.test, "paths.test");
  throw gemel::ValidationError("unknown split " + split);
}

// Writes the effective config next to an artifact that cannot embed it.
void WriteConfigEcho(const RunConfig& cfg, const std::string& artifact) {
  gemel::WriteFileBytes(artifact + ".config.json", cfg.ToJson().dump(2) + "\n");
}

std::shared_ptr<const gemel::VisionFeatureStore> LoadFeatures(const RunConfig& cfg) {
  if (cfg.paths.features.empty()) {
    return std::make_shared<gemel::VisionFeatureStore>(
        gemel::VisionFeatureStore::SyntheticHash(cfg.model.d_v));
  }
  return std::make_shared<gemel::VisionFeatureStore>(
      gemel::VisionFeatureStore::Load(cfg.paths.features));
}

gemel::Vocabulary LoadVocab(const RunConfig& cfg) {
  return gemel::Vocabulary::Load(Require(cfg.paths.vocab, "paths.vocab"));
}

gemel::ModelBundle LoadModel(const RunConfig& cfg, const std::string& path,
                             const gemel::Vocabulary& vocab,
                             std::shared_ptr<const gemel::VisionFeatureStore> features,
                             gemel::Checkpoint* raw = nullptr) {
  gemel::Checkpoint ckpt = gemel::Checkpoint::Load(path);
  gemel::ModelBundle model = gemel::ModelBundle::FromCheckpoint(ckpt, vocab, std::move(features));
  if (model.config.prefix_len != cfg.model.prefix_len) {
    throw gemel::ValidationError("checkpoint prefix length differs from model.k");
  }
  if (raw != nullptr) *raw = std::move(ckpt);
  return model;
}

gemel::ModelBundle LoadLinkingModel(const RunConfig& cfg, const gemel::Vocabulary& vocab) {
  const std::string& path =
      cfg.paths.mapper_checkpoint.empty() ? cfg.paths.lm_checkpoint : cfg.paths.mapper_checkpoint;
  return LoadModel(cfg, Require(path, "paths.mapper_checkpoint"), vocab, LoadFeatures(cfg));
}

// Artifacts shared by link, ablate and train-mapper.
struct Pipeline {
  RunConfig cfg;
  gemel::KnowledgeBase kb;
  gemel::Vocabulary vocab;
  gemel::EntityTrie trie;
  std::unique_ptr<gemel::ModelBundle> model;
  std::shared_ptr<const gemel::DemonstrationPool> pool;
  std::unique_ptr<gemel::DemoRetriever> retriever;

  gemel::LinkingContext Context() const {
    gemel::LinkingContext ctx;
    ctx.model = model.get();
    ctx.kb = &kb;
    ctx.trie = &trie;
    ctx.retriever = retriever.get();
    ctx.prompt = cfg.prompt;
    ctx.decode = cfg.decode;
    return ctx;
  }
};

void AttachRetriever(Pipeline& p) {
  if (!p.cfg.prompt.use_icl || p.cfg.retrieval.n == 0) return;
  p.pool = std::make_shared<gemel::DemonstrationPool>(
      gemel::LoadDataset(SplitPath(p.cfg, "train")), p.cfg.retrieval.bm25_with_context);
  p.retriever = std::make_unique<gemel::DemoRetriever>(
      p.cfg.retrieval, p.pool, p.model.get(), gemel::Rng::DeriveSeed(p.cfg.seed, "retrieval"));
}

Pipeline LoadPipeline(const RunConfig& cfg, bool for_training) {
  Pipeline p;
  p.cfg = cfg;
  p.kb = gemel::LoadKb(Require(cfg.paths.kb, "paths.kb"));
  p.vocab = LoadVocab(cfg);
  if (cfg.paths.trie.empty()) {
    p.trie = gemel::EntityTrie::Build(p.kb, p.vocab);
  } else {
    p.trie = gemel::EntityTrie::Load(cfg.paths.trie);
    if (p.trie.vocab_size() != p.vocab.size()) {
      throw gemel::ValidationError("trie was built against a different vocabulary");
    }
  }
  if (for_training) {
    p.model = std::make_unique<gemel::ModelBundle>(
        LoadModel(cfg, Require(cfg.paths.lm_checkpoint, "paths.lm_checkpoint"), p.vocab,
                  LoadFeatures(cfg)));
  } else {
    p.model = std::make_unique<gemel::ModelBundle>(LoadLinkingModel(cfg, p.vocab));
  }
  AttachRetriever(p);
  return p;
}

// --- subcommands ------------------------------------------------------------

int BuildVocabCommand(const CommonOptions& common, const std::string& out_arg) {
  RunConfig cfg = LoadConfig(common);
  gemel::KnowledgeBase kb = gemel::LoadKb(Require(cfg.paths.kb, "paths.kb"));
  std::vector<std::string> corpora = {gemel::TemplateText()};
  for (const std::string* path : {&cfg.paths.train, &cfg.paths.dev, &cfg.paths.test}) {
    if (path->empty()) continue;
    for (const gemel::MentionInstance& inst : gemel::LoadDataset(*path)) {
      corpora.push_back(inst.text);
      corpora.push_back(inst.mention);
    }
  }
  gemel::Vocabulary vocab = gemel::BuildVocab(corpora, kb);
  const std::string out = out_arg.empty() ? Require(cfg.paths.vocab, "paths.vocab") : out_arg;
  vocab.Save(out);
  std::cout << "vocabulary: " << vocab.size() << " tokens -> " << out << "\n";
  return 0;
}

int BuildTrieCommand(const CommonOptions& common, const std::string& out_arg) {
  RunConfig cfg = LoadConfig(common);
  gemel::KnowledgeBase kb = gemel::LoadKb(Require(cfg.paths.kb, "paths.kb"));
  gemel::EntityTrie trie = gemel::EntityTrie::Build(kb, LoadVocab(cfg));
  const std::string out = out_arg.empty() ? Require(cfg.paths.trie, "paths.trie") : out_arg;
  trie.Save(out);
  std::cout << "trie: " << trie.node_count() << " nodes for " << kb.size() << " entities -> "
            << out << "\n";
  return 0;
}

std::vector<gemel::TokenSeq> PretrainCorpus(const RunConfig& cfg, const gemel::Vocabulary& vocab,
                                            const gemel::KnowledgeBase& kb) {
  std::vector<gemel::MentionInstance> train = gemel::LoadDataset(SplitPath(cfg, "train"));
  std::vector<gemel::TokenSeq> docs;
  gemel::PromptOptions text_only;
  text_only.use_visual = false;
  for (const gemel::MentionInstance& inst : train) {
    if (cfg.pretrain_corpus == "text") {
      docs.push_back(gemel::Tokenize(vocab, inst.text));
      continue;
    }
    gemel::TokenSeq ids;
    for (const gemel::PromptSegment& seg :
         gemel::FormatDemonstration(vocab, kb, inst, inst.gold.has_value(), text_only)) {
      const gemel::TokenSeq& part = std::get<gemel::TokenSpan>(seg).ids;
      ids.insert(ids.end(), part.begin(), part.end());
    }
    docs.push_back(std::move(ids));
  }
  return docs;
}

int PretrainCommand(const CommonOptions& common, const std::string& out_arg) {
  RunConfig cfg = LoadConfig(common);
  gemel::KnowledgeBase kb = gemel::LoadKb(Require(cfg.paths.kb, "paths.kb"));
  gemel::Vocabulary vocab = LoadVocab(cfg);
  gemel::ModelBundle model =
      gemel::ModelBundle::Initialize(cfg.model, vocab, LoadFeatures(cfg), cfg.seed);
  std::vector<gemel::TokenSeq> docs = PretrainCorpus(cfg, vocab, kb);
  const std::string log_path = OutputPath(cfg, "", "pretrain_log.jsonl");
  std::ofstream log(log_path);
  gemel::TrainResult result = gemel::PretrainLm(model, docs, cfg.pretrain, cfg.seed, &log);
  gemel::Checkpoint ckpt = model.ToCheckpoint(cfg.ToJson());
  ckpt.meta["pretrain"] = {{"steps", result.steps},
                           {"final_loss", result.step_losses.empty() ? 0.0
                                                                     : result.step_losses.back()}};
  const std::string out =
      out_arg.empty() ? Require(cfg.paths.lm_checkpoint, "paths.lm_checkpoint") : out_arg;
  ckpt.Save(out);
  std::cout << "pretrained " << result.steps << " steps, final loss "
            << (result.step_losses.empty() ? 0.0 : result.step_losses.back()) << " -> " << out
            << "\n";
  return 0;
}

int TrainMapperCommand(const CommonOptions& common, const std::string& out_arg, bool resume) {
  RunConfig cfg = LoadConfig(common);
  Pipeline p = LoadPipeline(cfg, /*for_training=*/true);
  const std::string out =
      out_arg.empty() ? Require(cfg.paths.mapper_checkpoint, "paths.mapper_checkpoint") : out_arg;
  std::optional<gemel::AdamState> state;
  if (resume && std::filesystem::exists(out)) {
    gemel::Checkpoint previous;
    gemel::ModelBundle restored = LoadModel(cfg, out, p.vocab, p.model->features, &previous);
    p.model->mapper = restored.mapper;
    state = gemel::GetOptimizerState(previous);
  }
  std::vector<gemel::MentionInstance> train = gemel::LoadDataset(SplitPath(cfg, "train"));
  gemel::LinkingContext ctx = p.Context();
  std::vector<gemel::TrainExample> examples;
  for (const gemel::MentionInstance& inst : train) {
    if (!inst.gold) throw gemel::ValidationError("training instance " + inst.id + " has no gold");
    examples.push_back({gemel::BuildPrompt(ctx, inst), gemel::AnswerTokens(p.vocab, p.kb, *inst.gold)});
  }
  const std::string log_path = OutputPath(cfg, "", "train_log.jsonl");
  std::ofstream log(log_path, resume ? std::ios::app : std::ios::trunc);
  gemel::TrainResult result = gemel::TrainMapper(*p.model, examples, cfg.train, cfg.seed, &log,
                                                 state ? &*state : nullptr);
  gemel::Checkpoint ckpt = p.model->ToCheckpoint(cfg.ToJson());
  gemel::PutOptimizerState(ckpt, result.state, result.steps);
  ckpt.Save(out);
  std::cout << "trained mapper for " << result.step_losses.size() << " steps (of "
            << result.steps << "), log " << log_path << " -> " << out << "\n";
  return 0;
}

std::vector<double> ParseFeatureArg(const std::string& arg, size_t d_v) {
  std::vector<double> values;
  if (std::filesystem::exists(arg)) {
    gemel::VisionFeatureStore store = gemel::VisionFeatureStore::Load(arg);
    if (store.row_count() == 0) throw gemel::ValidationError("feature file has no rows");
    values = store.Feature(store.refs().front());
  } else {
    std::stringstream ss(arg);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        values.push_back(std::stod(item));
      } catch (const std::exception&) {
        throw gemel::ValidationError("--image-features expects a GMFV file or comma-separated numbers");
      }
    }
  }
  if (values.size() != d_v) {
    throw gemel::ValidationError("image features have " + std::to_string(values.size()) +
                                 " values, model expects " + std::to_string(d_v));
  }
  return values;
}

int LinkCommand(const CommonOptions& common, const std::string& split, const std::string& text,
                const std::string& mention, const std::string& image_features,
                const std::string& out_arg) {
  RunConfig cfg = LoadConfig(common);
  Pipeline p = LoadPipeline(cfg, /*for_training=*/false);
  std::vector<gemel::MentionInstance> instances;
  std::string default_name;
  if (!text.empty() || !mention.empty()) {
    if (text.empty() || mention.empty()) {
      throw gemel::ValidationError("ad-hoc linking needs both --text and --mention");
    }
    gemel::MentionInstance inst;
    inst.id = "adhoc";
    inst.text = text;
    inst.mention = mention;
    auto span = gemel::FindSpan(text, mention);
    if (!span) throw gemel::ValidationError("mention does not occur in the text");
    inst.span_start = span->first;
    inst.span_end = span->second;
    if (!image_features.empty()) {
      inst.image_ref = "adhoc:query";
      const std::vector<double> row = ParseFeatureArg(image_features, p.model->config.d_v);
      p.model->features = std::make_shared<gemel::VisionFeatureStore>(
          p.model->features->WithRow(inst.image_ref.value(), row));
    }
    instances.push_back(inst);
    default_name = "predictions_adhoc.jsonl";
  } else {
    instances = gemel::LoadDataset(SplitPath(cfg, split));
    default_name = "predictions_" + split + ".jsonl";
  }
  std::vector<gemel::Prediction> preds = gemel::LinkAll(p.Context(), instances);
  const std::string out = OutputPath(cfg, out_arg, default_name);
  gemel::SavePredictions(preds, out);
  WriteConfigEcho(cfg, out);
  if (instances.size() == 1) {
    std::cout << preds.front().ToJson().dump() << "\n";
  }
  std::cout << "linked " << preds.size() << " mentions -> " << out << "\n";
  return 0;
}

int EvaluateCommand(const CommonOptions& common, const std::string& predictions,
                    const std::string& split, const std::string& out_arg, bool bias_table) {
  RunConfig cfg = LoadConfig(common);
  gemel::KnowledgeBase kb = gemel::LoadKb(Require(cfg.paths.kb, "paths.kb"));
  std::vector<gemel::MentionInstance> gold = gemel::LoadDataset(SplitPath(cfg, split));
  std::vector<gemel::Prediction> preds = gemel::LoadPredictions(predictions);
  gemel::EvalReport report = gemel::BiasReport(gemel::MatchPredictions(preds, gold), kb,
                                               cfg.bias_percentile, cfg.tail_rule);
  report.variant = bias_table ? "bias" : "eval";
  report.config = cfg.ToJson();
  const std::string out =
      OutputPath(cfg, out_arg, bias_table ? "bias_report.json" : "eval_report.json");
  gemel::WriteFileBytes(out, report.Dump());
  if (bias_table) {
    std::cout << "bucket\tn\tcorrect\taccuracy\n";
    auto row = [](const char* name, const gemel::BucketStats& b) {
      std::optional<double> acc = b.accuracy();
      std::ostringstream os;
      os << name << "\t" << b.n << "\t" << b.correct << "\t";
      if (acc) {
        os.setf(std::ios::fixed);
        os.precision(2);
        os << 100.0 * *acc;
      } else {
        os << "-";
      }
      std::cout << os.str() << "\n";
    };
    row("common", report.common);
    row("tail", report.tail);
    std::cout << "tail threshold: count < " << report.threshold << "\n";
  } else {
    std::cout << gemel::SummaryTable(std::span<const gemel::EvalReport>(&report, 1));
  }
  std::cout << "report -> " << out << "\n";
  return 0;
}

int AblateCommand(const CommonOptions& common, const std::string& split,
                  const std::vector<std::string>& variants) {
  RunConfig cfg = LoadConfig(common);
  // Retrieval must be available even if the base config disables ICL.
  RunConfig loading = cfg;
  loading.prompt.use_icl = true;
  Pipeline p = LoadPipeline(loading, /*for_training=*/false);
  p.cfg = cfg;
  std::vector<gemel::MentionInstance> instances = gemel::LoadDataset(SplitPath(cfg, split));
  std::vector<gemel::EvalReport> reports;
  for (const std::string& name : variants) {
    gemel::EvalReport report = gemel::RunAblation(p.Context(), gemel::ParseVariant(name),
                                                  instances, cfg.bias_percentile);
    report.config = cfg.ToJson();
    const std::string out = OutputPath(cfg, "", "ablation_" + name + ".json");
    gemel::WriteFileBytes(out, report.Dump());
    reports.push_back(std::move(report));
  }
  std::cout << gemel::SummaryTable(reports);
  return 0;
}

int SelftestCommand(uint64_t seed, bool quick) {
  bool ok = true;
  for (const gemel::CheckResult& r : gemel::RunSelfTest(seed, quick)) {
    std::printf("%-16s %s  %.2fs  %s\n", r.name.c_str(), r.pass ? "PASS" : "FAIL", r.seconds,
                r.detail.c_str());
    ok = ok && r.pass;
  }
  return ok ? 0 : kExitSelftest;
}

int MakeSyntheticCommand(const std::string& dir, size_t words, size_t train, size_t test,
                         uint64_t seed) {
  gemel::VisualPairsOptions options;
  options.words = words;
  options.train = train;
  options.test = test;
  options.seed = seed;
  gemel::SyntheticTask task = gemel::MakeVisualPairs(options);
  std::filesystem::create_directories(dir);
  const std::filesystem::path root(dir);
  gemel::SaveKb(task.kb, (root / "kb.jsonl").string());
  gemel::SaveDataset(task.train, (root / "train.jsonl").string());
  gemel::SaveDataset(task.test, (root / "test.jsonl").string());
  task.features->Save((root / "features.gmfv").string());
  RunConfig cfg;
  cfg.seed = seed;
  cfg.paths.kb = (root / "kb.jsonl").string();
  cfg.paths.train = (root / "train.jsonl").string();
  cfg.paths.test = (root / "test.jsonl").string();
  cfg.paths.features = (root / "features.gmfv").string();
  cfg.paths.vocab = (root / "vocab.json").string();
  cfg.paths.trie = (root / "trie.gmtr").string();
  cfg.paths.lm_checkpoint = (root / "lm.gmck").string();
  cfg.paths.mapper_checkpoint = (root / "mapper.gmck").string();
  cfg.paths.output_dir = (root / "out").string();
  cfg.model.d_v = options.d_v;
  gemel::WriteFileBytes((root / "config.json").string(), cfg.ToJson().dump(2) + "\n");
  std::cout << "synthetic task: " << task.kb.size() << " entities, " << task.train.size()
            << " train, " << task.test.size() << " test -> " << dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gemel: generative multimodal entity linking with a frozen toy language model"};
  app.require_subcommand(1);
  CommonOptions common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", common.config_path, "JSON run configuration");
    sub->add_option("--set", common.overrides, "Override a config key, e.g. decode.beam=10")
        ->take_all();
  };

  std::string out;
  auto* build_vocab = app.add_subcommand("build-vocab", "Build the vocabulary from KB and splits");
  add_common(build_vocab);
  build_vocab->add_option("-o,--out", out, "Output path (default paths.vocab)");

  auto* build_trie = app.add_subcommand("build-trie", "Build the entity-name prefix trie");
  add_common(build_trie);
  build_trie->add_option("-o,--out", out, "Output path (default paths.trie)");

  auto* pretrain = app.add_subcommand("pretrain-lm", "Pretrain the toy LM on text-only data");
  add_common(pretrain);
  pretrain->add_option("-o,--out", out, "Output checkpoint (default paths.lm_checkpoint)");

  bool resume = false;
  auto* train = app.add_subcommand("train-mapper", "Train the visual feature mapper");
  add_common(train);
  train->add_option("-o,--out", out, "Output checkpoint (default paths.mapper_checkpoint)");
  train->add_flag("--resume", resume, "Continue from the optimizer state in the output checkpoint");

  std::string split = "test", text, mention, image_features;
  auto* link = app.add_subcommand("link", "Link the mentions of a split or one ad-hoc mention");
  add_common(link);
  link->add_option("--split", split, "train, dev or test")->check(CLI::IsMember({"train", "dev", "test"}));
  link->add_option("--text", text, "Ad-hoc mention context");
  link->add_option("--mention", mention, "Ad-hoc mention surface form");
  link->add_option("--image-features", image_features,
                   "GMFV file or comma-separated feature values for the ad-hoc mention");
  link->add_option("-o,--out", out, "Predictions JSONL");

  std::string predictions;
  auto* evaluate = app.add_subcommand("evaluate", "Score predictions against gold");
  add_common(evaluate);
  evaluate->add_option("-p,--predictions", predictions, "Predictions JSONL")->required();
  evaluate->add_option("--split", split, "Gold split")->check(CLI::IsMember({"train", "dev", "test"}));
  evaluate->add_option("-o,--out", out, "Report JSON");

  auto* bias = app.add_subcommand("analyze-bias", "Common/tail accuracy split");
  add_common(bias);
  bias->add_option("-p,--predictions", predictions, "Predictions JSONL")->required();
  bias->add_option("--split", split, "Gold split")->check(CLI::IsMember({"train", "dev", "test"}));
  bias->add_option("-o,--out", out, "Report JSON");

  std::vector<std::string> variants = {"full", "no_visual", "no_icl"};
  auto* ablate = app.add_subcommand("ablate", "Run ablation variants");
  add_common(ablate);
  ablate->add_option("--split", split, "Split to evaluate")->check(CLI::IsMember({"train", "dev", "test"}));
  ablate->add_option("--variants", variants, "Subset of full, no_visual, no_icl")
      ->check(CLI::IsMember({"full", "no_visual", "no_icl"}));

  uint64_t seed = 0;
  bool quick = false;
  auto* selftest = app.add_subcommand("selftest", "Run the invariant suite");
  selftest->add_option("--seed", seed, "Seed for the random cases");
  selftest->add_flag("--quick", quick, "Fewer random cases");

  std::string dir = "synthetic";
  size_t words = 8, n_train = 16, n_test = 16;
  auto* synth = app.add_subcommand("make-synthetic", "Write a small synthetic multimodal task");
  synth->add_option("-o,--out", dir, "Output directory");
  synth->add_option("--words", words, "Base words (two entities each)");
  synth->add_option("--train", n_train, "Training instances");
  synth->add_option("--test", n_test, "Test instances");
  synth->add_option("--seed", seed, "Generator seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*build_vocab) return BuildVocabCommand(common, out);
    if (*build_trie) return BuildTrieCommand(common, out);
    if (*pretrain) return PretrainCommand(common, out);
    if (*train) return TrainMapperCommand(common, out, resume);
    if (*link) return LinkCommand(common, split, text, mention, image_features, out);
    if (*evaluate) return EvaluateCommand(common, predictions, split, out, false);
    if (*bias) return EvaluateCommand(common, predictions, split, out, true);
    if (*ablate) return AblateCommand(common, split, variants);
    if (*selftest) return SelftestCommand(seed, quick);
    if (*synth) return MakeSyntheticCommand(dir, words, n_train, n_test, seed);
  } catch (const gemel::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const gemel::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const gemel::NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitUsage;
}
