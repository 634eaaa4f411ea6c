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

#include "gemel/evaluator.h"

#include <omp.h>

#include <cstdlib>
#include <exception>
#include <sstream>
#include <unordered_map>

#include "gemel/binary_io.h"
#include "gemel/errors.h"

namespace gemel {

using nlohmann::json;

json Prediction::ToJson() const {
  json topk_json = json::array();
  for (const auto& [name, lp] : topk) topk_json.push_back({{"name", name}, {"logprob", lp}});
  return {{"id", id}, {"pred", pred}, {"pred_id", pred_id}, {"logprob", logprob},
          {"topk", topk_json}};
}

Prediction Prediction::FromJson(const json& j) {
  Prediction p;
  p.id = j.at("id").get<std::string>();
  p.pred = j.at("pred").get<std::string>();
  p.pred_id = j.at("pred_id").get<std::string>();
  p.logprob = j.value("logprob", 0.0);
  if (j.contains("topk")) {
    for (const json& t : j.at("topk")) {
      p.topk.emplace_back(t.at("name").get<std::string>(), t.at("logprob").get<double>());
    }
  }
  return p;
}

std::string SerializePredictions(std::span<const Prediction> preds) {
  std::string out;
  for (const Prediction& p : preds) out += p.ToJson().dump() + "\n";
  return out;
}

std::vector<Prediction> ParsePredictions(const std::string& jsonl) {
  std::vector<Prediction> out;
  std::istringstream in(jsonl);
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(Prediction::FromJson(json::parse(line)));
    } catch (const json::exception& e) {
      throw ValidationError("predictions line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<Prediction> LoadPredictions(const std::string& path) {
  return ParsePredictions(ReadFileBytes(path));
}

void SavePredictions(std::span<const Prediction> preds, const std::string& path) {
  WriteFileBytes(path, SerializePredictions(preds));
}

double Top1Accuracy(std::span<const std::string> preds, std::span<const std::string> golds) {
  if (preds.size() != golds.size()) throw ValidationError("prediction and gold counts differ");
  if (preds.empty()) throw ValidationError("no predictions to score");
  size_t hits = 0;
  for (size_t i = 0; i < preds.size(); ++i) hits += preds[i] == golds[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

std::optional<double> BucketStats::accuracy() const {
  if (n == 0) return std::nullopt;
  return static_cast<double>(correct) / static_cast<double>(n);
}

namespace {

json BucketJson(const BucketStats& b) {
  std::optional<double> acc = b.accuracy();
  return {{"n", b.n}, {"correct", b.correct}, {"acc", acc ? json(*acc) : json(nullptr)}};
}

}  // namespace

json EvalReport::ToJson() const {
  json records = json::array();
  for (const InstanceResult& r : instances) {
    records.push_back({{"id", r.id}, {"gold", r.gold}, {"pred", r.pred},
                       {"correct", r.correct}, {"bucket", r.bucket}});
  }
  return {{"variant", variant},
          {"n", n},
          {"correct", correct},
          {"overall_acc", overall_acc},
          {"tail_threshold", threshold},
          {"per_bucket", {{"common", BucketJson(common)}, {"tail", BucketJson(tail)}}},
          {"config", config},
          {"instances", records}};
}

std::string EvalReport::Dump() const { return ToJson().dump(2) + "\n"; }

EvalReport BiasReport(std::vector<InstanceResult> results, const KnowledgeBase& kb,
                      double percentile, TailRule rule) {
  if (results.empty()) throw ValidationError("no results to report on");
  std::vector<std::string> golds;
  golds.reserve(results.size());
  for (const InstanceResult& r : results) golds.push_back(r.gold);
  OccurrenceSplit split = OccurrencePartition(kb, golds, percentile, rule);
  EvalReport report;
  report.threshold = split.threshold;
  for (InstanceResult& r : results) {
    const bool is_tail = split.tail.count(r.gold) > 0;
    r.bucket = is_tail ? "tail" : "common";
    BucketStats& bucket = is_tail ? report.tail : report.common;
    bucket.n += 1;
    bucket.correct += r.correct ? 1 : 0;
  }
  report.n = results.size();
  report.correct = report.common.correct + report.tail.correct;
  report.overall_acc = static_cast<double>(report.correct) / static_cast<double>(report.n);
  report.instances = std::move(results);
  return report;
}

std::vector<InstanceResult> MatchPredictions(std::span<const Prediction> preds,
                                             std::span<const MentionInstance> gold) {
  std::unordered_map<std::string, const Prediction*> by_id;
  for (const Prediction& p : preds) {
    if (!by_id.emplace(p.id, &p).second) {
      throw ValidationError("duplicate prediction for instance " + p.id);
    }
  }
  std::vector<InstanceResult> out;
  for (const MentionInstance& inst : gold) {
    if (!inst.gold) throw ValidationError("instance " + inst.id + " has no gold entity");
    auto it = by_id.find(inst.id);
    if (it == by_id.end()) throw ValidationError("no prediction for instance " + inst.id);
    InstanceResult r;
    r.id = inst.id;
    r.gold = *inst.gold;
    r.pred = it->second->pred_id;
    r.correct = r.pred == r.gold;
    out.push_back(std::move(r));
  }
  return out;
}

std::string SummaryTable(std::span<const EvalReport> reports) {
  auto fmt = [](std::optional<double> v) {
    if (!v) return std::string("-");
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(2);
    os << 100.0 * *v;
    return os.str();
  };
  std::string out = "variant\tn\toverall\tcommon\tn_common\ttail\tn_tail\n";
  for (const EvalReport& r : reports) {
    out += (r.variant.empty() ? std::string("-") : r.variant) + "\t" + std::to_string(r.n) +
           "\t" + fmt(r.overall_acc) + "\t" + fmt(r.common.accuracy()) + "\t" +
           std::to_string(r.common.n) + "\t" + fmt(r.tail.accuracy()) + "\t" +
           std::to_string(r.tail.n) + "\n";
  }
  return out;
}

Variant ParseVariant(const std::string& name) {
  if (name == "full") return Variant::kFull;
  if (name == "no_visual") return Variant::kNoVisual;
  if (name == "no_icl") return Variant::kNoIcl;
  throw ValidationError("unknown ablation variant " + name);
}

const char* VariantName(Variant variant) {
  switch (variant) {
    case Variant::kFull:
      return "full";
    case Variant::kNoVisual:
      return "no_visual";
    case Variant::kNoIcl:
      return "no_icl";
  }
  return "?";
}

PromptOptions ApplyVariant(PromptOptions options, Variant variant) {
  if (variant == Variant::kNoVisual) options.use_visual = false;
  if (variant == Variant::kNoIcl) options.use_icl = false;
  return options;
}

PromptSequence BuildPrompt(const LinkingContext& ctx, const MentionInstance& inst) {
  std::vector<MentionInstance> demos;
  if (ctx.prompt.use_icl && ctx.retriever != nullptr) demos = ctx.retriever->Retrieve(inst);
  return AssemblePrompt(ctx.model->vocab, *ctx.kb, demos, inst, ctx.prompt);
}

Prediction LinkOne(const LinkingContext& ctx, const MentionInstance& inst) {
  PromptSequence prompt = BuildPrompt(ctx, inst);
  std::vector<LinkCandidate> ranked =
      ConstrainedBeamSearch(*ctx.model, prompt, *ctx.trie, *ctx.kb, ctx.decode);
  Prediction p;
  p.id = inst.id;
  p.pred = ranked.front().name;
  p.pred_id = ranked.front().entity_id;
  p.logprob = ranked.front().logprob;
  for (const LinkCandidate& c : ranked) p.topk.emplace_back(c.name, c.logprob);
  return p;
}

size_t WorkerCount() {
  if (const char* env = std::getenv("GEMEL_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<size_t>(v);
  }
  return static_cast<size_t>(std::max(1, omp_get_max_threads()));
}

std::vector<Prediction> LinkAll(const LinkingContext& ctx,
                                std::span<const MentionInstance> instances) {
  std::vector<Prediction> out(instances.size());
  std::vector<std::exception_ptr> errors(instances.size());
  const auto count = static_cast<std::ptrdiff_t>(instances.size());
  const int threads = static_cast<int>(WorkerCount());
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      out[i] = LinkOne(ctx, instances[i]);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

EvalReport RunAblation(const LinkingContext& ctx, Variant variant,
                       std::span<const MentionInstance> instances, double percentile) {
  LinkingContext variant_ctx = ctx;
  variant_ctx.prompt = ApplyVariant(ctx.prompt, variant);
  std::vector<Prediction> preds = LinkAll(variant_ctx, instances);
  EvalReport report = BiasReport(MatchPredictions(preds, instances), *ctx.kb, percentile);
  report.variant = VariantName(variant);
  return report;
}

}  // namespace gemel
