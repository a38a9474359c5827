// Copyright 2026 The zerodl Authors. All Rights Reserved.
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

#include "zerodl/pipeline.h"

#include <unordered_map>

#include "text_util.h"

namespace zerodl {

std::string_view to_string(RunMode mode) {
  return mode == RunMode::kGold ? "gold" : "zerodl";
}

RunMode parse_run_mode(std::string_view name) {
  const std::string lower = internal::ascii_lower(internal::trim(name));
  if (lower == "zerodl") return RunMode::kZeroDL;
  if (lower == "gold") return RunMode::kGold;
  throw ValidationError("unknown mode '" + std::string(name) +
                        "' (expected zerodl or gold)");
}

void RunConfig::validate() const {
  if (runs < 1) throw ValidationError("runs must be >= 1");
  if (k != 0 && k < 2) throw ValidationError("k must be >= 2");
  if (sample_fraction && !(*sample_fraction > 0.0 && *sample_fraction <= 1.0)) {
    throw ValidationError("sampling fraction must be in (0, 1]");
  }
  for (const StageParams* p : {&open_inference, &aggregation, &final_prediction}) {
    if (!(p->temperature >= 0.0)) throw ValidationError("temperature must be >= 0");
    if (p->max_tokens <= 0) throw ValidationError("max_tokens must be positive");
  }
  if (max_subsets && *max_subsets == 0) {
    throw ValidationError("max_subsets must be positive");
  }
}

int RunConfig::resolved_k(const Corpus& corpus) const {
  if (mode == RunMode::kGold) {
    if (!corpus.class_titles) {
      throw ValidationError("gold mode needs a corpus with class titles");
    }
    return static_cast<int>(corpus.class_titles->size());
  }
  return k != 0 ? k : corpus.num_classes;
}

RunConfig resolve_config(const RunConfig& config, const Corpus& corpus) {
  config.validate();
  RunConfig out = config;
  out.k = config.resolved_k(corpus);
  if (out.corpus_name.empty()) out.corpus_name = corpus.name;
  return out;
}

namespace {

std::optional<std::uint64_t> seed_for(const StageParams& p, std::uint64_t seed) {
  if (p.temperature > 0.0) return seed;
  return std::nullopt;
}

CompletionRequest make_request(const RunConfig& config, const StageParams& params,
                               Stage stage, std::string prompt, std::uint64_t seed) {
  CompletionRequest req;
  req.model = config.model;
  req.prompt_text = std::move(prompt);
  req.temperature = params.temperature;
  req.max_tokens = params.max_tokens;
  req.stage = stage;
  req.seed = seed_for(params, seed);
  return req;
}

void check_failure_ratio(std::size_t failed, std::size_t issued, const char* stage) {
  if (failed * 2 > issued) {
    throw RunAbortedError(std::string(stage) + ": " + std::to_string(failed) +
                          " of " + std::to_string(issued) + " completions failed");
  }
}

}  // namespace

Stage1Result run_stage1(const Corpus& corpus, const RunConfig& config,
                        Gateway& gateway, std::uint64_t seed,
                        const PromptRenderer& renderer) {
  if (corpus.instances.empty()) throw PreconditionError("corpus is empty");
  const Corpus input = config.sample_fraction
                           ? sample(corpus, SamplingSpec{*config.sample_fraction, seed})
                           : corpus;

  std::vector<CompletionRequest> reqs;
  reqs.reserve(input.size());
  for (const auto& inst : input.instances) {
    reqs.push_back(make_request(config, config.open_inference, Stage::kOpenInference,
                                renderer.open_inference(inst.text, config.task_type),
                                seed));
  }
  const auto results = gateway.complete_batch(reqs);

  Stage1Result out;
  std::vector<std::string> predictions;
  std::size_t failed = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    Stage1Record rec;
    rec.id = input.instances[i].id;
    if (results[i].ok()) {
      rec.output = results[i].result->text;
      rec.fingerprint = results[i].result->request_fingerprint;
      predictions.push_back(*rec.output);
    } else {
      rec.error = results[i].error;
      ++failed;
    }
    out.records.push_back(std::move(rec));
  }
  check_failure_ratio(failed, results.size(), "open-ended inference");
  out.histogram = build_histogram(predictions);
  return out;
}

AggregationOutcome run_stage2(const PredictionHistogram& histogram,
                              const RunConfig& config, const Corpus& corpus,
                              Gateway& gateway, std::uint64_t seed,
                              const PromptRenderer& renderer) {
  AggregationOptions opts;
  opts.model = config.model;
  opts.temperature = config.aggregation.temperature;
  opts.max_tokens = config.aggregation.max_tokens;
  opts.max_subsets = config.max_subsets;
  opts.seed = seed_for(config.aggregation, seed);
  return aggregate(histogram, config.resolved_k(corpus), gateway, config.task_type,
                   opts, renderer);
}

MetaInformation gold_meta(const Corpus& corpus) {
  if (!corpus.class_titles) {
    throw ValidationError("gold mode needs a corpus with class titles");
  }
  return meta_from_titles(*corpus.class_titles);
}

std::vector<Stage3Record> run_stage3(const Corpus& corpus, const MetaInformation& meta,
                                     const RunConfig& config, Gateway& gateway,
                                     std::uint64_t seed,
                                     const PromptRenderer& renderer) {
  std::vector<CompletionRequest> reqs;
  reqs.reserve(corpus.size());
  for (const auto& inst : corpus.instances) {
    reqs.push_back(make_request(
        config, config.final_prediction, Stage::kFinalPrediction,
        renderer.final_prediction(inst.text, meta, config.task_type, config.order),
        seed));
  }
  const auto results = gateway.complete_batch(reqs);
  const int k = static_cast<int>(meta.size());

  std::vector<Stage3Record> out;
  out.reserve(results.size());
  std::size_t failed = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    Stage3Record rec;
    rec.id = corpus.instances[i].id;
    if (results[i].ok()) {
      rec.output = results[i].result->text;
      rec.fingerprint = results[i].result->request_fingerprint;
      rec.predicted = parse_prediction(*rec.output, k);
    } else {
      rec.error = results[i].error;
      ++failed;
    }
    out.push_back(std::move(rec));
  }
  check_failure_ratio(failed, results.size(), "final prediction");
  return out;
}

std::optional<EvaluationReport> evaluate_run(const Corpus& corpus,
                                             const MetaInformation& meta,
                                             const std::vector<Stage3Record>& stage3) {
  if (!corpus.class_titles || !corpus.has_gold_labels()) return std::nullopt;
  const auto& gold_titles = *corpus.class_titles;
  if (meta.size() != gold_titles.size()) return std::nullopt;

  std::unordered_map<std::string, int> gold_index;
  for (std::size_t i = 0; i < gold_titles.size(); ++i) {
    gold_index[gold_titles[i]] = static_cast<int>(i);
  }
  std::unordered_map<std::string, const Stage3Record*> by_id;
  for (const auto& rec : stage3) by_id[rec.id] = &rec;

  std::vector<std::optional<int>> predictions;
  std::vector<int> gold;
  for (const auto& inst : corpus.instances) {
    if (!inst.gold_label) continue;
    auto it = by_id.find(inst.id);
    predictions.push_back(it == by_id.end() ? std::nullopt : it->second->predicted);
    gold.push_back(gold_index.at(*inst.gold_label));
  }
  return evaluate(predictions, gold, meta.titles(), gold_titles);
}

RunArtifact run_full(const Corpus& corpus, const RunConfig& config_in,
                     Gateway& gateway, int run_index,
                     const std::optional<std::filesystem::path>& out_dir,
                     const PromptRenderer& renderer) {
  RunArtifact art;
  art.config = resolve_config(config_in, corpus);
  art.seed = art.config.run_seed(run_index);
  const RunConfig& config = art.config;
  if (out_dir) artifacts::write_config(*out_dir, config, art.seed);

  if (config.mode == RunMode::kGold) {
    art.meta = gold_meta(corpus);
  } else {
    art.stage1 = run_stage1(corpus, config, gateway, art.seed, renderer);
    if (out_dir) {
      artifacts::write_stage1(*out_dir, *art.stage1);
      artifacts::write_histogram(*out_dir, art.stage1->histogram);
    }
    try {
      art.aggregation =
          run_stage2(art.stage1->histogram, config, corpus, gateway, art.seed, renderer);
    } catch (const SelectionFailedError& e) {
      if (out_dir) artifacts::write_aggregation(*out_dir, e.outcome());
      throw;
    }
    if (out_dir) artifacts::write_aggregation(*out_dir, *art.aggregation);
    art.meta = *art.aggregation->selected;
  }

  art.stage3 = run_stage3(corpus, art.meta, config, gateway, art.seed, renderer);
  if (out_dir) artifacts::write_stage3(*out_dir, art.meta, art.stage3);

  art.report = evaluate_run(corpus, art.meta, art.stage3);
  if (out_dir && art.report) artifacts::write_report(*out_dir, *art.report);
  return art;
}

RunSummary repeat_runs(const Corpus& corpus, const RunConfig& config, Gateway& gateway,
                       const std::optional<std::filesystem::path>& out_dir,
                       const PromptRenderer& renderer) {
  config.validate();
  RunSummary summary;
  for (int i = 0; i < config.runs; ++i) {
    std::optional<std::filesystem::path> dir;
    if (out_dir) {
      dir = config.runs == 1 ? *out_dir : *out_dir / ("run_" + std::to_string(i));
    }
    try {
      RunArtifact art = run_full(corpus, config, gateway, i, dir, renderer);
      summary.completed_runs.push_back(i);
      if (art.report) summary.accuracies.push_back(art.report->mapping.accuracy);
    } catch (const Error& e) {
      summary.failures.push_back({i, e.what()});
    }
  }
  summary.accuracy = mean_std(summary.accuracies);
  if (out_dir) artifacts::write_summary(*out_dir, summary);
  return summary;
}

}  // namespace zerodl
