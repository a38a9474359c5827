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

#ifndef ZERODL_PIPELINE_H_
#define ZERODL_PIPELINE_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "zerodl/aggregation.h"
#include "zerodl/corpus.h"
#include "zerodl/evaluation.h"
#include "zerodl/gateway.h"
#include "zerodl/meta.h"
#include "zerodl/prompts.h"

namespace zerodl {

enum class RunMode { kZeroDL, kGold };

std::string_view to_string(RunMode mode);
RunMode parse_run_mode(std::string_view name);

struct StageParams {
  double temperature = 0.0;
  int max_tokens = 64;
};

struct RunConfig {
  std::string corpus_name;
  TaskType task_type = TaskType::kTopic;
  // 0 means "use the corpus class count".
  int k = 0;
  PromptOrder order = PromptOrder::kTextThenClass;
  RunMode mode = RunMode::kZeroDL;
  // Fraction of the corpus fed to open-ended inference; final prediction
  // always covers the whole corpus.
  std::optional<double> sample_fraction;
  int runs = 1;
  std::uint64_t seed = 0;
  std::string model;
  StageParams open_inference{0.0, 64};
  StageParams aggregation{0.0, 1024};
  StageParams final_prediction{0.0, 64};
  std::optional<std::size_t> max_subsets;

  // Throws ValidationError.
  void validate() const;
  int resolved_k(const Corpus& corpus) const;
  std::uint64_t run_seed(int run_index) const {
    return seed + static_cast<std::uint64_t>(run_index);
  }
};

// Configuration of a single run with the corpus-derived defaults applied.
RunConfig resolve_config(const RunConfig& config, const Corpus& corpus);

struct Stage1Record {
  std::string id;
  std::optional<std::string> output;
  std::optional<std::string> error;
  std::string fingerprint;
};

struct Stage1Result {
  std::vector<Stage1Record> records;
  PredictionHistogram histogram;
};

struct Stage3Record {
  std::string id;
  std::optional<std::string> output;
  std::optional<int> predicted;
  std::optional<std::string> error;
  std::string fingerprint;
};

struct RunArtifact {
  RunConfig config;
  std::uint64_t seed = 0;
  std::optional<Stage1Result> stage1;
  std::optional<AggregationOutcome> aggregation;
  MetaInformation meta;
  std::vector<Stage3Record> stage3;
  std::optional<EvaluationReport> report;
};

// Open-ended inference over the (optionally sampled) corpus. Throws
// RunAbortedError when more than half of the completions fail and
// EmptyHistogramError when no prediction repeats.
Stage1Result run_stage1(const Corpus& corpus, const RunConfig& config,
                        Gateway& gateway, std::uint64_t seed,
                        const PromptRenderer& renderer = PromptRenderer());

// Throws SelectionFailedError.
AggregationOutcome run_stage2(const PredictionHistogram& histogram,
                              const RunConfig& config, const Corpus& corpus,
                              Gateway& gateway, std::uint64_t seed,
                              const PromptRenderer& renderer = PromptRenderer());

// Gold mode: the corpus class titles. ZeroDL mode: the selected outcome.
MetaInformation gold_meta(const Corpus& corpus);

// Final prediction for every corpus instance. Throws RunAbortedError when
// more than half of the completions fail.
std::vector<Stage3Record> run_stage3(const Corpus& corpus, const MetaInformation& meta,
                                     const RunConfig& config, Gateway& gateway,
                                     std::uint64_t seed,
                                     const PromptRenderer& renderer = PromptRenderer());

// Nullopt when the corpus has no gold labels or the generated class count
// differs from the gold class count. Failed completions count as unparsed.
std::optional<EvaluationReport> evaluate_run(const Corpus& corpus,
                                             const MetaInformation& meta,
                                             const std::vector<Stage3Record>& stage3);

// Stages 1 -> 2 -> 3 (or 3 alone in gold mode) plus evaluation. When
// `out_dir` is given each stage's files are written as soon as the stage
// finishes; a failed aggregation still leaves aggregation.json behind.
RunArtifact run_full(const Corpus& corpus, const RunConfig& config, Gateway& gateway,
                     int run_index = 0,
                     const std::optional<std::filesystem::path>& out_dir = std::nullopt,
                     const PromptRenderer& renderer = PromptRenderer());

struct RunFailure {
  int run_index = 0;
  std::string error;
};

struct RunSummary {
  std::vector<int> completed_runs;
  std::vector<double> accuracies;
  std::vector<RunFailure> failures;
  MeanStd accuracy;
};

// config.runs independent runs with seeds seed, seed+1, ... Each run goes to
// `out_dir/run_{i}` (or `out_dir` itself for a single run) followed by
// summary.json. Failed runs are recorded and skipped.
RunSummary repeat_runs(const Corpus& corpus, const RunConfig& config, Gateway& gateway,
                       const std::optional<std::filesystem::path>& out_dir = std::nullopt,
                       const PromptRenderer& renderer = PromptRenderer());

// --- Run directory files -------------------------------------------------
//   config.json stage1.jsonl histogram.json aggregation.json stage3.jsonl
//   report.json confusion.csv confusion.json summary.json

namespace artifacts {

inline constexpr const char* kConfig = "config.json";
inline constexpr const char* kStage1 = "stage1.jsonl";
inline constexpr const char* kHistogram = "histogram.json";
inline constexpr const char* kAggregation = "aggregation.json";
inline constexpr const char* kStage3 = "stage3.jsonl";
inline constexpr const char* kReport = "report.json";
inline constexpr const char* kConfusionCsv = "confusion.csv";
inline constexpr const char* kConfusionJson = "confusion.json";
inline constexpr const char* kSummary = "summary.json";

void write_config(const std::filesystem::path& dir, const RunConfig& config,
                  std::uint64_t seed);
RunConfig read_config(const std::filesystem::path& dir);

void write_stage1(const std::filesystem::path& dir, const Stage1Result& stage1);
void write_histogram(const std::filesystem::path& dir, const PredictionHistogram& hist);
PredictionHistogram read_histogram(const std::filesystem::path& dir);

void write_aggregation(const std::filesystem::path& dir,
                       const AggregationOutcome& outcome);
// The selected class set, or nullopt when selection failed.
std::optional<MetaInformation> read_selected_meta(const std::filesystem::path& dir);

void write_stage3(const std::filesystem::path& dir, const MetaInformation& meta,
                  const std::vector<Stage3Record>& records);
std::vector<Stage3Record> read_stage3(const std::filesystem::path& dir);

void write_report(const std::filesystem::path& dir, const EvaluationReport& report);

struct ReportRow {
  double accuracy = 0.0;
  std::int64_t evaluated = 0;
  std::string method;
};
ReportRow read_report(const std::filesystem::path& dir);

void write_summary(const std::filesystem::path& dir, const RunSummary& summary);

// Throws ValidationError naming the file when it is absent.
void require(const std::filesystem::path& dir, const char* name);

}  // namespace artifacts

}  // namespace zerodl

#endif  // ZERODL_PIPELINE_H_
