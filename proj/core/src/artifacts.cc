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

#include <optional>

#include "fileio.h"
#include "json.hpp"
#include "zerodl/pipeline.h"

namespace zerodl::artifacts {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json optional_string(const std::optional<std::string>& s) {
  return s ? json(*s) : json(nullptr);
}

std::optional<std::string> get_optional_string(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<std::string>();
}

json parse_file(const fs::path& path) {
  try {
    return json::parse(internal::read_file(path));
  } catch (const json::exception& e) {
    throw ValidationError("malformed artifact " + path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const json& j) {
  internal::write_file_atomic(path, j.dump(2) + "\n");
}

json meta_to_json(const MetaInformation& meta) {
  json classes = json::array();
  for (const auto& c : meta.classes) {
    classes.push_back({{"index", c.index},
                       {"title", c.title},
                       {"description", optional_string(c.description)}});
  }
  return {{"classes", classes}, {"source_votes", meta.source_votes}};
}

MetaInformation meta_from_json(const json& j) {
  MetaInformation meta;
  meta.source_votes = j.value("source_votes", 0);
  for (const auto& c : j.at("classes")) {
    meta.classes.push_back({c.at("index").get<int>(), c.at("title").get<std::string>(),
                            get_optional_string(c, "description")});
  }
  return meta;
}

json stage_params_to_json(const StageParams& p) {
  return {{"temperature", p.temperature}, {"max_tokens", p.max_tokens}};
}

StageParams stage_params_from_json(const json& j) {
  return {j.at("temperature").get<double>(), j.at("max_tokens").get<int>()};
}

}  // namespace

void require(const fs::path& dir, const char* name) {
  if (!fs::exists(dir / name)) {
    throw ValidationError("missing prerequisite artifact " + (dir / name).string());
  }
}

void write_config(const fs::path& dir, const RunConfig& c, std::uint64_t seed) {
  json j;
  j["corpus"] = c.corpus_name;
  j["task_type"] = std::string(to_string(c.task_type));
  j["k"] = c.k;
  j["order"] = std::string(to_string(c.order));
  j["mode"] = std::string(to_string(c.mode));
  j["sample_fraction"] = c.sample_fraction ? json(*c.sample_fraction) : json(nullptr);
  j["runs"] = c.runs;
  j["seed"] = c.seed;
  j["run_seed"] = seed;
  j["model"] = c.model;
  j["open_inference"] = stage_params_to_json(c.open_inference);
  j["aggregation"] = stage_params_to_json(c.aggregation);
  j["final_prediction"] = stage_params_to_json(c.final_prediction);
  j["max_subsets"] = c.max_subsets ? json(*c.max_subsets) : json(nullptr);
  write_json(dir / kConfig, j);
}

RunConfig read_config(const fs::path& dir) {
  require(dir, kConfig);
  const json j = parse_file(dir / kConfig);
  try {
    RunConfig c;
    c.corpus_name = j.at("corpus").get<std::string>();
    c.task_type = parse_task_type(j.at("task_type").get<std::string>());
    c.k = j.at("k").get<int>();
    c.order = parse_prompt_order(j.at("order").get<std::string>());
    c.mode = parse_run_mode(j.at("mode").get<std::string>());
    if (!j.at("sample_fraction").is_null()) {
      c.sample_fraction = j.at("sample_fraction").get<double>();
    }
    c.runs = j.at("runs").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.model = j.at("model").get<std::string>();
    c.open_inference = stage_params_from_json(j.at("open_inference"));
    c.aggregation = stage_params_from_json(j.at("aggregation"));
    c.final_prediction = stage_params_from_json(j.at("final_prediction"));
    if (!j.at("max_subsets").is_null()) c.max_subsets = j.at("max_subsets").get<std::size_t>();
    return c;
  } catch (const json::exception& e) {
    throw ValidationError("malformed " + (dir / kConfig).string() + ": " + e.what());
  }
}

void write_stage1(const fs::path& dir, const Stage1Result& stage1) {
  std::string out;
  for (const auto& r : stage1.records) {
    json j;
    j["id"] = r.id;
    j["output"] = optional_string(r.output);
    j["error"] = optional_string(r.error);
    j["fingerprint"] = r.fingerprint;
    out += j.dump() + "\n";
  }
  internal::write_file_atomic(dir / kStage1, out);
}

void write_histogram(const fs::path& dir, const PredictionHistogram& hist) {
  json entries = json::array();
  for (const auto& e : hist.entries) {
    entries.push_back({{"label", e.label}, {"display", e.display}, {"count", e.count}});
  }
  write_json(dir / kHistogram, {{"entries", entries}, {"unique", hist.size()}});
}

PredictionHistogram read_histogram(const fs::path& dir) {
  require(dir, kHistogram);
  const json j = parse_file(dir / kHistogram);
  PredictionHistogram hist;
  try {
    for (const auto& e : j.at("entries")) {
      hist.entries.push_back({e.at("label").get<std::string>(),
                              e.at("display").get<std::string>(),
                              e.at("count").get<int>()});
    }
  } catch (const json::exception& e) {
    throw ValidationError("malformed " + (dir / kHistogram).string() + ": " + e.what());
  }
  return hist;
}

void write_aggregation(const fs::path& dir, const AggregationOutcome& outcome) {
  json raw = json::array();
  for (const auto& r : outcome.raw_outputs) {
    raw.push_back({{"subset_size", r.subset_size},
                   {"text", r.text},
                   {"fingerprint", r.fingerprint},
                   {"error", optional_string(r.error)}});
  }
  json parsed = json::array();
  for (const auto& p : outcome.parsed) {
    json classes = json::array();
    for (const auto& c : p.classes) {
      classes.push_back({{"title", c.title}, {"description", optional_string(c.description)}});
    }
    parsed.push_back({{"subset_size", p.subset_size},
                      {"num_classes", p.classes.size()},
                      {"classes", classes}});
  }
  json votes = json::array();
  for (const auto& [key, n] : outcome.votes) {
    votes.push_back({{"titles", key}, {"votes", n}});
  }
  json j;
  j["raw_outputs"] = raw;
  j["parsed"] = parsed;
  j["accepted"] = outcome.accepted;
  j["votes"] = votes;
  j["selected"] = outcome.selected ? meta_to_json(*outcome.selected) : json(nullptr);
  write_json(dir / kAggregation, j);
}

std::optional<MetaInformation> read_selected_meta(const fs::path& dir) {
  require(dir, kAggregation);
  const json j = parse_file(dir / kAggregation);
  try {
    if (j.at("selected").is_null()) return std::nullopt;
    return meta_from_json(j.at("selected"));
  } catch (const json::exception& e) {
    throw ValidationError("malformed " + (dir / kAggregation).string() + ": " + e.what());
  }
}

void write_stage3(const fs::path& dir, const MetaInformation& meta,
                  const std::vector<Stage3Record>& records) {
  std::string out;
  for (const auto& r : records) {
    json j;
    j["id"] = r.id;
    j["output"] = optional_string(r.output);
    j["predicted"] = r.predicted ? json(*r.predicted) : json(nullptr);
    j["predicted_title"] =
        r.predicted ? json(meta.classes.at(*r.predicted).title) : json(nullptr);
    j["error"] = optional_string(r.error);
    j["fingerprint"] = r.fingerprint;
    out += j.dump() + "\n";
  }
  internal::write_file_atomic(dir / kStage3, out);
}

std::vector<Stage3Record> read_stage3(const fs::path& dir) {
  require(dir, kStage3);
  std::vector<Stage3Record> records;
  const std::string contents = internal::read_file(dir / kStage3);
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < contents.size()) {
    std::size_t end = contents.find('\n', start);
    if (end == std::string::npos) end = contents.size();
    ++line_no;
    const std::string line = contents.substr(start, end - start);
    start = end + 1;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      Stage3Record r;
      r.id = j.at("id").get<std::string>();
      r.output = get_optional_string(j, "output");
      if (!j.at("predicted").is_null()) r.predicted = j.at("predicted").get<int>();
      r.error = get_optional_string(j, "error");
      r.fingerprint = j.value("fingerprint", std::string());
      records.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw ParseError(std::string("malformed stage3 record: ") + e.what(), line_no);
    }
  }
  return records;
}

void write_report(const fs::path& dir, const EvaluationReport& report) {
  internal::write_file_atomic(dir / kConfusionCsv, report.confusion.to_csv());

  json confusion;
  confusion["pred_labels"] = report.confusion.pred_labels();
  confusion["gold_labels"] = report.confusion.gold_labels();
  confusion["counts"] = report.confusion.counts();
  std::vector<std::int64_t> unparsed;
  for (int g = 0; g < report.confusion.cols(); ++g) {
    unparsed.push_back(report.confusion.unparsed_for(g));
  }
  confusion["unparsed_by_gold"] = unparsed;
  write_json(dir / kConfusionJson, confusion);

  json per_class = json::array();
  for (const auto& m : report.per_class) {
    per_class.push_back({{"gold_label", m.gold_label},
                         {"mapped_pred", m.mapped_pred},
                         {"precision", m.precision},
                         {"recall", m.recall}});
  }
  json j;
  j["accuracy"] = report.mapping.accuracy;
  j["matched"] = report.mapping.matched;
  j["evaluated"] = report.evaluated;
  j["method"] = std::string(to_string(report.mapping.method));
  j["assignment"] = report.mapping.assignment;
  j["unparsed"] = report.confusion.unparsed();
  j["confusion_csv_path"] = kConfusionCsv;
  j["per_class"] = per_class;
  write_json(dir / kReport, j);
}

ReportRow read_report(const fs::path& dir) {
  require(dir, kReport);
  const json j = parse_file(dir / kReport);
  try {
    return {j.at("accuracy").get<double>(), j.at("evaluated").get<std::int64_t>(),
            j.at("method").get<std::string>()};
  } catch (const json::exception& e) {
    throw ValidationError("malformed " + (dir / kReport).string() + ": " + e.what());
  }
}

void write_summary(const fs::path& dir, const RunSummary& summary) {
  json failures = json::array();
  for (const auto& f : summary.failures) {
    failures.push_back({{"run", f.run_index}, {"error", f.error}});
  }
  json j;
  j["completed_runs"] = summary.completed_runs;
  j["accuracies"] = summary.accuracies;
  j["mean_accuracy"] = summary.accuracy.mean;
  j["std_accuracy"] = summary.accuracy.std;
  j["failures"] = failures;
  write_json(dir / kSummary, j);
}

}  // namespace zerodl::artifacts
