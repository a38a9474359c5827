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

#include "cli.h"

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "zerodl/zerodl.h"

namespace zerodl::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Everything a pipeline subcommand needs, merged from the config file and
// the command line (flags win).
struct Settings {
  std::string config_path;
  std::string corpus_path;
  std::string out_dir;
  std::string cache_dir;
  std::string log_file;
  std::string templates_path;

  std::string backend = "mock";
  std::string mock_script;
  std::string base_url = BackendConfig{}.base_url;
  std::string api_key_env = BackendConfig{}.api_key_env;
  std::string model = "mock";
  int max_parallel = 4;
  int retry_max = 3;
  int timeout_s = 120;

  std::string task_type;
  std::string order = "tc";
  std::string mode = "zerodl";
  int k = 0;
  double fraction = 1.0;
  int runs = 1;
  std::uint64_t seed = 0;
  std::size_t max_subsets = 0;
  StageParams open_inference{0.0, 64};
  StageParams aggregation{0.0, 1024};
  StageParams final_prediction{0.0, 64};
};

// Flags seen on the command line, so config-file values do not override them.
struct Explicit {
  CLI::App* app = nullptr;
  bool has(const char* name) const { return app->count(name) > 0; }
};

std::string resolve_relative(const fs::path& base, const std::string& p) {
  if (p.empty() || fs::path(p).is_absolute()) return p;
  return (base / p).lexically_normal().string();
}

void apply_config_file(Settings& s, const Explicit& flags) {
  if (s.config_path.empty()) return;
  if (!fs::exists(s.config_path)) {
    throw ValidationError("config file not found: " + s.config_path);
  }
  json j;
  try {
    std::ifstream in(s.config_path);
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError("bad config file " + s.config_path + ": " + e.what());
  }
  const fs::path base = fs::path(s.config_path).parent_path();
  auto take_str = [&](const json& sec, const char* key, const char* flag,
                      std::string& slot, bool is_path = false) {
    if (!sec.contains(key) || flags.has(flag)) return;
    slot = sec.at(key).get<std::string>();
    if (is_path) slot = resolve_relative(base, slot);
  };
  auto take = [&](const json& sec, const char* key, const char* flag, auto& slot) {
    if (!sec.contains(key) || flags.has(flag)) return;
    slot = sec.at(key).get<std::remove_reference_t<decltype(slot)>>();
  };
  auto take_stage = [&](const json& sec, const char* key, StageParams& slot) {
    if (!sec.contains(key)) return;
    const json& p = sec.at(key);
    slot.temperature = p.value("temperature", slot.temperature);
    slot.max_tokens = p.value("max_tokens", slot.max_tokens);
  };
  try {
    if (j.contains("backend")) {
      const json& b = j.at("backend");
      if (b.contains("api_key")) {
        throw ValidationError("API keys are read from the environment only; "
                              "use backend.api_key_env");
      }
      take_str(b, "kind", "--backend", s.backend);
      take_str(b, "mock_script", "--mock-script", s.mock_script, true);
      take_str(b, "base_url", "--base-url", s.base_url);
      take_str(b, "api_key_env", "--api-key-env", s.api_key_env);
      take_str(b, "model", "--model", s.model);
      take(b, "max_parallel", "--max-parallel", s.max_parallel);
      take(b, "retry_max", "--retry-max", s.retry_max);
      take(b, "timeout_s", "--timeout", s.timeout_s);
    }
    if (j.contains("run")) {
      const json& r = j.at("run");
      take_str(r, "task_type", "--task-type", s.task_type);
      take_str(r, "order", "--order", s.order);
      take_str(r, "mode", "--mode", s.mode);
      take(r, "k", "--k", s.k);
      take(r, "fraction", "--fraction", s.fraction);
      take(r, "runs", "--runs", s.runs);
      take(r, "seed", "--seed", s.seed);
      take(r, "max_subsets", "--max-subsets", s.max_subsets);
      take_str(r, "templates", "--templates", s.templates_path, true);
      take_stage(r, "open_inference", s.open_inference);
      take_stage(r, "aggregation", s.aggregation);
      take_stage(r, "final_prediction", s.final_prediction);
    }
    if (j.contains("paths")) {
      const json& p = j.at("paths");
      take_str(p, "corpus", "--corpus", s.corpus_path, true);
      take_str(p, "cache_dir", "--cache-dir", s.cache_dir, true);
      take_str(p, "out_dir", "--out", s.out_dir, true);
      take_str(p, "log_file", "--log", s.log_file, true);
    }
  } catch (const json::exception& e) {
    throw ValidationError("bad config file " + s.config_path + ": " + e.what());
  }
}

void add_common_options(CLI::App* sub, Settings& s) {
  sub->add_option("--config", s.config_path, "JSON config file");
  sub->add_option("--corpus", s.corpus_path, "Corpus file (JSONL or CSV)");
  sub->add_option("--out", s.out_dir, "Run artifact directory");
  sub->add_option("--cache-dir", s.cache_dir, "Response cache directory");
  sub->add_option("--log", s.log_file, "JSONL completion log");
  sub->add_option("--templates", s.templates_path, "Prompt template override file");
  sub->add_option("--backend", s.backend, "mock or http")
      ->check(CLI::IsMember({"mock", "http"}));
  sub->add_option("--mock-script", s.mock_script, "Mock backend script (JSON)");
  sub->add_option("--base-url", s.base_url, "OpenAI-compatible base URL");
  sub->add_option("--api-key-env", s.api_key_env, "Environment variable holding the key");
  sub->add_option("--model", s.model, "Model name");
  sub->add_option("--max-parallel", s.max_parallel, "Concurrent requests")
      ->check(CLI::PositiveNumber);
  sub->add_option("--retry-max", s.retry_max, "Retries for transient failures")
      ->check(CLI::NonNegativeNumber);
  sub->add_option("--timeout", s.timeout_s, "Request timeout in seconds")
      ->check(CLI::PositiveNumber);
  sub->add_option("--task-type", s.task_type, "sentiment or topic");
  sub->add_option("--order", s.order, "Final prompt order: ct or tc")
      ->check(CLI::IsMember({"ct", "tc"}));
  sub->add_option("--mode", s.mode, "zerodl or gold")
      ->check(CLI::IsMember({"zerodl", "gold"}));
  sub->add_option("--k", s.k, "Number of clusters (default: corpus class count)");
  sub->add_option("--fraction", s.fraction, "Share of the corpus used for label generation")
      ->check(CLI::Range(0.0, 1.0));
  sub->add_option("--runs", s.runs, "Repetitions with consecutive seeds")
      ->check(CLI::PositiveNumber);
  sub->add_option("--seed", s.seed, "Base seed");
  sub->add_option("--max-subsets", s.max_subsets, "Cap on aggregation subsets");
}

Corpus load_input_corpus(const Settings& s) {
  if (s.corpus_path.empty()) throw ValidationError("--corpus is required");
  Corpus corpus = load_corpus(s.corpus_path, format_from_path(s.corpus_path));
  if (!s.task_type.empty()) corpus.task_type = parse_task_type(s.task_type);
  return corpus;
}

RunConfig make_run_config(const Settings& s, const Corpus& corpus) {
  RunConfig c;
  c.corpus_name = corpus.name;
  c.task_type = corpus.task_type;
  c.k = s.k;
  c.order = parse_prompt_order(s.order);
  c.mode = parse_run_mode(s.mode);
  if (!(s.fraction > 0.0)) throw ValidationError("--fraction must be in (0, 1]");
  if (s.fraction < 1.0) c.sample_fraction = s.fraction;
  c.runs = s.runs;
  c.seed = s.seed;
  c.model = s.model;
  c.open_inference = s.open_inference;
  c.aggregation = s.aggregation;
  c.final_prediction = s.final_prediction;
  if (s.max_subsets > 0) c.max_subsets = s.max_subsets;
  return resolve_config(c, corpus);
}

fs::path out_dir_of(const Settings& s, const Corpus& corpus) {
  return s.out_dir.empty() ? fs::path("runs") / corpus.name : fs::path(s.out_dir);
}

std::unique_ptr<Gateway> make_gateway(const Settings& s, const fs::path& out_dir) {
  std::shared_ptr<Backend> backend;
  if (s.backend == "mock") {
    MockScript script;
    if (!s.mock_script.empty()) {
      if (!fs::exists(s.mock_script)) {
        throw ValidationError("mock script not found: " + s.mock_script);
      }
      script = MockScript::load(s.mock_script);
    }
    backend = std::make_shared<MockBackend>(std::move(script));
  } else {
    BackendConfig bc;
    bc.base_url = s.base_url;
    bc.api_key_env = s.api_key_env;
    bc.max_parallel = s.max_parallel;
    bc.retry_max = s.retry_max;
    bc.timeout = std::chrono::seconds(s.timeout_s);
    if (s.model.empty()) throw ValidationError("--model is required for http backends");
    backend = std::make_shared<HttpBackend>(bc);
  }
  GatewayOptions opts;
  opts.max_parallel = s.max_parallel;
  opts.retry.retry_max = s.retry_max;
  opts.cache_dir = s.cache_dir.empty() ? out_dir / "cache" : fs::path(s.cache_dir);
  if (!s.log_file.empty()) opts.log_path = fs::path(s.log_file);
  return std::make_unique<Gateway>(backend, opts);
}

PromptRenderer make_renderer(const Settings& s) {
  if (s.templates_path.empty()) return PromptRenderer();
  return PromptRenderer(PromptTemplates::load(s.templates_path));
}

void print_stats(const Gateway& gw, std::ostream& err) {
  const GatewayStats st = gw.stats();
  err << "completions: " << st.requests << " requests, " << st.backend_calls
      << " backend calls, " << st.cache_hits << " cache hits, " << st.failures
      << " failures\n";
}

void print_histogram(const PredictionHistogram& hist, std::ostream& out,
                     std::size_t top_n = 10) {
  out << "histogram: " << hist.size() << " labels (frequency >= 2)\n";
  for (std::size_t i = 0; i < hist.size() && i < top_n; ++i) {
    out << "  " << std::setw(6) << hist.entries[i].count << "  "
        << hist.entries[i].display << "\n";
  }
}

void print_meta(const MetaInformation& meta, std::ostream& out) {
  out << "meta-information (" << meta.source_votes << " votes):\n"
      << render_class_block(meta) << "\n";
}

void print_row(const RunConfig& c, double accuracy, double std, std::ostream& out) {
  out << "dataset\torder\tmode\taccuracy\tstd\n"
      << c.corpus_name << "\t" << to_string(c.order) << "\t" << to_string(c.mode)
      << "\t" << std::fixed << std::setprecision(4) << accuracy << "\t" << std
      << "\n";
  out.unsetf(std::ios::floatfield);
}

MetaInformation meta_for(const RunConfig& config, const Corpus& corpus,
                         const fs::path& dir) {
  if (config.mode == RunMode::kGold) return gold_meta(corpus);
  artifacts::require(dir, artifacts::kAggregation);
  auto meta = artifacts::read_selected_meta(dir);
  if (!meta) {
    throw SelectionFailedError("aggregation.json has no selected class set", {});
  }
  return *meta;
}

int cmd_infer(const Settings& s, std::ostream& out, std::ostream& err) {
  const Corpus corpus = load_input_corpus(s);
  const RunConfig config = make_run_config(s, corpus);
  const fs::path dir = out_dir_of(s, corpus);
  auto gw = make_gateway(s, dir);
  artifacts::write_config(dir, config, config.run_seed(0));
  const Stage1Result stage1 = run_stage1(corpus, config, *gw, config.run_seed(0),
                                         make_renderer(s));
  artifacts::write_stage1(dir, stage1);
  artifacts::write_histogram(dir, stage1.histogram);
  print_histogram(stage1.histogram, out);
  print_stats(*gw, err);
  return kOk;
}

int cmd_aggregate(const Settings& s, std::ostream& out, std::ostream& err) {
  const Corpus corpus = load_input_corpus(s);
  const RunConfig config = make_run_config(s, corpus);
  const fs::path dir = out_dir_of(s, corpus);
  const PredictionHistogram hist = artifacts::read_histogram(dir);
  auto gw = make_gateway(s, dir);
  artifacts::write_config(dir, config, config.run_seed(0));
  try {
    const AggregationOutcome outcome =
        run_stage2(hist, config, corpus, *gw, config.run_seed(0), make_renderer(s));
    artifacts::write_aggregation(dir, outcome);
    print_meta(*outcome.selected, out);
  } catch (const SelectionFailedError& e) {
    artifacts::write_aggregation(dir, e.outcome());
    print_stats(*gw, err);
    throw;
  }
  print_stats(*gw, err);
  return kOk;
}

int cmd_predict(const Settings& s, std::ostream& out, std::ostream& err) {
  const Corpus corpus = load_input_corpus(s);
  const RunConfig config = make_run_config(s, corpus);
  const fs::path dir = out_dir_of(s, corpus);
  const MetaInformation meta = meta_for(config, corpus, dir);
  auto gw = make_gateway(s, dir);
  artifacts::write_config(dir, config, config.run_seed(0));
  const auto records =
      run_stage3(corpus, meta, config, *gw, config.run_seed(0), make_renderer(s));
  artifacts::write_stage3(dir, meta, records);
  const auto parsed = std::count_if(records.begin(), records.end(),
                                    [](const Stage3Record& r) { return r.predicted; });
  out << "final predictions: " << records.size() << " instances, " << parsed
      << " with a class anchor\n";
  print_stats(*gw, err);
  return kOk;
}

int cmd_evaluate(const Settings& s, std::ostream& out, std::ostream&) {
  const Corpus corpus = load_input_corpus(s);
  const RunConfig config = make_run_config(s, corpus);
  const fs::path dir = out_dir_of(s, corpus);
  const MetaInformation meta = meta_for(config, corpus, dir);
  const auto records = artifacts::read_stage3(dir);
  const auto report = evaluate_run(corpus, meta, records);
  if (!report) {
    throw ValidationError(
        "cannot evaluate: corpus lacks gold labels or the class counts differ");
  }
  artifacts::write_report(dir, *report);
  out << "method: " << to_string(report->mapping.method) << "\n";
  print_row(config, report->mapping.accuracy, 0.0, out);
  return kOk;
}

int cmd_run(const Settings& s, std::ostream& out, std::ostream& err) {
  const Corpus corpus = load_input_corpus(s);
  const RunConfig config = make_run_config(s, corpus);
  const fs::path dir = out_dir_of(s, corpus);
  auto gw = make_gateway(s, dir);
  const PromptRenderer renderer = make_renderer(s);

  if (config.runs == 1) {
    const RunArtifact art = run_full(corpus, config, *gw, 0, dir, renderer);
    if (art.stage1) print_histogram(art.stage1->histogram, out);
    print_meta(art.meta, out);
    print_stats(*gw, err);
    if (art.report) {
      out << "method: " << to_string(art.report->mapping.method) << "\n";
      print_row(config, art.report->mapping.accuracy, 0.0, out);
    }
    return kOk;
  }

  const RunSummary summary = repeat_runs(corpus, config, *gw, dir, renderer);
  print_stats(*gw, err);
  for (const auto& f : summary.failures) {
    err << "warning: run " << f.run_index << " failed: " << f.error << "\n";
  }
  if (summary.completed_runs.empty()) {
    err << "error: every run failed\n";
    return kTransportAbort;
  }
  print_row(config, summary.accuracy.mean, summary.accuracy.std, out);
  return kOk;
}

int cmd_report(const std::vector<std::string>& dirs, std::ostream& out) {
  std::vector<double> acc;
  std::vector<std::int64_t> sizes;
  out << "run\taccuracy\tevaluated\n";
  for (const auto& d : dirs) {
    const auto row = artifacts::read_report(d);
    acc.push_back(row.accuracy);
    sizes.push_back(row.evaluated);
    out << d << "\t" << std::fixed << std::setprecision(4) << row.accuracy << "\t"
        << row.evaluated << "\n";
  }
  const Summary sum = summarize(acc, sizes);
  out << "macro\t" << sum.macro << "\nmicro\t" << sum.micro << "\n";
  out.unsetf(std::ios::floatfield);
  return kOk;
}

struct IngestOptions {
  std::string input;
  std::string format;
  std::string manifest;
  std::string name;
  std::string task_type;
  std::string output;
  bool split_halves = false;
  int drop_smallest = 0;
  std::vector<std::string> front;
  std::vector<std::string> back;
};

int cmd_ingest(const IngestOptions& o, std::ostream& out) {
  std::optional<CorpusManifest> manifest;
  if (!o.manifest.empty()) manifest = read_manifest(o.manifest);
  const CorpusFormat format =
      o.format.empty() ? format_from_path(o.input)
                       : (o.format == "csv" ? CorpusFormat::kCsv : CorpusFormat::kJsonl);
  Corpus corpus = load_corpus(o.input, format, manifest);
  if (!o.name.empty()) corpus.name = o.name;
  if (!o.task_type.empty()) corpus.task_type = parse_task_type(o.task_type);

  auto describe = [&](const Corpus& c, const fs::path& path) {
    out << path.string() << ": " << c.name << " (" << to_string(c.task_type) << "), "
        << c.size() << " instances, " << c.num_classes << " classes\n";
  };

  if (!o.front.empty() || !o.back.empty() || o.split_halves) {
    const SplitResult split = (!o.front.empty() || !o.back.empty())
                                  ? split_by_class_lists(corpus, o.front, o.back)
                                  : split_by_class_halves(corpus, o.drop_smallest);
    const fs::path base(o.output);
    const fs::path front_path =
        base.parent_path() / (base.stem().string() + "_F" + base.extension().string());
    const fs::path back_path =
        base.parent_path() / (base.stem().string() + "_B" + base.extension().string());
    save_corpus(split.front, front_path);
    save_corpus(split.back, back_path);
    describe(split.front, front_path);
    describe(split.back, back_path);
    out << "dropped " << split.dropped_instances << " instances";
    if (!split.dropped_classes.empty()) {
      out << " from classes:";
      for (const auto& t : split.dropped_classes) out << " " << t;
    }
    out << "\n";
    return kOk;
  }
  save_corpus(corpus, o.output);
  describe(corpus, o.output);
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Zero-shot text clustering with LLM-generated class labels", "zerodl"};
  app.require_subcommand(1);

  Settings settings;
  IngestOptions ingest;
  std::vector<std::string> report_dirs;

  CLI::App* ingest_cmd = app.add_subcommand("ingest", "Validate and normalize a corpus");
  ingest_cmd->add_option("--input", ingest.input, "Source corpus")->required();
  ingest_cmd->add_option("--format", ingest.format, "jsonl or csv (default: by extension)")
      ->check(CLI::IsMember({"jsonl", "csv"}));
  ingest_cmd->add_option("--manifest", ingest.manifest, "Manifest JSON");
  ingest_cmd->add_option("--name", ingest.name, "Corpus name");
  ingest_cmd->add_option("--task-type", ingest.task_type, "sentiment or topic");
  ingest_cmd->add_option("--output", ingest.output, "Canonical JSONL output")->required();
  ingest_cmd->add_flag("--split-halves", ingest.split_halves,
                       "Split into front/back class halves");
  ingest_cmd->add_option("--drop-smallest", ingest.drop_smallest,
                         "Classes to drop before splitting");
  ingest_cmd->add_option("--front", ingest.front, "Explicit front class titles");
  ingest_cmd->add_option("--back", ingest.back, "Explicit back class titles");

  struct Pipeline {
    const char* name;
    const char* help;
    int (*fn)(const Settings&, std::ostream&, std::ostream&);
  };
  const Pipeline pipelines[] = {
      {"infer", "Open-ended inference and prediction histogram", cmd_infer},
      {"aggregate", "Aggregate predictions into class labels", cmd_aggregate},
      {"predict", "Final prediction with the selected class labels", cmd_predict},
      {"evaluate", "Best-mapping accuracy and confusion matrix", cmd_evaluate},
      {"run", "All stages end to end", cmd_run},
  };
  std::vector<std::pair<CLI::App*, const Pipeline*>> subs;
  for (const auto& p : pipelines) {
    CLI::App* sub = app.add_subcommand(p.name, p.help);
    add_common_options(sub, settings);
    subs.emplace_back(sub, &p);
  }

  CLI::App* report_cmd = app.add_subcommand("report", "Macro/micro accuracy over runs");
  report_cmd->add_option("dirs", report_dirs, "Run directories holding report.json")
      ->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*ingest_cmd) return cmd_ingest(ingest, out);
    if (*report_cmd) return cmd_report(report_dirs, out);
    for (const auto& [sub, p] : subs) {
      if (!*sub) continue;
      apply_config_file(settings, Explicit{sub});
      return p->fn(settings, out, err);
    }
  } catch (const SelectionFailedError& e) {
    err << "error: aggregation selection failed: " << e.what() << "\n";
    return kSelectionFailed;
  } catch (const EmptyHistogramError& e) {
    err << "error: " << e.what() << "\n";
    return kSelectionFailed;
  } catch (const RunAbortedError& e) {
    err << "error: run aborted: " << e.what() << "\n";
    return kTransportAbort;
  } catch (const TransportError& e) {
    err << "error: transport: " << e.what() << "\n";
    return kTransportAbort;
  } catch (const RequestError& e) {
    err << "error: request rejected: " << e.what() << "\n";
    return kTransportAbort;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}

}  // namespace zerodl::cli
