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

#ifndef ZERODL_CORPUS_H_
#define ZERODL_CORPUS_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace zerodl {

enum class TaskType { kSentiment, kTopic };

// "sentiment" / "topic"; the word that is substituted into every prompt.
std::string_view to_string(TaskType type);
TaskType parse_task_type(std::string_view name);

struct TextInstance {
  std::string id;
  std::string text;
  std::optional<std::string> gold_label;

  friend bool operator==(const TextInstance&, const TextInstance&) = default;
};

struct Corpus {
  std::string name;
  TaskType task_type = TaskType::kTopic;
  std::vector<TextInstance> instances;
  // Gold class inventory in canonical order, when known.
  std::optional<std::vector<std::string>> class_titles;
  int num_classes = 0;

  std::size_t size() const { return instances.size(); }
  bool has_gold_labels() const;

  // Throws ValidationError describing the first broken invariant.
  void validate() const;

  friend bool operator==(const Corpus&, const Corpus&) = default;
};

// Metadata that does not fit on a per-record line. Stored next to the data
// file as `<data file>.manifest.json`.
struct CorpusManifest {
  std::optional<std::string> name;
  std::optional<TaskType> task_type;
  std::optional<std::vector<std::string>> class_titles;
  std::optional<int> num_classes;
};

enum class CorpusFormat { kJsonl, kCsv };

CorpusFormat format_from_path(const std::filesystem::path& path);

std::filesystem::path manifest_path_for(const std::filesystem::path& data_path);

// Reads `path`. When `manifest` is empty the sidecar manifest is used if it
// exists. Without class titles from either source, titles are the distinct
// gold labels in first-appearance order.
//
// Throws ParseError (with 1-based line number) for malformed records and
// ValidationError for duplicate ids, an empty file or a class count that
// cannot be determined.
Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format,
                   const std::optional<CorpusManifest>& manifest = std::nullopt);

CorpusManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const CorpusManifest& manifest,
                    const std::filesystem::path& path);
CorpusManifest manifest_of(const Corpus& corpus);

// Canonical JSONL text, one {"id","text","gold_label"} object per line.
std::string serialize_jsonl(const Corpus& corpus);

// Writes the JSONL data file plus its sidecar manifest.
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);

struct SplitResult {
  Corpus front;
  Corpus back;
  std::vector<std::string> dropped_classes;
  std::size_t dropped_instances = 0;
};

// Drops the `drop_smallest` least populated classes (size ascending, then
// title) and splits the remaining classes, in their original order, into a
// front half of ceil(k/2) classes and a back half with the rest. Each half
// must keep at least two classes.
SplitResult split_by_class_halves(const Corpus& corpus, int drop_smallest);

// Explicit variant: instances whose label is in neither list are dropped.
SplitResult split_by_class_lists(const Corpus& corpus,
                                 const std::vector<std::string>& front_titles,
                                 const std::vector<std::string>& back_titles);

struct SamplingSpec {
  double fraction = 1.0;
  std::uint64_t seed = 0;
};

std::size_t sample_size(std::size_t corpus_size, double fraction);

// Uniform sample without replacement of sample_size(N, fraction) instances,
// kept in corpus order. Deterministic in (corpus, fraction, seed) on every
// platform.
Corpus sample(const Corpus& corpus, const SamplingSpec& spec);

}  // namespace zerodl

#endif  // ZERODL_CORPUS_H_
