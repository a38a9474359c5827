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

#include "zerodl/corpus.h"

#include <algorithm>
#include <limits>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <unordered_set>

#include "fileio.h"
#include "json.hpp"
#include "text_util.h"
#include "zerodl/errors.h"

namespace zerodl {

using nlohmann::json;

std::string_view to_string(TaskType type) {
  return type == TaskType::kSentiment ? "sentiment" : "topic";
}

TaskType parse_task_type(std::string_view name) {
  std::string lower = internal::ascii_lower(internal::trim(name));
  if (lower == "sentiment") return TaskType::kSentiment;
  if (lower == "topic") return TaskType::kTopic;
  throw ValidationError("unknown task type '" + std::string(name) +
                        "' (expected sentiment or topic)");
}

bool Corpus::has_gold_labels() const {
  return std::any_of(instances.begin(), instances.end(),
                     [](const TextInstance& t) { return t.gold_label.has_value(); });
}

void Corpus::validate() const {
  if (instances.empty()) throw ValidationError("corpus '" + name + "' is empty");
  std::unordered_set<std::string> ids;
  for (const auto& inst : instances) {
    if (internal::trim(inst.text).empty()) {
      throw ValidationError("instance '" + inst.id + "' has empty text");
    }
    if (!ids.insert(inst.id).second) {
      throw ValidationError("duplicate instance id '" + inst.id + "'");
    }
  }
  if (num_classes < 2) {
    throw ValidationError("corpus '" + name + "' needs at least 2 classes, has " +
                          std::to_string(num_classes));
  }
  if (class_titles) {
    std::set<std::string> titles(class_titles->begin(), class_titles->end());
    if (titles.size() != class_titles->size()) {
      throw ValidationError("class titles are not distinct");
    }
    if (static_cast<int>(class_titles->size()) != num_classes) {
      throw ValidationError("num_classes does not match class title count");
    }
    for (const auto& inst : instances) {
      if (inst.gold_label && !titles.count(*inst.gold_label)) {
        throw ValidationError("instance '" + inst.id + "' has label '" +
                              *inst.gold_label + "' outside the class titles");
      }
    }
  } else if (has_gold_labels()) {
    throw ValidationError("gold labels present but class titles missing");
  }
}

CorpusFormat format_from_path(const std::filesystem::path& path) {
  std::string ext = internal::ascii_lower(path.extension().string());
  if (ext == ".csv") return CorpusFormat::kCsv;
  return CorpusFormat::kJsonl;
}

std::filesystem::path manifest_path_for(const std::filesystem::path& data_path) {
  std::filesystem::path p = data_path;
  p += ".manifest.json";
  return p;
}

namespace {

struct RawRecord {
  std::size_t line = 0;
  std::optional<std::string> id;
  std::string text;
  std::optional<std::string> gold_label;
};

std::string json_scalar_to_string(const json& v, std::size_t line,
                                  const char* field) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number_unsigned()) return std::to_string(v.get<unsigned long long>());
  throw ParseError(std::string("field '") + field + "' must be a string", line);
}

std::vector<RawRecord> parse_jsonl(const std::string& contents) {
  std::vector<RawRecord> records;
  auto lines = internal::split_lines(contents);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    if (internal::trim(lines[i]).empty()) continue;
    json obj;
    try {
      obj = json::parse(lines[i]);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("malformed JSON: ") + e.what(), line_no);
    }
    if (!obj.is_object()) throw ParseError("record is not a JSON object", line_no);
    RawRecord rec;
    rec.line = line_no;
    if (auto it = obj.find("id"); it != obj.end() && !it->is_null()) {
      rec.id = json_scalar_to_string(*it, line_no, "id");
    }
    auto text = obj.find("text");
    if (text == obj.end() || !text->is_string()) {
      throw ParseError("missing string field 'text'", line_no);
    }
    rec.text = text->get<std::string>();
    if (auto it = obj.find("gold_label"); it != obj.end() && !it->is_null()) {
      rec.gold_label = json_scalar_to_string(*it, line_no, "gold_label");
    }
    records.push_back(std::move(rec));
  }
  return records;
}

// RFC 4180: quoted fields may contain separators, doubled quotes and newlines.
struct CsvRow {
  std::size_t line = 0;
  std::vector<std::string> fields;
};

std::vector<CsvRow> parse_csv_rows(const std::string& s) {
  std::vector<CsvRow> rows;
  std::size_t i = 0;
  std::size_t line = 1;
  while (i < s.size()) {
    CsvRow row;
    row.line = line;
    std::string field;
    bool in_quotes = false;
    bool field_was_quoted = false;
    bool row_done = false;
    while (!row_done) {
      if (i >= s.size()) {
        if (in_quotes) throw ParseError("unterminated quoted field", row.line);
        row.fields.push_back(std::move(field));
        break;
      }
      char c = s[i];
      if (in_quotes) {
        if (c == '"') {
          if (i + 1 < s.size() && s[i + 1] == '"') {
            field += '"';
            i += 2;
          } else {
            in_quotes = false;
            ++i;
          }
        } else {
          if (c == '\n') ++line;
          field += c;
          ++i;
        }
        continue;
      }
      switch (c) {
        case '"':
          if (!field.empty() || field_was_quoted) {
            throw ParseError("stray quote inside unquoted field", line);
          }
          in_quotes = true;
          field_was_quoted = true;
          ++i;
          break;
        case ',':
          row.fields.push_back(std::move(field));
          field.clear();
          field_was_quoted = false;
          ++i;
          break;
        case '\r':
          ++i;
          break;
        case '\n':
          row.fields.push_back(std::move(field));
          ++line;
          ++i;
          row_done = true;
          break;
        default:
          if (field_was_quoted) {
            throw ParseError("characters after closing quote", line);
          }
          field += c;
          ++i;
      }
    }
    bool blank = row.fields.size() == 1 && row.fields[0].empty();
    if (!blank) rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<RawRecord> parse_csv(const std::string& contents) {
  auto rows = parse_csv_rows(contents);
  if (rows.empty()) return {};
  const auto& header = rows.front().fields;
  int id_col = -1, text_col = -1, label_col = -1;
  for (std::size_t c = 0; c < header.size(); ++c) {
    std::string name = internal::ascii_lower(internal::trim(header[c]));
    if (name == "id") id_col = static_cast<int>(c);
    if (name == "text") text_col = static_cast<int>(c);
    if (name == "gold_label" || name == "label") label_col = static_cast<int>(c);
  }
  if (text_col < 0) throw ParseError("CSV header has no 'text' column", rows[0].line);
  std::vector<RawRecord> records;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.fields.size() != header.size()) {
      throw ParseError("expected " + std::to_string(header.size()) +
                           " fields, found " + std::to_string(row.fields.size()),
                       row.line);
    }
    RawRecord rec;
    rec.line = row.line;
    if (id_col >= 0 && !row.fields[id_col].empty()) rec.id = row.fields[id_col];
    rec.text = row.fields[text_col];
    if (label_col >= 0 && !row.fields[label_col].empty()) {
      rec.gold_label = row.fields[label_col];
    }
    records.push_back(std::move(rec));
  }
  return records;
}

CorpusManifest manifest_from_json(const json& j) {
  CorpusManifest m;
  if (!j.is_object()) throw ValidationError("manifest must be a JSON object");
  if (auto it = j.find("name"); it != j.end() && !it->is_null()) {
    m.name = it->get<std::string>();
  }
  if (auto it = j.find("task_type"); it != j.end() && !it->is_null()) {
    m.task_type = parse_task_type(it->get<std::string>());
  }
  if (auto it = j.find("class_titles"); it != j.end() && !it->is_null()) {
    m.class_titles = it->get<std::vector<std::string>>();
  }
  if (auto it = j.find("num_classes"); it != j.end() && !it->is_null()) {
    m.num_classes = it->get<int>();
  }
  return m;
}

}  // namespace

CorpusManifest read_manifest(const std::filesystem::path& path) {
  try {
    return manifest_from_json(json::parse(internal::read_file(path)));
  } catch (const json::exception& e) {
    throw ValidationError("bad manifest " + path.string() + ": " + e.what());
  }
}

void write_manifest(const CorpusManifest& m, const std::filesystem::path& path) {
  json j = json::object();
  if (m.name) j["name"] = *m.name;
  if (m.task_type) j["task_type"] = std::string(to_string(*m.task_type));
  if (m.class_titles) j["class_titles"] = *m.class_titles;
  if (m.num_classes) j["num_classes"] = *m.num_classes;
  internal::write_file_atomic(path, j.dump(2) + "\n");
}

CorpusManifest manifest_of(const Corpus& corpus) {
  CorpusManifest m;
  m.name = corpus.name;
  m.task_type = corpus.task_type;
  m.class_titles = corpus.class_titles;
  m.num_classes = corpus.num_classes;
  return m;
}

Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format,
                   const std::optional<CorpusManifest>& manifest_arg) {
  if (!std::filesystem::exists(path)) {
    throw ValidationError("corpus file not found: " + path.string());
  }
  std::optional<CorpusManifest> manifest = manifest_arg;
  if (!manifest && std::filesystem::exists(manifest_path_for(path))) {
    manifest = read_manifest(manifest_path_for(path));
  }

  const std::string contents = internal::read_file(path);
  std::vector<RawRecord> records =
      format == CorpusFormat::kCsv ? parse_csv(contents) : parse_jsonl(contents);
  if (records.empty()) throw ValidationError("corpus file is empty: " + path.string());

  Corpus corpus;
  corpus.name = manifest && manifest->name ? *manifest->name : path.stem().string();
  corpus.task_type =
      manifest && manifest->task_type ? *manifest->task_type : TaskType::kTopic;

  std::unordered_set<std::string> ids;
  std::vector<std::string> seen_labels;
  std::unordered_set<std::string> seen_label_set;
  for (std::size_t row = 0; row < records.size(); ++row) {
    RawRecord& rec = records[row];
    if (internal::trim(rec.text).empty()) throw ParseError("empty text", rec.line);
    TextInstance inst;
    inst.id = rec.id ? *rec.id : std::to_string(row);
    if (!ids.insert(inst.id).second) {
      throw ValidationError("line " + std::to_string(rec.line) +
                            ": duplicate id '" + inst.id + "'");
    }
    inst.text = std::move(rec.text);
    inst.gold_label = std::move(rec.gold_label);
    if (inst.gold_label && seen_label_set.insert(*inst.gold_label).second) {
      seen_labels.push_back(*inst.gold_label);
    }
    corpus.instances.push_back(std::move(inst));
  }

  if (manifest && manifest->class_titles) {
    corpus.class_titles = manifest->class_titles;
  } else if (!seen_labels.empty()) {
    corpus.class_titles = seen_labels;
  }
  if (corpus.class_titles) {
    corpus.num_classes = static_cast<int>(corpus.class_titles->size());
    if (manifest && manifest->num_classes &&
        *manifest->num_classes != corpus.num_classes) {
      throw ValidationError("manifest num_classes disagrees with class_titles");
    }
  } else if (manifest && manifest->num_classes) {
    corpus.num_classes = *manifest->num_classes;
  } else {
    throw ValidationError(
        "cannot determine the number of classes for " + path.string() +
        "; provide gold labels or a manifest with num_classes");
  }
  corpus.validate();
  return corpus;
}

std::string serialize_jsonl(const Corpus& corpus) {
  std::string out;
  for (const auto& inst : corpus.instances) {
    json j;
    j["id"] = inst.id;
    j["text"] = inst.text;
    j["gold_label"] = inst.gold_label ? json(*inst.gold_label) : json(nullptr);
    out += j.dump();
    out += '\n';
  }
  return out;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  internal::write_file_atomic(path, serialize_jsonl(corpus));
  write_manifest(manifest_of(corpus), manifest_path_for(path));
}

namespace {

Corpus subset_by_classes(const Corpus& corpus, const std::string& suffix,
                         const std::vector<std::string>& titles) {
  std::unordered_set<std::string> keep(titles.begin(), titles.end());
  Corpus out;
  out.name = corpus.name + suffix;
  out.task_type = corpus.task_type;
  out.class_titles = titles;
  out.num_classes = static_cast<int>(titles.size());
  for (const auto& inst : corpus.instances) {
    if (inst.gold_label && keep.count(*inst.gold_label)) {
      out.instances.push_back(inst);
    }
  }
  return out;
}

SplitResult finish_split(const Corpus& corpus,
                         const std::vector<std::string>& front_titles,
                         const std::vector<std::string>& back_titles,
                         std::vector<std::string> dropped) {
  if (front_titles.size() < 2 || back_titles.size() < 2) {
    throw PreconditionError("each split half needs at least 2 classes");
  }
  SplitResult result;
  result.front = subset_by_classes(corpus, "(F)", front_titles);
  result.back = subset_by_classes(corpus, "(B)", back_titles);
  result.dropped_classes = std::move(dropped);
  result.dropped_instances =
      corpus.size() - result.front.size() - result.back.size();
  return result;
}

}  // namespace

SplitResult split_by_class_halves(const Corpus& corpus, int drop_smallest) {
  if (!corpus.class_titles) {
    throw PreconditionError("split_by_class_halves requires class titles");
  }
  const auto& titles = *corpus.class_titles;
  const int k = static_cast<int>(titles.size());
  if (drop_smallest < 0 || drop_smallest >= k - 1) {
    throw PreconditionError("drop_smallest must be in [0, num_classes - 1)");
  }

  std::map<std::string, std::size_t> sizes;
  for (const auto& t : titles) sizes[t] = 0;
  for (const auto& inst : corpus.instances) {
    if (inst.gold_label) ++sizes[*inst.gold_label];
  }
  std::vector<std::string> by_size = titles;
  std::sort(by_size.begin(), by_size.end(),
            [&](const std::string& a, const std::string& b) {
              if (sizes[a] != sizes[b]) return sizes[a] < sizes[b];
              return a < b;
            });
  std::vector<std::string> dropped(by_size.begin(), by_size.begin() + drop_smallest);
  std::unordered_set<std::string> dropped_set(dropped.begin(), dropped.end());

  std::vector<std::string> remaining;
  for (const auto& t : titles) {
    if (!dropped_set.count(t)) remaining.push_back(t);
  }
  const std::size_t front_count = (remaining.size() + 1) / 2;
  std::vector<std::string> front(remaining.begin(), remaining.begin() + front_count);
  std::vector<std::string> back(remaining.begin() + front_count, remaining.end());
  return finish_split(corpus, front, back, std::move(dropped));
}

SplitResult split_by_class_lists(const Corpus& corpus,
                                 const std::vector<std::string>& front_titles,
                                 const std::vector<std::string>& back_titles) {
  if (!corpus.class_titles) {
    throw PreconditionError("split_by_class_lists requires class titles");
  }
  std::unordered_set<std::string> known(corpus.class_titles->begin(),
                                        corpus.class_titles->end());
  std::unordered_set<std::string> used;
  for (const auto* list : {&front_titles, &back_titles}) {
    for (const auto& t : *list) {
      if (!known.count(t)) throw PreconditionError("unknown class title '" + t + "'");
      if (!used.insert(t).second) {
        throw PreconditionError("class '" + t + "' listed twice");
      }
    }
  }
  std::vector<std::string> dropped;
  for (const auto& t : *corpus.class_titles) {
    if (!used.count(t)) dropped.push_back(t);
  }
  return finish_split(corpus, front_titles, back_titles, std::move(dropped));
}

std::size_t sample_size(std::size_t corpus_size, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw PreconditionError("sampling fraction must be in (0, 1]");
  }
  auto n = static_cast<std::size_t>(
      std::llround(fraction * static_cast<double>(corpus_size)));
  return std::clamp<std::size_t>(n, 1, std::max<std::size_t>(corpus_size, 1));
}

namespace {

// std::uniform_int_distribution is implementation-defined; this is not.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t limit =
      std::numeric_limits<std::uint64_t>::max() -
      std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

}  // namespace

Corpus sample(const Corpus& corpus, const SamplingSpec& spec) {
  const std::size_t n = sample_size(corpus.size(), spec.fraction);
  if (spec.fraction == 1.0 || n >= corpus.size()) return corpus;

  std::vector<std::size_t> idx(corpus.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(spec.seed);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t j = i + static_cast<std::size_t>(bounded(rng, idx.size() - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(n);
  std::sort(idx.begin(), idx.end());

  Corpus out = corpus;
  out.instances.clear();
  out.instances.reserve(n);
  for (std::size_t i : idx) out.instances.push_back(corpus.instances[i]);
  return out;
}

}  // namespace zerodl
