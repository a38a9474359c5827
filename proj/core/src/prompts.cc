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

#include "zerodl/prompts.h"

#include <array>
#include <map>

#include "fileio.h"
#include "json.hpp"
#include "text_util.h"
#include "zerodl/errors.h"

namespace zerodl {

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::kOpenInference:
      return "open_inference";
    case Stage::kAggregation:
      return "aggregation";
    case Stage::kFinalPrediction:
      return "final_prediction";
  }
  return "unknown";
}

Stage parse_stage(std::string_view name) {
  for (Stage s : {Stage::kOpenInference, Stage::kAggregation,
                  Stage::kFinalPrediction}) {
    if (to_string(s) == name) return s;
  }
  throw ValidationError("unknown stage '" + std::string(name) + "'");
}

std::string_view to_string(PromptOrder order) {
  return order == PromptOrder::kClassThenText ? "ct" : "tc";
}

PromptOrder parse_prompt_order(std::string_view name) {
  std::string lower = internal::ascii_lower(internal::trim(name));
  if (lower == "ct" || lower == "c-t" || lower == "class_then_text") {
    return PromptOrder::kClassThenText;
  }
  if (lower == "tc" || lower == "t-c" || lower == "text_then_class") {
    return PromptOrder::kTextThenClass;
  }
  throw ValidationError("unknown prompt order '" + std::string(name) +
                        "' (expected ct or tc)");
}

namespace {

constexpr std::array<std::string_view, 5> kPlaceholders = {
    "[text]", "[type_of_task]", "[NUM_CLUSTER_CLASS]", "[subset_block]",
    "[class_block]"};

using Bindings = std::map<std::string_view, std::string_view>;

// Single pass: bound placeholders are replaced, inserted values are not
// rescanned. A known placeholder without a binding is an error.
std::string substitute(std::string_view body, const Bindings& bindings) {
  std::string out;
  out.reserve(body.size() + 256);
  std::size_t i = 0;
  while (i < body.size()) {
    bool matched = false;
    if (body[i] == '[') {
      for (std::string_view ph : kPlaceholders) {
        if (body.substr(i, ph.size()) == ph) {
          auto it = bindings.find(ph);
          if (it == bindings.end()) {
            throw PreconditionError("placeholder " + std::string(ph) +
                                    " is not bound for this template");
          }
          out += it->second;
          i += ph.size();
          matched = true;
          break;
        }
      }
    }
    if (!matched) out += body[i++];
  }
  return out;
}

void check_placeholders(std::string_view body,
                        std::initializer_list<std::string_view> allowed,
                        std::string_view name) {
  for (std::string_view ph : kPlaceholders) {
    if (body.find(ph) == std::string_view::npos) continue;
    bool ok = false;
    for (auto a : allowed) ok = ok || a == ph;
    if (!ok) {
      throw ValidationError("template '" + std::string(name) +
                            "' uses placeholder " + std::string(ph) +
                            " which it cannot bind");
    }
  }
}

void require_text(std::string_view text) {
  if (internal::trim(text).empty()) {
    throw PreconditionError("prompt text must be non-empty");
  }
}

}  // namespace

PromptTemplates PromptTemplates::defaults() {
  PromptTemplates t;
  t.open_inference =
      "Text: [text]\n\nClassify the text to the best [type_of_task] class.";
  t.aggregation =
      "[type_of_task] List:\n\n[subset_block]\n\n"
      "Aggregate the [type_of_task] List into [NUM_CLUSTER_CLASS] classes.";
  t.final_text_then_class =
      "Text: [text]\n\nClass description:\n[class_block]\n\n"
      "Based on the class description, classify the text to the best "
      "[type_of_task] class.";
  t.final_class_then_text =
      "Class description:\n[class_block]\n\nText: [text]\n\n"
      "Based on the class description, classify the text to the best "
      "[type_of_task] class.";
  return t;
}

PromptTemplates PromptTemplates::load(const std::filesystem::path& path) {
  PromptTemplates t = defaults();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(internal::read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("bad template file " + path.string() + ": " + e.what());
  }
  if (!j.is_object()) throw ValidationError("template file must hold an object");
  auto take = [&](const char* key, std::string& slot) {
    if (auto it = j.find(key); it != j.end()) slot = it->get<std::string>();
  };
  take("open_inference", t.open_inference);
  take("aggregation", t.aggregation);
  take("final_prediction_tc", t.final_text_then_class);
  take("final_prediction_ct", t.final_class_then_text);
  return PromptRenderer(t).templates();
}

PromptRenderer::PromptRenderer(PromptTemplates templates)
    : templates_(std::move(templates)) {
  check_placeholders(templates_.open_inference, {"[text]", "[type_of_task]"},
                     "open_inference");
  check_placeholders(templates_.aggregation,
                     {"[type_of_task]", "[NUM_CLUSTER_CLASS]", "[subset_block]"},
                     "aggregation");
  check_placeholders(templates_.final_text_then_class,
                     {"[text]", "[type_of_task]", "[class_block]"},
                     "final_prediction_tc");
  check_placeholders(templates_.final_class_then_text,
                     {"[text]", "[type_of_task]", "[class_block]"},
                     "final_prediction_ct");
}

std::string PromptRenderer::open_inference(std::string_view text,
                                           TaskType task) const {
  require_text(text);
  return substitute(templates_.open_inference,
                    {{"[text]", text}, {"[type_of_task]", to_string(task)}});
}

std::string PromptRenderer::aggregation(
    const std::vector<PredictionSubset>& subsets, TaskType task, int k) const {
  if (k < 2) throw PreconditionError("aggregation needs k >= 2");
  if (subsets.empty()) throw PreconditionError("no subsets to aggregate");
  std::vector<std::string> blocks;
  blocks.reserve(subsets.size());
  for (const auto& subset : subsets) {
    if (subset.empty()) throw PreconditionError("empty aggregation subset");
    std::string block = "S_" + std::to_string(subset.size()) + ":";
    for (const auto& label : subset) {
      block += '\n';
      block += label;
    }
    blocks.push_back(std::move(block));
  }
  const std::string subset_block = internal::join(blocks, "\n\n");
  const std::string count = std::to_string(k);
  return substitute(templates_.aggregation,
                    {{"[type_of_task]", to_string(task)},
                     {"[NUM_CLUSTER_CLASS]", count},
                     {"[subset_block]", subset_block}});
}

std::string PromptRenderer::final_prediction(std::string_view text,
                                             const MetaInformation& meta,
                                             TaskType task,
                                             PromptOrder order) const {
  require_text(text);
  if (meta.size() < 2) {
    throw PreconditionError("final prediction needs at least 2 classes");
  }
  const std::string class_block = render_class_block(meta);
  return substitute(templates_.final_prediction(order),
                    {{"[text]", text},
                     {"[type_of_task]", to_string(task)},
                     {"[class_block]", class_block}});
}

std::string render_class_block(const MetaInformation& meta) {
  std::vector<std::string> lines;
  lines.reserve(meta.size());
  for (const auto& c : meta.classes) {
    std::string line = "- Class " + std::to_string(c.index) + ": " + c.title;
    if (c.description && !c.description->empty()) line += ": " + *c.description;
    lines.push_back(std::move(line));
  }
  return internal::join(lines, "\n");
}

std::string render_open_inference(std::string_view text, TaskType task) {
  return PromptRenderer().open_inference(text, task);
}

std::string render_aggregation(const std::vector<PredictionSubset>& subsets,
                               TaskType task, int k) {
  return PromptRenderer().aggregation(subsets, task, k);
}

std::string render_final(std::string_view text, const MetaInformation& meta,
                         TaskType task, PromptOrder order) {
  return PromptRenderer().final_prediction(text, meta, task, order);
}

std::vector<std::string> MetaInformation::titles() const {
  std::vector<std::string> out;
  out.reserve(classes.size());
  for (const auto& c : classes) out.push_back(c.title);
  return out;
}

MetaInformation meta_from_titles(const std::vector<std::string>& titles) {
  MetaInformation meta;
  for (std::size_t i = 0; i < titles.size(); ++i) {
    meta.classes.push_back({static_cast<int>(i), titles[i], std::nullopt});
  }
  meta.source_votes = 0;
  return meta;
}

}  // namespace zerodl
