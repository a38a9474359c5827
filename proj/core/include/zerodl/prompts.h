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

#ifndef ZERODL_PROMPTS_H_
#define ZERODL_PROMPTS_H_

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "zerodl/corpus.h"
#include "zerodl/meta.h"

namespace zerodl {

enum class Stage { kOpenInference, kAggregation, kFinalPrediction };

std::string_view to_string(Stage stage);
Stage parse_stage(std::string_view name);

// Where the class-description block sits relative to the input text in a
// final-prediction prompt.
enum class PromptOrder { kClassThenText, kTextThenClass };

// "ct" / "tc".
std::string_view to_string(PromptOrder order);
PromptOrder parse_prompt_order(std::string_view name);

// Prompt bodies with bracketed placeholders:
//   [text]               input instance text
//   [type_of_task]       "sentiment" or "topic"
//   [NUM_CLUSTER_CLASS]  requested class count (aggregation)
//   [subset_block]       the rendered S_U ... S_1 lists (aggregation)
//   [class_block]        "- Class i: ..." lines (final prediction)
// Placeholders are substituted in a single left-to-right pass, so text that
// itself contains a placeholder name is never expanded.
struct PromptTemplates {
  std::string open_inference;
  std::string aggregation;
  std::string final_text_then_class;
  std::string final_class_then_text;

  static PromptTemplates defaults();

  // JSON object with any of the keys "open_inference", "aggregation",
  // "final_prediction_tc", "final_prediction_ct"; missing keys keep the
  // default body. Every body is checked for unknown placeholders.
  static PromptTemplates load(const std::filesystem::path& path);

  const std::string& final_prediction(PromptOrder order) const {
    return order == PromptOrder::kTextThenClass ? final_text_then_class
                                                : final_class_then_text;
  }
};

// Labels of one aggregation subset, most frequent first.
using PredictionSubset = std::vector<std::string>;

class PromptRenderer {
 public:
  PromptRenderer() : templates_(PromptTemplates::defaults()) {}
  explicit PromptRenderer(PromptTemplates templates);

  std::string open_inference(std::string_view text, TaskType task) const;

  // `subsets` is ordered S_U first, S_1 last.
  std::string aggregation(const std::vector<PredictionSubset>& subsets,
                          TaskType task, int k) const;

  std::string final_prediction(std::string_view text, const MetaInformation& meta,
                               TaskType task, PromptOrder order) const;

  const PromptTemplates& templates() const { return templates_; }

 private:
  PromptTemplates templates_;
};

// Free functions over the default templates.
std::string render_open_inference(std::string_view text, TaskType task);
std::string render_aggregation(const std::vector<PredictionSubset>& subsets,
                               TaskType task, int k);
std::string render_final(std::string_view text, const MetaInformation& meta,
                         TaskType task, PromptOrder order);

// "- Class 0: Title: description" lines joined by '\n'.
std::string render_class_block(const MetaInformation& meta);

}  // namespace zerodl

#endif  // ZERODL_PROMPTS_H_
