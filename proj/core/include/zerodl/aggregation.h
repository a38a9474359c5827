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

#ifndef ZERODL_AGGREGATION_H_
#define ZERODL_AGGREGATION_H_

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "zerodl/corpus.h"
#include "zerodl/errors.h"
#include "zerodl/gateway.h"
#include "zerodl/meta.h"
#include "zerodl/prompts.h"

namespace zerodl {

// Grouping key for free-form labels: trims, collapses internal whitespace,
// lower-cases ASCII, strips markdown emphasis, wrapping quotes and trailing
// punctuation. Idempotent.
std::string normalize_label(std::string_view raw);

struct HistogramEntry {
  std::string label;    // normalized key
  std::string display;  // most frequent original spelling
  int count = 0;

  friend bool operator==(const HistogramEntry&, const HistogramEntry&) = default;
};

// Open-ended predictions sorted by count (descending), then label.
// Labels seen only once are not present.
struct PredictionHistogram {
  std::vector<HistogramEntry> entries;

  std::size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }

  friend bool operator==(const PredictionHistogram&,
                         const PredictionHistogram&) = default;
};

// Throws PreconditionError for an empty input and EmptyHistogramError when
// every prediction is a singleton.
PredictionHistogram build_histogram(const std::vector<std::string>& raw_predictions);

// Nested prefixes of the histogram, largest first: subsets[0] is S_U and
// subsets.back() is S_1. Entries hold display spellings.
struct SubsetFamily {
  std::vector<PredictionSubset> subsets;

  std::size_t size() const { return subsets.size(); }
};

// With `max_labels`, only the most frequent `max_labels` predictions take
// part, which bounds both the number of aggregation calls and prompt length.
SubsetFamily build_subsets(const PredictionHistogram& hist,
                           std::optional<std::size_t> max_labels = std::nullopt);

struct ParsedClass {
  std::string title;
  std::optional<std::string> description;

  friend bool operator==(const ParsedClass&, const ParsedClass&) = default;
};

// Lenient reader for aggregation replies. Understands "Class i: Title[: d]",
// "i. Title", "- Title", "**Title**: d" and a bare comma-separated list.
// Titles repeated after normalization are collapsed. Returns an empty list
// when nothing parses.
std::vector<ParsedClass> parse_aggregation_output(std::string_view text);

struct SubsetOutput {
  int subset_size = 0;  // j for S_j
  std::string text;
  std::string fingerprint;
  std::optional<std::string> error;
};

struct ParsedOutput {
  int subset_size = 0;
  std::vector<ParsedClass> classes;
};

struct AggregationOutcome {
  std::vector<SubsetOutput> raw_outputs;
  std::vector<ParsedOutput> parsed;
  // Subset sizes whose reply had exactly k classes.
  std::vector<int> accepted;
  // Votes per accepted class set, keyed by sorted normalized titles.
  std::vector<std::pair<std::vector<std::string>, int>> votes;
  std::optional<MetaInformation> selected;
};

class SelectionFailedError : public Error {
 public:
  SelectionFailedError(const std::string& what, AggregationOutcome outcome)
      : Error(what), outcome_(std::move(outcome)) {}
  const AggregationOutcome& outcome() const { return outcome_; }

 private:
  AggregationOutcome outcome_;
};

struct AggregationOptions {
  std::string model;
  double temperature = 0.0;
  int max_tokens = 1024;
  std::optional<std::size_t> max_subsets;
  std::optional<std::uint64_t> seed;
};

// Picks the winner among parsed replies. Keeps replies with exactly k
// classes, groups them by their normalized title set and selects the group
// with most votes; ties go to the group holding the reply from the largest
// subset, then to the lexicographically smaller key. The reply from the
// largest subset in the winning group supplies titles and descriptions.
void select_meta_information(AggregationOutcome& outcome, int k);

// One aggregation completion per subset, then select_meta_information.
// Throws SelectionFailedError (carrying every raw reply) when no reply has
// exactly k classes.
AggregationOutcome aggregate(const PredictionHistogram& hist, int k,
                             Gateway& gateway, TaskType task,
                             const AggregationOptions& options,
                             const PromptRenderer& renderer = PromptRenderer());

}  // namespace zerodl

#endif  // ZERODL_AGGREGATION_H_
