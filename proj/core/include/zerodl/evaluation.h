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

#ifndef ZERODL_EVALUATION_H_
#define ZERODL_EVALUATION_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "zerodl/errors.h"

namespace zerodl {

// Index of the first "Class {i}" anchor (case-insensitive, word-bounded)
// with 0 <= i < k, or nullopt when no such anchor exists.
std::optional<int> parse_prediction(std::string_view text, int k);

// Rows are predicted clusters, columns gold classes.
class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;
  ConfusionMatrix(std::vector<std::string> pred_labels,
                  std::vector<std::string> gold_labels);

  // Square zero matrix with generic labels; convenient for tests.
  static ConfusionMatrix zeros(int k);
  static ConfusionMatrix from_counts(std::vector<std::vector<std::int64_t>> counts);

  void add(int pred, int gold, std::int64_t n = 1);
  void add_unparsed(int gold, std::int64_t n = 1);

  int rows() const { return static_cast<int>(pred_labels_.size()); }
  int cols() const { return static_cast<int>(gold_labels_.size()); }
  std::int64_t at(int pred, int gold) const { return counts_[pred][gold]; }
  const std::vector<std::vector<std::int64_t>>& counts() const { return counts_; }
  const std::vector<std::string>& pred_labels() const { return pred_labels_; }
  const std::vector<std::string>& gold_labels() const { return gold_labels_; }

  std::int64_t unparsed() const;
  std::int64_t unparsed_for(int gold) const { return unparsed_by_gold_[gold]; }
  // sum(counts) + unparsed.
  std::int64_t total() const;

  // Gold labels as columns, predicted classes as rows.
  std::string to_csv() const;

 private:
  std::vector<std::string> pred_labels_;
  std::vector<std::string> gold_labels_;
  std::vector<std::vector<std::int64_t>> counts_;
  std::vector<std::int64_t> unparsed_by_gold_;
};

enum class MappingMethod { kBruteForce, kAssignment };

std::string_view to_string(MappingMethod method);

struct MappingResult {
  // assignment[pred] = gold; a bijection.
  std::vector<int> assignment;
  std::int64_t matched = 0;
  double accuracy = 0.0;
  MappingMethod method = MappingMethod::kBruteForce;
};

// Largest k accepted by the exhaustive search.
inline constexpr int kBruteForceMaxClasses = 9;
// Above this size evaluate() switches to the assignment solver.
inline constexpr int kBruteForceDefaultClasses = 7;

class MappingGuardError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

// Scores all k! bijections; ties go to the lexicographically smallest
// assignment. Throws MappingGuardError when k > kBruteForceMaxClasses.
MappingResult best_mapping_bruteforce(const ConfusionMatrix& confusion);

// Maximum-weight perfect matching (Hungarian method, O(k^3)).
MappingResult best_mapping_assignment(const ConfusionMatrix& confusion);

struct ClassMetrics {
  std::string gold_label;
  int mapped_pred = -1;
  double precision = 0.0;
  double recall = 0.0;
};

struct EvaluationReport {
  ConfusionMatrix confusion;
  MappingResult mapping;
  std::vector<ClassMetrics> per_class;
  std::int64_t evaluated = 0;
};

// Builds the confusion matrix from parsed predictions (nullopt = unparsed)
// and gold indices, then finds the best mapping.
EvaluationReport evaluate(const std::vector<std::optional<int>>& predictions,
                          const std::vector<int>& gold,
                          const std::vector<std::string>& pred_labels,
                          const std::vector<std::string>& gold_labels,
                          std::optional<MappingMethod> method = std::nullopt);

// Same, for an already assembled confusion matrix.
EvaluationReport evaluate(ConfusionMatrix confusion,
                          std::optional<MappingMethod> method = std::nullopt);

struct Summary {
  double macro = 0.0;  // unweighted mean of accuracies
  double micro = 0.0;  // instance-weighted mean
};

Summary summarize(const std::vector<double>& accuracies,
                  const std::vector<std::int64_t>& sizes);
Summary summarize(const std::vector<EvaluationReport>& reports);

// Mean and sample standard deviation (0 for a single value).
struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};
MeanStd mean_std(const std::vector<double>& values);

}  // namespace zerodl

#endif  // ZERODL_EVALUATION_H_
