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

#include "zerodl/evaluation.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <regex>

namespace zerodl {

std::optional<int> parse_prediction(std::string_view text, int k) {
  if (k < 2) throw PreconditionError("parse_prediction needs k >= 2");
  static const std::regex kAnchor(R"(\bclass\s+(\d+)\b)", std::regex::icase);
  const std::string s(text);
  for (auto it = std::sregex_iterator(s.begin(), s.end(), kAnchor);
       it != std::sregex_iterator(); ++it) {
    const std::string digits = (*it)[1].str();
    if (digits.size() > 6) continue;
    const int i = std::stoi(digits);
    if (i >= 0 && i < k) return i;
  }
  return std::nullopt;
}

ConfusionMatrix::ConfusionMatrix(std::vector<std::string> pred_labels,
                                 std::vector<std::string> gold_labels)
    : pred_labels_(std::move(pred_labels)),
      gold_labels_(std::move(gold_labels)),
      counts_(pred_labels_.size(), std::vector<std::int64_t>(gold_labels_.size(), 0)),
      unparsed_by_gold_(gold_labels_.size(), 0) {}

ConfusionMatrix ConfusionMatrix::zeros(int k) {
  std::vector<std::string> pred, gold;
  for (int i = 0; i < k; ++i) {
    pred.push_back("Class " + std::to_string(i));
    gold.push_back("Gold " + std::to_string(i));
  }
  return ConfusionMatrix(std::move(pred), std::move(gold));
}

ConfusionMatrix ConfusionMatrix::from_counts(
    std::vector<std::vector<std::int64_t>> counts) {
  const int rows = static_cast<int>(counts.size());
  const int cols = rows == 0 ? 0 : static_cast<int>(counts.front().size());
  std::vector<std::string> pred, gold;
  for (int i = 0; i < rows; ++i) pred.push_back("Class " + std::to_string(i));
  for (int j = 0; j < cols; ++j) gold.push_back("Gold " + std::to_string(j));
  ConfusionMatrix m(std::move(pred), std::move(gold));
  for (int i = 0; i < rows; ++i) {
    if (static_cast<int>(counts[i].size()) != cols) {
      throw PreconditionError("ragged confusion counts");
    }
    for (int j = 0; j < cols; ++j) m.add(i, j, counts[i][j]);
  }
  return m;
}

void ConfusionMatrix::add(int pred, int gold, std::int64_t n) {
  if (pred < 0 || pred >= rows() || gold < 0 || gold >= cols()) {
    throw PreconditionError("confusion index out of range");
  }
  if (n < 0) throw PreconditionError("negative confusion count");
  counts_[pred][gold] += n;
}

void ConfusionMatrix::add_unparsed(int gold, std::int64_t n) {
  if (gold < 0 || gold >= cols()) throw PreconditionError("gold index out of range");
  unparsed_by_gold_[gold] += n;
}

std::int64_t ConfusionMatrix::unparsed() const {
  return std::accumulate(unparsed_by_gold_.begin(), unparsed_by_gold_.end(),
                         std::int64_t{0});
}

std::int64_t ConfusionMatrix::total() const {
  std::int64_t sum = unparsed();
  for (const auto& row : counts_) {
    sum = std::accumulate(row.begin(), row.end(), sum);
  }
  return sum;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string ConfusionMatrix::to_csv() const {
  std::string out = "predicted\\gold";
  for (const auto& g : gold_labels_) out += "," + csv_field(g);
  out += '\n';
  for (int i = 0; i < rows(); ++i) {
    out += csv_field(pred_labels_[i]);
    for (int j = 0; j < cols(); ++j) out += "," + std::to_string(counts_[i][j]);
    out += '\n';
  }
  out += "unparsed";
  for (int j = 0; j < cols(); ++j) out += "," + std::to_string(unparsed_by_gold_[j]);
  out += '\n';
  return out;
}

std::string_view to_string(MappingMethod method) {
  return method == MappingMethod::kBruteForce ? "brute_force" : "assignment_algorithm";
}

namespace {

void require_square(const ConfusionMatrix& m) {
  if (m.rows() != m.cols()) {
    throw PreconditionError("best mapping needs a square confusion matrix (" +
                            std::to_string(m.rows()) + "x" +
                            std::to_string(m.cols()) + ")");
  }
}

void finish(MappingResult& r, const ConfusionMatrix& m) {
  r.matched = 0;
  for (int i = 0; i < m.rows(); ++i) r.matched += m.at(i, r.assignment[i]);
  const std::int64_t total = m.total();
  r.accuracy = total == 0 ? 0.0
                          : static_cast<double>(r.matched) / static_cast<double>(total);
}

}  // namespace

MappingResult best_mapping_bruteforce(const ConfusionMatrix& confusion) {
  require_square(confusion);
  const int k = confusion.rows();
  if (k > kBruteForceMaxClasses) {
    throw MappingGuardError("brute-force mapping limited to k <= " +
                            std::to_string(kBruteForceMaxClasses) +
                            "; use the assignment solver");
  }
  std::vector<int> perm(k);
  std::iota(perm.begin(), perm.end(), 0);
  MappingResult best;
  best.method = MappingMethod::kBruteForce;
  std::int64_t best_score = -1;
  // next_permutation visits bijections in lexicographic order, so keeping
  // only strict improvements resolves ties toward the smallest vector.
  do {
    std::int64_t score = 0;
    for (int i = 0; i < k; ++i) score += confusion.at(i, perm[i]);
    if (score > best_score) {
      best_score = score;
      best.assignment = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  finish(best, confusion);
  return best;
}

MappingResult best_mapping_assignment(const ConfusionMatrix& confusion) {
  require_square(confusion);
  const int n = confusion.rows();
  MappingResult result;
  result.method = MappingMethod::kAssignment;
  if (n == 0) return result;

  // Shortest augmenting path Hungarian method on cost = -count, 1-based.
  constexpr std::int64_t kInf = std::numeric_limits<std::int64_t>::max() / 4;
  std::vector<std::int64_t> u(n + 1, 0), v(n + 1, 0);
  std::vector<int> match_col(n + 1, 0), way(n + 1, 0);
  for (int row = 1; row <= n; ++row) {
    match_col[0] = row;
    int col0 = 0;
    std::vector<std::int64_t> minv(n + 1, kInf);
    std::vector<char> used(n + 1, 0);
    do {
      used[col0] = 1;
      const int row0 = match_col[col0];
      std::int64_t delta = kInf;
      int col1 = 0;
      for (int col = 1; col <= n; ++col) {
        if (used[col]) continue;
        const std::int64_t cost = -confusion.at(row0 - 1, col - 1);
        const std::int64_t reduced = cost - u[row0] - v[col];
        if (reduced < minv[col]) {
          minv[col] = reduced;
          way[col] = col0;
        }
        if (minv[col] < delta) {
          delta = minv[col];
          col1 = col;
        }
      }
      for (int col = 0; col <= n; ++col) {
        if (used[col]) {
          u[match_col[col]] += delta;
          v[col] -= delta;
        } else {
          minv[col] -= delta;
        }
      }
      col0 = col1;
    } while (match_col[col0] != 0);
    do {
      const int col1 = way[col0];
      match_col[col0] = match_col[col1];
      col0 = col1;
    } while (col0 != 0);
  }
  result.assignment.assign(n, -1);
  for (int col = 1; col <= n; ++col) result.assignment[match_col[col] - 1] = col - 1;
  finish(result, confusion);
  return result;
}

EvaluationReport evaluate(ConfusionMatrix confusion,
                          std::optional<MappingMethod> method) {
  EvaluationReport report;
  const int k = confusion.rows();
  const MappingMethod chosen =
      method ? *method
             : (k <= kBruteForceDefaultClasses ? MappingMethod::kBruteForce
                                               : MappingMethod::kAssignment);
  report.mapping = chosen == MappingMethod::kBruteForce
                       ? best_mapping_bruteforce(confusion)
                       : best_mapping_assignment(confusion);
  report.evaluated = confusion.total();
  for (int g = 0; g < confusion.cols(); ++g) {
    ClassMetrics cm;
    cm.gold_label = confusion.gold_labels()[g];
    for (int p = 0; p < k; ++p) {
      if (report.mapping.assignment[p] == g) cm.mapped_pred = p;
    }
    std::int64_t col_total = confusion.unparsed_for(g);
    for (int p = 0; p < k; ++p) col_total += confusion.at(p, g);
    if (cm.mapped_pred >= 0) {
      const auto& row = confusion.counts()[cm.mapped_pred];
      const std::int64_t row_total =
          std::accumulate(row.begin(), row.end(), std::int64_t{0});
      const std::int64_t hit = confusion.at(cm.mapped_pred, g);
      cm.precision = row_total == 0 ? 0.0 : static_cast<double>(hit) / row_total;
      cm.recall = col_total == 0 ? 0.0 : static_cast<double>(hit) / col_total;
    }
    report.per_class.push_back(std::move(cm));
  }
  report.confusion = std::move(confusion);
  return report;
}

EvaluationReport evaluate(const std::vector<std::optional<int>>& predictions,
                          const std::vector<int>& gold,
                          const std::vector<std::string>& pred_labels,
                          const std::vector<std::string>& gold_labels,
                          std::optional<MappingMethod> method) {
  if (predictions.size() != gold.size()) {
    throw PreconditionError("predictions and gold labels differ in length");
  }
  ConfusionMatrix confusion(pred_labels, gold_labels);
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (predictions[i]) {
      confusion.add(*predictions[i], gold[i]);
    } else {
      confusion.add_unparsed(gold[i]);
    }
  }
  return evaluate(std::move(confusion), method);
}

Summary summarize(const std::vector<double>& accuracies,
                  const std::vector<std::int64_t>& sizes) {
  if (accuracies.empty()) throw PreconditionError("summarize needs at least one report");
  if (accuracies.size() != sizes.size()) {
    throw PreconditionError("summarize: accuracies and sizes differ in length");
  }
  Summary s;
  double weighted = 0.0;
  std::int64_t total = 0;
  for (std::size_t i = 0; i < accuracies.size(); ++i) {
    if (sizes[i] < 0) throw PreconditionError("negative dataset size");
    s.macro += accuracies[i];
    weighted += accuracies[i] * static_cast<double>(sizes[i]);
    total += sizes[i];
  }
  s.macro /= static_cast<double>(accuracies.size());
  s.micro = total == 0 ? 0.0 : weighted / static_cast<double>(total);
  return s;
}

Summary summarize(const std::vector<EvaluationReport>& reports) {
  std::vector<double> acc;
  std::vector<std::int64_t> sizes;
  for (const auto& r : reports) {
    acc.push_back(r.mapping.accuracy);
    sizes.push_back(r.evaluated);
  }
  return summarize(acc, sizes);
}

MeanStd mean_std(const std::vector<double>& values) {
  MeanStd out;
  if (values.empty()) return out;
  out.mean = std::accumulate(values.begin(), values.end(), 0.0) /
             static_cast<double>(values.size());
  if (values.size() < 2) return out;
  double ss = 0.0;
  for (double v : values) ss += (v - out.mean) * (v - out.mean);
  out.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  return out;
}

}  // namespace zerodl
