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

#include "zerodl/aggregation.h"

#include <gtest/gtest.h>

#include <map>
#include <mutex>
#include <random>
#include <set>

#include "zerodl/backends.h"

namespace zerodl {
namespace {

std::vector<std::string> repeat(const std::string& s, int n) {
  return std::vector<std::string>(n, s);
}

std::vector<std::string> concat(std::initializer_list<std::vector<std::string>> parts) {
  std::vector<std::string> out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

TEST(NormalizeLabelTest, Cleanup) {
  EXPECT_EQ(normalize_label("  Positive. "), "positive");
  EXPECT_EQ(normalize_label("**Sports**"), "sports");
  EXPECT_EQ(normalize_label("\"World  News\""), "world news");
  EXPECT_EQ(normalize_label("'Business'!"), "business");
  EXPECT_EQ(normalize_label("Sci/Tech"), "sci/tech");
  EXPECT_EQ(normalize_label(""), "");
}

TEST(HistogramTest, SortsAndDropsSingletons) {
  const auto hist = build_histogram(concat({repeat("Positive", 3), repeat("negative", 2),
                                            repeat("Negative.", 1), repeat("Mixed", 1),
                                            repeat("neutral", 3)}));
  ASSERT_EQ(hist.size(), 3u);
  EXPECT_EQ(hist.entries[0].label, "negative");
  EXPECT_EQ(hist.entries[0].count, 3);
  EXPECT_EQ(hist.entries[0].display, "negative");
  EXPECT_EQ(hist.entries[1].label, "neutral");
  EXPECT_EQ(hist.entries[2].label, "positive");
  EXPECT_EQ(hist.entries[2].display, "Positive");
}

TEST(HistogramTest, DisplayPrefersMostFrequentSpelling) {
  const auto hist = build_histogram(concat({repeat("sports", 1), repeat("Sports", 2)}));
  ASSERT_EQ(hist.size(), 1u);
  EXPECT_EQ(hist.entries[0].display, "Sports");
}

TEST(HistogramTest, AllSingletonsIsAnError) {
  EXPECT_THROW(build_histogram({"a", "b", "c"}), EmptyHistogramError);
  EXPECT_THROW(build_histogram({}), PreconditionError);
}

TEST(SubsetTest, NestedPrefixes) {
  const auto hist = build_histogram(
      concat({repeat("a", 5), repeat("b", 4), repeat("c", 3), repeat("d", 2)}));
  const auto family = build_subsets(hist);
  ASSERT_EQ(family.size(), 4u);
  EXPECT_EQ(family.subsets[0], (PredictionSubset{"a", "b", "c", "d"}));
  EXPECT_EQ(family.subsets[3], (PredictionSubset{"a"}));
  const auto capped = build_subsets(hist, 2);
  ASSERT_EQ(capped.size(), 2u);
  EXPECT_EQ(capped.subsets[0], (PredictionSubset{"a", "b"}));
  EXPECT_THROW(build_subsets(hist, 0), PreconditionError);
}

TEST(SubsetTest, RandomizedAlgebra) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<std::string> preds;
    std::map<std::string, int> truth;
    const int labels = 1 + static_cast<int>(rng() % 25);
    for (int l = 0; l < labels; ++l) {
      const int n = 1 + static_cast<int>(rng() % 9);
      truth["label" + std::to_string(l)] = n;
      for (int i = 0; i < n; ++i) preds.push_back("label" + std::to_string(l));
    }
    std::shuffle(preds.begin(), preds.end(), rng);
    PredictionHistogram hist;
    try {
      hist = build_histogram(preds);
    } catch (const EmptyHistogramError&) {
      for (const auto& [_, n] : truth) ASSERT_EQ(n, 1);
      continue;
    }
    for (std::size_t i = 0; i + 1 < hist.size(); ++i) {
      ASSERT_GE(hist.entries[i].count, hist.entries[i + 1].count);
    }
    const auto family = build_subsets(hist);
    const std::size_t u = hist.size();
    ASSERT_EQ(family.size(), u);
    std::map<std::string, std::size_t> occurrences;
    for (std::size_t idx = 0; idx < u; ++idx) {
      const auto& s = family.subsets[idx];
      ASSERT_EQ(s.size(), u - idx);
      if (idx + 1 < u) {
        const auto& smaller = family.subsets[idx + 1];
        ASSERT_TRUE(std::equal(smaller.begin(), smaller.end(), s.begin()));
      }
      for (const auto& l : s) {
        ASSERT_GE(truth.at(l), 2);
        ++occurrences[l];
      }
    }
    for (std::size_t i = 0; i < u; ++i) {
      ASSERT_EQ(occurrences[hist.entries[i].display], u - i);
    }
  }
}

TEST(ParseAggregationTest, ClassLines) {
  const auto classes = parse_aggregation_output(
      "Here are the classes:\n"
      "Class 0: Negative: the reviewer is unhappy\n"
      "Class 1: **Positive**\n");
  ASSERT_EQ(classes.size(), 2u);
  EXPECT_EQ(classes[0].title, "Negative");
  EXPECT_EQ(classes[0].description, "the reviewer is unhappy");
  EXPECT_EQ(classes[1].title, "Positive");
  EXPECT_EQ(classes[1].description, std::nullopt);
}

TEST(ParseAggregationTest, NumberedAndBulleted) {
  EXPECT_EQ(parse_aggregation_output("1. Sports\n2. Business\n3) World").size(), 3u);
  const auto bullets = parse_aggregation_output("- Sports\n- Business\n* Science");
  ASSERT_EQ(bullets.size(), 3u);
  EXPECT_EQ(bullets[2].title, "Science");
}

TEST(ParseAggregationTest, NestedBulletsIgnored) {
  const auto classes = parse_aggregation_output(
      "1. Sports\n   - football\n   - tennis\n2. Politics\n   - elections\n");
  ASSERT_EQ(classes.size(), 2u);
  EXPECT_EQ(classes[1].title, "Politics");
}

TEST(ParseAggregationTest, CommaFallbackAndDedupe) {
  const auto classes = parse_aggregation_output("The classes are: Sports, Business, sports.");
  ASSERT_EQ(classes.size(), 2u);
  EXPECT_EQ(classes[0].title, "Sports");
  EXPECT_EQ(classes[1].title, "Business");
  EXPECT_TRUE(parse_aggregation_output("I cannot do that.").empty());
}

ParsedOutput parsed(int size, std::vector<std::string> titles) {
  ParsedOutput p;
  p.subset_size = size;
  for (auto& t : titles) p.classes.push_back({std::move(t), std::nullopt});
  return p;
}

TEST(SelectTest, MajorityAmongExactK) {
  AggregationOutcome o;
  o.parsed = {parsed(5, {"A", "B", "C"}), parsed(4, {"b", "a"}), parsed(3, {"X", "Y"}),
              parsed(2, {"A", "B"}), parsed(1, {"A"})};
  select_meta_information(o, 2);
  EXPECT_EQ(o.accepted, (std::vector<int>{4, 3, 2}));
  ASSERT_TRUE(o.selected);
  EXPECT_EQ(o.selected->source_votes, 2);
  // Representative comes from the largest subset in the winning group.
  EXPECT_EQ(o.selected->titles(), (std::vector<std::string>{"b", "a"}));
  ASSERT_EQ(o.votes.size(), 2u);
  EXPECT_EQ(o.votes[0].first, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(o.votes[0].second, 2);
}

TEST(SelectTest, TieGoesToLargestSubset) {
  AggregationOutcome o;
  o.parsed = {parsed(3, {"Y", "X"}), parsed(2, {"A", "B"})};
  select_meta_information(o, 2);
  EXPECT_EQ(o.selected->titles(), (std::vector<std::string>{"Y", "X"}));
}

TEST(SelectTest, NoExactKLeavesSelectionEmpty) {
  AggregationOutcome o;
  o.parsed = {parsed(3, {"A", "B", "C"}), parsed(1, {"A"})};
  select_meta_information(o, 2);
  EXPECT_FALSE(o.selected);
  EXPECT_TRUE(o.accepted.empty());
}

TEST(AggregateTest, OneCallPerSubsetWithNestedLists) {
  std::mutex mu;
  std::vector<std::string> prompts;
  auto backend = std::make_shared<FunctionBackend>("fn", [&](const CompletionRequest& r) {
    std::lock_guard lock(mu);
    prompts.push_back(r.prompt_text);
    EXPECT_EQ(r.stage, Stage::kAggregation);
    if (r.prompt_text.find("S_3:") != std::string::npos) return std::string("1. A\n2. B\n3. C");
    return std::string("Class 0: Good\nClass 1: Bad");
  });
  Gateway gw(backend);
  const auto hist =
      build_histogram(concat({repeat("good", 4), repeat("bad", 3), repeat("meh", 2)}));
  const auto outcome = aggregate(hist, 2, gw, TaskType::kSentiment, {});
  EXPECT_EQ(prompts.size(), 3u);
  EXPECT_EQ(outcome.raw_outputs.size(), 3u);
  EXPECT_EQ(outcome.accepted, (std::vector<int>{2, 1}));
  EXPECT_EQ(outcome.selected->titles(), (std::vector<std::string>{"Good", "Bad"}));
  for (const auto& p : prompts) {
    EXPECT_NE(p.find("S_1:\ngood\n\nAggregate"), std::string::npos);
  }
}

TEST(AggregateTest, SelectionFailureCarriesOutcome) {
  auto backend = std::make_shared<FunctionBackend>(
      "fn", [](const CompletionRequest&) { return std::string("1. Only"); });
  Gateway gw(backend);
  const auto hist = build_histogram(concat({repeat("good", 2), repeat("bad", 2)}));
  try {
    aggregate(hist, 2, gw, TaskType::kSentiment, {});
    FAIL() << "expected SelectionFailedError";
  } catch (const SelectionFailedError& e) {
    EXPECT_EQ(e.outcome().raw_outputs.size(), 2u);
    EXPECT_FALSE(e.outcome().selected);
  }
}

}  // namespace
}  // namespace zerodl
