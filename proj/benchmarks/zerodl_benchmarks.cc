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

#include <benchmark/benchmark.h>

#include <random>

#include "zerodl/zerodl.h"

namespace {

zerodl::ConfusionMatrix random_matrix(int k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> d(0, 500);
  std::vector<std::vector<std::int64_t>> counts(k, std::vector<std::int64_t>(k));
  for (auto& row : counts) {
    for (auto& v : row) v = d(rng);
  }
  return zerodl::ConfusionMatrix::from_counts(std::move(counts));
}

void BM_BruteForceMapping(benchmark::State& state) {
  const auto m = random_matrix(static_cast<int>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(zerodl::best_mapping_bruteforce(m));
}
BENCHMARK(BM_BruteForceMapping)->DenseRange(2, 9)->Unit(benchmark::kMicrosecond);

void BM_AssignmentMapping(benchmark::State& state) {
  const auto m = random_matrix(static_cast<int>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(zerodl::best_mapping_assignment(m));
}
BENCHMARK(BM_AssignmentMapping)->DenseRange(2, 9)->Arg(14)->Unit(benchmark::kMicrosecond);

void BM_BuildHistogram(benchmark::State& state) {
  std::mt19937_64 rng(2);
  std::vector<std::string> preds;
  for (int i = 0; i < state.range(0); ++i) {
    preds.push_back("Label " + std::to_string(rng() % 200));
  }
  for (auto _ : state) benchmark::DoNotOptimize(zerodl::build_histogram(preds));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BuildHistogram)->Arg(1000)->Arg(25000);

void BM_RenderAggregation(benchmark::State& state) {
  std::vector<std::string> preds;
  for (int l = 0; l < state.range(0); ++l) {
    for (int n = 0; n < 2 + l % 5; ++n) preds.push_back("topic " + std::to_string(l));
  }
  const auto family = zerodl::build_subsets(zerodl::build_histogram(preds));
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        zerodl::render_aggregation(family.subsets, zerodl::TaskType::kTopic, 4));
  }
}
BENCHMARK(BM_RenderAggregation)->Arg(10)->Arg(100);

void BM_RenderFinal(benchmark::State& state) {
  const auto meta = zerodl::meta_from_titles(
      {"World", "Sports", "Business", "Science and Technology"});
  const std::string text(400, 'x');
  for (auto _ : state) {
    benchmark::DoNotOptimize(zerodl::render_final(text, meta, zerodl::TaskType::kTopic,
                                                  zerodl::PromptOrder::kTextThenClass));
  }
}
BENCHMARK(BM_RenderFinal);

}  // namespace
