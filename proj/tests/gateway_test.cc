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

#include "zerodl/gateway.h"

#include <gtest/gtest.h>

#include <atomic>
#include <thread>

#include "json.hpp"
#include "test_util.h"
#include "zerodl/backends.h"
#include "zerodl/errors.h"

namespace zerodl {
namespace {

using namespace std::chrono_literals;

CompletionRequest request(const std::string& prompt) {
  CompletionRequest r;
  r.model = "m";
  r.prompt_text = prompt;
  return r;
}

GatewayOptions no_sleep(int parallel = 4) {
  GatewayOptions o;
  o.max_parallel = parallel;
  o.sleep = [](std::chrono::milliseconds) {};
  return o;
}

std::shared_ptr<FunctionBackend> echo(std::atomic<int>* calls = nullptr) {
  return std::make_shared<FunctionBackend>("echo", [calls](const CompletionRequest& r) {
    if (calls) ++*calls;
    return "re: " + r.prompt_text;
  });
}

TEST(FingerprintTest, StableAndSensitive) {
  const auto base = request("hello");
  const std::string fp = fingerprint(base, "b");
  EXPECT_EQ(fp.size(), 64u);
  EXPECT_EQ(fp, fingerprint(base, "b"));
  EXPECT_NE(fp, fingerprint(base, "c"));
  auto other = base;
  other.temperature = 0.5;
  EXPECT_NE(fp, fingerprint(other, "b"));
  other = base;
  other.max_tokens = 65;
  EXPECT_NE(fp, fingerprint(other, "b"));
  other = base;
  other.model = "n";
  EXPECT_NE(fp, fingerprint(other, "b"));
  other = base;
  other.seed = 1;
  EXPECT_NE(fp, fingerprint(other, "b"));
  // The stage is bookkeeping only.
  other = base;
  other.stage = Stage::kFinalPrediction;
  EXPECT_EQ(fp, fingerprint(other, "b"));
}

TEST(FingerprintTest, FieldBoundariesMatter) {
  auto a = request("b");
  a.model = "a";
  auto b = request("");
  b.model = "ab";
  EXPECT_NE(fingerprint(a, "x"), fingerprint(b, "x"));
}

TEST(GatewayTest, ValidatesRequests) {
  Gateway gw(echo(), no_sleep());
  EXPECT_THROW(gw.complete(request("")), PreconditionError);
  auto r = request("x");
  r.temperature = -1;
  EXPECT_THROW(gw.complete(r), PreconditionError);
  r = request("x");
  r.max_tokens = 0;
  EXPECT_THROW(gw.complete(r), PreconditionError);
  EXPECT_THROW(gw.complete_batch({}), PreconditionError);
  EXPECT_THROW(Gateway(nullptr), PreconditionError);
  GatewayOptions bad;
  bad.max_parallel = 0;
  EXPECT_THROW(Gateway(echo(), bad), PreconditionError);
}

TEST(GatewayTest, InMemoryCache) {
  std::atomic<int> calls{0};
  Gateway gw(echo(&calls), no_sleep());
  const auto first = gw.complete(request("a"));
  const auto second = gw.complete(request("a"));
  EXPECT_FALSE(first.cached);
  EXPECT_TRUE(second.cached);
  EXPECT_EQ(second.text, "re: a");
  EXPECT_EQ(first.request_fingerprint, second.request_fingerprint);
  EXPECT_EQ(calls.load(), 1);
  EXPECT_EQ(gw.stats().cache_hits, 1u);
  EXPECT_EQ(gw.stats().requests, 2u);
}

TEST(GatewayTest, DiskCacheSurvivesRestart) {
  testing::TempDir dir;
  GatewayOptions opts = no_sleep();
  opts.cache_dir = dir.path();
  std::string fp;
  {
    Gateway gw(echo(), opts);
    fp = gw.complete(request("persist me")).request_fingerprint;
  }
  const auto record = nlohmann::json::parse(testing::slurp(dir / (fp + ".json")));
  EXPECT_EQ(record.at("text"), "re: persist me");
  EXPECT_EQ(record.at("backend_id"), "echo");
  EXPECT_EQ(record.at("request").at("prompt_text"), "persist me");
  EXPECT_TRUE(record.contains("timestamp"));

  std::atomic<int> calls{0};
  Gateway gw(echo(&calls), opts);
  const auto r = gw.complete(request("persist me"));
  EXPECT_TRUE(r.cached);
  EXPECT_EQ(calls.load(), 0);
  EXPECT_EQ(gw.stats().backend_calls, 0u);
}

TEST(GatewayTest, CorruptCacheFileIsAMiss) {
  testing::TempDir dir;
  GatewayOptions opts = no_sleep();
  opts.cache_dir = dir.path();
  const auto req = request("q");
  testing::spit(dir / (fingerprint(req, "echo") + ".json"), "{truncated");
  Gateway gw(echo(), opts);
  EXPECT_FALSE(gw.complete(req).cached);
}

TEST(GatewayTest, SingleFlight) {
  std::atomic<int> calls{0};
  std::atomic<bool> release{false};
  auto backend = std::make_shared<FunctionBackend>("slow", [&](const CompletionRequest&) {
    ++calls;
    while (!release.load()) std::this_thread::sleep_for(1ms);
    return std::string("done");
  });
  Gateway gw(backend, no_sleep(8));
  std::vector<std::jthread> threads;
  std::vector<CompletionResult> results(8);
  for (int i = 0; i < 8; ++i) {
    threads.emplace_back([&, i] { results[i] = gw.complete(request("same")); });
  }
  std::this_thread::sleep_for(50ms);
  release = true;
  threads.clear();
  EXPECT_EQ(calls.load(), 1);
  int fresh = 0;
  for (const auto& r : results) {
    EXPECT_EQ(r.text, "done");
    fresh += r.cached ? 0 : 1;
  }
  EXPECT_EQ(fresh, 1);
}

TEST(GatewayTest, BoundsInFlightCalls) {
  std::atomic<int> now{0};
  std::atomic<int> peak{0};
  auto backend = std::make_shared<FunctionBackend>("count", [&](const CompletionRequest& r) {
    const int n = ++now;
    int p = peak.load();
    while (n > p && !peak.compare_exchange_weak(p, n)) {
    }
    std::this_thread::sleep_for(2ms);
    --now;
    return r.prompt_text;
  });
  Gateway gw(backend, no_sleep(3));
  std::vector<CompletionRequest> reqs;
  for (int i = 0; i < 40; ++i) reqs.push_back(request("p" + std::to_string(i)));
  const auto items = gw.complete_batch(reqs);
  for (std::size_t i = 0; i < items.size(); ++i) {
    ASSERT_TRUE(items[i].ok());
    EXPECT_EQ(items[i].result->text, "p" + std::to_string(i));
  }
  EXPECT_LE(peak.load(), 3);
  EXPECT_LE(gw.stats().max_in_flight, 3);
  EXPECT_GE(gw.stats().max_in_flight, 1);
}

TEST(GatewayTest, RetriesTransportErrorsWithBackoff) {
  std::atomic<int> calls{0};
  auto backend = std::make_shared<FunctionBackend>("flaky", [&](const CompletionRequest&) {
    if (++calls < 3) throw TransportError("busy", 429);
    return std::string("ok");
  });
  std::vector<std::chrono::milliseconds> sleeps;
  GatewayOptions opts;
  opts.sleep = [&](std::chrono::milliseconds d) { sleeps.push_back(d); };
  Gateway gw(backend, opts);
  EXPECT_EQ(gw.complete(request("x")).text, "ok");
  EXPECT_EQ(calls.load(), 3);
  EXPECT_EQ(sleeps, (std::vector<std::chrono::milliseconds>{500ms, 1000ms}));
  EXPECT_EQ(gw.stats().backend_calls, 3u);
}

TEST(GatewayTest, GivesUpAfterRetryMax) {
  std::atomic<int> calls{0};
  auto backend = std::make_shared<FunctionBackend>("down", [&](const CompletionRequest&) {
    ++calls;
    throw TransportError("down", 503);
    return std::string();
  });
  GatewayOptions opts = no_sleep();
  opts.retry.retry_max = 2;
  Gateway gw(backend, opts);
  EXPECT_THROW(gw.complete(request("x")), TransportError);
  EXPECT_EQ(calls.load(), 3);
  EXPECT_EQ(gw.stats().failures, 1u);
}

TEST(GatewayTest, RequestErrorsAreNotRetried) {
  std::atomic<int> calls{0};
  auto backend = std::make_shared<FunctionBackend>("reject", [&](const CompletionRequest&) {
    ++calls;
    throw RequestError("bad key", 401);
    return std::string();
  });
  Gateway gw(backend, no_sleep());
  try {
    gw.complete(request("x"));
    FAIL();
  } catch (const RequestError& e) {
    EXPECT_EQ(e.http_status(), 401);
  }
  EXPECT_EQ(calls.load(), 1);
}

TEST(GatewayTest, BackoffIsCapped) {
  RetryPolicy p;
  EXPECT_EQ(p.backoff(0), 500ms);
  EXPECT_EQ(p.backoff(3), 4000ms);
  EXPECT_EQ(p.backoff(20), 30000ms);
}

TEST(GatewayTest, BatchReportsPerItemErrors) {
  auto backend = std::make_shared<FunctionBackend>("mixed", [](const CompletionRequest& r) {
    if (r.prompt_text == "bad") throw RequestError("nope", 400);
    return r.prompt_text;
  });
  GatewayOptions opts = no_sleep(1);
  Gateway gw(backend, opts);
  auto empty = request("x");
  empty.prompt_text.clear();
  const auto items = gw.complete_batch({request("a"), request("bad"), empty, request("b")});
  EXPECT_TRUE(items[0].ok());
  EXPECT_EQ(items[1].error_kind, BatchErrorKind::kRequest);
  EXPECT_EQ(items[1].http_status, 400);
  EXPECT_EQ(items[2].error_kind, BatchErrorKind::kInvalidRequest);
  EXPECT_TRUE(items[3].ok());

  const auto ff = gw.complete_batch({request("bad"), request("c"), request("d")}, true);
  EXPECT_EQ(ff[0].error_kind, BatchErrorKind::kRequest);
  EXPECT_EQ(ff[1].error_kind, BatchErrorKind::kSkipped);
  EXPECT_EQ(ff[2].error_kind, BatchErrorKind::kSkipped);
}

TEST(GatewayTest, AuditLog) {
  testing::TempDir dir;
  GatewayOptions opts = no_sleep();
  opts.log_path = dir / "log.jsonl";
  {
    Gateway gw(echo(), opts);
    gw.complete(request("a"));
    gw.complete(request("a"));
  }
  const auto lines = testing::slurp(dir / "log.jsonl");
  const auto first = nlohmann::json::parse(lines.substr(0, lines.find('\n')));
  EXPECT_EQ(first.at("cached"), false);
  EXPECT_EQ(first.at("fingerprint").get<std::string>().size(), 64u);
  EXPECT_EQ(std::count(lines.begin(), lines.end(), '\n'), 2);
}

TEST(MockBackendTest, RulesInOrder) {
  const auto script = MockScript::from_json(R"js({
    "default": "fallback",
    "rules": [
      {"stage": "aggregation", "response": "agg"},
      {"contains": "apple", "response": "fruit"},
      {"regex": "number (\\d+)", "response": "Class $1"}
    ]})js");
  MockBackend mock(script);
  auto r = request("an apple a day");
  EXPECT_EQ(mock.complete(r), "fruit");
  r.stage = Stage::kAggregation;
  EXPECT_EQ(mock.complete(r), "agg");
  EXPECT_EQ(mock.complete(request("pick number 3")), "Class 3");
  EXPECT_EQ(mock.complete(request("nothing")), "fallback");
}

TEST(MockBackendTest, IdTracksScript) {
  MockBackend a(MockScript::from_json(R"({"default": "x"})"));
  MockBackend b(MockScript::from_json(R"({"default": "y"})"));
  MockBackend c(MockScript::from_json(R"({"default": "x"})"));
  EXPECT_NE(a.id(), b.id());
  EXPECT_EQ(a.id(), c.id());
  EXPECT_EQ(a.id().rfind("mock:", 0), 0u);
}

TEST(MockBackendTest, BadScripts) {
  EXPECT_THROW(MockScript::from_json("[1]"), ValidationError);
  EXPECT_THROW(MockScript::from_json(R"({"rules": [{"contains": "x"}]})"), ValidationError);
  EXPECT_THROW(MockBackend(MockScript::from_json(
                   R"({"rules": [{"regex": "(", "response": "x"}]})")),
               ValidationError);
}

}  // namespace
}  // namespace zerodl
