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

#ifndef ZERODL_GATEWAY_H_
#define ZERODL_GATEWAY_H_

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "zerodl/prompts.h"

namespace zerodl {

struct CompletionRequest {
  std::string model;
  std::string prompt_text;
  double temperature = 0.0;
  int max_tokens = 64;
  Stage stage = Stage::kOpenInference;
  // Sampling seed forwarded to the endpoint. Only part of the fingerprint
  // when set, so unseeded requests hash over exactly
  // (backend, model, prompt, temperature, max_tokens).
  std::optional<std::uint64_t> seed;

  // Throws PreconditionError.
  void validate() const;
};

struct CompletionResult {
  std::string text;
  std::string request_fingerprint;
  std::string backend_id;
  bool cached = false;
};

// Stable SHA-256 (hex) content hash of a request as sent to `backend_id`.
std::string fingerprint(const CompletionRequest& req, std::string_view backend_id);

// A completion provider. Implementations throw TransportError for retryable
// failures and RequestError for permanent ones.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string id() const = 0;
  virtual std::string complete(const CompletionRequest& req) = 0;
};

// Append-only directory of `{fingerprint}.json` records holding
// {request, text, timestamp, backend_id}. Reads are concurrent, writes are
// serialized and atomic (write-then-rename).
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir);

  std::optional<std::string> lookup(const std::string& fingerprint);
  void store(const std::string& fingerprint, const CompletionRequest& req,
             std::string_view backend_id, const std::string& text);

  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  std::shared_mutex mu_;
  std::unordered_map<std::string, std::string> memory_;
  std::mutex write_mu_;
};

struct RetryPolicy {
  int retry_max = 3;
  std::chrono::milliseconds initial_backoff{500};
  double multiplier = 2.0;
  std::chrono::milliseconds max_backoff{30000};

  // Delay before retry number `attempt` (0-based).
  std::chrono::milliseconds backoff(int attempt) const;
};

struct GatewayOptions {
  int max_parallel = 4;
  RetryPolicy retry;
  // No directory means an in-process cache only.
  std::optional<std::filesystem::path> cache_dir;
  // JSONL audit log of every completion fingerprint.
  std::optional<std::filesystem::path> log_path;
  // Replaceable for tests.
  std::function<void(std::chrono::milliseconds)> sleep;
};

struct GatewayStats {
  std::uint64_t requests = 0;
  std::uint64_t backend_calls = 0;  // attempts, including retries
  std::uint64_t cache_hits = 0;
  std::uint64_t failures = 0;
  int max_in_flight = 0;
};

enum class BatchErrorKind { kNone, kInvalidRequest, kRequest, kTransport, kSkipped, kOther };

struct BatchItem {
  std::optional<CompletionResult> result;
  BatchErrorKind error_kind = BatchErrorKind::kNone;
  std::string error;
  int http_status = 0;

  bool ok() const { return result.has_value(); }
};

// Shareable completion front end: validation, content-addressed caching,
// single-flight deduplication, retries with exponential backoff and a bound
// on concurrent backend calls.
class Gateway {
 public:
  Gateway(std::shared_ptr<Backend> backend, GatewayOptions options = {});
  ~Gateway();

  Gateway(const Gateway&) = delete;
  Gateway& operator=(const Gateway&) = delete;

  // Throws PreconditionError, RequestError or TransportError.
  CompletionResult complete(const CompletionRequest& req);

  // Results are positionally aligned with `reqs`. Failures are reported per
  // item; with `fail_fast`, items not yet started after the first failure
  // are marked kSkipped.
  std::vector<BatchItem> complete_batch(const std::vector<CompletionRequest>& reqs,
                                        bool fail_fast = false);

  GatewayStats stats() const;
  void reset_stats();
  std::string backend_id() const { return backend_id_; }
  int max_parallel() const { return max_parallel_; }

 private:
  std::string call_with_retry(const CompletionRequest& req);
  void log(const CompletionRequest& req, const std::string& fp, bool cached,
           bool ok);

  std::shared_ptr<Backend> backend_;
  std::string backend_id_;
  int max_parallel_;
  RetryPolicy retry_;
  std::function<void(std::chrono::milliseconds)> sleep_;
  std::unique_ptr<ResponseCache> disk_cache_;

  std::mutex memory_mu_;
  std::unordered_map<std::string, std::string> memory_cache_;
  std::mutex inflight_mu_;
  std::unordered_map<std::string, std::shared_future<std::string>> inflight_;

  std::counting_semaphore<> slots_;
  std::atomic<int> in_flight_{0};
  std::atomic<int> max_in_flight_{0};
  std::atomic<std::uint64_t> requests_{0};
  std::atomic<std::uint64_t> backend_calls_{0};
  std::atomic<std::uint64_t> cache_hits_{0};
  std::atomic<std::uint64_t> failures_{0};

  std::mutex log_mu_;
  std::ofstream log_;
};

}  // namespace zerodl

#endif  // ZERODL_GATEWAY_H_
