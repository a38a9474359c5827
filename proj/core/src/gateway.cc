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

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <ctime>
#include <thread>

#include "fileio.h"
#include "json.hpp"
#include "zerodl/errors.h"

namespace zerodl {

using nlohmann::json;

void CompletionRequest::validate() const {
  if (prompt_text.empty()) throw PreconditionError("prompt_text must be non-empty");
  if (!(temperature >= 0.0)) throw PreconditionError("temperature must be >= 0");
  if (max_tokens <= 0) throw PreconditionError("max_tokens must be positive");
}

namespace {

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xf];
  }
  return out;
}

json request_to_json(const CompletionRequest& req) {
  json j;
  j["model"] = req.model;
  j["prompt_text"] = req.prompt_text;
  j["temperature"] = req.temperature;
  j["max_tokens"] = req.max_tokens;
  j["stage_tag"] = std::string(to_string(req.stage));
  if (req.seed) j["seed"] = *req.seed;
  return j;
}

std::string utc_timestamp() {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

std::string fingerprint(const CompletionRequest& req, std::string_view backend_id) {
  // A JSON array keeps field boundaries unambiguous.
  json key = json::array({std::string(backend_id), req.model, req.prompt_text,
                          req.temperature, req.max_tokens});
  if (req.seed) key.push_back(*req.seed);
  return sha256_hex(key.dump());
}

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::optional<std::string> ResponseCache::lookup(const std::string& fp) {
  {
    std::shared_lock lock(mu_);
    if (auto it = memory_.find(fp); it != memory_.end()) return it->second;
  }
  const auto path = dir_ / (fp + ".json");
  if (!std::filesystem::exists(path)) return std::nullopt;
  std::string text;
  try {
    text = json::parse(internal::read_file(path)).at("text").get<std::string>();
  } catch (const json::exception&) {
    // Torn or foreign file; treat as a miss and let the next store replace it.
    return std::nullopt;
  }
  std::unique_lock lock(mu_);
  memory_.emplace(fp, text);
  return text;
}

void ResponseCache::store(const std::string& fp, const CompletionRequest& req,
                          std::string_view backend_id, const std::string& text) {
  std::lock_guard write_lock(write_mu_);
  const auto path = dir_ / (fp + ".json");
  if (!std::filesystem::exists(path)) {
    json record;
    record["request"] = request_to_json(req);
    record["text"] = text;
    record["timestamp"] = utc_timestamp();
    record["backend_id"] = std::string(backend_id);
    internal::write_file_atomic(path, record.dump(2) + "\n");
  }
  std::unique_lock lock(mu_);
  memory_.emplace(fp, text);
}

std::chrono::milliseconds RetryPolicy::backoff(int attempt) const {
  double ms = static_cast<double>(initial_backoff.count()) *
              std::pow(multiplier, static_cast<double>(attempt));
  ms = std::min(ms, static_cast<double>(max_backoff.count()));
  return std::chrono::milliseconds(static_cast<long long>(ms));
}

Gateway::Gateway(std::shared_ptr<Backend> backend, GatewayOptions options)
    : backend_(std::move(backend)),
      max_parallel_(options.max_parallel),
      retry_(options.retry),
      sleep_(std::move(options.sleep)),
      slots_(std::max(options.max_parallel, 1)) {
  if (!backend_) throw PreconditionError("gateway needs a backend");
  if (max_parallel_ < 1) throw PreconditionError("max_parallel must be >= 1");
  if (retry_.retry_max < 0) throw PreconditionError("retry_max must be >= 0");
  backend_id_ = backend_->id();
  if (!sleep_) {
    sleep_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  }
  if (options.cache_dir) {
    disk_cache_ = std::make_unique<ResponseCache>(*options.cache_dir);
  }
  if (options.log_path) {
    if (options.log_path->has_parent_path()) {
      std::filesystem::create_directories(options.log_path->parent_path());
    }
    log_.open(*options.log_path, std::ios::app);
    if (!log_) throw ValidationError("cannot open log " + options.log_path->string());
  }
}

Gateway::~Gateway() = default;

std::string Gateway::call_with_retry(const CompletionRequest& req) {
  for (int attempt = 0;; ++attempt) {
    slots_.acquire();
    int now = in_flight_.fetch_add(1) + 1;
    int prev = max_in_flight_.load();
    while (now > prev && !max_in_flight_.compare_exchange_weak(prev, now)) {
    }
    backend_calls_.fetch_add(1);
    try {
      std::string text = backend_->complete(req);
      in_flight_.fetch_sub(1);
      slots_.release();
      return text;
    } catch (const TransportError&) {
      in_flight_.fetch_sub(1);
      slots_.release();
      if (attempt >= retry_.retry_max) throw;
    } catch (...) {
      in_flight_.fetch_sub(1);
      slots_.release();
      throw;
    }
    sleep_(retry_.backoff(attempt));
  }
}

CompletionResult Gateway::complete(const CompletionRequest& req) {
  req.validate();
  requests_.fetch_add(1);
  CompletionResult result;
  result.backend_id = backend_id_;
  result.request_fingerprint = fingerprint(req, backend_id_);
  const std::string& fp = result.request_fingerprint;

  auto cached_text = [&]() -> std::optional<std::string> {
    if (disk_cache_) return disk_cache_->lookup(fp);
    std::lock_guard lock(memory_mu_);
    if (auto it = memory_cache_.find(fp); it != memory_cache_.end()) return it->second;
    return std::nullopt;
  };

  if (auto hit = cached_text()) {
    cache_hits_.fetch_add(1);
    result.text = std::move(*hit);
    result.cached = true;
    log(req, fp, true, true);
    return result;
  }

  std::promise<std::string> promise;
  std::shared_future<std::string> follower;
  {
    std::lock_guard lock(inflight_mu_);
    if (auto it = inflight_.find(fp); it != inflight_.end()) {
      follower = it->second;
    } else {
      // The leader may have finished between the cache probe and here.
      if (auto hit = cached_text()) {
        cache_hits_.fetch_add(1);
        result.text = std::move(*hit);
        result.cached = true;
        log(req, fp, true, true);
        return result;
      }
      inflight_.emplace(fp, promise.get_future().share());
    }
  }

  if (follower.valid()) {
    try {
      result.text = follower.get();
    } catch (...) {
      failures_.fetch_add(1);
      log(req, fp, true, false);
      throw;
    }
    cache_hits_.fetch_add(1);
    result.cached = true;
    log(req, fp, true, true);
    return result;
  }

  try {
    std::string text = call_with_retry(req);
    if (disk_cache_) {
      disk_cache_->store(fp, req, backend_id_, text);
    } else {
      std::lock_guard lock(memory_mu_);
      memory_cache_.emplace(fp, text);
    }
    promise.set_value(text);
    result.text = std::move(text);
  } catch (...) {
    promise.set_exception(std::current_exception());
    {
      std::lock_guard lock(inflight_mu_);
      inflight_.erase(fp);
    }
    failures_.fetch_add(1);
    log(req, fp, false, false);
    throw;
  }
  {
    std::lock_guard lock(inflight_mu_);
    inflight_.erase(fp);
  }
  log(req, fp, false, true);
  return result;
}

std::vector<BatchItem> Gateway::complete_batch(
    const std::vector<CompletionRequest>& reqs, bool fail_fast) {
  if (reqs.empty()) throw PreconditionError("complete_batch needs a nonempty list");
  std::vector<BatchItem> items(reqs.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};

  auto run_one = [&](std::size_t i) {
    BatchItem& item = items[i];
    if (stop.load()) {
      item.error_kind = BatchErrorKind::kSkipped;
      item.error = "skipped after an earlier failure";
      return;
    }
    try {
      item.result = complete(reqs[i]);
    } catch (const PreconditionError& e) {
      item.error_kind = BatchErrorKind::kInvalidRequest;
      item.error = e.what();
    } catch (const RequestError& e) {
      item.error_kind = BatchErrorKind::kRequest;
      item.error = e.what();
      item.http_status = e.http_status();
    } catch (const TransportError& e) {
      item.error_kind = BatchErrorKind::kTransport;
      item.error = e.what();
      item.http_status = e.http_status();
    } catch (const std::exception& e) {
      item.error_kind = BatchErrorKind::kOther;
      item.error = e.what();
    }
    if (!item.ok() && fail_fast) stop.store(true);
  };

  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < reqs.size(); i = next.fetch_add(1)) {
      run_one(i);
    }
  };

  const std::size_t n_threads =
      std::min<std::size_t>(static_cast<std::size_t>(max_parallel_), reqs.size());
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  return items;
}

GatewayStats Gateway::stats() const {
  GatewayStats s;
  s.requests = requests_.load();
  s.backend_calls = backend_calls_.load();
  s.cache_hits = cache_hits_.load();
  s.failures = failures_.load();
  s.max_in_flight = max_in_flight_.load();
  return s;
}

void Gateway::reset_stats() {
  requests_ = 0;
  backend_calls_ = 0;
  cache_hits_ = 0;
  failures_ = 0;
  max_in_flight_ = 0;
}

void Gateway::log(const CompletionRequest& req, const std::string& fp,
                  bool cached, bool ok) {
  if (!log_.is_open()) return;
  json line;
  line["event"] = "completion";
  line["fingerprint"] = fp;
  line["stage"] = std::string(to_string(req.stage));
  line["backend_id"] = backend_id_;
  line["cached"] = cached;
  line["ok"] = ok;
  std::lock_guard lock(log_mu_);
  log_ << line.dump() << '\n';
  log_.flush();
}

}  // namespace zerodl
