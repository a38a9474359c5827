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

#ifndef ZERODL_BACKENDS_H_
#define ZERODL_BACKENDS_H_

#include <chrono>
#include <filesystem>
#include <functional>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include "zerodl/gateway.h"

namespace zerodl {

// One routing rule of a mock script. All present matchers must hold.
struct MockRule {
  std::optional<Stage> stage;
  std::optional<std::string> contains;
  // ECMAScript regex searched in the prompt; `response` may then use
  // $1, $2, ... and $& to reference the match.
  std::optional<std::string> regex;
  std::string response;
};

struct MockScript {
  std::vector<MockRule> rules;
  std::string default_response;

  // {"default": "...", "rules": [{"stage", "contains", "regex", "response"}]}
  static MockScript from_json(std::string_view text);
  static MockScript load(const std::filesystem::path& path);
  std::string to_json() const;
};

// Deterministic offline backend: the first matching rule answers, otherwise
// the default response. Pure; performs no I/O.
class MockBackend : public Backend {
 public:
  explicit MockBackend(MockScript script);

  std::string id() const override { return id_; }
  std::string complete(const CompletionRequest& req) override;

 private:
  struct CompiledRule {
    MockRule rule;
    std::optional<std::regex> pattern;
  };
  MockScript script_;
  std::vector<CompiledRule> compiled_;
  std::string id_;
};

// Wraps a callable; useful for instrumented or failure-injecting tests.
class FunctionBackend : public Backend {
 public:
  using Fn = std::function<std::string(const CompletionRequest&)>;
  FunctionBackend(std::string id, Fn fn) : id_(std::move(id)), fn_(std::move(fn)) {}

  std::string id() const override { return id_; }
  std::string complete(const CompletionRequest& req) override { return fn_(req); }

 private:
  std::string id_;
  Fn fn_;
};

struct BackendConfig {
  std::string base_url = "https://api.openai.com/v1";
  std::string api_key_env = "OPENAI_API_KEY";
  int max_parallel = 4;
  int retry_max = 3;
  std::chrono::seconds timeout{120};
};

// OpenAI-compatible chat completions: POST {base_url}/chat/completions with a
// single user message; the reply is choices[0].message.content.
class HttpBackend : public Backend {
 public:
  // Throws PreconditionError for an unusable URL or an unset key variable.
  explicit HttpBackend(BackendConfig config);

  std::string id() const override;
  std::string complete(const CompletionRequest& req) override;

 private:
  BackendConfig config_;
  std::string scheme_host_port_;
  std::string path_prefix_;
  std::string api_key_;
};

}  // namespace zerodl

#endif  // ZERODL_BACKENDS_H_
