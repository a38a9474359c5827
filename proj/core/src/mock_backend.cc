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

#include <openssl/evp.h>

#include "fileio.h"
#include "json.hpp"
#include "zerodl/backends.h"
#include "zerodl/errors.h"

namespace zerodl {

using nlohmann::json;

MockScript MockScript::from_json(std::string_view text) {
  MockScript script;
  try {
    json j = json::parse(text);
    if (!j.is_object()) throw ValidationError("mock script must be a JSON object");
    script.default_response = j.value("default", std::string());
    if (auto rules = j.find("rules"); rules != j.end()) {
      for (const auto& r : *rules) {
        MockRule rule;
        if (r.contains("stage")) rule.stage = parse_stage(r.at("stage").get<std::string>());
        if (r.contains("contains")) rule.contains = r.at("contains").get<std::string>();
        if (r.contains("regex")) rule.regex = r.at("regex").get<std::string>();
        rule.response = r.at("response").get<std::string>();
        script.rules.push_back(std::move(rule));
      }
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad mock script: ") + e.what());
  }
  return script;
}

MockScript MockScript::load(const std::filesystem::path& path) {
  return from_json(internal::read_file(path));
}

std::string MockScript::to_json() const {
  json j;
  j["default"] = default_response;
  j["rules"] = json::array();
  for (const auto& r : rules) {
    json rule;
    if (r.stage) rule["stage"] = std::string(zerodl::to_string(*r.stage));
    if (r.contains) rule["contains"] = *r.contains;
    if (r.regex) rule["regex"] = *r.regex;
    rule["response"] = r.response;
    j["rules"].push_back(std::move(rule));
  }
  return j.dump();
}

MockBackend::MockBackend(MockScript script) : script_(std::move(script)) {
  for (const auto& rule : script_.rules) {
    CompiledRule c{rule, std::nullopt};
    if (rule.regex) {
      try {
        c.pattern.emplace(*rule.regex, std::regex::ECMAScript);
      } catch (const std::regex_error& e) {
        throw ValidationError("bad mock regex '" + *rule.regex + "': " + e.what());
      }
    }
    compiled_.push_back(std::move(c));
  }
  // Distinct scripts must never share cache entries.
  const std::string canonical = script_.to_json();
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(canonical.data(), canonical.size(), digest, &len, EVP_sha256(), nullptr);
  static constexpr char kHex[] = "0123456789abcdef";
  id_ = "mock:";
  for (unsigned int i = 0; i < 8 && i < len; ++i) {
    id_ += kHex[digest[i] >> 4];
    id_ += kHex[digest[i] & 0xf];
  }
}

std::string MockBackend::complete(const CompletionRequest& req) {
  for (const auto& c : compiled_) {
    if (c.rule.stage && *c.rule.stage != req.stage) continue;
    if (c.rule.contains &&
        req.prompt_text.find(*c.rule.contains) == std::string::npos) {
      continue;
    }
    if (c.pattern) {
      std::smatch m;
      if (!std::regex_search(req.prompt_text, m, *c.pattern)) continue;
      return m.format(c.rule.response);
    }
    return c.rule.response;
  }
  return script_.default_response;
}

}  // namespace zerodl
