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

#include <algorithm>
#include <map>
#include <regex>
#include <set>
#include <unordered_map>

#include "text_util.h"

namespace zerodl {

namespace {

bool is_trailing_punct(char c) {
  return c == '.' || c == ',' || c == ';' || c == ':' || c == '!' || c == '?';
}

bool is_quote(char c) { return c == '"' || c == '\'' || c == '`'; }

// Case-preserving cleanup shared by the display form and the grouping key.
std::string clean_label(std::string_view raw) {
  std::string s(internal::trim(raw));
  for (bool changed = true; changed;) {
    changed = false;
    std::string_view v = internal::trim(s);
    if (v.size() != s.size()) {
      s = std::string(v);
      changed = true;
    }
    while (!s.empty() && (s.front() == '*' || s.front() == '_')) {
      s.erase(0, 1);
      changed = true;
    }
    while (!s.empty() && (s.back() == '*' || s.back() == '_')) {
      s.pop_back();
      changed = true;
    }
    if (s.size() >= 2 && is_quote(s.front()) && s.back() == s.front()) {
      s = s.substr(1, s.size() - 2);
      changed = true;
    }
    while (!s.empty() && is_trailing_punct(s.back())) {
      s.pop_back();
      changed = true;
    }
  }
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char c : s) {
    if (internal::is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += c;
  }
  return out;
}

}  // namespace

std::string normalize_label(std::string_view raw) {
  return internal::ascii_lower(clean_label(raw));
}

PredictionHistogram build_histogram(const std::vector<std::string>& raw_predictions) {
  if (raw_predictions.empty()) {
    throw PreconditionError("build_histogram needs at least one prediction");
  }
  struct Tally {
    int count = 0;
    std::map<std::string, int> spellings;
  };
  std::unordered_map<std::string, Tally> tallies;
  for (const auto& raw : raw_predictions) {
    std::string display = clean_label(raw);
    if (display.empty()) continue;
    Tally& t = tallies[internal::ascii_lower(display)];
    ++t.count;
    ++t.spellings[display];
  }

  PredictionHistogram hist;
  for (auto& [label, tally] : tallies) {
    if (tally.count < 2) continue;
    // std::map iterates spellings in ascending order, so '>' keeps the
    // lexicographically smallest among equally frequent spellings.
    const std::string* best = nullptr;
    int best_count = 0;
    for (const auto& [spelling, n] : tally.spellings) {
      if (n > best_count) {
        best = &spelling;
        best_count = n;
      }
    }
    hist.entries.push_back({label, *best, tally.count});
  }
  std::sort(hist.entries.begin(), hist.entries.end(),
            [](const HistogramEntry& a, const HistogramEntry& b) {
              if (a.count != b.count) return a.count > b.count;
              return a.label < b.label;
            });
  if (hist.empty()) {
    throw EmptyHistogramError(
        "every open-ended prediction occurred only once; nothing to aggregate");
  }
  return hist;
}

SubsetFamily build_subsets(const PredictionHistogram& hist,
                           std::optional<std::size_t> max_labels) {
  if (hist.empty()) throw PreconditionError("build_subsets needs a nonempty histogram");
  std::size_t u = hist.size();
  if (max_labels) {
    if (*max_labels == 0) throw PreconditionError("max_subsets must be positive");
    u = std::min(u, *max_labels);
  }
  SubsetFamily family;
  family.subsets.reserve(u);
  for (std::size_t j = u; j >= 1; --j) {
    PredictionSubset subset;
    subset.reserve(j);
    for (std::size_t i = 0; i < j; ++i) subset.push_back(hist.entries[i].display);
    family.subsets.push_back(std::move(subset));
  }
  return family;
}

namespace {

ParsedClass split_title(std::string_view rest) {
  ParsedClass pc;
  const auto colon = rest.find(':');
  if (colon == std::string_view::npos) {
    pc.title = clean_label(rest);
  } else {
    pc.title = clean_label(rest.substr(0, colon));
    std::string desc(internal::trim(rest.substr(colon + 1)));
    if (!desc.empty()) pc.description = std::move(desc);
  }
  return pc;
}

std::string strip_bold(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i + 1 < s.size() && ((s[i] == '*' && s[i + 1] == '*') ||
                             (s[i] == '_' && s[i + 1] == '_'))) {
      ++i;
      continue;
    }
    out += s[i];
  }
  return out;
}

int indentation(std::string_view line) {
  int n = 0;
  for (char c : line) {
    if (c == ' ') {
      n += 1;
    } else if (c == '\t') {
      n += 4;
    } else {
      break;
    }
  }
  return n;
}

}  // namespace

std::vector<ParsedClass> parse_aggregation_output(std::string_view text) {
  static const std::regex kClassLine(
      R"(^(?:(?:[-*+]|•)\s*)?class\s+(\d+)\s*[:.)\-]\s*(.+)$)", std::regex::icase);
  static const std::regex kNumbered(R"(^\d+\s*[.)]\s+(.+)$)");
  static const std::regex kBullet(R"(^(?:[-*+]|•)\s+(.+)$)");

  struct Candidate {
    int indent;
    ParsedClass parsed;
  };
  std::vector<Candidate> structured;
  const auto lines = internal::split_lines(text);

  for (std::string_view line : lines) {
    std::string_view content = internal::trim(line);
    if (content.empty()) continue;
    while (!content.empty() && content.front() == '#') content.remove_prefix(1);
    content = internal::trim(content);
    const bool bold_start = content.substr(0, 2) == "**" || content.substr(0, 2) == "__";
    const std::string plain = strip_bold(content);
    std::smatch m;
    std::optional<std::string> rest;
    if (std::regex_match(plain, m, kClassLine)) {
      rest = m[2].str();
    } else if (std::regex_match(plain, m, kNumbered) ||
               std::regex_match(plain, m, kBullet)) {
      rest = m[1].str();
      std::smatch inner;
      if (std::regex_match(*rest, inner, kClassLine)) rest = inner[2].str();
    } else if (bold_start) {
      rest = plain;
    }
    if (!rest) continue;
    ParsedClass pc = split_title(*rest);
    if (pc.title.empty()) continue;
    structured.push_back({indentation(line), std::move(pc)});
  }

  std::vector<ParsedClass> classes;
  if (!structured.empty()) {
    int top = structured.front().indent;
    for (const auto& c : structured) top = std::min(top, c.indent);
    for (auto& c : structured) {
      if (c.indent == top) classes.push_back(std::move(c.parsed));
    }
  } else {
    for (std::string_view line : lines) {
      std::string_view content = internal::trim(line);
      if (content.find(',') == std::string_view::npos) continue;
      if (auto colon = content.rfind(':'); colon != std::string_view::npos) {
        content = content.substr(colon + 1);
      }
      std::string plain = strip_bold(content);
      std::string_view rest = plain;
      while (true) {
        const auto comma = rest.find(',');
        std::string title = clean_label(rest.substr(0, comma));
        if (!title.empty()) classes.push_back({std::move(title), std::nullopt});
        if (comma == std::string_view::npos) break;
        rest.remove_prefix(comma + 1);
      }
      break;
    }
  }

  std::set<std::string> seen;
  std::vector<ParsedClass> unique;
  for (auto& c : classes) {
    if (seen.insert(normalize_label(c.title)).second) unique.push_back(std::move(c));
  }
  return unique;
}

void select_meta_information(AggregationOutcome& outcome, int k) {
  if (k < 2) throw PreconditionError("aggregation needs k >= 2");
  outcome.accepted.clear();
  outcome.votes.clear();
  outcome.selected.reset();

  struct Group {
    int votes = 0;
    const ParsedOutput* representative = nullptr;
  };
  std::map<std::vector<std::string>, Group> groups;
  for (const auto& p : outcome.parsed) {
    if (static_cast<int>(p.classes.size()) != k) continue;
    outcome.accepted.push_back(p.subset_size);
    std::vector<std::string> key;
    key.reserve(p.classes.size());
    for (const auto& c : p.classes) key.push_back(normalize_label(c.title));
    std::sort(key.begin(), key.end());
    Group& g = groups[key];
    ++g.votes;
    if (g.representative == nullptr || p.subset_size > g.representative->subset_size) {
      g.representative = &p;
    }
  }
  if (groups.empty()) return;

  for (const auto& [key, g] : groups) outcome.votes.emplace_back(key, g.votes);
  std::stable_sort(outcome.votes.begin(), outcome.votes.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  // Map order makes the first of equal candidates the lexicographically
  // smallest key.
  const Group* best = nullptr;
  for (const auto& [key, g] : groups) {
    if (best == nullptr || g.votes > best->votes ||
        (g.votes == best->votes &&
         g.representative->subset_size > best->representative->subset_size)) {
      best = &g;
    }
  }

  MetaInformation meta;
  meta.source_votes = best->votes;
  int index = 0;
  for (const auto& c : best->representative->classes) {
    meta.classes.push_back({index++, c.title, c.description});
  }
  outcome.selected = std::move(meta);
}

AggregationOutcome aggregate(const PredictionHistogram& hist, int k,
                             Gateway& gateway, TaskType task,
                             const AggregationOptions& options,
                             const PromptRenderer& renderer) {
  if (k < 2) throw PreconditionError("aggregation needs k >= 2");
  const SubsetFamily family = build_subsets(hist, options.max_subsets);

  std::vector<CompletionRequest> requests;
  requests.reserve(family.size());
  for (std::size_t i = 0; i < family.size(); ++i) {
    // The call for S_j shows the nested lists S_j ... S_1, so the S_U call
    // carries the whole family and frequent labels repeat in every prompt.
    const std::vector<PredictionSubset> nested(family.subsets.begin() + i,
                                               family.subsets.end());
    CompletionRequest req;
    req.model = options.model;
    req.prompt_text = renderer.aggregation(nested, task, k);
    req.temperature = options.temperature;
    req.max_tokens = options.max_tokens;
    req.stage = Stage::kAggregation;
    req.seed = options.seed;
    requests.push_back(std::move(req));
  }

  auto results = gateway.complete_batch(requests);
  AggregationOutcome outcome;
  for (std::size_t i = 0; i < results.size(); ++i) {
    SubsetOutput raw;
    raw.subset_size = static_cast<int>(family.subsets[i].size());
    if (results[i].ok()) {
      raw.text = results[i].result->text;
      raw.fingerprint = results[i].result->request_fingerprint;
      outcome.parsed.push_back({raw.subset_size, parse_aggregation_output(raw.text)});
    } else {
      raw.error = results[i].error;
    }
    outcome.raw_outputs.push_back(std::move(raw));
  }
  select_meta_information(outcome, k);
  if (!outcome.selected) {
    throw SelectionFailedError("no aggregation reply produced exactly " +
                                   std::to_string(k) + " classes",
                               std::move(outcome));
  }
  return outcome;
}

}  // namespace zerodl
