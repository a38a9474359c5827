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

#ifndef ZERODL_META_H_
#define ZERODL_META_H_

#include <optional>
#include <string>
#include <vector>

namespace zerodl {

struct ClassEntry {
  int index = 0;
  std::string title;
  std::optional<std::string> description;

  friend bool operator==(const ClassEntry&, const ClassEntry&) = default;
};

// The fixed class inventory injected into final-prediction prompts: either
// generated by aggregation or taken from gold class titles.
struct MetaInformation {
  std::vector<ClassEntry> classes;
  // Number of accepted aggregation outputs that agreed on this class set.
  int source_votes = 0;

  std::size_t size() const { return classes.size(); }
  std::vector<std::string> titles() const;

  friend bool operator==(const MetaInformation&, const MetaInformation&) = default;
};

// Title-only meta-information with indices 0..n-1.
MetaInformation meta_from_titles(const std::vector<std::string>& titles);

}  // namespace zerodl

#endif  // ZERODL_META_H_
