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

#ifndef ZERODL_TOOLS_CLI_H_
#define ZERODL_TOOLS_CLI_H_

#include <ostream>
#include <string>
#include <vector>

namespace zerodl::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kTransportAbort = 3,
  kSelectionFailed = 4,
};

// Entry point shared by the executable and the tests. `args` excludes the
// program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace zerodl::cli

#endif  // ZERODL_TOOLS_CLI_H_
