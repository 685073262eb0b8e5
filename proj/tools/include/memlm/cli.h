/* Copyright 2026 The memlm Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// The `memlm` command line: build-corpus, train, eval, analyze, sweep,
// bench and rescore. Lives in a library so tests can drive it in-process.

#ifndef MEMLM_TOOLS_CLI_H_
#define MEMLM_TOOLS_CLI_H_

#include <iosfwd>
#include <string>
#include <vector>

namespace memlm::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,
  kExitNumeric = 3,
};

// `args` excludes the program name. Reports go to `out`, diagnostics to
// `err`. Never throws.
int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace memlm::cli

#endif  // MEMLM_TOOLS_CLI_H_
