// Copyright 2026 The TableQA-Adv Authors.
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

#ifndef TQA_CLI_H_
#define TQA_CLI_H_

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace tqa {

// Entry point of the `tqa` tool. `args` excludes the program name. Returns 0
// on success, 2 for usage errors and 1 for runtime failures (with a one-line
// diagnostic on `err`).
int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Reads a key=value file. Blank lines and lines starting with '#' are
// skipped; whitespace around keys and values is trimmed.
std::map<std::string, std::string> ReadConfigFile(const std::string& path);

}  // namespace tqa

#endif  // TQA_CLI_H_
