// tools/cli.h

// Copyright 2026  CRNN authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef CRNN_TOOLS_CLI_H_
#define CRNN_TOOLS_CLI_H_

#include <ostream>
#include <string>
#include <vector>

namespace crnn {

// Exit codes of the crnn tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // runtime failure, or a failed gradcheck
inline constexpr int kExitUsage = 2;    // bad flags, architecture or inputs
inline constexpr int kExitDivergence = 3;

/// Runs one crnn command; `args` excludes the program name.
int RunCli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

}  // namespace crnn

#endif  // CRNN_TOOLS_CLI_H_
