// Copyright 2026 The Unifwatch Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef UNIFWATCH_TOOLS_CLI_H_
#define UNIFWATCH_TOOLS_CLI_H_

#include <iosfwd>
#include <stdexcept>

namespace unifwatch {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitIoError = 3;

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Entry point of the `unifwatch` binary. `in` backs "-" paths.
int run_cli(int argc, const char* const* argv, std::istream& in, std::ostream& out,
            std::ostream& err);

}  // namespace unifwatch

#endif  // UNIFWATCH_TOOLS_CLI_H_
