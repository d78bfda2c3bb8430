// Copyright (c) 2026 the sean-lib authors. All rights reserved.
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

#ifndef SEAN_CLI_HPP
#define SEAN_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace sean {

// Entry point shared by the binary and the tests. args excludes the program
// name. Returns 0 on success; on failure prints a single line starting with
// "error: " to err and returns non-zero.
int cli_main(const std::vector<std::string>& args, std::ostream& out,
             std::ostream& err);

} // namespace sean

#endif // SEAN_CLI_HPP
