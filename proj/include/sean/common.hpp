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

#ifndef SEAN_COMMON_HPP
#define SEAN_COMMON_HPP

#include <sstream>
#include <stdexcept>
#include <string>

namespace sean {

// All library failures throw this; the message is a single line so the CLI
// can forward it verbatim.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

namespace detail {
inline void strcat_parts(std::ostringstream&) {}

template <typename T, typename... Rest>
void strcat_parts(std::ostringstream& os, T&& head, Rest&&... rest) {
    os << head;
    strcat_parts(os, std::forward<Rest>(rest)...);
}
} // namespace detail

template <typename... Parts>
std::string strcat(Parts&&... parts) {
    std::ostringstream os;
    detail::strcat_parts(os, std::forward<Parts>(parts)...);
    return os.str();
}

template <typename... Parts>
[[noreturn]] void fail(Parts&&... parts) {
    throw Error(strcat(std::forward<Parts>(parts)...));
}

template <typename... Parts>
void check(bool cond, Parts&&... parts) {
    if (!cond) fail(std::forward<Parts>(parts)...);
}

} // namespace sean

#endif // SEAN_COMMON_HPP
