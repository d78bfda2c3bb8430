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

#ifndef SEAN_CHECKPOINT_HPP
#define SEAN_CHECKPOINT_HPP

#include <string>
#include <utility>
#include <vector>

#include "sean/tensor.hpp"

namespace sean {

using CheckpointEntries = std::vector<std::pair<std::string, Tensor>>;

// Binary format: magic "SEANCKPT", u32 version, u32 entry count, then per
// entry a length-prefixed UTF-8 name, u32 rank, i64 extents, and the raw
// little-endian f64 payload. Entry order is preserved.
void write_checkpoint(const std::string& path, const CheckpointEntries& entries);
CheckpointEntries read_checkpoint(const std::string& path);

} // namespace sean

#endif // SEAN_CHECKPOINT_HPP
