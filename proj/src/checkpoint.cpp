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

#include "sean/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>

#include "sean/common.hpp"

namespace sean {

static_assert(std::endian::native == std::endian::little,
              "checkpoint serialization assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'S', 'E', 'A', 'N', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& os, std::uint32_t v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void write_i64(std::ostream& os, std::int64_t v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t read_u32(std::istream& is, const char* what) {
    std::uint32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), sizeof(v));
    check(is.good(), "checkpoint: truncated file while reading ", what);
    return v;
}

std::int64_t read_i64(std::istream& is, const char* what) {
    std::int64_t v = 0;
    is.read(reinterpret_cast<char*>(&v), sizeof(v));
    check(is.good(), "checkpoint: truncated file while reading ", what);
    return v;
}

} // namespace

void write_checkpoint(const std::string& path, const CheckpointEntries& entries) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    check(os.good(), "checkpoint: cannot open '", path, "' for writing");
    os.write(kMagic, sizeof(kMagic));
    write_u32(os, kVersion);
    check(entries.size() <= std::numeric_limits<std::uint32_t>::max(),
          "checkpoint: too many entries");
    write_u32(os, static_cast<std::uint32_t>(entries.size()));
    for (const auto& [name, tensor] : entries) {
        check(!name.empty(), "checkpoint: entry names must be non-empty");
        write_u32(os, static_cast<std::uint32_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        const Shape& shape = tensor.shape();
        write_u32(os, static_cast<std::uint32_t>(shape.size()));
        for (std::int64_t d : shape) write_i64(os, d);
        os.write(reinterpret_cast<const char*>(tensor.data()),
                 static_cast<std::streamsize>(tensor.numel()) *
                     static_cast<std::streamsize>(sizeof(double)));
    }
    os.flush();
    check(os.good(), "checkpoint: write to '", path, "' failed");
}

CheckpointEntries read_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    check(is.good(), "checkpoint: cannot open '", path, "' for reading");
    char magic[8] = {};
    is.read(magic, sizeof(magic));
    check(is.good() && std::memcmp(magic, kMagic, sizeof(kMagic)) == 0,
          "checkpoint: '", path, "' is not a checkpoint file");
    const std::uint32_t version = read_u32(is, "version");
    check(version == kVersion, "checkpoint: unsupported version ", version);
    const std::uint32_t count = read_u32(is, "entry count");
    CheckpointEntries entries;
    entries.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint32_t name_len = read_u32(is, "entry name length");
        check(name_len > 0 && name_len <= 4096, "checkpoint: invalid entry name length");
        std::string name(name_len, '\0');
        is.read(name.data(), name_len);
        check(is.good(), "checkpoint: truncated file while reading entry name");
        const std::uint32_t rank = read_u32(is, "entry rank");
        check(rank <= 8, "checkpoint: invalid entry rank ", rank);
        Shape shape(rank);
        std::int64_t count_values = 1;
        for (std::uint32_t d = 0; d < rank; ++d) {
            shape[d] = read_i64(is, "entry extent");
            check(shape[d] > 0, "checkpoint: invalid extent in entry '", name, "'");
            count_values *= shape[d];
        }
        std::vector<double> values(static_cast<std::size_t>(count_values));
        is.read(reinterpret_cast<char*>(values.data()),
                static_cast<std::streamsize>(values.size() * sizeof(double)));
        check(is.good(), "checkpoint: truncated payload in entry '", name, "'");
        entries.emplace_back(std::move(name), Tensor::from_vector(shape, std::move(values)));
    }
    return entries;
}

} // namespace sean
