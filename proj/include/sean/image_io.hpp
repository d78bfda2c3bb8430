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

#ifndef SEAN_IMAGE_IO_HPP
#define SEAN_IMAGE_IO_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sean/regions.hpp"
#include "sean/tensor.hpp"

namespace sean {

// Linear [-1,1] <-> [0,255] mapping. Quantization is applied exactly once,
// at the file boundary; quantize(dequantize(b)) == b for every byte.
std::uint8_t quantize_unit(double v);
double dequantize_unit(std::uint8_t b);

// Binary PPM (P6), RGB, maxval 255. Images are [3,H,W] in [-1,1].
void write_ppm(const std::string& path, const Tensor& image);
Tensor read_ppm(const std::string& path);

// Binary PGM (P5), maxval 255; pixel bytes hold the region labels directly.
void write_pgm(const std::string& path, const LabelMap& mask);
LabelMap read_pgm(const std::string& path);

// Plain-text dataset manifest: `key value` header lines followed by one
// `sample <image> <mask>` line per sample (paths relative to the manifest).
struct DatasetManifest {
    std::int64_t count = 0;
    std::int64_t labels = 0;
    std::int64_t size = 0;
    std::uint64_t seed = 0;
    std::vector<std::pair<std::string, std::string>> files;
};

void write_manifest(const std::string& path, const DatasetManifest& manifest);
DatasetManifest read_manifest(const std::string& path);

} // namespace sean

#endif // SEAN_IMAGE_IO_HPP
