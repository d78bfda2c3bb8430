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

#include "sean/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "sean/common.hpp"

namespace sean {

std::uint8_t quantize_unit(double v) {
    const double clamped = std::clamp(v, -1.0, 1.0);
    const double scaled = (clamped + 1.0) * 0.5 * 255.0;
    return static_cast<std::uint8_t>(std::lround(scaled));
}

double dequantize_unit(std::uint8_t b) {
    return static_cast<double>(b) / 255.0 * 2.0 - 1.0;
}

namespace {

// next whitespace-delimited token; '#' starts a comment running to newline
std::string next_token(std::istream& is, const std::string& path) {
    std::string tok;
    int c = is.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = is.get();
        } else if (std::isspace(c)) {
            c = is.get();
        } else {
            break;
        }
    }
    while (c != EOF && !std::isspace(c)) {
        tok.push_back(static_cast<char>(c));
        c = is.get();
    }
    check(!tok.empty(), "image io: truncated header in '", path, "'");
    return tok;
}

std::int64_t header_int(std::istream& is, const std::string& path) {
    const std::string tok = next_token(is, path);
    try {
        return std::stoll(tok);
    } catch (const std::exception&) {
        fail("image io: bad header value '", tok, "' in '", path, "'");
    }
}

} // namespace

void write_ppm(const std::string& path, const Tensor& image) {
    check(image.defined() && image.rank() == 3 && image.dim(0) == 3,
          "image io: ppm image must be [3,H,W]");
    const std::int64_t h = image.dim(1);
    const std::int64_t w = image.dim(2);
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    check(os.good(), "image io: cannot open '", path, "' for writing");
    os << "P6\n" << w << ' ' << h << "\n255\n";
    std::vector<std::uint8_t> row(static_cast<std::size_t>(3 * w));
    const double* d = image.data();
    const std::int64_t plane = h * w;
    for (std::int64_t y = 0; y < h; ++y) {
        for (std::int64_t x = 0; x < w; ++x) {
            for (std::int64_t c = 0; c < 3; ++c) {
                row[static_cast<std::size_t>(3 * x + c)] =
                    quantize_unit(d[c * plane + y * w + x]);
            }
        }
        os.write(reinterpret_cast<const char*>(row.data()),
                 static_cast<std::streamsize>(row.size()));
    }
    os.flush();
    check(os.good(), "image io: write to '", path, "' failed");
}

Tensor read_ppm(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    check(is.good(), "image io: cannot open '", path, "' for reading");
    check(next_token(is, path) == "P6", "image io: '", path, "' is not a binary ppm");
    const std::int64_t w = header_int(is, path);
    const std::int64_t h = header_int(is, path);
    const std::int64_t maxval = header_int(is, path);
    check(w >= 1 && h >= 1, "image io: bad dimensions in '", path, "'");
    check(maxval == 255, "image io: unsupported maxval ", maxval, " in '", path, "'");
    // exactly one whitespace byte separates the header from the payload
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(3 * h * w));
    is.read(reinterpret_cast<char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
    check(is.gcount() == static_cast<std::streamsize>(bytes.size()),
          "image io: truncated pixel data in '", path, "'");
    std::vector<double> values(bytes.size());
    const std::int64_t plane = h * w;
    for (std::int64_t y = 0; y < h; ++y) {
        for (std::int64_t x = 0; x < w; ++x) {
            for (std::int64_t c = 0; c < 3; ++c) {
                values[static_cast<std::size_t>(c * plane + y * w + x)] =
                    dequantize_unit(bytes[static_cast<std::size_t>(3 * (y * w + x) + c)]);
            }
        }
    }
    return Tensor::from_vector({3, h, w}, std::move(values));
}

void write_pgm(const std::string& path, const LabelMap& mask) {
    check(mask.height >= 1 && mask.width >= 1, "image io: empty label map");
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    check(os.good(), "image io: cannot open '", path, "' for writing");
    os << "P5\n" << mask.width << ' ' << mask.height << "\n255\n";
    std::vector<std::uint8_t> bytes(mask.labels.size());
    for (std::size_t i = 0; i < mask.labels.size(); ++i) {
        const std::int32_t label = mask.labels[i];
        check(label >= 0 && label <= 255, "image io: label ", label,
              " does not fit a pgm byte");
        bytes[i] = static_cast<std::uint8_t>(label);
    }
    os.write(reinterpret_cast<const char*>(bytes.data()),
             static_cast<std::streamsize>(bytes.size()));
    os.flush();
    check(os.good(), "image io: write to '", path, "' failed");
}

LabelMap read_pgm(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    check(is.good(), "image io: cannot open '", path, "' for reading");
    check(next_token(is, path) == "P5", "image io: '", path, "' is not a binary pgm");
    const std::int64_t w = header_int(is, path);
    const std::int64_t h = header_int(is, path);
    const std::int64_t maxval = header_int(is, path);
    check(w >= 1 && h >= 1, "image io: bad dimensions in '", path, "'");
    check(maxval >= 1 && maxval <= 255, "image io: unsupported maxval ", maxval,
          " in '", path, "'");
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(h * w));
    is.read(reinterpret_cast<char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
    check(is.gcount() == static_cast<std::streamsize>(bytes.size()),
          "image io: truncated pixel data in '", path, "'");
    LabelMap mask(h, w);
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        mask.labels[i] = static_cast<std::int32_t>(bytes[i]);
    }
    return mask;
}

void write_manifest(const std::string& path, const DatasetManifest& manifest) {
    check(static_cast<std::int64_t>(manifest.files.size()) == manifest.count,
          "manifest: file list does not match the sample count");
    std::ofstream os(path, std::ios::trunc);
    check(os.good(), "manifest: cannot open '", path, "' for writing");
    os << "sean-dataset 1\n";
    os << "count " << manifest.count << '\n';
    os << "labels " << manifest.labels << '\n';
    os << "size " << manifest.size << '\n';
    os << "seed " << manifest.seed << '\n';
    for (const auto& [image, mask] : manifest.files) {
        os << "sample " << image << ' ' << mask << '\n';
    }
    os.flush();
    check(os.good(), "manifest: write to '", path, "' failed");
}

DatasetManifest read_manifest(const std::string& path) {
    std::ifstream is(path);
    check(is.good(), "manifest: cannot open '", path, "' for reading");
    std::string magic;
    std::int64_t version = 0;
    is >> magic >> version;
    check(is.good() && magic == "sean-dataset" && version == 1,
          "manifest: '", path, "' is not a dataset manifest");
    DatasetManifest m;
    std::string key;
    while (is >> key) {
        if (key == "count") {
            is >> m.count;
        } else if (key == "labels") {
            is >> m.labels;
        } else if (key == "size") {
            is >> m.size;
        } else if (key == "seed") {
            is >> m.seed;
        } else if (key == "sample") {
            std::string image, mask;
            is >> image >> mask;
            m.files.emplace_back(std::move(image), std::move(mask));
        } else {
            fail("manifest: unknown key '", key, "' in '", path, "'");
        }
        check(!is.fail(), "manifest: malformed value for key '", key, "' in '", path,
              "'");
    }
    check(static_cast<std::int64_t>(m.files.size()) == m.count,
          "manifest: sample lines do not match the declared count in '", path, "'");
    check(m.labels >= 2 && m.size >= 1, "manifest: invalid labels/size in '", path,
          "'");
    return m;
}

} // namespace sean
