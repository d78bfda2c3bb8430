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

#ifndef SEAN_REGIONS_HPP
#define SEAN_REGIONS_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "sean/tensor.hpp"

namespace sean {

// Integer segmentation map; labels in [0, s) with s fixed by the dataset.
struct LabelMap {
    std::int64_t height = 0;
    std::int64_t width = 0;
    std::vector<std::int32_t> labels; // row-major

    LabelMap() = default;
    LabelMap(std::int64_t h, std::int64_t w, std::int32_t fill = 0);

    std::int32_t at(std::int64_t y, std::int64_t x) const {
        return labels[static_cast<std::size_t>(y * width + x)];
    }
    std::int32_t& at(std::int64_t y, std::int64_t x) {
        return labels[static_cast<std::size_t>(y * width + x)];
    }
};

// Per-image style codes, one column per region. Columns of regions that do
// not occur in the image are all-zero and flagged absent.
struct StyleMatrix {
    Tensor codes;                       // [D, s]
    std::vector<std::uint8_t> present;  // size s, 1 when the region has pixels
};

// [s,H,W] indicator tensor; exactly one channel is 1 at every pixel.
Tensor one_hot(const LabelMap& m, std::int64_t s);

// stacked one-hot masks for a batch: -> [N,s,H,W]
Tensor one_hot_batch(std::span<const LabelMap> maps, std::int64_t s);

// Region-wise average pooling. features is [N,D,H,W]; masks holds one
// [s,H,W] one-hot tensor per sample. Differentiable w.r.t. features.
std::vector<StyleMatrix> region_avg_pool(const Tensor& features,
                                         std::span<const Tensor> masks);

// output[:,y,x] = st.codes[:, label(y,x)]; differentiable w.r.t. st.codes.
// mask is a [s,H,W] one-hot tensor; -> [D,H,W]
Tensor broadcast_style(const StyleMatrix& st, const Tensor& mask);

// Nearest-neighbor label resampling; never blends or invents labels.
LabelMap downsample_mask(const LabelMap& m, std::int64_t target_h,
                         std::int64_t target_w);

} // namespace sean

#endif // SEAN_REGIONS_HPP
