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

#include "sean/regions.hpp"

#include <algorithm>

#include "sean/ops.hpp"

namespace sean {

namespace {

// recover the label index at (y,x) from a one-hot mask channel stack
std::int64_t mask_label(const Tensor& mask, std::int64_t y, std::int64_t x) {
    const std::int64_t s = mask.dim(0), h = mask.dim(1), w = mask.dim(2);
    for (std::int64_t c = 0; c < s; ++c)
        if (mask.data()[(c * h + y) * w + x] == 1.0) return c;
    fail("mask: pixel (", y, ",", x, ") has no active channel; not a one-hot mask");
}

void check_one_hot_shape(const char* op, const Tensor& mask) {
    check(mask.rank() == 3, op, ": mask must be rank 3 [s,H,W], got ",
          shape_str(mask.shape()));
}

} // namespace

LabelMap::LabelMap(std::int64_t h, std::int64_t w, std::int32_t fill) {
    check(h > 0 && w > 0, "label map: non-positive dims ", h, "x", w);
    height = h;
    width = w;
    labels.assign(static_cast<std::size_t>(h * w), fill);
}

Tensor one_hot(const LabelMap& m, std::int64_t s) {
    check(s >= 1, "one_hot: class count must be >= 1, got ", s);
    Tensor out(Shape{s, m.height, m.width});
    for (std::int64_t y = 0; y < m.height; ++y)
        for (std::int64_t x = 0; x < m.width; ++x) {
            const std::int32_t l = m.at(y, x);
            check(l >= 0 && l < s, "one_hot: label ", l, " at pixel (", y, ",", x,
                  ") outside [0,", s, ")");
            out.data()[(l * m.height + y) * m.width + x] = 1.0;
        }
    return out;
}

Tensor one_hot_batch(std::span<const LabelMap> maps, std::int64_t s) {
    check(!maps.empty(), "one_hot_batch: empty batch");
    std::vector<Tensor> per;
    per.reserve(maps.size());
    for (const auto& m : maps) per.push_back(one_hot(m, s));
    return stack_batch(per);
}

std::vector<StyleMatrix> region_avg_pool(const Tensor& features,
                                         std::span<const Tensor> masks) {
    check(features.rank() == 4, "region_avg_pool: features must be [N,D,H,W], got ",
          shape_str(features.shape()));
    const std::int64_t n = features.dim(0), d = features.dim(1);
    const std::int64_t h = features.dim(2), w = features.dim(3);
    check(static_cast<std::int64_t>(masks.size()) == n,
          "region_avg_pool: got ", masks.size(), " masks for batch of ", n);

    std::vector<StyleMatrix> out;
    out.reserve(static_cast<std::size_t>(n));
    const bool rec = track_grad({&features});

    for (std::int64_t in = 0; in < n; ++in) {
        const Tensor& mask = masks[static_cast<std::size_t>(in)];
        check_one_hot_shape("region_avg_pool", mask);
        check(mask.dim(1) == h && mask.dim(2) == w,
              "region_avg_pool: mask ", shape_str(mask.shape()),
              " does not match feature spatial dims ", h, "x", w);
        const std::int64_t s = mask.dim(0);

        std::vector<std::int64_t> label(static_cast<std::size_t>(h * w));
        std::vector<double> count(static_cast<std::size_t>(s), 0.0);
        for (std::int64_t y = 0; y < h; ++y)
            for (std::int64_t x = 0; x < w; ++x) {
                const std::int64_t l = mask_label(mask, y, x);
                label[static_cast<std::size_t>(y * w + x)] = l;
                count[static_cast<std::size_t>(l)] += 1.0;
            }

        StyleMatrix sm;
        sm.codes = Tensor(Shape{d, s});
        sm.present.assign(static_cast<std::size_t>(s), 0);
        for (std::int64_t j = 0; j < s; ++j)
            if (count[static_cast<std::size_t>(j)] > 0.0)
                sm.present[static_cast<std::size_t>(j)] = 1;

        // Running mean instead of sum-then-divide: the incremental correction
        // (v - M)/k is exactly zero over constant regions, so pooling a
        // broadcast style map returns the original columns bit-for-bit.
        const double* f = features.data() + in * d * h * w;
        double* codes = sm.codes.data();
        std::vector<double> seen(static_cast<std::size_t>(s));
        for (std::int64_t id = 0; id < d; ++id) {
            const double* plane = f + id * h * w;
            std::fill(seen.begin(), seen.end(), 0.0);
            for (std::int64_t p = 0; p < h * w; ++p) {
                const std::int64_t l = label[static_cast<std::size_t>(p)];
                double& m = codes[id * s + l];
                m += (plane[p] - m) / (seen[static_cast<std::size_t>(l)] += 1.0);
            }
        }

        if (rec) {
            sm.codes.set_requires_grad(true);
            Tensor fc = features, cc = sm.codes;
            Tape::get().record(sm.codes, [fc, cc, in, d, s, h, w, label,
                                          count](BackwardCtx& ctx) {
                auto g = ctx.adjoint(cc);
                auto gf = ctx.adjoint_buf(fc);
                double* base = gf.data() + in * d * h * w;
                for (std::int64_t id = 0; id < d; ++id) {
                    double* plane = base + id * h * w;
                    const double* grow = g.data() + id * s;
                    for (std::int64_t p = 0; p < h * w; ++p) {
                        const std::int64_t l = label[static_cast<std::size_t>(p)];
                        plane[p] += grow[l] / count[static_cast<std::size_t>(l)];
                    }
                }
            });
        }
        out.push_back(std::move(sm));
    }
    return out;
}

Tensor broadcast_style(const StyleMatrix& st, const Tensor& mask) {
    check_one_hot_shape("broadcast_style", mask);
    check(st.codes.defined() && st.codes.rank() == 2,
          "broadcast_style: style matrix must be [D,s]");
    const std::int64_t d = st.codes.dim(0), s = st.codes.dim(1);
    check(mask.dim(0) == s, "broadcast_style: mask has ", mask.dim(0),
          " regions but style matrix has ", s);
    const std::int64_t h = mask.dim(1), w = mask.dim(2);

    std::vector<std::int64_t> label(static_cast<std::size_t>(h * w));
    for (std::int64_t y = 0; y < h; ++y)
        for (std::int64_t x = 0; x < w; ++x)
            label[static_cast<std::size_t>(y * w + x)] = mask_label(mask, y, x);

    Tensor out(Shape{d, h, w});
    const double* codes = st.codes.data();
    for (std::int64_t id = 0; id < d; ++id) {
        double* plane = out.data() + id * h * w;
        const double* row = codes + id * s;
        for (std::int64_t p = 0; p < h * w; ++p)
            plane[p] = row[label[static_cast<std::size_t>(p)]];
    }

    if (track_grad({&st.codes})) {
        out.set_requires_grad(true);
        Tensor cc = st.codes, oc = out;
        Tape::get().record(out, [cc, oc, d, s, h, w, label](BackwardCtx& ctx) {
            auto g = ctx.adjoint(oc);
            auto gc = ctx.adjoint_buf(cc);
            for (std::int64_t id = 0; id < d; ++id) {
                const double* plane = g.data() + id * h * w;
                double* row = gc.data() + id * s;
                for (std::int64_t p = 0; p < h * w; ++p)
                    row[label[static_cast<std::size_t>(p)]] += plane[p];
            }
        });
    }
    return out;
}

LabelMap downsample_mask(const LabelMap& m, std::int64_t target_h,
                         std::int64_t target_w) {
    check(target_h > 0 && target_w > 0, "downsample_mask: zero target dims ",
          target_h, "x", target_w);
    check(target_h <= m.height && target_w <= m.width,
          "downsample_mask: target ", target_h, "x", target_w,
          " exceeds source ", m.height, "x", m.width);
    LabelMap out(target_h, target_w);
    for (std::int64_t y = 0; y < target_h; ++y)
        for (std::int64_t x = 0; x < target_w; ++x)
            out.at(y, x) = m.at(y * m.height / target_h, x * m.width / target_w);
    return out;
}

} // namespace sean
