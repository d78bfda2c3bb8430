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

#ifndef SEAN_SEAN_NORM_HPP
#define SEAN_SEAN_NORM_HPP

#include <optional>
#include <span>
#include <utility>

#include "sean/regions.hpp"
#include "sean/rng.hpp"
#include "sean/tensor.hpp"

namespace sean {

// Glorot-normal conv weight, std = sqrt(2 / ((fan_in + fan_out))) with
// fan counted per kernel tap.
Tensor glorot_conv(std::int64_t cout, std::int64_t cin, int kh, int kw, Rng& rng);

struct SeanBlockConfig {
    std::int64_t channels = 0;    // C of the modulated activation
    std::int64_t style_dim = 0;   // D
    std::int64_t num_regions = 0; // s
    std::int64_t hidden = 64;     // branch hidden width
    int kernel = 3;               // style/mask branch kernel, pad = kernel/2
    double eps = 1e-5;
};

// Region-adaptive normalization block. The two modulation branches (style
// map vs one-hot mask) are blended per channel map by learnable scalars
// squashed through a sigmoid so the mix stays a convex combination.
struct SeanBlockParams {
    SeanBlockConfig cfg;

    Tensor transform_w; // [D,D,1,1] per-style transform, no bias so absent
                        // (all-zero) style columns stay exactly zero

    Tensor style_shared_w, style_shared_b; // style map -> hidden
    Tensor style_gamma_w, style_gamma_b;   // hidden -> gamma^s
    Tensor style_beta_w, style_beta_b;     // hidden -> beta^s

    Tensor mask_shared_w, mask_shared_b; // one-hot mask -> hidden
    Tensor mask_gamma_w, mask_gamma_b;   // hidden -> gamma^o
    Tensor mask_beta_w, mask_beta_b;     // hidden -> beta^o

    Tensor alpha_gamma_raw, alpha_beta_raw; // [1] unconstrained blend scalars
    Tensor noise_scale;                     // [C] per-channel noise gain B

    // Test hooks. Overrides pin the blend weight to an exact constant
    // (0 selects the mask branch verbatim, 1 the style branch);
    // stats_enabled=false skips the normalization step so modulation
    // stays strictly per-pixel.
    std::optional<double> alpha_gamma_override;
    std::optional<double> alpha_beta_override;
    bool stats_enabled = true;

    template <typename F>
    void visit_params(F&& f) {
        f("transform_w", transform_w);
        f("style_shared_w", style_shared_w);
        f("style_shared_b", style_shared_b);
        f("style_gamma_w", style_gamma_w);
        f("style_gamma_b", style_gamma_b);
        f("style_beta_w", style_beta_w);
        f("style_beta_b", style_beta_b);
        f("mask_shared_w", mask_shared_w);
        f("mask_shared_b", mask_shared_b);
        f("mask_gamma_w", mask_gamma_w);
        f("mask_gamma_b", mask_gamma_b);
        f("mask_beta_w", mask_beta_w);
        f("mask_beta_b", mask_beta_b);
        f("alpha_gamma_raw", alpha_gamma_raw);
        f("alpha_beta_raw", alpha_beta_raw);
        f("noise_scale", noise_scale);
    }
};

SeanBlockParams make_sean_block(const SeanBlockConfig& cfg, Rng& rng);

// Batch mean and std per channel, pooled over batch and spatial dims.
// sigma = sqrt(max(E[h^2] - mu^2, 0) + eps). Differentiable.
std::pair<Tensor, Tensor> batch_stats(const Tensor& h, double eps = 1e-5);

// The full block: optional noise injection, per-style transform, broadcast,
// two modulation branches, blend, and normalization. One style matrix and
// one label map per batch entry; masks must already be at (H,W).
Tensor sean_forward(const Tensor& h, std::span<const StyleMatrix> sts,
                    std::span<const LabelMap> masks, const SeanBlockParams& p,
                    Rng* noise_rng = nullptr, bool noise_enabled = false);

// single style/mask applied to every batch entry
Tensor sean_forward(const Tensor& h, const StyleMatrix& st, const LabelMap& m,
                    const SeanBlockParams& p, Rng* noise_rng = nullptr,
                    bool noise_enabled = false);

} // namespace sean

#endif // SEAN_SEAN_NORM_HPP
