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

#ifndef SEAN_NETWORKS_HPP
#define SEAN_NETWORKS_HPP

#include <span>
#include <string>
#include <vector>

#include "sean/sean_norm.hpp"

namespace sean {

// --- spectral normalization --------------------------------------------------

// Power-iteration state. u/v estimate the top singular pair of the weight
// viewed as a [rows, cols] matrix; both are unit vectors and are treated as
// constants by the autodiff graph.
struct SpectralState {
    Tensor u; // [rows]
    Tensor v; // [cols]
};

SpectralState make_spectral_state(std::int64_t rows, std::int64_t cols, Rng& rng);

// Returns w / (sigma_hat + 1e-12) with sigma_hat = u^T W v computed in-graph.
// update_state=true first advances u,v by `iterations` power steps on the raw
// weight values; update_state=false reuses the stored vectors, so repeated
// evaluation is pure and finite differences match the analytic gradient.
Tensor spectral_normalize(const Tensor& w, SpectralState& st, int iterations = 1,
                          bool update_state = true);

// --- building blocks -----------------------------------------------------------

struct ConvParam {
    Tensor w, b;
};

// --- style encoder --------------------------------------------------------------

// Ablation axes from the reference experiments; only the unified per-image
// encoder is implemented, the others are rejected at construction.
enum class EncoderVariant { unified, sean_level, resblk_level };

struct EncoderConfig {
    std::int64_t style_dim = 32;
    std::int64_t num_labels = 0;
    std::int64_t image_channels = 3;
    std::int64_t base_channels = 32;
    std::int64_t max_channels = 256;
    std::int64_t num_downsamples = 3;
    int kernel = 3; // 1 gives a 1x1 receptive field (used by locality tests)
    EncoderVariant variant = EncoderVariant::unified;
};

// Bottleneck: downsampling convs, two stride-1 convs, mirrored upsampling
// convs back to input resolution, then a 1x1 projection to style_dim.
struct StyleEncoder {
    EncoderConfig cfg;
    std::vector<ConvParam> downs;
    ConvParam mid0, mid1;
    std::vector<ConvParam> ups;
    ConvParam out;

    template <typename F>
    void visit_params(F&& f) {
        for (std::size_t i = 0; i < downs.size(); ++i) {
            f("downs." + std::to_string(i) + ".w", downs[i].w);
            f("downs." + std::to_string(i) + ".b", downs[i].b);
        }
        f("mid0.w", mid0.w);
        f("mid0.b", mid0.b);
        f("mid1.w", mid1.w);
        f("mid1.b", mid1.b);
        for (std::size_t i = 0; i < ups.size(); ++i) {
            f("ups." + std::to_string(i) + ".w", ups[i].w);
            f("ups." + std::to_string(i) + ".b", ups[i].b);
        }
        f("out.w", out.w);
        f("out.b", out.b);
    }
};

StyleEncoder make_style_encoder(const EncoderConfig& cfg, Rng& rng);

// images [N,3,H,W] with one label map per sample -> pooled style codes
std::vector<StyleMatrix> style_encoder_forward(const StyleEncoder& enc,
                                               const Tensor& images,
                                               std::span<const LabelMap> masks);
StyleMatrix style_encoder_forward(const StyleEncoder& enc, const Tensor& image,
                                  const LabelMap& mask);

// --- SEAN ResBlk -----------------------------------------------------------------

struct SeanResBlkConfig {
    std::int64_t in_channels = 0;
    std::int64_t out_channels = 0;
    std::int64_t style_dim = 0;
    std::int64_t num_regions = 0;
    std::int64_t sean_hidden = 64;
    int sean_kernel = 3;
    bool stats_enabled = true;
};

// Residual block with three modulations: two on the main path, one on the
// skip path (the skip is a learned 1x1 conv only when channel counts differ).
struct SeanResBlk {
    SeanResBlkConfig cfg;
    std::int64_t mid_channels = 0;
    bool learned_skip = false;

    SeanBlockParams sean_0, sean_1, sean_s;
    Tensor conv_0_w, conv_0_b;
    Tensor conv_1_w, conv_1_b;
    Tensor conv_s_w; // defined only when learned_skip
    SpectralState sn_0, sn_1, sn_s;

    template <typename F>
    void visit_params(F&& f) {
        sean_0.visit_params([&](const std::string& n, Tensor& t) { f("sean_0." + n, t); });
        sean_1.visit_params([&](const std::string& n, Tensor& t) { f("sean_1." + n, t); });
        f("conv_0.w", conv_0_w);
        f("conv_0.b", conv_0_b);
        f("conv_1.w", conv_1_w);
        f("conv_1.b", conv_1_b);
        if (learned_skip) {
            sean_s.visit_params(
                [&](const std::string& n, Tensor& t) { f("sean_s." + n, t); });
            f("conv_s.w", conv_s_w);
        }
    }

    template <typename F>
    void visit_spectral(F&& f) {
        f("conv_0.sn", sn_0);
        f("conv_1.sn", sn_1);
        if (learned_skip) f("conv_s.sn", sn_s);
    }
};

SeanResBlk make_sean_resblk(const SeanResBlkConfig& cfg, Rng& rng);

Tensor sean_resblk_forward(SeanResBlk& blk, const Tensor& x,
                           std::span<const StyleMatrix> sts,
                           std::span<const LabelMap> masks, Rng* noise_rng = nullptr,
                           bool noise_enabled = false, bool update_spectral = false,
                           int spectral_iterations = 1);

// --- generator ---------------------------------------------------------------------

enum class GenInput { learned_const, mask };

struct GeneratorConfig {
    std::int64_t image_size = 64;
    std::int64_t base_resolution = 4;
    std::int64_t num_resblks = 6;
    std::vector<std::int64_t> channels = {64, 64, 32, 32, 16, 16};
    std::int64_t style_dim = 32;
    std::int64_t num_labels = 0;
    std::int64_t image_channels = 3;
    std::int64_t style_injected = 6; // only the first k blocks receive styles
    std::int64_t sean_hidden = 64;
    int sean_kernel = 3;
    GenInput input_mode = GenInput::learned_const;
    bool stats_enabled = true;
};

struct Generator {
    GeneratorConfig cfg;
    std::int64_t num_upsamples = 0;
    Tensor const_base; // [1,C0,base,base], learned_const mode
    ConvParam mask_in; // mask mode entry conv
    std::vector<SeanResBlk> blocks;
    ConvParam rgb;

    template <typename F>
    void visit_params(F&& f) {
        if (cfg.input_mode == GenInput::learned_const) {
            f(std::string("const_base"), const_base);
        } else {
            f(std::string("mask_in.w"), mask_in.w);
            f(std::string("mask_in.b"), mask_in.b);
        }
        for (std::size_t i = 0; i < blocks.size(); ++i)
            blocks[i].visit_params([&](const std::string& n, Tensor& t) {
                f("blocks." + std::to_string(i) + "." + n, t);
            });
        f(std::string("rgb.w"), rgb.w);
        f(std::string("rgb.b"), rgb.b);
    }

    template <typename F>
    void visit_spectral(F&& f) {
        for (std::size_t i = 0; i < blocks.size(); ++i)
            blocks[i].visit_spectral([&](const std::string& n, SpectralState& s) {
                f("blocks." + std::to_string(i) + "." + n, s);
            });
    }
};

Generator make_generator(const GeneratorConfig& cfg, Rng& rng);

// One style matrix and one full-resolution label map per sample. Blocks past
// style_injected consume an all-zero style matrix (mask branch only).
Tensor generator_forward(Generator& g, std::span<const StyleMatrix> sts,
                         std::span<const LabelMap> masks, Rng* noise_rng = nullptr,
                         bool noise_enabled = false, bool update_spectral = false);

// Per-block style selection between two sources: selection[i] = 0 picks
// st_a for block i, 1 picks st_b. selection covers the style-injected blocks.
Tensor crossover_forward(Generator& g, const StyleMatrix& st_a,
                         const StyleMatrix& st_b, std::span<const int> selection,
                         const LabelMap& m, Rng* noise_rng = nullptr,
                         bool noise_enabled = false);

// --- discriminator --------------------------------------------------------------------

struct DiscriminatorConfig {
    std::int64_t num_scales = 2;
    std::int64_t layers_per_scale = 3;
    std::int64_t base_channels = 32;
    std::int64_t max_channels = 256;
    std::int64_t num_labels = 0;
    std::int64_t image_channels = 3;
    int kernel = 3;
};

struct DiscScale {
    std::vector<ConvParam> convs;
    std::vector<SpectralState> sns;
    ConvParam head;
    SpectralState head_sn;
};

// PatchGAN-style multi-scale discriminator on concat(image, one-hot mask).
struct Discriminator {
    DiscriminatorConfig cfg;
    std::vector<DiscScale> scales;

    template <typename F>
    void visit_params(F&& f) {
        for (std::size_t k = 0; k < scales.size(); ++k) {
            const std::string p = "scales." + std::to_string(k) + ".";
            for (std::size_t j = 0; j < scales[k].convs.size(); ++j) {
                f(p + "convs." + std::to_string(j) + ".w", scales[k].convs[j].w);
                f(p + "convs." + std::to_string(j) + ".b", scales[k].convs[j].b);
            }
            f(p + "head.w", scales[k].head.w);
            f(p + "head.b", scales[k].head.b);
        }
    }

    template <typename F>
    void visit_spectral(F&& f) {
        for (std::size_t k = 0; k < scales.size(); ++k) {
            const std::string p = "scales." + std::to_string(k) + ".";
            for (std::size_t j = 0; j < scales[k].sns.size(); ++j)
                f(p + "convs." + std::to_string(j) + ".sn", scales[k].sns[j]);
            f(p + "head.sn", scales[k].head_sn);
        }
    }
};

struct DiscriminatorOutput {
    std::vector<Tensor> logits;   // one patch logit map per scale
    std::vector<Tensor> features; // num_scales * layers_per_scale activations
};

Discriminator make_discriminator(const DiscriminatorConfig& cfg, Rng& rng);

DiscriminatorOutput discriminator_forward(Discriminator& d, const Tensor& images,
                                          std::span<const LabelMap> masks,
                                          bool update_spectral = false,
                                          int spectral_iterations = 1);

} // namespace sean

#endif // SEAN_NETWORKS_HPP
