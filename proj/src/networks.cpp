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

#include "sean/networks.hpp"

#include <cmath>

#include "sean/ops.hpp"

namespace sean {

namespace {

void normalize_vec(double* x, std::int64_t n) {
    double norm = 0.0;
    for (std::int64_t i = 0; i < n; ++i) norm += x[i] * x[i];
    norm = std::sqrt(norm) + 1e-12;
    for (std::int64_t i = 0; i < n; ++i) x[i] /= norm;
}

// raw power iterations on the [rows, cols] view of w; no autodiff involved
void spectral_power_step(const Tensor& w, SpectralState& st, int iterations) {
    const std::int64_t rows = st.u.dim(0), cols = st.v.dim(0);
    const double* wp = w.data();
    double* u = st.u.data();
    double* v = st.v.data();
    for (int it = 0; it < iterations; ++it) {
        for (std::int64_t j = 0; j < cols; ++j) v[j] = 0.0;
        for (std::int64_t i = 0; i < rows; ++i) {
            const double ui = u[i];
            const double* row = wp + i * cols;
            for (std::int64_t j = 0; j < cols; ++j) v[j] += row[j] * ui;
        }
        normalize_vec(v, cols);
        for (std::int64_t i = 0; i < rows; ++i) {
            const double* row = wp + i * cols;
            double acc = 0.0;
            for (std::int64_t j = 0; j < cols; ++j) acc += row[j] * v[j];
            u[i] = acc;
        }
        normalize_vec(u, rows);
    }
}

// Power-iterate at construction until the estimate settles, so normalized
// weights sit at unit spectral norm from the very first forward pass.
void warm_spectral(const Tensor& w, SpectralState& st) {
    const std::int64_t rows = st.u.dim(0), cols = st.v.dim(0);
    const double* wp = w.data();
    double prev = 0.0;
    for (int it = 0; it < 200; ++it) {
        spectral_power_step(w, st, 1);
        const double* u = st.u.data();
        const double* v = st.v.data();
        double sigma = 0.0;
        for (std::int64_t i = 0; i < rows; ++i) {
            const double* row = wp + i * cols;
            double acc = 0.0;
            for (std::int64_t j = 0; j < cols; ++j) acc += row[j] * v[j];
            sigma += u[i] * acc;
        }
        if (it > 0 && std::abs(sigma - prev) <= 1e-12 * std::max(1.0, std::abs(sigma))) {
            break;
        }
        prev = sigma;
    }
}

ConvParam make_conv(std::int64_t cout, std::int64_t cin, int k, Rng& rng) {
    return ConvParam{glorot_conv(cout, cin, k, k, rng), Tensor(Shape{cout}, 0.0, true)};
}

// conv -> LReLU, the standard layer of the composite nets
Tensor conv_lrelu(const Tensor& x, const ConvParam& p, int pad) {
    return lrelu(conv2d(x, p.w, p.b, 1, pad), 0.2);
}

} // namespace

// --- spectral normalization ----------------------------------------------------

SpectralState make_spectral_state(std::int64_t rows, std::int64_t cols, Rng& rng) {
    check(rows >= 1 && cols >= 1, "spectral state: bad matrix view ", rows, "x", cols);
    SpectralState st;
    st.u = Tensor::randn({rows}, rng);
    normalize_vec(st.u.data(), rows);
    st.v = Tensor::randn({cols}, rng);
    normalize_vec(st.v.data(), cols);
    return st;
}

Tensor spectral_normalize(const Tensor& w, SpectralState& st, int iterations,
                          bool update_state) {
    check(w.rank() >= 2, "spectral_normalize: weight must have rank >= 2, got ",
          shape_str(w.shape()));
    const std::int64_t rows = w.dim(0);
    const std::int64_t cols = w.numel() / rows;
    check(st.u.defined() && st.u.dim(0) == rows && st.v.dim(0) == cols,
          "spectral_normalize: state does not match weight view ", rows, "x", cols);

    if (update_state) spectral_power_step(w, st, iterations);

    // sigma_hat = u^T W v with u,v constant; gradient w.r.t. W is u v^T
    Tensor w2d = reshape(w, {rows, cols});
    Tensor u_row = reshape(st.u, {1, rows});
    Tensor v_col = reshape(st.v, {cols, 1});
    Tensor sigma = reshape(matmul(matmul(u_row, w2d), v_col), {1});
    return div(w, add_scalar(sigma, 1e-12));
}

// --- style encoder ----------------------------------------------------------------

StyleEncoder make_style_encoder(const EncoderConfig& cfg, Rng& rng) {
    check(cfg.variant == EncoderVariant::unified,
          "style encoder: only the unified variant is implemented");
    check(cfg.style_dim >= 1 && cfg.num_labels >= 1 && cfg.base_channels >= 1,
          "style encoder: config extents must be positive");
    check(cfg.num_downsamples >= 0, "style encoder: negative downsample count");
    check(cfg.kernel >= 1 && cfg.kernel % 2 == 1, "style encoder: kernel must be odd");

    auto ch = [&](std::int64_t i) {
        std::int64_t c = cfg.base_channels;
        for (std::int64_t k = 0; k < i; ++k) c = std::min(c * 2, cfg.max_channels);
        return c;
    };

    StyleEncoder enc;
    enc.cfg = cfg;
    const int k = cfg.kernel;
    const std::int64_t nd = cfg.num_downsamples;
    for (std::int64_t i = 0; i < nd; ++i)
        enc.downs.push_back(
            make_conv(ch(i), i == 0 ? cfg.image_channels : ch(i - 1), k, rng));
    const std::int64_t mid_in = nd == 0 ? cfg.image_channels : ch(nd - 1);
    const std::int64_t mid_ch = nd == 0 ? cfg.base_channels : ch(nd - 1);
    enc.mid0 = make_conv(mid_ch, mid_in, k, rng);
    enc.mid1 = make_conv(mid_ch, mid_ch, k, rng);
    for (std::int64_t j = 0; j < nd; ++j) {
        const std::int64_t in = j == 0 ? mid_ch : ch(nd - 1 - j);
        const std::int64_t out = j == nd - 1 ? cfg.base_channels : ch(nd - 2 - j);
        enc.ups.push_back(make_conv(out, in, k, rng));
    }
    const std::int64_t head_in = nd == 0 ? mid_ch : cfg.base_channels;
    enc.out = make_conv(cfg.style_dim, head_in, 1, rng);
    return enc;
}

std::vector<StyleMatrix> style_encoder_forward(const StyleEncoder& enc,
                                               const Tensor& images,
                                               std::span<const LabelMap> masks) {
    check(images.rank() == 4 && images.dim(1) == enc.cfg.image_channels,
          "style encoder: images must be [N,", enc.cfg.image_channels, ",H,W], got ",
          shape_str(images.shape()));
    const std::int64_t n = images.dim(0), h = images.dim(2), w = images.dim(3);
    check(static_cast<std::int64_t>(masks.size()) == n, "style encoder: got ",
          masks.size(), " masks for batch of ", n);
    for (const auto& m : masks)
        check(m.height == h && m.width == w, "style encoder: mask resolution ",
              m.height, "x", m.width, " does not match image ", h, "x", w);
    const std::int64_t scale = std::int64_t{1} << enc.cfg.num_downsamples;
    check(h % scale == 0 && w % scale == 0, "style encoder: image ", h, "x", w,
          " not divisible by the downsampling factor ", scale);

    const int pad = enc.cfg.kernel / 2;
    Tensor x = images;
    for (const auto& d : enc.downs) x = avg_pool2d(conv_lrelu(x, d, pad), 2);
    x = conv_lrelu(x, enc.mid0, pad);
    x = conv_lrelu(x, enc.mid1, pad);
    for (const auto& u : enc.ups) x = conv_lrelu(upsample_nearest(x, 2), u, pad);
    x = conv2d(x, enc.out.w, enc.out.b); // 1x1 projection, no activation

    std::vector<Tensor> onehots;
    onehots.reserve(static_cast<std::size_t>(n));
    for (const auto& m : masks) onehots.push_back(one_hot(m, enc.cfg.num_labels));
    return region_avg_pool(x, onehots);
}

StyleMatrix style_encoder_forward(const StyleEncoder& enc, const Tensor& image,
                                  const LabelMap& mask) {
    check(image.rank() == 4 && image.dim(0) == 1,
          "style encoder: single-sample call needs a [1,C,H,W] image, got ",
          shape_str(image.shape()));
    std::vector<LabelMap> masks{mask};
    return style_encoder_forward(enc, image, masks)[0];
}

// --- SEAN ResBlk ---------------------------------------------------------------------

SeanResBlk make_sean_resblk(const SeanResBlkConfig& cfg, Rng& rng) {
    check(cfg.in_channels >= 1 && cfg.out_channels >= 1,
          "sean resblk: channel counts must be positive");
    SeanResBlk blk;
    blk.cfg = cfg;
    blk.mid_channels = std::min(cfg.in_channels, cfg.out_channels);
    blk.learned_skip = cfg.in_channels != cfg.out_channels;

    auto sean_cfg = [&](std::int64_t channels) {
        return SeanBlockConfig{.channels = channels,
                               .style_dim = cfg.style_dim,
                               .num_regions = cfg.num_regions,
                               .hidden = cfg.sean_hidden,
                               .kernel = cfg.sean_kernel};
    };
    blk.sean_0 = make_sean_block(sean_cfg(cfg.in_channels), rng);
    blk.sean_1 = make_sean_block(sean_cfg(blk.mid_channels), rng);
    blk.sean_0.stats_enabled = cfg.stats_enabled;
    blk.sean_1.stats_enabled = cfg.stats_enabled;

    blk.conv_0_w = glorot_conv(blk.mid_channels, cfg.in_channels, 3, 3, rng);
    blk.conv_0_b = Tensor(Shape{blk.mid_channels}, 0.0, true);
    blk.conv_1_w = glorot_conv(cfg.out_channels, blk.mid_channels, 3, 3, rng);
    blk.conv_1_b = Tensor(Shape{cfg.out_channels}, 0.0, true);
    blk.sn_0 = make_spectral_state(blk.mid_channels, cfg.in_channels * 9, rng);
    blk.sn_1 = make_spectral_state(cfg.out_channels, blk.mid_channels * 9, rng);
    warm_spectral(blk.conv_0_w, blk.sn_0);
    warm_spectral(blk.conv_1_w, blk.sn_1);

    if (blk.learned_skip) {
        blk.sean_s = make_sean_block(sean_cfg(cfg.in_channels), rng);
        blk.sean_s.stats_enabled = cfg.stats_enabled;
        blk.conv_s_w = glorot_conv(cfg.out_channels, cfg.in_channels, 1, 1, rng);
        blk.sn_s = make_spectral_state(cfg.out_channels, cfg.in_channels, rng);
        warm_spectral(blk.conv_s_w, blk.sn_s);
    }
    return blk;
}

Tensor sean_resblk_forward(SeanResBlk& blk, const Tensor& x,
                           std::span<const StyleMatrix> sts,
                           std::span<const LabelMap> masks, Rng* noise_rng,
                           bool noise_enabled, bool update_spectral,
                           int spectral_iterations) {
    check(x.rank() == 4 && x.dim(1) == blk.cfg.in_channels, "sean resblk: input has ",
          x.defined() && x.rank() == 4 ? x.dim(1) : -1, " channels, block expects ",
          blk.cfg.in_channels);

    Tensor h = sean_forward(x, sts, masks, blk.sean_0, noise_rng, noise_enabled);
    h = lrelu(h, 0.2);
    Tensor w0 = spectral_normalize(blk.conv_0_w, blk.sn_0, spectral_iterations,
                                   update_spectral);
    h = conv2d(h, w0, blk.conv_0_b, 1, 1);

    h = sean_forward(h, sts, masks, blk.sean_1, noise_rng, noise_enabled);
    h = lrelu(h, 0.2);
    Tensor w1 = spectral_normalize(blk.conv_1_w, blk.sn_1, spectral_iterations,
                                   update_spectral);
    h = conv2d(h, w1, blk.conv_1_b, 1, 1);

    Tensor skip = x;
    if (blk.learned_skip) {
        skip = sean_forward(x, sts, masks, blk.sean_s, noise_rng, noise_enabled);
        skip = lrelu(skip, 0.2);
        Tensor ws = spectral_normalize(blk.conv_s_w, blk.sn_s, spectral_iterations,
                                       update_spectral);
        skip = conv2d(skip, ws, Tensor());
    }
    return add(h, skip);
}

// --- generator --------------------------------------------------------------------------

Generator make_generator(const GeneratorConfig& cfg, Rng& rng) {
    check(cfg.num_labels >= 1, "generator: num_labels must be >= 1");
    check(cfg.num_resblks >= 1, "generator: need at least one resblk");
    check(static_cast<std::int64_t>(cfg.channels.size()) == cfg.num_resblks,
          "generator: channel schedule has ", cfg.channels.size(), " entries for ",
          cfg.num_resblks, " resblks");
    check(cfg.style_injected >= 0 && cfg.style_injected <= cfg.num_resblks,
          "generator: style_injected must lie in [0, num_resblks]");

    std::int64_t ups = 0, res = cfg.base_resolution;
    while (res < cfg.image_size) {
        res *= 2;
        ++ups;
    }
    check(res == cfg.image_size, "generator: image_size ", cfg.image_size,
          " is not base_resolution ", cfg.base_resolution, " times a power of 2");
    check(ups <= cfg.num_resblks, "generator: needs ", ups,
          " upsamplings but only ", cfg.num_resblks, " resblks");

    Generator g;
    g.cfg = cfg;
    g.num_upsamples = ups;
    if (cfg.input_mode == GenInput::learned_const) {
        g.const_base = Tensor::randn(
            {1, cfg.channels[0], cfg.base_resolution, cfg.base_resolution}, rng, 0.02,
            true);
    } else {
        g.mask_in = make_conv(cfg.channels[0], cfg.num_labels, 3, rng);
    }

    for (std::int64_t i = 0; i < cfg.num_resblks; ++i) {
        SeanResBlkConfig bc;
        bc.in_channels = cfg.channels[static_cast<std::size_t>(i == 0 ? 0 : i - 1)];
        bc.out_channels = cfg.channels[static_cast<std::size_t>(i)];
        bc.style_dim = cfg.style_dim;
        bc.num_regions = cfg.num_labels;
        bc.sean_hidden = cfg.sean_hidden;
        bc.sean_kernel = cfg.sean_kernel;
        bc.stats_enabled = cfg.stats_enabled;
        g.blocks.push_back(make_sean_resblk(bc, rng));
    }
    g.rgb = make_conv(cfg.image_channels, cfg.channels.back(), 3, rng);
    return g;
}

namespace {

StyleMatrix zero_style(std::int64_t d, std::int64_t s) {
    StyleMatrix st;
    st.codes = Tensor::zeros({d, s});
    st.present.assign(static_cast<std::size_t>(s), 0);
    return st;
}

// shared body of generator_forward and crossover_forward; block_styles[b]
// holds one style matrix per sample for resblk b
Tensor generator_core(Generator& g,
                      const std::vector<std::vector<StyleMatrix>>& block_styles,
                      std::span<const LabelMap> masks, Rng* noise_rng,
                      bool noise_enabled, bool update_spectral) {
    const auto& cfg = g.cfg;
    const std::int64_t n = static_cast<std::int64_t>(masks.size());
    check(n >= 1, "generator: empty batch");
    for (const auto& m : masks)
        check(m.height == cfg.image_size && m.width == cfg.image_size,
              "generator: mask ", m.height, "x", m.width,
              " does not match output resolution ", cfg.image_size);

    // per-sample masks at every resolution the blocks run at
    std::int64_t res = cfg.base_resolution;
    std::vector<std::vector<LabelMap>> level_masks; // [level][sample]
    for (std::int64_t b = 0; b < cfg.num_resblks; ++b) {
        std::vector<LabelMap> at_res;
        at_res.reserve(static_cast<std::size_t>(n));
        for (const auto& m : masks) at_res.push_back(downsample_mask(m, res, res));
        level_masks.push_back(std::move(at_res));
        if (b < g.num_upsamples) res *= 2;
    }

    Tensor x;
    if (cfg.input_mode == GenInput::learned_const) {
        x = repeat_batch(g.const_base, n);
    } else {
        std::vector<Tensor> base_masks;
        for (const auto& m : masks)
            base_masks.push_back(one_hot(
                downsample_mask(m, cfg.base_resolution, cfg.base_resolution),
                cfg.num_labels));
        x = conv2d(stack_batch(base_masks), g.mask_in.w, g.mask_in.b, 1, 1);
    }

    for (std::int64_t b = 0; b < cfg.num_resblks; ++b) {
        x = sean_resblk_forward(g.blocks[static_cast<std::size_t>(b)], x,
                                block_styles[static_cast<std::size_t>(b)],
                                level_masks[static_cast<std::size_t>(b)], noise_rng,
                                noise_enabled, update_spectral);
        if (b < g.num_upsamples) x = upsample_nearest(x, 2);
    }
    x = conv2d(x, g.rgb.w, g.rgb.b, 1, 1);
    return sean::tanh(x);
}

} // namespace

Tensor generator_forward(Generator& g, std::span<const StyleMatrix> sts,
                         std::span<const LabelMap> masks, Rng* noise_rng,
                         bool noise_enabled, bool update_spectral) {
    check(sts.size() == masks.size(), "generator: got ", sts.size(), " styles for ",
          masks.size(), " masks");
    std::vector<std::vector<StyleMatrix>> block_styles;
    const StyleMatrix zero = zero_style(g.cfg.style_dim, g.cfg.num_labels);
    for (std::int64_t b = 0; b < g.cfg.num_resblks; ++b) {
        if (b < g.cfg.style_injected)
            block_styles.emplace_back(sts.begin(), sts.end());
        else
            block_styles.emplace_back(masks.size(), zero);
    }
    return generator_core(g, block_styles, masks, noise_rng, noise_enabled,
                          update_spectral);
}

Tensor crossover_forward(Generator& g, const StyleMatrix& st_a,
                         const StyleMatrix& st_b, std::span<const int> selection,
                         const LabelMap& m, Rng* noise_rng, bool noise_enabled) {
    check(static_cast<std::int64_t>(selection.size()) == g.cfg.style_injected,
          "crossover: selection has ", selection.size(), " entries for ",
          g.cfg.style_injected, " style-injected resblks");
    for (int v : selection)
        check(v == 0 || v == 1, "crossover: selection entries must be 0 or 1, got ", v);

    std::vector<std::vector<StyleMatrix>> block_styles;
    const StyleMatrix zero = zero_style(g.cfg.style_dim, g.cfg.num_labels);
    for (std::int64_t b = 0; b < g.cfg.num_resblks; ++b) {
        if (b < g.cfg.style_injected)
            block_styles.push_back(
                {selection[static_cast<std::size_t>(b)] == 0 ? st_a : st_b});
        else
            block_styles.push_back({zero});
    }
    std::vector<LabelMap> masks{m};
    return generator_core(g, block_styles, masks, noise_rng, noise_enabled, false);
}

// --- discriminator ----------------------------------------------------------------------

Discriminator make_discriminator(const DiscriminatorConfig& cfg, Rng& rng) {
    check(cfg.num_scales >= 1, "discriminator: num_scales must be >= 1");
    check(cfg.layers_per_scale >= 1, "discriminator: layers_per_scale must be >= 1");
    check(cfg.num_labels >= 1, "discriminator: num_labels must be >= 1");
    check(cfg.kernel >= 1 && cfg.kernel % 2 == 1, "discriminator: kernel must be odd");

    auto ch = [&](std::int64_t j) {
        std::int64_t c = cfg.base_channels;
        for (std::int64_t i = 0; i < j; ++i) c = std::min(c * 2, cfg.max_channels);
        return c;
    };

    Discriminator d;
    d.cfg = cfg;
    const int k = cfg.kernel;
    for (std::int64_t s = 0; s < cfg.num_scales; ++s) {
        DiscScale scale;
        for (std::int64_t j = 0; j < cfg.layers_per_scale; ++j) {
            const std::int64_t in =
                j == 0 ? cfg.image_channels + cfg.num_labels : ch(j - 1);
            scale.convs.push_back(make_conv(ch(j), in, k, rng));
            scale.sns.push_back(
                make_spectral_state(ch(j), in * k * k, rng));
            warm_spectral(scale.convs.back().w, scale.sns.back());
        }
        scale.head = make_conv(1, ch(cfg.layers_per_scale - 1), k, rng);
        scale.head_sn =
            make_spectral_state(1, ch(cfg.layers_per_scale - 1) * k * k, rng);
        warm_spectral(scale.head.w, scale.head_sn);
        d.scales.push_back(std::move(scale));
    }
    return d;
}

DiscriminatorOutput discriminator_forward(Discriminator& d, const Tensor& images,
                                          std::span<const LabelMap> masks,
                                          bool update_spectral,
                                          int spectral_iterations) {
    check(images.rank() == 4 && images.dim(1) == d.cfg.image_channels,
          "discriminator: images must be [N,", d.cfg.image_channels, ",H,W], got ",
          shape_str(images.shape()));
    const std::int64_t n = images.dim(0), h = images.dim(2), w = images.dim(3);
    check(static_cast<std::int64_t>(masks.size()) == n, "discriminator: got ",
          masks.size(), " masks for batch of ", n);
    for (const auto& m : masks)
        check(m.height == h && m.width == w, "discriminator: mask ", m.height, "x",
              m.width, " does not match image ", h, "x", w);

    Tensor input = concat_channels(images, one_hot_batch(masks, d.cfg.num_labels));
    const int pad = d.cfg.kernel / 2;

    DiscriminatorOutput out;
    for (std::size_t s = 0; s < d.scales.size(); ++s) {
        Tensor x = input;
        for (std::size_t p = 0; p < s; ++p) x = avg_pool2d(x, 2);
        DiscScale& scale = d.scales[s];
        for (std::size_t j = 0; j < scale.convs.size(); ++j) {
            Tensor wsn = spectral_normalize(scale.convs[j].w, scale.sns[j],
                                            spectral_iterations, update_spectral);
            x = conv2d(x, wsn, scale.convs[j].b, 1, pad);
            x = avg_pool2d(x, 2);
            x = instance_norm(x);
            x = lrelu(x, 0.2);
            out.features.push_back(x);
        }
        Tensor hw = spectral_normalize(scale.head.w, scale.head_sn,
                                       spectral_iterations, update_spectral);
        out.logits.push_back(conv2d(x, hw, scale.head.b, 1, pad));
    }
    return out;
}

} // namespace sean
