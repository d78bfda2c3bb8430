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

#include "sean/sean_norm.hpp"

#include <cmath>
#include <vector>

#include "sean/ops.hpp"

namespace sean {

Tensor glorot_conv(std::int64_t cout, std::int64_t cin, int kh, int kw, Rng& rng) {
    const double fan = static_cast<double>((cin + cout) * kh * kw);
    return Tensor::randn({cout, cin, kh, kw}, rng, std::sqrt(2.0 / fan), true);
}

SeanBlockParams make_sean_block(const SeanBlockConfig& cfg, Rng& rng) {
    check(cfg.channels > 0 && cfg.style_dim > 0 && cfg.num_regions > 0 &&
              cfg.hidden > 0,
          "sean block: config extents must be positive");
    check(cfg.kernel >= 1 && cfg.kernel % 2 == 1, "sean block: kernel must be odd, got ",
          cfg.kernel);

    const auto k = cfg.kernel;
    SeanBlockParams p;
    p.cfg = cfg;
    p.transform_w = glorot_conv(cfg.style_dim, cfg.style_dim, 1, 1, rng);

    p.style_shared_w = glorot_conv(cfg.hidden, cfg.style_dim, k, k, rng);
    p.style_shared_b = Tensor(Shape{cfg.hidden}, 0.0, true);
    p.style_gamma_w = glorot_conv(cfg.channels, cfg.hidden, k, k, rng);
    p.style_gamma_b = Tensor(Shape{cfg.channels}, 0.0, true);
    p.style_beta_w = glorot_conv(cfg.channels, cfg.hidden, k, k, rng);
    p.style_beta_b = Tensor(Shape{cfg.channels}, 0.0, true);

    p.mask_shared_w = glorot_conv(cfg.hidden, cfg.num_regions, k, k, rng);
    p.mask_shared_b = Tensor(Shape{cfg.hidden}, 0.0, true);
    p.mask_gamma_w = glorot_conv(cfg.channels, cfg.hidden, k, k, rng);
    p.mask_gamma_b = Tensor(Shape{cfg.channels}, 0.0, true);
    p.mask_beta_w = glorot_conv(cfg.channels, cfg.hidden, k, k, rng);
    p.mask_beta_b = Tensor(Shape{cfg.channels}, 0.0, true);

    p.alpha_gamma_raw = Tensor(Shape{1}, 0.0, true); // sigmoid(0) = 0.5
    p.alpha_beta_raw = Tensor(Shape{1}, 0.0, true);
    p.noise_scale = Tensor(Shape{cfg.channels}, 0.0, true);
    return p;
}

std::pair<Tensor, Tensor> batch_stats(const Tensor& h, double eps) {
    check(h.rank() == 4, "batch_stats: input must be [N,C,H,W], got ",
          shape_str(h.shape()));
    Tensor mu = channel_mean(h);
    Tensor ex2 = channel_mean(mul(h, h));
    Tensor var = clamp_min(sub(ex2, mul(mu, mu)), 0.0);
    Tensor sigma = sean::sqrt(add_scalar(var, eps));
    return {mu, sigma};
}

namespace {

// alpha * s_branch + (1 - alpha) * o_branch. Exact 0/1 overrides return the
// selected branch tensor itself so degeneration tests compare bitwise.
Tensor blend(const Tensor& s_branch, const Tensor& o_branch, const Tensor& raw,
             const std::optional<double>& override_val) {
    if (override_val) {
        const double a = *override_val;
        if (a == 0.0) return o_branch;
        if (a == 1.0) return s_branch;
        return add(mul(s_branch, Tensor::scalar(a)),
                   mul(o_branch, Tensor::scalar(1.0 - a)));
    }
    Tensor a = sigmoid(raw);
    Tensor b = sub(Tensor::scalar(1.0), a);
    return add(mul(s_branch, a), mul(o_branch, b));
}

} // namespace

Tensor sean_forward(const Tensor& h, std::span<const StyleMatrix> sts,
                    std::span<const LabelMap> masks, const SeanBlockParams& p,
                    Rng* noise_rng, bool noise_enabled) {
    check(h.rank() == 4, "sean_forward: activation must be [N,C,H,W], got ",
          shape_str(h.shape()));
    const std::int64_t n = h.dim(0), c = h.dim(1), hh = h.dim(2), ww = h.dim(3);
    check(c == p.cfg.channels, "sean_forward: activation has ", c,
          " channels but block expects ", p.cfg.channels);
    check(static_cast<std::int64_t>(sts.size()) == n &&
              static_cast<std::int64_t>(masks.size()) == n,
          "sean_forward: need one style matrix and one mask per batch entry (N=", n,
          ", got ", sts.size(), " styles, ", masks.size(), " masks)");

    const int pad = p.cfg.kernel / 2;

    // (a) optional per-channel-scaled noise on the raw activation
    Tensor act = h;
    if (noise_enabled) {
        check(noise_rng != nullptr, "sean_forward: noise enabled without a generator");
        Tensor noise = Tensor::randn(h.shape(), *noise_rng);
        act = add(act, mul(noise, p.noise_scale));
    }

    // (b) per-style transform + (c) broadcast, per sample
    std::vector<Tensor> style_maps;
    std::vector<Tensor> onehots;
    style_maps.reserve(static_cast<std::size_t>(n));
    onehots.reserve(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) {
        const StyleMatrix& st = sts[static_cast<std::size_t>(i)];
        const LabelMap& m = masks[static_cast<std::size_t>(i)];
        check(st.codes.defined() && st.codes.rank() == 2 &&
                  st.codes.dim(0) == p.cfg.style_dim,
              "sean_forward: style matrix dimension ",
              st.codes.defined() ? st.codes.dim(0) : 0, " does not match style_dim ",
              p.cfg.style_dim);
        check(st.codes.dim(1) == p.cfg.num_regions, "sean_forward: style matrix has ",
              st.codes.dim(1), " regions, block expects ", p.cfg.num_regions);
        check(m.height == hh && m.width == ww, "sean_forward: mask ", m.height, "x",
              m.width, " does not match activation ", hh, "x", ww);

        Tensor cols = reshape(st.codes, {1, p.cfg.style_dim, p.cfg.num_regions, 1});
        Tensor transformed = conv2d(cols, p.transform_w, Tensor());
        StyleMatrix tst;
        tst.codes = reshape(transformed, {p.cfg.style_dim, p.cfg.num_regions});
        tst.present = st.present;

        Tensor oh = one_hot(m, p.cfg.num_regions);
        onehots.push_back(oh);
        style_maps.push_back(broadcast_style(tst, oh));
    }
    Tensor style_map = stack_batch(style_maps); // [N,D,H,W]
    Tensor mask_map = stack_batch(onehots);     // [N,s,H,W]

    // (d) style branch and (e) mask branch
    Tensor sh = relu(conv2d(style_map, p.style_shared_w, p.style_shared_b, 1, pad));
    Tensor gamma_s = conv2d(sh, p.style_gamma_w, p.style_gamma_b, 1, pad);
    Tensor beta_s = conv2d(sh, p.style_beta_w, p.style_beta_b, 1, pad);

    Tensor mh = relu(conv2d(mask_map, p.mask_shared_w, p.mask_shared_b, 1, pad));
    Tensor gamma_o = conv2d(mh, p.mask_gamma_w, p.mask_gamma_b, 1, pad);
    Tensor beta_o = conv2d(mh, p.mask_beta_w, p.mask_beta_b, 1, pad);

    // (f) learnable blend
    Tensor gamma = blend(gamma_s, gamma_o, p.alpha_gamma_raw, p.alpha_gamma_override);
    Tensor beta = blend(beta_s, beta_o, p.alpha_beta_raw, p.alpha_beta_override);

    // (g) modulate the normalized activation
    Tensor normalized = act;
    if (p.stats_enabled) {
        auto [mu, sigma] = batch_stats(act, p.cfg.eps);
        normalized = div(sub(act, mu), sigma);
    }
    return add(mul(gamma, normalized), beta);
}

Tensor sean_forward(const Tensor& h, const StyleMatrix& st, const LabelMap& m,
                    const SeanBlockParams& p, Rng* noise_rng, bool noise_enabled) {
    std::vector<StyleMatrix> sts(static_cast<std::size_t>(h.dim(0)), st);
    std::vector<LabelMap> masks(static_cast<std::size_t>(h.dim(0)), m);
    return sean_forward(h, sts, masks, p, noise_rng, noise_enabled);
}

} // namespace sean
