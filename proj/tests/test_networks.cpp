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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Core>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include "sean/networks.hpp"
#include "sean/ops.hpp"
#include "support/gradcheck.hpp"

using namespace sean;
using sean::testing::gradcheck;

namespace {

LabelMap random_map(std::int64_t h, std::int64_t w, std::int64_t s, Rng& rng) {
    LabelMap m(h, w);
    for (auto& l : m.labels) l = static_cast<std::int32_t>(rng.uniform_int(s));
    return m;
}

// deterministic map with every label in [0,s) present (vertical bands)
LabelMap banded_map(std::int64_t h, std::int64_t w, std::int64_t s) {
    LabelMap m(h, w);
    for (std::int64_t y = 0; y < h; ++y)
        for (std::int64_t x = 0; x < w; ++x)
            m.labels[static_cast<std::size_t>(y * w + x)] =
                static_cast<std::int32_t>(x * s / w);
    return m;
}

StyleMatrix random_style(std::int64_t d, std::int64_t s, Rng& rng) {
    StyleMatrix st;
    st.codes = Tensor::randn({d, s}, rng);
    st.present.assign(static_cast<std::size_t>(s), 1);
    return st;
}

StyleMatrix clone_style(const StyleMatrix& st) {
    StyleMatrix out;
    out.codes = Tensor::from_vector(st.codes.shape(), st.codes.vec());
    out.present = st.present;
    return out;
}

bool bitwise_equal(const Tensor& a, const Tensor& b) {
    if (!shape_eq(a.shape(), b.shape())) return false;
    return std::memcmp(a.data(), b.data(),
                       sizeof(double) * static_cast<std::size_t>(a.numel())) == 0;
}

void fill_zero(Tensor& t) { std::fill(t.data(), t.data() + t.numel(), 0.0); }

double sigma_est(const Tensor& w, const SpectralState& st) {
    const std::int64_t rows = w.dim(0), cols = w.numel() / rows;
    const double* p = w.data();
    double acc = 0.0;
    for (std::int64_t i = 0; i < rows; ++i)
        for (std::int64_t j = 0; j < cols; ++j)
            acc += st.u.data()[i] * p[i * cols + j] * st.v.data()[j];
    return acc;
}

double top_singular_value(const Tensor& w) {
    const std::int64_t rows = w.dim(0), cols = w.numel() / rows;
    Eigen::MatrixXd m(rows, cols);
    const double* p = w.data();
    for (std::int64_t i = 0; i < rows; ++i)
        for (std::int64_t j = 0; j < cols; ++j) m(i, j) = p[i * cols + j];
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    return svd.singularValues()(0);
}

double grad_abs_sum(const Tensor& t) {
    double acc = 0.0;
    for (double g : t.grad()) acc += std::abs(g);
    return acc;
}

// boolean pixel set used by the receptive-field oracle
struct Foot {
    std::int64_t h = 0, w = 0;
    std::vector<char> on;

    bool at(std::int64_t y, std::int64_t x) const {
        return on[static_cast<std::size_t>(y * w + x)] != 0;
    }
};

Foot foot_from_region(const LabelMap& m, std::int32_t label) {
    Foot f;
    f.h = m.height;
    f.w = m.width;
    f.on.resize(static_cast<std::size_t>(f.h * f.w));
    for (std::size_t i = 0; i < f.on.size(); ++i) f.on[i] = m.labels[i] == label;
    return f;
}

Foot foot_union(Foot a, const Foot& b) {
    for (std::size_t i = 0; i < a.on.size(); ++i) a.on[i] |= b.on[i];
    return a;
}

Foot dilate1(const Foot& f) {
    Foot out{f.h, f.w, std::vector<char>(f.on.size(), 0)};
    for (std::int64_t y = 0; y < f.h; ++y)
        for (std::int64_t x = 0; x < f.w; ++x) {
            if (!f.at(y, x)) continue;
            for (std::int64_t dy = -1; dy <= 1; ++dy)
                for (std::int64_t dx = -1; dx <= 1; ++dx) {
                    const std::int64_t yy = y + dy, xx = x + dx;
                    if (yy >= 0 && yy < f.h && xx >= 0 && xx < f.w)
                        out.on[static_cast<std::size_t>(yy * f.w + xx)] = 1;
                }
        }
    return out;
}

Foot up2(const Foot& f) {
    Foot out{f.h * 2, f.w * 2, std::vector<char>(f.on.size() * 4, 0)};
    for (std::int64_t y = 0; y < out.h; ++y)
        for (std::int64_t x = 0; x < out.w; ++x)
            out.on[static_cast<std::size_t>(y * out.w + x)] = f.at(y / 2, x / 2);
    return out;
}

// pixels a style edit of `label` can reach: SEAN blocks are 1x1 (no growth),
// each main-path conv dilates by 1, upsampling doubles, the rgb conv adds 1
Foot generator_footprint(const Generator& g, const LabelMap& m, std::int32_t label) {
    std::int64_t res = g.cfg.base_resolution;
    Foot f{res, res, std::vector<char>(static_cast<std::size_t>(res * res), 0)};
    for (std::int64_t b = 0; b < g.cfg.num_resblks; ++b) {
        const Foot r = foot_from_region(downsample_mask(m, res, res), label);
        const bool injected = b < g.cfg.style_injected;
        if (injected) f = foot_union(std::move(f), r);
        f = dilate1(f);
        if (injected) f = foot_union(std::move(f), r);
        f = dilate1(f);
        if (b < g.num_upsamples) {
            f = up2(f);
            res *= 2;
        }
    }
    return dilate1(f);
}

} // namespace

// --- spectral normalization -------------------------------------------------

TEST_CASE("spectral normalize: identity weight has unit top singular value") {
    Rng rng(1);
    Tensor w = Tensor::zeros({4, 4});
    for (int i = 0; i < 4; ++i) w.data()[i * 4 + i] = 1.0;
    SpectralState st = make_spectral_state(4, 4, rng);
    Tensor out = spectral_normalize(w, st, 5, true);
    CHECK(sigma_est(w, st) == doctest::Approx(1.0).epsilon(1e-9));
    for (std::int64_t i = 0; i < 16; ++i)
        CHECK(out.data()[i] == doctest::Approx(w.data()[i]).epsilon(1e-9));
}

TEST_CASE("spectral normalize: diag(3,1) converges to its top singular value") {
    Rng rng(2);
    Tensor w = Tensor::from_vector({2, 2}, {3.0, 0.0, 0.0, 1.0});
    SpectralState st = make_spectral_state(2, 2, rng);
    Tensor out = spectral_normalize(w, st, 25, true);
    CHECK(std::abs(sigma_est(w, st) - 3.0) < 1e-6);
    CHECK(top_singular_value(out) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("spectral normalize: random 16x16 lands within 1% of unit norm") {
    Rng rng(3);
    for (int trial = 0; trial < 3; ++trial) {
        Tensor w = Tensor::randn({16, 16}, rng);
        SpectralState st = make_spectral_state(16, 16, rng);
        Tensor out = spectral_normalize(w, st, 100, true);
        const double sv = top_singular_value(out);
        CHECK(sv > 0.99);
        CHECK(sv < 1.01);
        double un = 0.0, vn = 0.0;
        for (int i = 0; i < 16; ++i) {
            un += st.u.data()[i] * st.u.data()[i];
            vn += st.v.data()[i] * st.v.data()[i];
        }
        CHECK(un == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(vn == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("spectral normalize: zero weight stays finite") {
    Rng rng(4);
    Tensor w = Tensor::zeros({3, 6});
    SpectralState st = make_spectral_state(3, 6, rng);
    Tensor out = spectral_normalize(w, st, 3, true);
    CHECK(out.all_finite());
    for (std::int64_t i = 0; i < out.numel(); ++i) CHECK(out.data()[i] == 0.0);
}

TEST_CASE("spectral normalize: frozen state passes finite differences") {
    Rng rng(5);
    Tensor w = Tensor::randn({2, 3, 3, 3}, rng, 1.0, true);
    SpectralState st = make_spectral_state(2, 27, rng);
    {
        NoGradGuard ng;
        spectral_normalize(w, st, 10, true);
    }
    const std::vector<double> u_before = st.u.vec();
    Tensor c = Tensor::randn({2, 3, 3, 3}, rng);
    auto loss = [&] { return sum(mul(spectral_normalize(w, st, 0, false), c)); };
    auto res = gradcheck(loss, {w}, {}, 1e-5, 1e-6);
    CHECK_MESSAGE(res.ok, res.detail);
    CHECK(st.u.vec() == u_before); // update_state=false must not mutate
}

TEST_CASE("spectral normalize: state and shape validation") {
    Rng rng(6);
    CHECK_THROWS_WITH_AS(make_spectral_state(0, 4, rng),
                         doctest::Contains("bad matrix view"), Error);
    Tensor w = Tensor::randn({4, 4}, rng);
    SpectralState st = make_spectral_state(3, 4, rng);
    CHECK_THROWS_WITH_AS(spectral_normalize(w, st),
                         doctest::Contains("does not match"), Error);
    Tensor w1 = Tensor::randn({4}, rng);
    SpectralState st1 = make_spectral_state(4, 1, rng);
    CHECK_THROWS_WITH_AS(spectral_normalize(w1, st1),
                         doctest::Contains("rank"), Error);
}

// --- style encoder ------------------------------------------------------------

TEST_CASE("style encoder: zero final projection yields zero style codes") {
    Rng rng(10);
    EncoderConfig cfg;
    cfg.style_dim = 4;
    cfg.num_labels = 3;
    cfg.base_channels = 4;
    cfg.max_channels = 8;
    cfg.num_downsamples = 1;
    StyleEncoder enc = make_style_encoder(cfg, rng);
    fill_zero(enc.out.w);
    fill_zero(enc.out.b);

    Tensor images = Tensor::randn({2, 3, 8, 8}, rng);
    std::vector<LabelMap> masks{banded_map(8, 8, 3), banded_map(8, 8, 3)};
    auto styles = style_encoder_forward(enc, images, masks);
    REQUIRE(styles.size() == 2);
    for (const auto& st : styles) {
        CHECK(shape_eq(st.codes.shape(), {4, 3}));
        for (std::int64_t i = 0; i < st.codes.numel(); ++i)
            CHECK(st.codes.data()[i] == 0.0);
        CHECK(st.present == std::vector<std::uint8_t>{1, 1, 1});
    }
}

TEST_CASE("style encoder: 1x1 receptive field localizes edits to one column") {
    Rng rng(11);
    EncoderConfig cfg;
    cfg.style_dim = 4;
    cfg.num_labels = 3;
    cfg.base_channels = 5;
    cfg.num_downsamples = 0;
    cfg.kernel = 1;
    StyleEncoder enc = make_style_encoder(cfg, rng);

    LabelMap m = banded_map(6, 6, 3);
    Tensor a = Tensor::randn({1, 3, 6, 6}, rng);
    Tensor b = Tensor::from_vector(a.shape(), a.vec());
    for (std::int64_t y = 0; y < 6; ++y)
        for (std::int64_t x = 0; x < 6; ++x)
            if (m.at(y, x) == 1)
                for (std::int64_t c = 0; c < 3; ++c)
                    b.data()[(c * 6 + y) * 6 + x] += 0.25;

    StyleMatrix sa = style_encoder_forward(enc, a, m);
    StyleMatrix sb = style_encoder_forward(enc, b, m);
    bool col1_differs = false;
    for (std::int64_t d = 0; d < 4; ++d) {
        CHECK(sa.codes.data()[d * 3 + 0] == sb.codes.data()[d * 3 + 0]);
        CHECK(sa.codes.data()[d * 3 + 2] == sb.codes.data()[d * 3 + 2]);
        col1_differs |= sa.codes.data()[d * 3 + 1] != sb.codes.data()[d * 3 + 1];
    }
    CHECK(col1_differs);
}

TEST_CASE("style encoder: constant region pools to the single-pixel transform") {
    Rng rng(12);
    EncoderConfig cfg;
    cfg.style_dim = 4;
    cfg.num_labels = 3;
    cfg.base_channels = 5;
    cfg.num_downsamples = 0;
    cfg.kernel = 1;
    StyleEncoder enc = make_style_encoder(cfg, rng);

    const double color[3] = {0.3, -0.7, 0.9};
    LabelMap m = banded_map(6, 6, 3);
    Tensor img = Tensor::randn({1, 3, 6, 6}, rng);
    for (std::int64_t y = 0; y < 6; ++y)
        for (std::int64_t x = 0; x < 6; ++x)
            if (m.at(y, x) == 1)
                for (std::int64_t c = 0; c < 3; ++c)
                    img.data()[(c * 6 + y) * 6 + x] = color[c];
    StyleMatrix st = style_encoder_forward(enc, img, m);

    // same conv chain applied to a lone pixel of that color
    Tensor pixel = Tensor::from_vector({1, 3, 1, 1}, {color[0], color[1], color[2]});
    LabelMap pm(1, 1, 1);
    StyleMatrix ref = style_encoder_forward(enc, pixel, pm);
    for (std::int64_t d = 0; d < 4; ++d)
        CHECK(st.codes.data()[d * 3 + 1] == ref.codes.data()[d * 3 + 1]);
}

TEST_CASE("style encoder: image gradients pass finite differences") {
    Rng rng(13);
    EncoderConfig cfg;
    cfg.style_dim = 4;
    cfg.num_labels = 2;
    cfg.base_channels = 4;
    cfg.num_downsamples = 1;
    StyleEncoder enc = make_style_encoder(cfg, rng);

    Tensor image = Tensor::randn({1, 3, 4, 4}, rng, 1.0, true);
    LabelMap m = banded_map(4, 4, 2);
    auto loss = [&] {
        StyleMatrix st = style_encoder_forward(enc, image, m);
        return sum(st.codes);
    };
    auto res = gradcheck(loss, {image}, {}, 1e-5, 1e-5);
    CHECK_MESSAGE(res.ok, res.detail);
}

TEST_CASE("style encoder: construction and input validation") {
    Rng rng(14);
    EncoderConfig cfg;
    cfg.num_labels = 2;
    cfg.variant = EncoderVariant::sean_level;
    CHECK_THROWS_WITH_AS(make_style_encoder(cfg, rng),
                         doctest::Contains("unified"), Error);
    cfg.variant = EncoderVariant::unified;
    cfg.kernel = 2;
    CHECK_THROWS_WITH_AS(make_style_encoder(cfg, rng), doctest::Contains("odd"),
                         Error);
    cfg.kernel = 3;
    cfg.num_downsamples = 2;
    StyleEncoder enc = make_style_encoder(cfg, rng);

    Tensor img = Tensor::randn({1, 3, 8, 8}, rng);
    LabelMap small(4, 4);
    CHECK_THROWS_WITH_AS(style_encoder_forward(enc, img, small),
                         doctest::Contains("does not match image"), Error);
    Tensor odd = Tensor::randn({1, 3, 6, 6}, rng);
    CHECK_THROWS_WITH_AS(style_encoder_forward(enc, odd, LabelMap(6, 6)),
                         doctest::Contains("not divisible"), Error);
    Tensor bad = Tensor::randn({1, 4, 8, 8}, rng);
    CHECK_THROWS_WITH_AS(style_encoder_forward(enc, bad, LabelMap(8, 8)),
                         doctest::Contains("images must be"), Error);
}

// --- SEAN ResBlk -----------------------------------------------------------------

TEST_CASE("sean resblk: zero conv weights reduce to the identity skip") {
    Rng rng(20);
    SeanResBlkConfig cfg;
    cfg.in_channels = 5;
    cfg.out_channels = 5;
    cfg.style_dim = 4;
    cfg.num_regions = 2;
    cfg.sean_hidden = 4;
    SeanResBlk blk = make_sean_resblk(cfg, rng);
    CHECK_FALSE(blk.learned_skip);
    fill_zero(blk.conv_0_w);
    fill_zero(blk.conv_0_b);
    fill_zero(blk.conv_1_w);
    fill_zero(blk.conv_1_b);

    Tensor x = Tensor::randn({2, 5, 6, 6}, rng);
    std::vector<StyleMatrix> sts{random_style(4, 2, rng), random_style(4, 2, rng)};
    std::vector<LabelMap> masks{banded_map(6, 6, 2), banded_map(6, 6, 2)};
    Tensor y = sean_resblk_forward(blk, x, sts, masks);
    CHECK(bitwise_equal(y, x));
}

TEST_CASE("sean resblk: output shape follows the configured channels") {
    Rng rng(21);
    const std::int64_t cases[3][2] = {{4, 4}, {4, 6}, {6, 3}};
    for (const auto& c : cases) {
        SeanResBlkConfig cfg;
        cfg.in_channels = c[0];
        cfg.out_channels = c[1];
        cfg.style_dim = 3;
        cfg.num_regions = 2;
        cfg.sean_hidden = 4;
        SeanResBlk blk = make_sean_resblk(cfg, rng);
        CHECK(blk.mid_channels == std::min(c[0], c[1]));
        CHECK(blk.learned_skip == (c[0] != c[1]));

        Tensor x = Tensor::randn({2, c[0], 5, 5}, rng);
        std::vector<StyleMatrix> sts{random_style(3, 2, rng),
                                     random_style(3, 2, rng)};
        std::vector<LabelMap> masks{banded_map(5, 5, 2), banded_map(5, 5, 2)};
        Tensor y = sean_resblk_forward(blk, x, sts, masks);
        CHECK(shape_eq(y.shape(), {2, c[1], 5, 5}));
    }

    SeanResBlkConfig cfg;
    cfg.in_channels = 4;
    cfg.out_channels = 4;
    cfg.style_dim = 3;
    cfg.num_regions = 2;
    SeanResBlk blk = make_sean_resblk(cfg, rng);
    Tensor wrong = Tensor::randn({1, 3, 5, 5}, rng);
    std::vector<StyleMatrix> sts{random_style(3, 2, rng)};
    std::vector<LabelMap> masks{banded_map(5, 5, 2)};
    CHECK_THROWS_WITH_AS(sean_resblk_forward(blk, wrong, sts, masks),
                         doctest::Contains("channels"), Error);
}

TEST_CASE("sean resblk: gradients reach all three modulation blocks") {
    Rng rng(22);
    SeanResBlkConfig cfg;
    cfg.in_channels = 4;
    cfg.out_channels = 6; // forces the learned, modulated skip path
    cfg.style_dim = 3;
    cfg.num_regions = 2;
    cfg.sean_hidden = 4;
    SeanResBlk blk = make_sean_resblk(cfg, rng);

    Tensor x = Tensor::randn({1, 4, 6, 6}, rng);
    std::vector<StyleMatrix> sts{random_style(3, 2, rng)};
    std::vector<LabelMap> masks{banded_map(6, 6, 2)};
    backward(sum(sean_resblk_forward(blk, x, sts, masks)));

    for (SeanBlockParams* p : {&blk.sean_0, &blk.sean_1, &blk.sean_s}) {
        CHECK(grad_abs_sum(p->transform_w) > 0.0);
        CHECK(grad_abs_sum(p->style_gamma_w) > 0.0);
        CHECK(grad_abs_sum(p->mask_gamma_w) > 0.0);
    }
    CHECK(grad_abs_sum(blk.conv_0_w) > 0.0);
    CHECK(grad_abs_sum(blk.conv_s_w) > 0.0);
}

// --- generator ----------------------------------------------------------------------

namespace {

GeneratorConfig small_gen_config() {
    GeneratorConfig cfg;
    cfg.image_size = 16;
    cfg.base_resolution = 4;
    cfg.num_resblks = 3;
    cfg.channels = {6, 6, 4};
    cfg.style_dim = 4;
    cfg.num_labels = 3;
    cfg.style_injected = 3;
    cfg.sean_hidden = 4;
    return cfg;
}

} // namespace

TEST_CASE("generator: output is bounded, shaped, and deterministic") {
    Rng rng(30);
    Generator g = make_generator(small_gen_config(), rng);
    CHECK(g.num_upsamples == 2);

    std::vector<StyleMatrix> sts{random_style(4, 3, rng), random_style(4, 3, rng)};
    std::vector<LabelMap> masks{banded_map(16, 16, 3), random_map(16, 16, 3, rng)};
    Tensor a = generator_forward(g, sts, masks);
    CHECK(shape_eq(a.shape(), {2, 3, 16, 16}));
    for (std::int64_t i = 0; i < a.numel(); ++i) {
        CHECK(a.data()[i] <= 1.0);
        CHECK(a.data()[i] >= -1.0);
    }
    Tensor b = generator_forward(g, sts, masks);
    CHECK(bitwise_equal(a, b));

    // noise gains start at zero, so give them weight before comparing streams
    for (auto& blk : g.blocks)
        std::fill(blk.sean_0.noise_scale.data(),
                  blk.sean_0.noise_scale.data() + blk.sean_0.noise_scale.numel(),
                  0.1);
    Rng n1(7), n2(7), n3(9);
    Tensor wa = generator_forward(g, sts, masks, &n1, true);
    Tensor wb = generator_forward(g, sts, masks, &n2, true);
    Tensor wc = generator_forward(g, sts, masks, &n3, true);
    CHECK(bitwise_equal(wa, wb));
    CHECK_FALSE(bitwise_equal(wa, wc));
    CHECK_FALSE(bitwise_equal(wa, a));
}

TEST_CASE("generator: mask input mode and zero-style tail blocks") {
    Rng rng(31);
    GeneratorConfig cfg = small_gen_config();
    cfg.input_mode = GenInput::mask;
    cfg.style_injected = 1; // blocks 1..2 run on the all-zero style matrix
    Generator g = make_generator(cfg, rng);

    std::vector<StyleMatrix> sts{random_style(4, 3, rng)};
    std::vector<LabelMap> masks{banded_map(16, 16, 3)};
    Tensor a = generator_forward(g, sts, masks);
    CHECK(shape_eq(a.shape(), {1, 3, 16, 16}));
    for (std::int64_t i = 0; i < a.numel(); ++i)
        CHECK(std::abs(a.data()[i]) <= 1.0);
    CHECK(bitwise_equal(a, generator_forward(g, sts, masks)));
}

TEST_CASE("generator: configuration validation") {
    Rng rng(32);
    GeneratorConfig cfg = small_gen_config();
    cfg.channels = {6, 6};
    CHECK_THROWS_WITH_AS(make_generator(cfg, rng),
                         doctest::Contains("channel schedule"), Error);
    cfg = small_gen_config();
    cfg.image_size = 12;
    CHECK_THROWS_WITH_AS(make_generator(cfg, rng),
                         doctest::Contains("power of 2"), Error);
    cfg = small_gen_config();
    cfg.num_resblks = 1;
    cfg.channels = {6};
    cfg.style_injected = 1;
    CHECK_THROWS_WITH_AS(make_generator(cfg, rng),
                         doctest::Contains("upsampling"), Error);
    cfg = small_gen_config();
    cfg.style_injected = 4;
    CHECK_THROWS_WITH_AS(make_generator(cfg, rng),
                         doctest::Contains("style_injected"), Error);
    cfg = small_gen_config();
    cfg.num_labels = 0;
    CHECK_THROWS_WITH_AS(make_generator(cfg, rng),
                         doctest::Contains("num_labels"), Error);

    Generator g = make_generator(small_gen_config(), rng);
    std::vector<StyleMatrix> sts{random_style(4, 3, rng)};
    std::vector<LabelMap> masks{banded_map(8, 8, 3)};
    CHECK_THROWS_WITH_AS(generator_forward(g, sts, masks),
                         doctest::Contains("output resolution"), Error);
}

TEST_CASE("generator: style edits stay inside the receptive-field footprint") {
    Rng rng(33);
    GeneratorConfig cfg;
    cfg.image_size = 32;
    cfg.base_resolution = 8;
    cfg.num_resblks = 2;
    cfg.channels = {6, 4};
    cfg.style_dim = 4;
    cfg.num_labels = 2;
    cfg.style_injected = 2;
    cfg.sean_hidden = 4;
    cfg.sean_kernel = 1;      // keeps modulation strictly per-pixel
    cfg.stats_enabled = false; // batch stats couple pixels globally
    Generator g = make_generator(cfg, rng);

    LabelMap m(32, 32, 0);
    for (std::int64_t y = 0; y < 4; ++y)
        for (std::int64_t x = 0; x < 4; ++x)
            m.labels[static_cast<std::size_t>(y * 32 + x)] = 1;

    StyleMatrix st_a = random_style(4, 2, rng);
    StyleMatrix st_b = clone_style(st_a);
    for (std::int64_t d = 0; d < 4; ++d) st_b.codes.data()[d * 2 + 1] += 0.5;

    std::vector<LabelMap> masks{m};
    Tensor out_a = generator_forward(g, {&st_a, 1}, masks);
    Tensor out_b = generator_forward(g, {&st_b, 1}, masks);

    Foot foot = generator_footprint(g, m, 1);
    REQUIRE(foot.h == 32);
    std::int64_t outside = 0, inside_diff = 0, outside_diff = 0;
    for (std::int64_t c = 0; c < 3; ++c)
        for (std::int64_t y = 0; y < 32; ++y)
            for (std::int64_t x = 0; x < 32; ++x) {
                const std::int64_t i = (c * 32 + y) * 32 + x;
                const bool differs = out_a.data()[i] != out_b.data()[i];
                if (foot.at(y, x)) {
                    inside_diff += differs;
                } else {
                    ++outside;
                    outside_diff += differs;
                }
            }
    CHECK(outside > 500 * 3); // the footprint must not swallow the image
    CHECK(outside_diff == 0);
    CHECK(inside_diff > 0);
}

TEST_CASE("crossover: endpoint selections reproduce single-style outputs") {
    Rng rng(34);
    Generator g = make_generator(small_gen_config(), rng);
    StyleMatrix st_a = random_style(4, 3, rng);
    StyleMatrix st_b = random_style(4, 3, rng);
    LabelMap m = banded_map(16, 16, 3);
    std::vector<LabelMap> masks{m};

    Tensor ref_a = generator_forward(g, {&st_a, 1}, masks);
    Tensor ref_b = generator_forward(g, {&st_b, 1}, masks);
    const int all_a[3] = {0, 0, 0};
    const int all_b[3] = {1, 1, 1};
    CHECK(bitwise_equal(crossover_forward(g, st_a, st_b, all_a, m), ref_a));
    CHECK(bitwise_equal(crossover_forward(g, st_a, st_b, all_b, m), ref_b));

    // mixed selection with identical sources collapses to either endpoint
    StyleMatrix st_a2 = clone_style(st_a);
    const int mixed[3] = {0, 1, 0};
    CHECK(bitwise_equal(crossover_forward(g, st_a, st_a2, mixed, m), ref_a));

    // endpoints also agree when noise is enabled, given the same seed
    for (auto& blk : g.blocks)
        std::fill(blk.sean_1.noise_scale.data(),
                  blk.sean_1.noise_scale.data() + blk.sean_1.noise_scale.numel(),
                  0.05);
    Rng n1(5), n2(5);
    Tensor noisy_ref = generator_forward(g, {&st_a, 1}, masks, &n1, true);
    Tensor noisy_x = crossover_forward(g, st_a, st_b, all_a, m, &n2, true);
    CHECK(bitwise_equal(noisy_x, noisy_ref));
    CHECK_FALSE(bitwise_equal(noisy_x, ref_a));

    const int short_sel[2] = {0, 1};
    CHECK_THROWS_WITH_AS(crossover_forward(g, st_a, st_b, short_sel, m),
                         doctest::Contains("selection"), Error);
    const int bad_sel[3] = {0, 2, 0};
    CHECK_THROWS_WITH_AS(crossover_forward(g, st_a, st_b, bad_sel, m),
                         doctest::Contains("0 or 1"), Error);
}

// --- discriminator -----------------------------------------------------------------

TEST_CASE("discriminator: logit shapes, feature count, and channel schedule") {
    Rng rng(40);
    DiscriminatorConfig cfg;
    cfg.num_scales = 2;
    cfg.layers_per_scale = 3;
    cfg.base_channels = 4;
    cfg.num_labels = 3;
    Discriminator d = make_discriminator(cfg, rng);

    Tensor images = Tensor::randn({2, 3, 32, 32}, rng, 0.5);
    std::vector<LabelMap> masks{banded_map(32, 32, 3), banded_map(32, 32, 3)};
    DiscriminatorOutput out = discriminator_forward(d, images, masks);

    REQUIRE(out.logits.size() == 2);
    CHECK(shape_eq(out.logits[0].shape(), {2, 1, 4, 4}));
    CHECK(shape_eq(out.logits[1].shape(), {2, 1, 2, 2}));
    REQUIRE(out.features.size() == 6);
    CHECK(shape_eq(out.features[0].shape(), {2, 4, 16, 16}));
    CHECK(shape_eq(out.features[1].shape(), {2, 8, 8, 8}));
    CHECK(shape_eq(out.features[2].shape(), {2, 16, 4, 4}));
    CHECK(shape_eq(out.features[3].shape(), {2, 4, 8, 8}));
    CHECK(shape_eq(out.features[4].shape(), {2, 8, 4, 4}));
    CHECK(shape_eq(out.features[5].shape(), {2, 16, 2, 2}));

    std::vector<LabelMap> one{banded_map(32, 32, 3)};
    CHECK_THROWS_WITH_AS(discriminator_forward(d, images, one),
                         doctest::Contains("masks"), Error);
}

TEST_CASE("discriminator: image gradients pass finite differences") {
    Rng rng(41);
    DiscriminatorConfig cfg;
    cfg.num_scales = 2;
    cfg.layers_per_scale = 2;
    cfg.base_channels = 2;
    cfg.num_labels = 2;
    Discriminator d = make_discriminator(cfg, rng);

    Tensor image = Tensor::randn({1, 3, 16, 16}, rng, 0.5, true);
    std::vector<LabelMap> masks{banded_map(16, 16, 2)};
    auto loss = [&] {
        DiscriminatorOutput out = discriminator_forward(d, image, masks);
        Tensor acc = sum(out.logits[0]);
        for (std::size_t i = 1; i < out.logits.size(); ++i)
            acc = add(acc, sum(out.logits[i]));
        return acc;
    };
    std::vector<std::pair<std::size_t, std::int64_t>> probe;
    Rng pick(99);
    for (int i = 0; i < 48; ++i)
        probe.emplace_back(0, static_cast<std::int64_t>(pick.uniform_int(image.numel())));
    auto res = gradcheck(loss, {image}, probe, 1e-5, 1e-5);
    CHECK_MESSAGE(res.ok, res.detail);
}

TEST_CASE("discriminator: power iteration drives weights to unit spectral norm") {
    Rng rng(42);
    DiscriminatorConfig cfg;
    cfg.num_scales = 2;
    cfg.layers_per_scale = 2;
    cfg.base_channels = 4;
    cfg.num_labels = 2;
    Discriminator d = make_discriminator(cfg, rng);

    Tensor images = Tensor::randn({1, 3, 16, 16}, rng, 0.5);
    std::vector<LabelMap> masks{banded_map(16, 16, 2)};
    for (int step = 0; step < 40; ++step)
        discriminator_forward(d, images, masks, true);

    for (auto& scale : d.scales) {
        for (std::size_t j = 0; j < scale.convs.size(); ++j) {
            Tensor norm;
            {
                NoGradGuard ng;
                norm = spectral_normalize(scale.convs[j].w, scale.sns[j], 0, false);
            }
            CHECK(top_singular_value(norm) == doctest::Approx(1.0).epsilon(0.01));
        }
        Tensor hn;
        {
            NoGradGuard ng;
            hn = spectral_normalize(scale.head.w, scale.head_sn, 0, false);
        }
        CHECK(top_singular_value(hn) == doctest::Approx(1.0).epsilon(0.01));
    }
}

// --- end-to-end ------------------------------------------------------------------------

TEST_CASE("tiny full pipeline: parameter gradients pass finite differences") {
    Rng rng(50);

    EncoderConfig ec;
    ec.style_dim = 8;
    ec.num_labels = 3;
    ec.base_channels = 4;
    ec.max_channels = 8;
    ec.num_downsamples = 1;
    StyleEncoder enc = make_style_encoder(ec, rng);

    GeneratorConfig gc;
    gc.image_size = 8;
    gc.base_resolution = 4;
    gc.num_resblks = 2;
    gc.channels = {6, 4};
    gc.style_dim = 8;
    gc.num_labels = 3;
    gc.style_injected = 2;
    gc.sean_hidden = 4;
    Generator gen = make_generator(gc, rng);

    DiscriminatorConfig dc;
    dc.num_scales = 2;
    dc.layers_per_scale = 2;
    dc.base_channels = 2;
    dc.num_labels = 3;
    Discriminator disc = make_discriminator(dc, rng);

    Tensor image = Tensor::randn({1, 3, 8, 8}, rng, 0.5);
    Tensor target = Tensor::randn({1, 3, 8, 8}, rng, 0.5);
    LabelMap m = banded_map(8, 8, 3);
    std::vector<LabelMap> masks{m};

    std::vector<Tensor> params;
    auto collect = [&](const std::string&, Tensor& t) { params.push_back(t); };
    enc.visit_params(collect);
    gen.visit_params(collect);
    disc.visit_params(collect);
    std::int64_t total = 0;
    for (const auto& p : params) total += p.numel();

    auto loss = [&] {
        StyleMatrix st = style_encoder_forward(enc, image, m);
        std::vector<StyleMatrix> sts{st};
        Tensor recon = generator_forward(gen, sts, masks);
        Tensor diff = sub(recon, target);
        Tensor l = sum(mul(diff, diff));
        DiscriminatorOutput out = discriminator_forward(disc, recon, masks);
        for (const auto& lg : out.logits) l = add(l, sum(lg));
        return l;
    };

    // sample roughly 1% of all parameter elements
    std::vector<std::pair<std::size_t, std::int64_t>> probe;
    Rng pick(333);
    const std::int64_t want = std::max<std::int64_t>(40, total / 100);
    for (std::int64_t i = 0; i < want; ++i) {
        const std::size_t t = static_cast<std::size_t>(
            pick.uniform_int(static_cast<std::int64_t>(params.size())));
        probe.emplace_back(t, static_cast<std::int64_t>(
                                  pick.uniform_int(params[t].numel())));
    }
    auto res = gradcheck(loss, params, probe, 1e-5, 1e-3);
    CHECK_MESSAGE(res.ok, res.detail);
}
