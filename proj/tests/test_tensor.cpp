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

#include <cmath>

#include "sean/ops.hpp"
#include "sean/rng.hpp"
#include "sean/tensor.hpp"
#include "support/gradcheck.hpp"
#include "support/oracles.hpp"

using namespace sean;
using sean::testing::conv2d_naive;
using sean::testing::gradcheck;

TEST_CASE("tensor basics") {
    Tensor t(Shape{2, 3}, 1.5);
    CHECK(t.numel() == 6);
    CHECK(t.rank() == 2);
    CHECK(t.data()[5] == 1.5);
    CHECK_THROWS_AS(Tensor(Shape{2, 0}), Error);
    CHECK_THROWS_AS(Tensor::from_vector({3}, {1.0, 2.0}), Error);
    CHECK_THROWS_AS(t.value(), Error);
    CHECK(Tensor::scalar(4.0).value() == 4.0);

    Tensor nan_t = Tensor::from_vector({2}, {1.0, std::nan("")});
    CHECK(!nan_t.all_finite());
    CHECK(Tensor::full({2}, 3.0).all_finite());

    // copies alias storage; detach snapshots
    Tensor a = Tensor::full({2}, 1.0);
    Tensor alias = a;
    a.data()[0] = 7.0;
    CHECK(alias.data()[0] == 7.0);
    Tensor snap = a.detach();
    a.data()[0] = 9.0;
    CHECK(snap.data()[0] == 7.0);
    CHECK(!snap.requires_grad());
}

TEST_CASE("rng is deterministic per seed") {
    Rng a(42), b(42), c(43);
    bool all_same = true, any_diff = false;
    for (int i = 0; i < 64; ++i) {
        const double va = a.normal(), vb = b.normal(), vc = c.normal();
        all_same = all_same && (va == vb);
        any_diff = any_diff || (va != vc);
    }
    CHECK(all_same);
    CHECK(any_diff);

    Rng u(7);
    for (int i = 0; i < 256; ++i) {
        const double v = u.uniform();
        CHECK(v >= 0.0);
        CHECK(v < 1.0);
    }
}

TEST_CASE("elementwise forward values") {
    Tensor x = Tensor::from_vector({4}, {-1.0, 0.0, 2.0, -0.5});
    Tensor r = relu(x);
    CHECK(r.data()[0] == 0.0);
    CHECK(r.data()[2] == 2.0);

    Tensor l = lrelu(x, 0.2);
    CHECK(l.data()[0] == doctest::Approx(-0.2));
    CHECK(l.data()[2] == 2.0);

    CHECK(tanh(Tensor::scalar(0.0)).value() == 0.0);
    CHECK(sigmoid(Tensor::scalar(0.0)).value() == 0.5);
    CHECK(sean::sqrt(Tensor::scalar(4.0)).value() == 2.0);
    CHECK(sean::abs(Tensor::scalar(-3.0)).value() == 3.0);
    CHECK(clamp_min(Tensor::scalar(-3.0), 0.0).value() == 0.0);
}

TEST_CASE("binary broadcasting rules") {
    Tensor a(Shape{1, 2, 2, 2});
    for (std::int64_t i = 0; i < 8; ++i) a.data()[i] = static_cast<double>(i);

    // per-channel rhs against [N,C,H,W]
    Tensor c = Tensor::from_vector({2}, {10.0, 100.0});
    Tensor y = add(a, c);
    CHECK(y.at4(0, 0, 0, 0) == 10.0);
    CHECK(y.at4(0, 1, 0, 0) == 104.0);

    // scalar rhs
    Tensor s = mul(a, Tensor::scalar(2.0));
    CHECK(s.at4(0, 1, 1, 1) == 14.0);

    // same shape
    Tensor t = sub(a, a);
    CHECK(t.at4(0, 1, 0, 1) == 0.0);

    CHECK_THROWS_AS(add(a, Tensor(Shape{3})), Error);
    CHECK_THROWS_AS(add(Tensor(Shape{4}), Tensor(Shape{2})), Error);
}

TEST_CASE("reductions") {
    Tensor x = Tensor::from_vector({4}, {1.0, 2.0, 3.0, 4.0});
    CHECK(sum(x).value() == 10.0);
    CHECK(mean(x).value() == 2.5);

    Tensor h(Shape{2, 2, 1, 2});
    for (std::int64_t i = 0; i < 8; ++i) h.data()[i] = static_cast<double>(i);
    // channel 0 holds {0,1,4,5}, channel 1 holds {2,3,6,7}
    Tensor cm = channel_mean(h);
    CHECK(cm.data()[0] == 2.5);
    CHECK(cm.data()[1] == 4.5);
}

TEST_CASE("matmul oracle") {
    Tensor a = Tensor::from_vector({2, 3}, {1, 2, 3, 4, 5, 6});
    Tensor b = Tensor::from_vector({3, 2}, {7, 8, 9, 10, 11, 12});
    Tensor y = matmul(a, b);
    CHECK(y.data()[0] == 58.0);
    CHECK(y.data()[1] == 64.0);
    CHECK(y.data()[2] == 139.0);
    CHECK(y.data()[3] == 154.0);
    CHECK_THROWS_AS(matmul(a, a), Error);
}

TEST_CASE("conv2d identity kernel") {
    Rng rng(1);
    Tensor x = Tensor::randn({2, 3, 4, 4}, rng);
    Tensor w = Tensor::zeros({3, 3, 1, 1});
    for (int c = 0; c < 3; ++c) w.at4(c, c, 0, 0) = 1.0;
    Tensor y = conv2d(x, w, Tensor(), 1, 0);
    for (std::int64_t i = 0; i < x.numel(); ++i) CHECK(y.data()[i] == x.data()[i]);
}

TEST_CASE("conv2d zero-padded all-ones kernel") {
    Tensor x = Tensor::full({1, 1, 3, 3}, 1.0);
    Tensor w = Tensor::full({1, 1, 3, 3}, 1.0);
    Tensor y = conv2d(x, w, Tensor(), 1, 1);
    CHECK(y.at4(0, 0, 1, 1) == 9.0); // center
    CHECK(y.at4(0, 0, 0, 0) == 4.0); // corners
    CHECK(y.at4(0, 0, 2, 2) == 4.0);
    CHECK(y.at4(0, 0, 0, 1) == 6.0); // edges
    CHECK(y.at4(0, 0, 1, 0) == 6.0);
}

TEST_CASE("conv2d matches loop-nest oracle") {
    Rng rng(7);
    for (auto [stride, pad] : {std::pair{1, 0}, {1, 1}, {2, 1}}) {
        Tensor x = Tensor::randn({2, 3, 5, 5}, rng);
        Tensor w = Tensor::randn({4, 3, 3, 3}, rng);
        Tensor b = Tensor::randn({4}, rng);
        Tensor got = conv2d(x, w, b, stride, pad);
        Tensor want = conv2d_naive(x, w, b, stride, pad);
        REQUIRE(shape_eq(got.shape(), want.shape()));
        for (std::int64_t i = 0; i < got.numel(); ++i)
            CHECK(std::fabs(got.data()[i] - want.data()[i]) < 1e-12);
    }
    // stride-2 case with tiling geometry
    Tensor x = Tensor::randn({1, 2, 7, 7}, rng);
    Tensor w = Tensor::randn({3, 2, 3, 3}, rng);
    Tensor got = conv2d(x, w, Tensor(), 2, 1);
    Tensor want = conv2d_naive(x, w, Tensor(), 2, 1);
    for (std::int64_t i = 0; i < got.numel(); ++i)
        CHECK(std::fabs(got.data()[i] - want.data()[i]) < 1e-12);
}

TEST_CASE("conv2d linearity") {
    Rng rng(11);
    Tensor x = Tensor::randn({1, 2, 6, 6}, rng);
    Tensor y = Tensor::randn({1, 2, 6, 6}, rng);
    Tensor w = Tensor::randn({3, 2, 3, 3}, rng);
    const double a = 1.7, b = -0.4;

    Tensor mix(Shape{1, 2, 6, 6});
    for (std::int64_t i = 0; i < mix.numel(); ++i)
        mix.data()[i] = a * x.data()[i] + b * y.data()[i];

    Tensor lhs = conv2d(mix, w, Tensor(), 1, 1);
    Tensor cx = conv2d(x, w, Tensor(), 1, 1);
    Tensor cy = conv2d(y, w, Tensor(), 1, 1);
    for (std::int64_t i = 0; i < lhs.numel(); ++i)
        CHECK(std::fabs(lhs.data()[i] - (a * cx.data()[i] + b * cy.data()[i])) < 1e-10);
}

TEST_CASE("conv2d shape errors name the offending dimension") {
    Tensor x(Shape{1, 3, 4, 4});
    Tensor w_badc(Shape{2, 4, 3, 3});
    CHECK_THROWS_WITH_AS(conv2d(x, w_badc, Tensor(), 1, 1),
                         doctest::Contains("channel mismatch"), Error);
    Tensor w_even(Shape{2, 3, 2, 2});
    CHECK_THROWS_WITH_AS(conv2d(x, w_even, Tensor(), 1, 0),
                         doctest::Contains("odd"), Error);
    Tensor w(Shape{2, 3, 3, 3});
    CHECK_THROWS_WITH_AS(conv2d(x, w, Tensor(), 2, 0),
                         doctest::Contains("stride"), Error);
    CHECK_THROWS_AS(conv2d(x, w, Tensor(Shape{3}), 1, 1), Error);
}

TEST_CASE("upsample_nearest values and pooling round trip") {
    Tensor x = Tensor::from_vector({1, 1, 2, 2}, {1, 2, 3, 4});
    Tensor same = upsample_nearest(x, 1);
    for (int i = 0; i < 4; ++i) CHECK(same.data()[i] == x.data()[i]);

    Tensor y = upsample_nearest(x, 2);
    const double want[16] = {1, 1, 2, 2, 1, 1, 2, 2, 3, 3, 4, 4, 3, 3, 4, 4};
    for (int i = 0; i < 16; ++i) CHECK(y.data()[i] == want[i]);

    Tensor back = avg_pool2d(y, 2);
    for (int i = 0; i < 4; ++i) CHECK(back.data()[i] == x.data()[i]);

    CHECK_THROWS_AS(upsample_nearest(x, 0), Error);
    CHECK_THROWS_AS(avg_pool2d(Tensor(Shape{1, 1, 3, 3}), 2), Error);
}

TEST_CASE("upsample backward sums over blocks") {
    Tensor x = Tensor::from_vector({1, 1, 2, 2}, {1, 2, 3, 4}, true);
    Tensor y = upsample_nearest(x, 2);
    backward(sum(y));
    auto g = x.grad();
    for (int i = 0; i < 4; ++i) CHECK(g[i] == 4.0);
    Tape::get().clear();
}

TEST_CASE("instance_norm statistics") {
    // constant slice -> zeros via the eps guard
    Tensor c = Tensor::full({1, 1, 3, 3}, 5.0);
    Tensor yc = instance_norm(c);
    for (std::int64_t i = 0; i < 9; ++i) CHECK(yc.data()[i] == 0.0);

    // slice [1,3]: mean 2, population std 1 -> roughly [-1, 1]
    Tensor two = Tensor::from_vector({1, 1, 1, 2}, {1.0, 3.0});
    Tensor yt = instance_norm(two);
    CHECK(yt.data()[0] == doctest::Approx(-1.0).epsilon(1e-4));
    CHECK(yt.data()[1] == doctest::Approx(1.0).epsilon(1e-4));

    // random non-degenerate slices: mean ~0, variance ~1
    Rng rng(3);
    Tensor x = Tensor::randn({2, 3, 8, 8}, rng, 10.0);
    Tensor y = instance_norm(x);
    const std::int64_t plane = 64;
    for (std::int64_t s = 0; s < 6; ++s) {
        const double* p = y.data() + s * plane;
        double m = 0.0;
        for (std::int64_t i = 0; i < plane; ++i) m += p[i];
        m /= plane;
        double var = 0.0;
        for (std::int64_t i = 0; i < plane; ++i) var += (p[i] - m) * (p[i] - m);
        var /= plane;
        CHECK(std::fabs(m) < 1e-12);
        CHECK(std::fabs(var - 1.0) < 1e-6);
    }
}

TEST_CASE("backward basics") {
    Tensor x = Tensor::from_vector({3}, {1.0, -2.0, 3.0}, true);
    backward(sum(x));
    for (int i = 0; i < 3; ++i) CHECK(x.grad()[i] == 1.0);
    x.zero_grad();
    Tape::get().clear();

    backward(sum(mul(x, x)));
    for (int i = 0; i < 3; ++i) CHECK(x.grad()[i] == 2.0 * x.data()[i]);
    x.zero_grad();
    Tape::get().clear();

    CHECK_THROWS_AS(backward(x), Error);
    Tape::get().clear();
}

TEST_CASE("repeated backward doubles gradients exactly") {
    Tensor x = Tensor::from_vector({2}, {1.5, -0.7}, true);
    Tensor loss = sum(mul(x, x));
    backward(loss);
    std::vector<double> g1(x.grad().begin(), x.grad().end());
    backward(loss);
    for (int i = 0; i < 2; ++i) CHECK(x.grad()[i] == 2.0 * g1[i]);
    Tape::get().clear();
}

TEST_CASE("disjoint graphs on one tape stay independent") {
    Tensor a = Tensor::from_vector({1}, {2.0}, true);
    Tensor b = Tensor::from_vector({1}, {3.0}, true);
    Tensor la = mul(a, a);       // graph 1
    Tensor lb = mul_scalar(b, 5.0); // graph 2, recorded on the same tape
    backward(sum(lb));
    CHECK(!a.has_grad());
    CHECK(b.grad()[0] == 5.0);
    backward(sum(la));
    CHECK(a.grad()[0] == 4.0);
    CHECK(b.grad()[0] == 5.0); // untouched by the second sweep
    Tape::get().clear();
}

TEST_CASE("NoGradGuard suppresses recording") {
    Tensor x = Tensor::from_vector({2}, {1.0, 2.0}, true);
    const std::size_t before = Tape::get().size();
    {
        NoGradGuard ng;
        Tensor y = mul(x, x);
        CHECK(!y.requires_grad());
    }
    CHECK(Tape::get().size() == before);
    Tensor y = mul(x, x);
    CHECK(y.requires_grad());
    CHECK(Tape::get().size() == before + 1);
    Tape::get().clear();
}

TEST_CASE("gradcheck: pointwise and binary ops") {
    Rng rng(21);
    // sample away from relu/lrelu/abs kinks
    Tensor x = Tensor::from_vector({6}, {0.8, -0.6, 1.3, -1.1, 0.4, -2.0}, true);
    Tensor w = Tensor::from_vector({6}, {0.5, 1.2, -0.3, 0.9, -1.4, 0.7}, true);

    auto run = [&](const char* name, std::function<Tensor()> loss) {
        auto res = gradcheck(loss, {x, w});
        INFO(name << ": " << res.detail);
        CHECK(res.ok);
    };

    run("add", [&] { return sum(add(x, w)); });
    run("sub", [&] { return sum(mul(sub(x, w), sub(x, w))); });
    run("mul", [&] { return sum(mul(x, w)); });
    run("div", [&] { return sum(div(x, w)); });
    run("relu", [&] { return sum(mul(relu(x), w)); });
    run("lrelu", [&] { return sum(mul(lrelu(x, 0.2), w)); });
    run("tanh", [&] { return sum(mul(tanh(x), w)); });
    run("sigmoid", [&] { return sum(mul(sigmoid(x), w)); });
    run("abs", [&] { return sum(mul(sean::abs(x), w)); });
    run("mean", [&] { return mean(mul(x, w)); });
    run("add_scalar/mul_scalar", [&] { return sum(mul_scalar(add_scalar(x, 1.5), -2.0)); });
    run("sqrt", [&] { return sum(sean::sqrt(add_scalar(mul(x, x), 1.0))); });
    run("clamp_min", [&] { return sum(clamp_min(x, 0.1)); });
}

TEST_CASE("gradcheck: channel broadcast") {
    Tensor x = Tensor::from_vector({1, 2, 2, 2},
                                   {0.3, -0.8, 1.1, 0.6, -0.2, 0.9, -1.3, 0.5}, true);
    Tensor c = Tensor::from_vector({2}, {1.4, -0.7}, true);
    auto res = gradcheck([&] { return sum(mul(tanh(add(x, c)), x)); }, {x, c});
    INFO(res.detail);
    CHECK(res.ok);
}

TEST_CASE("gradcheck: matmul and reductions") {
    Rng rng(31);
    Tensor a = Tensor::randn({3, 4}, rng, 1.0, true);
    Tensor b = Tensor::randn({4, 2}, rng, 1.0, true);
    auto res = gradcheck([&] { return sum(mul(matmul(a, b), matmul(a, b))); }, {a, b});
    INFO(res.detail);
    CHECK(res.ok);

    Tensor h = Tensor::randn({2, 3, 2, 2}, rng, 1.0, true);
    auto res2 = gradcheck([&] { return sum(mul(channel_mean(h), channel_mean(h))); }, {h});
    INFO(res2.detail);
    CHECK(res2.ok);
}

TEST_CASE("gradcheck: conv2d stride and pad combinations") {
    Rng rng(41);
    for (auto [stride, pad] : {std::pair{1, 0}, {1, 1}, {2, 1}}) {
        Tensor x = Tensor::randn({2, 2, 5, 5}, rng, 1.0, true);
        Tensor w = Tensor::randn({3, 2, 3, 3}, rng, 0.5, true);
        Tensor b = Tensor::randn({3}, rng, 0.5, true);
        if ((5 + 2 * pad - 3) % stride != 0) continue;
        auto loss = [&] {
            Tensor y = conv2d(x, w, b, stride, pad);
            return sum(mul(y, y));
        };
        // probe a spread of elements from each input
        std::vector<std::pair<std::size_t, std::int64_t>> probe;
        for (std::int64_t i = 0; i < x.numel(); i += 7) probe.emplace_back(0, i);
        for (std::int64_t i = 0; i < w.numel(); i += 5) probe.emplace_back(1, i);
        probe.emplace_back(2, 0);
        probe.emplace_back(2, 2);
        auto res = gradcheck(loss, {x, w, b}, probe);
        INFO("stride " << stride << " pad " << pad << ": " << res.detail);
        CHECK(res.ok);
    }
}

TEST_CASE("gradcheck: pooling, upsample, shape ops") {
    Rng rng(51);
    Tensor x = Tensor::randn({1, 2, 4, 4}, rng, 1.0, true);
    Tensor y2 = Tensor::randn({1, 2, 4, 4}, rng, 1.0, true);

    auto r1 = gradcheck([&] { return sum(mul(avg_pool2d(x, 2), avg_pool2d(x, 2))); }, {x});
    INFO(r1.detail);
    CHECK(r1.ok);

    auto r2 = gradcheck(
        [&] {
            Tensor u = upsample_nearest(avg_pool2d(x, 2), 2);
            return sum(mul(u, y2));
        },
        {x, y2});
    INFO(r2.detail);
    CHECK(r2.ok);

    auto r3 = gradcheck(
        [&] {
            Tensor cat = concat_channels(x, y2);
            return sum(mul(cat, cat));
        },
        {x, y2});
    INFO(r3.detail);
    CHECK(r3.ok);

    auto r4 = gradcheck(
        [&] {
            Tensor r = reshape(x, {2, 16});
            return sum(mul(matmul(r, reshape(y2, {16, 2})), Tensor::scalar(0.5)));
        },
        {x, y2});
    INFO(r4.detail);
    CHECK(r4.ok);

    Tensor one = Tensor::randn({1, 2, 2, 2}, rng, 1.0, true);
    auto r5 = gradcheck(
        [&] {
            Tensor rep = repeat_batch(one, 3);
            return sum(mul(rep, rep));
        },
        {one});
    INFO(r5.detail);
    CHECK(r5.ok);

    Tensor s0 = Tensor::randn({2, 2, 2}, rng, 1.0, true);
    Tensor s1 = Tensor::randn({2, 2, 2}, rng, 1.0, true);
    auto r6 = gradcheck(
        [&] {
            std::vector<Tensor> parts{s0, s1};
            Tensor st = stack_batch(parts);
            return sum(mul(st, st));
        },
        {s0, s1});
    INFO(r6.detail);
    CHECK(r6.ok);
}

TEST_CASE("gradcheck: instance_norm") {
    Rng rng(61);
    Tensor x = Tensor::randn({2, 2, 3, 3}, rng, 1.0, true);
    Tensor w = Tensor::randn({2, 2, 3, 3}, rng, 1.0, true);
    auto res = gradcheck([&] { return sum(mul(instance_norm(x), w)); }, {x, w});
    INFO(res.detail);
    CHECK(res.ok);
}

TEST_CASE("gradcheck: composite graph") {
    Rng rng(71);
    Tensor x = Tensor::randn({1, 2, 4, 4}, rng, 1.0, true);
    Tensor w1 = Tensor::randn({4, 2, 3, 3}, rng, 0.4, true);
    Tensor w2 = Tensor::randn({2, 4, 3, 3}, rng, 0.4, true);
    auto loss = [&] {
        Tensor h = lrelu(conv2d(x, w1, Tensor(), 1, 1), 0.2);
        h = instance_norm(h);
        h = tanh(conv2d(h, w2, Tensor(), 1, 1));
        return mean(mul(h, h));
    };
    std::vector<std::pair<std::size_t, std::int64_t>> probe;
    for (std::int64_t i = 0; i < x.numel(); i += 5) probe.emplace_back(0, i);
    for (std::int64_t i = 0; i < w1.numel(); i += 11) probe.emplace_back(1, i);
    for (std::int64_t i = 0; i < w2.numel(); i += 11) probe.emplace_back(2, i);
    auto res = gradcheck(loss, {x, w1, w2}, probe, 1e-5, 1e-4);
    INFO(res.detail);
    CHECK(res.ok);
}

TEST_CASE("grads only flow to requires_grad inputs") {
    Tensor x = Tensor::from_vector({2}, {1.0, 2.0}, true);
    Tensor frozen = Tensor::from_vector({2}, {3.0, 4.0}, false);
    backward(sum(mul(x, frozen)));
    CHECK(x.grad()[0] == 3.0);
    CHECK(x.grad()[1] == 4.0);
    CHECK(!frozen.has_grad());
    Tape::get().clear();
}
