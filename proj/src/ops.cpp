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

#include "sean/ops.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <utility>

namespace sean {

namespace {

using RowMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;

// --- pointwise unary ---------------------------------------------------------

// dfdx receives (x_i, y_i) so ops like tanh can reuse the forward value.
template <typename F, typename G>
Tensor pointwise(const Tensor& x, F f, G dfdx) {
    Tensor y(x.shape());
    const double* xp = x.data();
    double* yp = y.data();
    const std::int64_t n = x.numel();
    for (std::int64_t i = 0; i < n; ++i) yp[i] = f(xp[i]);

    if (track_grad({&x})) {
        y.set_requires_grad(true);
        Tensor xc = x, yc = y;
        Tape::get().record(y, [xc, yc, dfdx](BackwardCtx& ctx) {
            auto g = ctx.adjoint(yc);
            auto gx = ctx.adjoint_buf(xc);
            const double* xp2 = xc.data();
            const double* yp2 = yc.data();
            for (std::size_t i = 0; i < gx.size(); ++i)
                gx[i] += g[i] * dfdx(xp2[i], yp2[i]);
        });
    }
    return y;
}

// --- binary broadcasting -----------------------------------------------------

enum class Bc { same, scalar_rhs, channel_rhs };

Bc classify(const char* op, const Tensor& a, const Tensor& b) {
    if (shape_eq(a.shape(), b.shape())) return Bc::same;
    if (b.numel() == 1) return Bc::scalar_rhs;
    if (a.rank() == 4 && b.rank() == 1 && b.dim(0) == a.dim(1)) return Bc::channel_rhs;
    fail(op, ": shapes not broadcastable: lhs ", shape_str(a.shape()), " vs rhs ",
         shape_str(b.shape()));
}

// out_i = f(a_i, b_{map(i)}); dfda/dfdb are partials as functions of (a, b).
template <typename F, typename DA, typename DB>
Tensor binary(const char* op, const Tensor& a, const Tensor& b, F f, DA dfda, DB dfdb) {
    const Bc bc = classify(op, a, b);
    Tensor y(a.shape());
    const double* ap = a.data();
    const double* bp = b.data();
    double* yp = y.data();
    const std::int64_t n = a.numel();
    const std::int64_t plane = (bc == Bc::channel_rhs) ? a.dim(2) * a.dim(3) : 1;
    const std::int64_t channels = (bc == Bc::channel_rhs) ? a.dim(1) : 1;

    auto bindex = [bc, plane, channels](std::int64_t i) -> std::int64_t {
        switch (bc) {
        case Bc::same: return i;
        case Bc::scalar_rhs: return 0;
        case Bc::channel_rhs: return (i / plane) % channels;
        }
        return 0;
    };

    for (std::int64_t i = 0; i < n; ++i) yp[i] = f(ap[i], bp[bindex(i)]);

    if (track_grad({&a, &b})) {
        y.set_requires_grad(true);
        Tensor ac = a, bcopy = b, yc = y;
        Tape::get().record(y, [=](BackwardCtx& ctx) {
            auto g = ctx.adjoint(yc);
            const double* ap2 = ac.data();
            const double* bp2 = bcopy.data();
            if (ac.requires_grad()) {
                auto ga = ctx.adjoint_buf(ac);
                for (std::int64_t i = 0; i < n; ++i)
                    ga[i] += g[i] * dfda(ap2[i], bp2[bindex(i)]);
            }
            if (bcopy.requires_grad()) {
                auto gb = ctx.adjoint_buf(bcopy);
                for (std::int64_t i = 0; i < n; ++i)
                    gb[bindex(i)] += g[i] * dfdb(ap2[i], bp2[bindex(i)]);
            }
        });
    }
    return y;
}

struct ConvDims {
    std::int64_t n, cin, h, w;
    std::int64_t cout, kh, kw;
    std::int64_t oh, ow;
    std::int64_t k;  // cin*kh*kw
    std::int64_t ol; // oh*ow
    int stride, pad;
};

ConvDims conv_dims(const Tensor& input, const Tensor& weight, const Tensor& bias,
                   int stride, int pad) {
    check(input.rank() == 4, "conv2d: input must be rank 4 [N,C,H,W], got ",
          shape_str(input.shape()));
    check(weight.rank() == 4, "conv2d: weight must be rank 4 [Cout,Cin,kH,kW], got ",
          shape_str(weight.shape()));
    check(stride >= 1, "conv2d: stride must be >= 1, got ", stride);
    check(pad >= 0, "conv2d: pad must be >= 0, got ", pad);

    ConvDims d;
    d.n = input.dim(0);
    d.cin = input.dim(1);
    d.h = input.dim(2);
    d.w = input.dim(3);
    d.cout = weight.dim(0);
    d.kh = weight.dim(2);
    d.kw = weight.dim(3);
    d.stride = stride;
    d.pad = pad;

    check(weight.dim(1) == d.cin, "conv2d: channel mismatch on dim 1: input C=", d.cin,
          " vs weight Cin=", weight.dim(1));
    check(d.kh % 2 == 1 && d.kw % 2 == 1, "conv2d: kernel extents must be odd, got ",
          d.kh, "x", d.kw);
    const std::int64_t hn = d.h + 2 * pad - d.kh;
    const std::int64_t wn = d.w + 2 * pad - d.kw;
    check(hn >= 0 && hn % stride == 0,
          "conv2d: height does not tile: (H + 2*pad - kH) = ", hn,
          " not a non-negative multiple of stride ", stride);
    check(wn >= 0 && wn % stride == 0,
          "conv2d: width does not tile: (W + 2*pad - kW) = ", wn,
          " not a non-negative multiple of stride ", stride);
    d.oh = hn / stride + 1;
    d.ow = wn / stride + 1;
    d.k = d.cin * d.kh * d.kw;
    d.ol = d.oh * d.ow;

    if (bias.defined())
        check(bias.rank() == 1 && bias.dim(0) == d.cout,
              "conv2d: bias must be [Cout]=[", d.cout, "], got ", shape_str(bias.shape()));
    return d;
}

// patch matrix for one sample: col[k][o], k = (c*kh + ky)*kw + kx, o = oy*ow + ox
void im2col(const double* x, const ConvDims& d, double* col) {
    for (std::int64_t c = 0; c < d.cin; ++c) {
        const double* xc = x + c * d.h * d.w;
        for (std::int64_t ky = 0; ky < d.kh; ++ky) {
            for (std::int64_t kx = 0; kx < d.kw; ++kx) {
                double* row = col + ((c * d.kh + ky) * d.kw + kx) * d.ol;
                for (std::int64_t oy = 0; oy < d.oh; ++oy) {
                    const std::int64_t iy = oy * d.stride - d.pad + ky;
                    double* out = row + oy * d.ow;
                    if (iy < 0 || iy >= d.h) {
                        for (std::int64_t ox = 0; ox < d.ow; ++ox) out[ox] = 0.0;
                        continue;
                    }
                    const double* xrow = xc + iy * d.w;
                    for (std::int64_t ox = 0; ox < d.ow; ++ox) {
                        const std::int64_t ix = ox * d.stride - d.pad + kx;
                        out[ox] = (ix >= 0 && ix < d.w) ? xrow[ix] : 0.0;
                    }
                }
            }
        }
    }
}

// scatter-add of a col-shaped gradient back onto the input image
void col2im_add(const double* col, const ConvDims& d, double* gx) {
    for (std::int64_t c = 0; c < d.cin; ++c) {
        double* gc = gx + c * d.h * d.w;
        for (std::int64_t ky = 0; ky < d.kh; ++ky) {
            for (std::int64_t kx = 0; kx < d.kw; ++kx) {
                const double* row = col + ((c * d.kh + ky) * d.kw + kx) * d.ol;
                for (std::int64_t oy = 0; oy < d.oh; ++oy) {
                    const std::int64_t iy = oy * d.stride - d.pad + ky;
                    if (iy < 0 || iy >= d.h) continue;
                    const double* in = row + oy * d.ow;
                    double* grow = gc + iy * d.w;
                    for (std::int64_t ox = 0; ox < d.ow; ++ox) {
                        const std::int64_t ix = ox * d.stride - d.pad + kx;
                        if (ix >= 0 && ix < d.w) grow[ix] += in[ox];
                    }
                }
            }
        }
    }
}

} // namespace

// --- binary ops --------------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
    return binary(
        "add", a, b, [](double x, double y) { return x + y; },
        [](double, double) { return 1.0; }, [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    return binary(
        "sub", a, b, [](double x, double y) { return x - y; },
        [](double, double) { return 1.0; }, [](double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    return binary(
        "mul", a, b, [](double x, double y) { return x * y; },
        [](double, double y) { return y; }, [](double x, double) { return x; });
}

Tensor div(const Tensor& a, const Tensor& b) {
    return binary(
        "div", a, b, [](double x, double y) { return x / y; },
        [](double, double y) { return 1.0 / y; },
        [](double x, double y) { return -x / (y * y); });
}

Tensor add_scalar(const Tensor& x, double c) {
    return pointwise(
        x, [c](double v) { return v + c; }, [](double, double) { return 1.0; });
}

Tensor mul_scalar(const Tensor& x, double c) {
    return pointwise(
        x, [c](double v) { return v * c; }, [c](double, double) { return c; });
}

// --- pointwise nonlinearities --------------------------------------------------

Tensor relu(const Tensor& x) {
    return pointwise(
        x, [](double v) { return v > 0.0 ? v : 0.0; },
        [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor lrelu(const Tensor& x, double slope) {
    return pointwise(
        x, [slope](double v) { return v > 0.0 ? v : slope * v; },
        [slope](double v, double) { return v > 0.0 ? 1.0 : slope; });
}

Tensor tanh(const Tensor& x) {
    return pointwise(
        x, [](double v) { return std::tanh(v); },
        [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& x) {
    return pointwise(
        x, [](double v) { return 1.0 / (1.0 + std::exp(-v)); },
        [](double, double y) { return y * (1.0 - y); });
}

Tensor sqrt(const Tensor& x) {
    return pointwise(
        x, [](double v) { return std::sqrt(v); },
        [](double, double y) { return 0.5 / y; });
}

Tensor abs(const Tensor& x) {
    return pointwise(
        x, [](double v) { return std::fabs(v); },
        [](double v, double) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
}

Tensor clamp_min(const Tensor& x, double lo) {
    return pointwise(
        x, [lo](double v) { return v < lo ? lo : v; },
        [lo](double v, double) { return v < lo ? 0.0 : 1.0; });
}

// --- reductions ----------------------------------------------------------------

Tensor sum(const Tensor& x) {
    double acc = 0.0;
    const double* xp = x.data();
    for (std::int64_t i = 0; i < x.numel(); ++i) acc += xp[i];
    Tensor y = Tensor::scalar(acc);
    if (track_grad({&x})) {
        y.set_requires_grad(true);
        Tensor xc = x, yc = y;
        Tape::get().record(y, [xc, yc](BackwardCtx& ctx) {
            const double g = ctx.adjoint(yc)[0];
            auto gx = ctx.adjoint_buf(xc);
            for (auto& v : gx) v += g;
        });
    }
    return y;
}

Tensor mean(const Tensor& x) {
    const double inv = 1.0 / static_cast<double>(x.numel());
    double acc = 0.0;
    const double* xp = x.data();
    for (std::int64_t i = 0; i < x.numel(); ++i) acc += xp[i];
    Tensor y = Tensor::scalar(acc * inv);
    if (track_grad({&x})) {
        y.set_requires_grad(true);
        Tensor xc = x, yc = y;
        Tape::get().record(y, [xc, yc, inv](BackwardCtx& ctx) {
            const double g = ctx.adjoint(yc)[0] * inv;
            auto gx = ctx.adjoint_buf(xc);
            for (auto& v : gx) v += g;
        });
    }
    return y;
}

Tensor channel_mean(const Tensor& x) {
    check(x.rank() == 4, "channel_mean: input must be rank 4, got ",
          shape_str(x.shape()));
    const std::int64_t n = x.dim(0), c = x.dim(1), plane = x.dim(2) * x.dim(3);
    const double inv = 1.0 / static_cast<double>(n * plane);
    Tensor y(Shape{c});
    double* yp = y.data();
    const double* xp = x.data();
    for (std::int64_t in = 0; in < n; ++in)
        for (std::int64_t ic = 0; ic < c; ++ic) {
            const double* p = xp + (in * c + ic) * plane;
            double acc = 0.0;
            for (std::int64_t i = 0; i < plane; ++i) acc += p[i];
            yp[ic] += acc;
        }
    for (std::int64_t ic = 0; ic < c; ++ic) yp[ic] *= inv;

    if (track_grad({&x})) {
        y.set_requires_grad(true);
        Tensor xc = x, yc = y;
        Tape::get().record(y, [xc, yc, n, c, plane, inv](BackwardCtx& ctx) {
            auto g = ctx.adjoint(yc);
            auto gx = ctx.adjoint_buf(xc);
            for (std::int64_t in = 0; in < n; ++in)
                for (std::int64_t ic = 0; ic < c; ++ic) {
                    const double gv = g[ic] * inv;
                    double* p = gx.data() + (in * c + ic) * plane;
                    for (std::int64_t i = 0; i < plane; ++i) p[i] += gv;
                }
        });
    }
    return y;
}

// --- matmul ---------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
    check(a.rank() == 2 && b.rank() == 2, "matmul: both operands must be rank 2, got ",
          shape_str(a.shape()), " and ", shape_str(b.shape()));
    check(a.dim(1) == b.dim(0), "matmul: inner dimension mismatch: ", a.dim(1), " vs ",
          b.dim(0));
    const std::int64_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    Tensor y(Shape{m, n});
    MatMap ym(y.data(), m, n);
    ConstMatMap am(a.data(), m, k), bm(b.data(), k, n);
    ym.noalias() = am * bm;

    if (track_grad({&a, &b})) {
        y.set_requires_grad(true);
        Tensor ac = a, bc = b, yc = y;
        Tape::get().record(y, [ac, bc, yc, m, k, n](BackwardCtx& ctx) {
            auto g = ctx.adjoint(yc);
            ConstMatMap gm(g.data(), m, n);
            if (ac.requires_grad()) {
                MatMap ga(ctx.adjoint_buf(ac).data(), m, k);
                ConstMatMap bm2(bc.data(), k, n);
                ga.noalias() += gm * bm2.transpose();
            }
            if (bc.requires_grad()) {
                MatMap gb(ctx.adjoint_buf(bc).data(), k, n);
                ConstMatMap am2(ac.data(), m, k);
                gb.noalias() += am2.transpose() * gm;
            }
        });
    }
    return y;
}

// --- conv2d ---------------------------------------------------------------------

Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias,
              int stride, int pad) {
    const ConvDims d = conv_dims(input, weight, bias, stride, pad);
    Tensor y(Shape{d.n, d.cout, d.oh, d.ow});

    std::vector<double> col(static_cast<std::size_t>(d.k * d.ol));
    ConstMatMap wm(weight.data(), d.cout, d.k);
    for (std::int64_t n = 0; n < d.n; ++n) {
        im2col(input.data() + n * d.cin * d.h * d.w, d, col.data());
        ConstMatMap cm(col.data(), d.k, d.ol);
        MatMap ym(y.data() + n * d.cout * d.ol, d.cout, d.ol);
        ym.noalias() = wm * cm;
        if (bias.defined()) {
            const double* bp = bias.data();
            for (std::int64_t co = 0; co < d.cout; ++co)
                ym.row(co).array() += bp[co];
        }
    }

    if (track_grad({&input, &weight, &bias})) {
        y.set_requires_grad(true);
        Tensor xc = input, wc = weight, bc = bias, yc = y;
        Tape::get().record(y, [xc, wc, bc, yc, d](BackwardCtx& ctx) {
            auto g = ctx.adjoint(yc);
            const bool need_x = xc.requires_grad();
            const bool need_w = wc.requires_grad();
            const bool need_b = bc.defined() && bc.requires_grad();

            std::span<double> gx, gw, gb;
            if (need_x) gx = ctx.adjoint_buf(xc);
            if (need_w) gw = ctx.adjoint_buf(wc);
            if (need_b) gb = ctx.adjoint_buf(bc);

            std::vector<double> col(static_cast<std::size_t>(d.k * d.ol));
            std::vector<double> colgrad;
            if (need_x) colgrad.resize(static_cast<std::size_t>(d.k * d.ol));
            ConstMatMap wm(wc.data(), d.cout, d.k);

            for (std::int64_t n = 0; n < d.n; ++n) {
                ConstMatMap gm(g.data() + n * d.cout * d.ol, d.cout, d.ol);
                if (need_b)
                    for (std::int64_t co = 0; co < d.cout; ++co)
                        gb[co] += gm.row(co).sum();
                if (need_w) {
                    im2col(xc.data() + n * d.cin * d.h * d.w, d, col.data());
                    ConstMatMap cm(col.data(), d.k, d.ol);
                    MatMap gwm(gw.data(), d.cout, d.k);
                    gwm.noalias() += gm * cm.transpose();
                }
                if (need_x) {
                    MatMap cgm(colgrad.data(), d.k, d.ol);
                    cgm.noalias() = wm.transpose() * gm;
                    col2im_add(colgrad.data(), d, gx.data() + n * d.cin * d.h * d.w);
                }
            }
        });
    }
    return y;
}

// --- pooling / resampling ---------------------------------------------------------

Tensor avg_pool2d(const Tensor& x, int factor) {
    check(x.rank() == 4, "avg_pool2d: input must be rank 4, got ", shape_str(x.shape()));
    check(factor >= 1, "avg_pool2d: factor must be >= 1, got ", factor);
    const std::int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    check(h % factor == 0 && w % factor == 0, "avg_pool2d: spatial dims ", h, "x", w,
          " not divisible by factor ", factor);
    const std::int64_t oh = h / factor, ow = w / factor;
    const double inv = 1.0 / static_cast<double>(factor * factor);

    Tensor y(Shape{n, c, oh, ow});
    const double* xp = x.data();
    double* yp = y.data();
    for (std::int64_t nc = 0; nc < n * c; ++nc) {
        const double* xs = xp + nc * h * w;
        double* ys = yp + nc * oh * ow;
        for (std::int64_t oy = 0; oy < oh; ++oy)
            for (std::int64_t ox = 0; ox < ow; ++ox) {
                double acc = 0.0;
                for (std::int64_t dy = 0; dy < factor; ++dy)
                    for (std::int64_t dx = 0; dx < factor; ++dx)
                        acc += xs[(oy * factor + dy) * w + ox * factor + dx];
                ys[oy * ow + ox] = acc * inv;
            }
    }

    if (track_grad({&x})) {
        y.set_requires_grad(true);
        Tensor xc = x, yc = y;
        Tape::get().record(y, [xc, yc, n, c, h, w, oh, ow, factor, inv](BackwardCtx& ctx) {
            auto g = ctx.adjoint(yc);
            auto gx = ctx.adjoint_buf(xc);
            for (std::int64_t nc = 0; nc < n * c; ++nc) {
                const double* gs = g.data() + nc * oh * ow;
                double* gxs = gx.data() + nc * h * w;
                for (std::int64_t oy = 0; oy < oh; ++oy)
                    for (std::int64_t ox = 0; ox < ow; ++ox) {
                        const double gv = gs[oy * ow + ox] * inv;
                        for (std::int64_t dy = 0; dy < factor; ++dy)
                            for (std::int64_t dx = 0; dx < factor; ++dx)
                                gxs[(oy * factor + dy) * w + ox * factor + dx] += gv;
                    }
            }
        });
    }
    return y;
}

Tensor upsample_nearest(const Tensor& x, int factor) {
    check(x.rank() == 4, "upsample_nearest: input must be rank 4, got ",
          shape_str(x.shape()));
    check(factor >= 1, "upsample_nearest: factor must be >= 1, got ", factor);
    const std::int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    const std::int64_t oh = h * factor, ow = w * factor;

    Tensor y(Shape{n, c, oh, ow});
    const double* xp = x.data();
    double* yp = y.data();
    for (std::int64_t nc = 0; nc < n * c; ++nc) {
        const double* xs = xp + nc * h * w;
        double* ys = yp + nc * oh * ow;
        for (std::int64_t oy = 0; oy < oh; ++oy) {
            const double* xrow = xs + (oy / factor) * w;
            double* yrow = ys + oy * ow;
            for (std::int64_t ox = 0; ox < ow; ++ox) yrow[ox] = xrow[ox / factor];
        }
    }

    if (track_grad({&x})) {
        y.set_requires_grad(true);
        Tensor xc = x, yc = y;
        Tape::get().record(y, [xc, yc, n, c, h, w, oh, ow, factor](BackwardCtx& ctx) {
            auto g = ctx.adjoint(yc);
            auto gx = ctx.adjoint_buf(xc);
            for (std::int64_t nc = 0; nc < n * c; ++nc) {
                const double* gs = g.data() + nc * oh * ow;
                double* gxs = gx.data() + nc * h * w;
                for (std::int64_t oy = 0; oy < oh; ++oy) {
                    double* grow = gxs + (oy / factor) * w;
                    const double* gr = gs + oy * ow;
                    for (std::int64_t ox = 0; ox < ow; ++ox) grow[ox / factor] += gr[ox];
                }
            }
        });
    }
    return y;
}

// --- shape ops --------------------------------------------------------------------

Tensor concat_channels(const Tensor& a, const Tensor& b) {
    check(a.rank() == 4 && b.rank() == 4, "concat_channels: inputs must be rank 4, got ",
          shape_str(a.shape()), " and ", shape_str(b.shape()));
    check(a.dim(0) == b.dim(0) && a.dim(2) == b.dim(2) && a.dim(3) == b.dim(3),
          "concat_channels: batch/spatial mismatch: ", shape_str(a.shape()), " vs ",
          shape_str(b.shape()));
    const std::int64_t n = a.dim(0), ca = a.dim(1), cb = b.dim(1);
    const std::int64_t plane = a.dim(2) * a.dim(3);
    Tensor y(Shape{n, ca + cb, a.dim(2), a.dim(3)});
    for (std::int64_t in = 0; in < n; ++in) {
        std::copy_n(a.data() + in * ca * plane, ca * plane,
                    y.data() + in * (ca + cb) * plane);
        std::copy_n(b.data() + in * cb * plane, cb * plane,
                    y.data() + (in * (ca + cb) + ca) * plane);
    }

    if (track_grad({&a, &b})) {
        y.set_requires_grad(true);
        Tensor ac = a, bc = b, yc = y;
        Tape::get().record(y, [ac, bc, yc, n, ca, cb, plane](BackwardCtx& ctx) {
            auto g = ctx.adjoint(yc);
            if (ac.requires_grad()) {
                auto ga = ctx.adjoint_buf(ac);
                for (std::int64_t in = 0; in < n; ++in)
                    for (std::int64_t i = 0; i < ca * plane; ++i)
                        ga[in * ca * plane + i] += g[in * (ca + cb) * plane + i];
            }
            if (bc.requires_grad()) {
                auto gb = ctx.adjoint_buf(bc);
                for (std::int64_t in = 0; in < n; ++in)
                    for (std::int64_t i = 0; i < cb * plane; ++i)
                        gb[in * cb * plane + i] += g[(in * (ca + cb) + ca) * plane + i];
            }
        });
    }
    return y;
}

Tensor stack_batch(std::span<const Tensor> samples) {
    check(!samples.empty(), "stack_batch: empty sample list");
    const Shape& s0 = samples[0].shape();
    for (const auto& t : samples)
        check(shape_eq(t.shape(), s0), "stack_batch: shape mismatch: ",
              shape_str(t.shape()), " vs ", shape_str(s0));
    Shape out_shape;
    out_shape.push_back(static_cast<std::int64_t>(samples.size()));
    out_shape.insert(out_shape.end(), s0.begin(), s0.end());

    Tensor y(out_shape);
    const std::int64_t per = samples[0].numel();
    for (std::size_t i = 0; i < samples.size(); ++i)
        std::copy_n(samples[i].data(), per, y.data() + static_cast<std::int64_t>(i) * per);

    bool any = false;
    for (const auto& t : samples) any = any || t.requires_grad();
    if (grad_enabled() && any) {
        y.set_requires_grad(true);
        std::vector<Tensor> copies(samples.begin(), samples.end());
        Tensor yc = y;
        Tape::get().record(y, [copies, yc, per](BackwardCtx& ctx) {
            auto g = ctx.adjoint(yc);
            for (std::size_t i = 0; i < copies.size(); ++i) {
                if (!copies[i].requires_grad()) continue;
                auto gi = ctx.adjoint_buf(copies[i]);
                const double* gs = g.data() + static_cast<std::int64_t>(i) * per;
                for (std::int64_t j = 0; j < per; ++j) gi[j] += gs[j];
            }
        });
    }
    return y;
}

Tensor repeat_batch(const Tensor& x, std::int64_t n) {
    check(x.rank() >= 1 && x.dim(0) == 1, "repeat_batch: leading extent must be 1, got ",
          shape_str(x.shape()));
    check(n >= 1, "repeat_batch: count must be >= 1, got ", n);
    Shape out_shape = x.shape();
    out_shape[0] = n;
    Tensor y(out_shape);
    const std::int64_t per = x.numel();
    for (std::int64_t i = 0; i < n; ++i) std::copy_n(x.data(), per, y.data() + i * per);

    if (track_grad({&x})) {
        y.set_requires_grad(true);
        Tensor xc = x, yc = y;
        Tape::get().record(y, [xc, yc, n, per](BackwardCtx& ctx) {
            auto g = ctx.adjoint(yc);
            auto gx = ctx.adjoint_buf(xc);
            for (std::int64_t i = 0; i < n; ++i)
                for (std::int64_t j = 0; j < per; ++j) gx[j] += g[i * per + j];
        });
    }
    return y;
}

Tensor reshape(const Tensor& x, Shape shape) {
    check(shape_numel(shape) == x.numel(), "reshape: cannot view ",
          shape_str(x.shape()), " as ", shape_str(shape));
    Tensor y = Tensor::from_vector(std::move(shape), x.vec());
    if (track_grad({&x})) {
        y.set_requires_grad(true);
        Tensor xc = x, yc = y;
        Tape::get().record(y, [xc, yc](BackwardCtx& ctx) {
            auto g = ctx.adjoint(yc);
            auto gx = ctx.adjoint_buf(xc);
            for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[i];
        });
    }
    return y;
}

// --- instance norm ------------------------------------------------------------------

Tensor instance_norm(const Tensor& x, double eps) {
    check(x.rank() == 4, "instance_norm: input must be rank 4, got ",
          shape_str(x.shape()));
    const std::int64_t nc = x.dim(0) * x.dim(1);
    const std::int64_t plane = x.dim(2) * x.dim(3);
    check(plane >= 1, "instance_norm: empty spatial plane");

    Tensor y(x.shape());
    std::vector<double> inv_sigma(static_cast<std::size_t>(nc));
    const double invp = 1.0 / static_cast<double>(plane);
    for (std::int64_t s = 0; s < nc; ++s) {
        const double* xs = x.data() + s * plane;
        double* ys = y.data() + s * plane;
        double m = 0.0;
        for (std::int64_t i = 0; i < plane; ++i) m += xs[i];
        m *= invp;
        double var = 0.0;
        for (std::int64_t i = 0; i < plane; ++i) {
            const double d = xs[i] - m;
            var += d * d;
        }
        var *= invp;
        const double is = 1.0 / std::sqrt(var + eps);
        inv_sigma[static_cast<std::size_t>(s)] = is;
        for (std::int64_t i = 0; i < plane; ++i) ys[i] = (xs[i] - m) * is;
    }

    if (track_grad({&x})) {
        y.set_requires_grad(true);
        Tensor xc = x, yc = y;
        Tape::get().record(y, [xc, yc, nc, plane, invp, inv_sigma](BackwardCtx& ctx) {
            // dL/dx = (g - mean(g) - y * mean(g*y)) / sigma, per slice
            auto g = ctx.adjoint(yc);
            auto gx = ctx.adjoint_buf(xc);
            const double* yp = yc.data();
            for (std::int64_t s = 0; s < nc; ++s) {
                const double* gs = g.data() + s * plane;
                const double* ys = yp + s * plane;
                double* gxs = gx.data() + s * plane;
                double gm = 0.0, gym = 0.0;
                for (std::int64_t i = 0; i < plane; ++i) {
                    gm += gs[i];
                    gym += gs[i] * ys[i];
                }
                gm *= invp;
                gym *= invp;
                const double is = inv_sigma[static_cast<std::size_t>(s)];
                for (std::int64_t i = 0; i < plane; ++i)
                    gxs[i] += (gs[i] - gm - ys[i] * gym) * is;
            }
        });
    }
    return y;
}

} // namespace sean
