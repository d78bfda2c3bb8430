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

#include "sean/metrics.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "sean/common.hpp"

namespace sean {

namespace {

double mse(const Tensor& a, const Tensor& b) {
    check(shape_eq(a.shape(), b.shape()), "metrics: shape mismatch ",
          shape_str(a.shape()), " vs ", shape_str(b.shape()));
    double acc = 0.0;
    for (std::int64_t i = 0; i < a.numel(); ++i) {
        const double d = a.data()[i] - b.data()[i];
        acc += d * d;
    }
    return acc / static_cast<double>(a.numel());
}

Eigen::MatrixXd to_matrix(const Tensor& t) {
    return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                          Eigen::RowMajor>>(t.data(), t.dim(0),
                                                            t.dim(1));
}

// eigendecomposition after an explicit symmetry check; rejects matrices
// that are not PSD beyond a small tolerance
Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> psd_eigen(const Eigen::MatrixXd& c,
                                                         const char* which) {
    const double scale = std::max(1.0, c.cwiseAbs().maxCoeff());
    check((c - c.transpose()).cwiseAbs().maxCoeff() <= 1e-8 * scale,
          "frechet_distance: ", which, " is not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(
        (c + c.transpose()) / 2.0);
    check(eig.eigenvalues().minCoeff() >= -1e-8 * scale, "frechet_distance: ",
          which, " is not positive semi-definite");
    return eig;
}

} // namespace

double psnr(const Tensor& a, const Tensor& b) {
    const double m = mse(a, b);
    if (m == 0.0) return 99.0;
    return -10.0 * std::log10(m);
}

double rmse(const Tensor& a, const Tensor& b) { return std::sqrt(mse(a, b)); }

double ssim(const Tensor& a, const Tensor& b) {
    check(shape_eq(a.shape(), b.shape()), "ssim: shape mismatch ",
          shape_str(a.shape()), " vs ", shape_str(b.shape()));
    check(a.rank() == 4, "ssim: expected [N,C,H,W] images, got ",
          shape_str(a.shape()));
    const std::int64_t n = a.dim(0), c = a.dim(1), h = a.dim(2), w = a.dim(3);
    constexpr std::int64_t win = 8;
    check(h >= win && w >= win, "ssim: image ", h, "x", w,
          " is smaller than the ", win, "x", win, " window");
    constexpr double c1 = 0.01 * 0.01;
    constexpr double c2 = 0.03 * 0.03;

    double acc = 0.0;
    std::int64_t windows = 0;
    for (std::int64_t ni = 0; ni < n; ++ni)
        for (std::int64_t ci = 0; ci < c; ++ci) {
            const double* pa = a.data() + (ni * c + ci) * h * w;
            const double* pb = b.data() + (ni * c + ci) * h * w;
            for (std::int64_t wy = 0; wy + win <= h; wy += win)
                for (std::int64_t wx = 0; wx + win <= w; wx += win) {
                    double mx = 0.0, my = 0.0;
                    for (std::int64_t y = 0; y < win; ++y)
                        for (std::int64_t x = 0; x < win; ++x) {
                            mx += pa[(wy + y) * w + wx + x];
                            my += pb[(wy + y) * w + wx + x];
                        }
                    const double inv = 1.0 / static_cast<double>(win * win);
                    mx *= inv;
                    my *= inv;
                    double vx = 0.0, vy = 0.0, cov = 0.0;
                    for (std::int64_t y = 0; y < win; ++y)
                        for (std::int64_t x = 0; x < win; ++x) {
                            const double dx = pa[(wy + y) * w + wx + x] - mx;
                            const double dy = pb[(wy + y) * w + wx + x] - my;
                            vx += dx * dx;
                            vy += dy * dy;
                            cov += dx * dy;
                        }
                    vx *= inv;
                    vy *= inv;
                    cov *= inv;
                    acc += ((2.0 * mx * my + c1) * (2.0 * cov + c2)) /
                           ((mx * mx + my * my + c1) * (vx + vy + c2));
                    ++windows;
                }
        }
    return acc / static_cast<double>(windows);
}

SegScores segmentation_scores(const LabelMap& pred, const LabelMap& gt,
                              std::int64_t s) {
    check(pred.height == gt.height && pred.width == gt.width,
          "segmentation_scores: dims ", pred.height, "x", pred.width, " vs ",
          gt.height, "x", gt.width);
    check(s >= 1, "segmentation_scores: need at least one class");
    std::vector<std::int64_t> conf(static_cast<std::size_t>(s * s), 0);
    for (std::size_t i = 0; i < pred.labels.size(); ++i) {
        const std::int64_t p = pred.labels[i], g = gt.labels[i];
        check(p >= 0 && p < s && g >= 0 && g < s,
              "segmentation_scores: label outside [0,", s, ")");
        ++conf[static_cast<std::size_t>(g * s + p)];
    }

    const double total = static_cast<double>(pred.labels.size());
    double correct = 0.0;
    for (std::int64_t k = 0; k < s; ++k)
        correct += static_cast<double>(conf[static_cast<std::size_t>(k * s + k)]);

    double iou_sum = 0.0;
    std::int64_t present = 0;
    for (std::int64_t k = 0; k < s; ++k) {
        std::int64_t gt_k = 0, pred_k = 0;
        for (std::int64_t j = 0; j < s; ++j) {
            gt_k += conf[static_cast<std::size_t>(k * s + j)];
            pred_k += conf[static_cast<std::size_t>(j * s + k)];
        }
        if (gt_k == 0) continue; // class absent from gt, skipped by decision
        const std::int64_t inter = conf[static_cast<std::size_t>(k * s + k)];
        const std::int64_t uni = gt_k + pred_k - inter;
        iou_sum += static_cast<double>(inter) / static_cast<double>(uni);
        ++present;
    }
    check(present > 0, "segmentation_scores: empty label maps");
    return SegScores{iou_sum / static_cast<double>(present), correct / total};
}

double frechet_distance(const Tensor& mu1, const Tensor& cov1, const Tensor& mu2,
                        const Tensor& cov2) {
    check(mu1.rank() == 1 && mu2.rank() == 1 && cov1.rank() == 2 && cov2.rank() == 2,
          "frechet_distance: expected mu [D] and cov [D,D]");
    const std::int64_t d = mu1.dim(0);
    check(mu2.dim(0) == d && cov1.dim(0) == d && cov1.dim(1) == d &&
              cov2.dim(0) == d && cov2.dim(1) == d,
          "frechet_distance: dimension mismatch across inputs");

    const Eigen::MatrixXd c1 = to_matrix(cov1);
    const Eigen::MatrixXd c2 = to_matrix(cov2);
    psd_eigen(c1, "cov1");
    const auto eig2 = psd_eigen(c2, "cov2");

    // sqrt(C2) C1 sqrt(C2) shares eigenvalues with C1 C2 and is symmetric
    Eigen::VectorXd root2 = eig2.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    const Eigen::MatrixXd s2 =
        eig2.eigenvectors() * root2.asDiagonal() * eig2.eigenvectors().transpose();
    Eigen::MatrixXd prod = s2 * c1 * s2;
    prod = (prod + prod.transpose()) / 2.0;
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigp(prod);
    const double tr_root = eigp.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();

    double mean_sq = 0.0;
    for (std::int64_t i = 0; i < d; ++i) {
        const double diff = mu1.data()[i] - mu2.data()[i];
        mean_sq += diff * diff;
    }
    return mean_sq + c1.trace() + c2.trace() - 2.0 * tr_root;
}

std::pair<Tensor, Tensor> feature_statistics(const Tensor& feats) {
    check(feats.rank() == 2, "feature_statistics: expected [N,D], got ",
          shape_str(feats.shape()));
    const std::int64_t n = feats.dim(0), d = feats.dim(1);
    Tensor mu = Tensor::zeros({d});
    for (std::int64_t i = 0; i < n; ++i)
        for (std::int64_t j = 0; j < d; ++j) mu.data()[j] += feats.data()[i * d + j];
    for (std::int64_t j = 0; j < d; ++j) mu.data()[j] /= static_cast<double>(n);

    Tensor cov = Tensor::zeros({d, d});
    if (n > 1) {
        for (std::int64_t i = 0; i < n; ++i)
            for (std::int64_t j = 0; j < d; ++j) {
                const double dj = feats.data()[i * d + j] - mu.data()[j];
                for (std::int64_t k = 0; k < d; ++k)
                    cov.data()[j * d + k] +=
                        dj * (feats.data()[i * d + k] - mu.data()[k]);
            }
        for (std::int64_t j = 0; j < d * d; ++j)
            cov.data()[j] /= static_cast<double>(n - 1);
    }
    return {mu, cov};
}

} // namespace sean
