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

#ifndef SEAN_METRICS_HPP
#define SEAN_METRICS_HPP

#include <utility>

#include "sean/regions.hpp"
#include "sean/tensor.hpp"

namespace sean {

// 10*log10(1/MSE) for images in [0,1]; bitwise-identical inputs (MSE == 0)
// return the cap value 99.0, any real difference returns the raw dB value
double psnr(const Tensor& a, const Tensor& b);

// mean local SSIM over non-overlapping 8x8 windows per channel, with
// C1 = 0.01^2 and C2 = 0.03^2 on a unit dynamic range; trailing pixels that
// do not fill a window are ignored
double ssim(const Tensor& a, const Tensor& b);

double rmse(const Tensor& a, const Tensor& b);

struct SegScores {
    double miou = 0.0;
    double accu = 0.0;
};

// confusion-matrix scores; mIoU averages over the classes present in gt
SegScores segmentation_scores(const LabelMap& pred, const LabelMap& gt,
                              std::int64_t s);

// squared Frechet distance between Gaussians:
// |mu1-mu2|^2 + Tr(cov1 + cov2 - 2 (cov1 cov2)^(1/2)), with the matrix root
// taken through an eigendecomposition of the symmetrized product
double frechet_distance(const Tensor& mu1, const Tensor& cov1, const Tensor& mu2,
                        const Tensor& cov2);

// mean [D] and unbiased covariance [D,D] of a feature matrix [N,D]
std::pair<Tensor, Tensor> feature_statistics(const Tensor& feats);

} // namespace sean

#endif // SEAN_METRICS_HPP
