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

#include "sean/losses.hpp"

#include "sean/common.hpp"
#include "sean/ops.hpp"
#include "sean/sean_norm.hpp"

namespace sean {

namespace {

Tensor mean_abs_diff(const Tensor& a, const Tensor& b) {
    check(shape_eq(a.shape(), b.shape()), "loss: shape mismatch ",
          shape_str(a.shape()), " vs ", shape_str(b.shape()));
    return mean(sean::abs(sub(a, b)));
}

} // namespace

Tensor hinge_d_loss(std::span<const Tensor> real_logits,
                    std::span<const Tensor> fake_logits) {
    check(!real_logits.empty() && !fake_logits.empty(),
          "hinge_d_loss: empty logit list");
    check(real_logits.size() == fake_logits.size(), "hinge_d_loss: got ",
          real_logits.size(), " real scales vs ", fake_logits.size(), " fake");
    Tensor acc;
    for (std::size_t k = 0; k < real_logits.size(); ++k) {
        Tensor term = add(mean(relu(add_scalar(mul_scalar(real_logits[k], -1.0), 1.0))),
                          mean(relu(add_scalar(fake_logits[k], 1.0))));
        acc = k == 0 ? term : add(acc, term);
    }
    return mul_scalar(acc, 1.0 / static_cast<double>(real_logits.size()));
}

Tensor hinge_g_loss(std::span<const Tensor> fake_logits) {
    check(!fake_logits.empty(), "hinge_g_loss: empty logit list");
    Tensor acc;
    for (std::size_t k = 0; k < fake_logits.size(); ++k) {
        Tensor term = mean(fake_logits[k]);
        acc = k == 0 ? term : add(acc, term);
    }
    return mul_scalar(acc, -1.0 / static_cast<double>(fake_logits.size()));
}

Tensor feature_matching_loss(std::span<const Tensor> real_feats,
                             std::span<const Tensor> fake_feats) {
    check(!real_feats.empty(), "feature_matching_loss: empty feature list");
    check(real_feats.size() == fake_feats.size(),
          "feature_matching_loss: got ", real_feats.size(), " real layers vs ",
          fake_feats.size(), " fake");
    Tensor acc;
    for (std::size_t i = 0; i < real_feats.size(); ++i) {
        Tensor term = mean_abs_diff(real_feats[i].detach(), fake_feats[i]);
        acc = i == 0 ? term : add(acc, term);
    }
    return acc;
}

std::vector<Tensor> IdentityExtractor::extract(const Tensor& images) const {
    return {images};
}

RandomConvExtractor::RandomConvExtractor(std::int64_t image_channels,
                                         std::vector<std::int64_t> channels,
                                         Rng& rng) {
    check(image_channels >= 1, "extractor: image_channels must be positive");
    check(!channels.empty(), "extractor: needs at least one layer");
    std::int64_t in = image_channels;
    for (std::int64_t out : channels) {
        check(out >= 1, "extractor: channel counts must be positive");
        ws_.push_back(glorot_conv(out, in, 3, 3, rng));
        ws_.back().set_requires_grad(false); // frozen stand-in network
        bs_.push_back(Tensor(Shape{out}, 0.0, false));
        in = out;
    }
}

std::vector<Tensor> RandomConvExtractor::extract(const Tensor& images) const {
    std::vector<Tensor> feats;
    Tensor x = images;
    for (std::size_t i = 0; i < ws_.size(); ++i) {
        x = avg_pool2d(lrelu(conv2d(x, ws_[i], bs_[i], 1, 1), 0.2), 2);
        feats.push_back(x);
    }
    return feats;
}

Tensor perceptual_loss(const Tensor& real, const Tensor& fake,
                       const FeatureExtractor& extractor) {
    check(shape_eq(real.shape(), fake.shape()), "perceptual_loss: shape mismatch ",
          shape_str(real.shape()), " vs ", shape_str(fake.shape()));
    const std::vector<Tensor> rf = extractor.extract(real);
    const std::vector<Tensor> ff = extractor.extract(fake);
    check(!rf.empty(), "perceptual_loss: extractor produced no layers");
    check(rf.size() == ff.size(), "perceptual_loss: layer count mismatch");
    Tensor acc;
    for (std::size_t i = 0; i < rf.size(); ++i) {
        Tensor term = mean_abs_diff(rf[i].detach(), ff[i]);
        acc = i == 0 ? term : add(acc, term);
    }
    return acc;
}

Tensor total_g_loss(const Tensor& hinge_g, const Tensor& fm, const Tensor& percept,
                    const LossWeights& weights) {
    check(weights.lambda_fm >= 0.0 && weights.lambda_percept >= 0.0,
          "total_g_loss: loss weights must be non-negative");
    return add(hinge_g, add(mul_scalar(fm, weights.lambda_fm),
                            mul_scalar(percept, weights.lambda_percept)));
}

} // namespace sean
