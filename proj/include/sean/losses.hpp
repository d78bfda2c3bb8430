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

#ifndef SEAN_LOSSES_HPP
#define SEAN_LOSSES_HPP

#include <span>
#include <vector>

#include "sean/rng.hpp"
#include "sean/tensor.hpp"

namespace sean {

struct LossWeights {
    double lambda_fm = 10.0;
    double lambda_percept = 10.0;
};

// mean over scales and patch sites of max(0, 1-D(real)) + max(0, 1+D(fake))
Tensor hinge_d_loss(std::span<const Tensor> real_logits,
                    std::span<const Tensor> fake_logits);

// mean over scales and patch sites of -D(fake)
Tensor hinge_g_loss(std::span<const Tensor> fake_logits);

// sum over all feature maps (flattened scale-major, as the discriminator
// returns them) of the mean absolute difference. The real branch is
// detached: gradients only reach the fake features.
Tensor feature_matching_loss(std::span<const Tensor> real_feats,
                             std::span<const Tensor> fake_feats);

// Layered feature maps for the perceptual loss. Extractors are frozen:
// their own parameters never receive gradients.
class FeatureExtractor {
  public:
    virtual ~FeatureExtractor() = default;
    virtual std::vector<Tensor> extract(const Tensor& images) const = 0;
};

// single layer F(x) = x; perceptual loss degenerates to mean absolute error
class IdentityExtractor final : public FeatureExtractor {
  public:
    std::vector<Tensor> extract(const Tensor& images) const override;
};

// Fixed random-weight conv pyramid (conv 3x3 -> LReLU -> avg pool per
// layer), a stand-in for a pretrained perceptual network at desk scale.
class RandomConvExtractor final : public FeatureExtractor {
  public:
    RandomConvExtractor(std::int64_t image_channels,
                        std::vector<std::int64_t> channels, Rng& rng);
    std::vector<Tensor> extract(const Tensor& images) const override;

  private:
    std::vector<Tensor> ws_, bs_;
};

// sum over extractor layers of the mean absolute feature difference;
// real branch detached
Tensor perceptual_loss(const Tensor& real, const Tensor& fake,
                       const FeatureExtractor& extractor);

// hinge_g + lambda_fm * fm + lambda_percept * percept
Tensor total_g_loss(const Tensor& hinge_g, const Tensor& fm, const Tensor& percept,
                    const LossWeights& weights);

} // namespace sean

#endif // SEAN_LOSSES_HPP
