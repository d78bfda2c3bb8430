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

#ifndef SEAN_OPS_HPP
#define SEAN_OPS_HPP

#include <span>

#include "sean/tensor.hpp"

namespace sean {

// Binary elementwise ops. Accepted shapes: identical, rhs scalar ([1] or any
// single-element tensor), or rhs a per-channel vector [C] against a rank-4
// lhs [N,C,H,W]. Anything else is an error.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);

Tensor add_scalar(const Tensor& x, double c);
Tensor mul_scalar(const Tensor& x, double c);

Tensor relu(const Tensor& x);
Tensor lrelu(const Tensor& x, double slope = 0.2);
Tensor tanh(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor sqrt(const Tensor& x);
Tensor abs(const Tensor& x);
Tensor clamp_min(const Tensor& x, double lo);

Tensor sum(const Tensor& x);  // -> [1]
Tensor mean(const Tensor& x); // -> [1]

// mean over batch and spatial dims: [N,C,H,W] -> [C]
Tensor channel_mean(const Tensor& x);

// [m,k] x [k,n] -> [m,n]
Tensor matmul(const Tensor& a, const Tensor& b);

// Cross-correlation with zero padding. weight is [Cout,Cin,kH,kW] with odd
// kernel extents; bias is [Cout] or an undefined Tensor for none. Output is
// [N,Cout,H',W'] with H' = (H + 2*pad - kH)/stride + 1, which must divide
// exactly.
Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias,
              int stride = 1, int pad = 0);

// factor x factor mean pooling; spatial dims must divide by factor
Tensor avg_pool2d(const Tensor& x, int factor);

// each source pixel becomes a factor x factor block
Tensor upsample_nearest(const Tensor& x, int factor);

Tensor concat_channels(const Tensor& a, const Tensor& b);

// k tensors of identical shape [C,H,W] -> [k,C,H,W]
Tensor stack_batch(std::span<const Tensor> samples);

// [1,...] -> [n,...]
Tensor repeat_batch(const Tensor& x, std::int64_t n);

Tensor reshape(const Tensor& x, Shape shape);

// per-(sample, channel) normalization to zero mean / unit variance, no affine
Tensor instance_norm(const Tensor& x, double eps = 1e-5);

} // namespace sean

#endif // SEAN_OPS_HPP
