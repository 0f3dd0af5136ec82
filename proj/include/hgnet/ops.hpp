/* Copyright 2026 The hgnet Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef HGNET_OPS_HPP_
#define HGNET_OPS_HPP_

// Differentiable primitives. Every block in the library is composed from
// these; each records a backward rule on the active Tape when any input
// requires a gradient. Meta (shape-only) inputs produce meta outputs so the
// same forward code drives complexity accounting.

#include <array>
#include <cstdint>
#include <span>
#include <string>

#include "hgnet/tensor.hpp"

namespace hg {

inline constexpr double kBatchNormEps = 1e-5;
inline constexpr double kBatchNormMomentum = 0.1;

struct ConvSpec {
  int in_channels = 1;
  int out_channels = 1;
  int kernel_h = 1, kernel_w = 1;
  int stride_h = 1, stride_w = 1;
  int pad_h = 0, pad_w = 0;
  int dilation = 1;
  int groups = 1;
  bool has_bias = true;

  // Square kernel with "same" padding for stride 1: pad = dilation*(k-1)/2.
  static ConvSpec same(int in, int out, int kernel, int dilation = 1,
                       int groups = 1);
  static ConvSpec pointwise(int in, int out, int groups = 1);

  void validate() const;
  Shape weight_shape() const;
  Shape output_shape(const Shape& input) const;
};

Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias,
              const ConvSpec& spec);

// 2x2 window, stride 2. Ties resolve to the first element in row-major
// window order, which is also where backward routes the gradient.
Tensor maxpool2x2(const Tensor& input);
Tensor upsample_nearest2x(const Tensor& input);

// Running statistics, each 1xCx1x1.
struct BatchNormState {
  Tensor running_mean;
  Tensor running_var;
};

// gamma and beta are 1xCx1x1. training=true normalises with batch
// statistics and updates state; false uses the running statistics.
Tensor batchnorm2d(const Tensor& input, const Tensor& gamma,
                   const Tensor& beta, BatchNormState& state, bool training);

Tensor relu(const Tensor& input);
Tensor sigmoid(const Tensor& input);
Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& input, double factor);
Tensor concat_channels(std::span<const Tensor> inputs);
// Channels [begin, begin + count).
Tensor slice_channels(const Tensor& input, int begin, int count);
Tensor global_avg_pool(const Tensor& input);
// gate is Nx Cx1x1, broadcast over the spatial plane.
Tensor mul_broadcast(const Tensor& input, const Tensor& gate);
// Output channel j*groups + i takes input channel i*(C/groups) + j.
Tensor channel_shuffle(const Tensor& input, int groups);
// Output axis k is input axis perm[k] (axes ordered n, c, h, w).
Tensor permute(const Tensor& input, std::array<int, 4> perm);
Tensor reshape(const Tensor& input, Shape shape);

// Scalar (1x1x1x1) reductions.
Tensor sum(const Tensor& input);
Tensor mse(const Tensor& prediction, const Tensor& target);

// While alive, relu masks and max-pool argmax choices executed on this
// thread are folded into a hash. Finite-difference checks use it to detect
// perturbations that cross a non-differentiable point.
class BranchTrace {
 public:
  BranchTrace();
  ~BranchTrace();
  BranchTrace(const BranchTrace&) = delete;
  BranchTrace& operator=(const BranchTrace&) = delete;

  std::uint64_t signature() const { return hash_; }

  static void fold(std::uint64_t value);

 private:
  std::uint64_t hash_ = 1469598103934665603ull;
  BranchTrace* previous_;
};

}  // namespace hg

#endif  // HGNET_OPS_HPP_
