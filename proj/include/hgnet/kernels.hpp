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

#ifndef HGNET_KERNELS_HPP_
#define HGNET_KERNELS_HPP_

// Raw compute kernels over flat NCHW buffers. Every kernel exists twice:
//
//   reference::  straightforward serial loops, one output element at a time.
//   parallel::   OpenMP version used by the ops layer.
//
// Both perform the floating-point additions for any given output element in
// the same order, so their results are bit-identical at any thread count.

#include <cstddef>
#include <span>

namespace hg::kernels {

struct ConvGeometry {
  int n = 1;
  int in_c = 1, in_h = 1, in_w = 1;
  int out_c = 1, out_h = 1, out_w = 1;
  int kh = 1, kw = 1;
  int stride_h = 1, stride_w = 1;
  int pad_h = 0, pad_w = 0;
  int dilation = 1;
  int groups = 1;

  int in_per_group() const { return in_c / groups; }
  int out_per_group() const { return out_c / groups; }
};

// floor((in + 2*pad - dilation*(k-1) - 1) / stride) + 1; may be <= 0.
int conv_out_size(int in, int kernel, int stride, int pad, int dilation);

struct BatchNormGeometry {
  int n = 1, c = 1, h = 1, w = 1;
};

int num_threads();
// Thread count for the parallel kernels; 1 disables OpenMP fan-out.
void set_num_threads(int threads);

namespace reference {

template <typename T>
void conv2d_forward(const ConvGeometry& g, std::span<const T> input,
                    std::span<const T> weight, std::span<const T> bias,
                    std::span<T> output);
template <typename T>
void conv2d_backward_input(const ConvGeometry& g, std::span<const T> grad_out,
                           std::span<const T> weight, std::span<T> grad_in);
// grad_bias may be empty.
template <typename T>
void conv2d_backward_weight(const ConvGeometry& g, std::span<const T> grad_out,
                            std::span<const T> input, std::span<T> grad_weight,
                            std::span<T> grad_bias);

// argmax holds the flat input index chosen for each output element.
template <typename T>
void maxpool2x2_forward(int n, int c, int h, int w, std::span<const T> input,
                        std::span<T> output, std::span<std::size_t> argmax);

// Per-channel biased mean and variance over (n, h, w).
template <typename T>
void batchnorm_stats(const BatchNormGeometry& g, std::span<const T> input,
                     std::span<T> mean, std::span<T> var);
// y = gamma * (x - mean) * inv_std + beta, also writes x_hat.
template <typename T>
void batchnorm_apply(const BatchNormGeometry& g, std::span<const T> input,
                     std::span<const T> mean, std::span<const T> inv_std,
                     std::span<const T> gamma, std::span<const T> beta,
                     std::span<T> x_hat, std::span<T> output);
// Training-mode gradient (batch statistics are functions of the input).
// grad_in is overwritten; grad_gamma / grad_beta are overwritten.
template <typename T>
void batchnorm_backward(const BatchNormGeometry& g, std::span<const T> grad_out,
                        std::span<const T> x_hat, std::span<const T> inv_std,
                        std::span<const T> gamma, bool batch_stats,
                        std::span<T> grad_in, std::span<T> grad_gamma,
                        std::span<T> grad_beta);

}  // namespace reference

namespace parallel {

template <typename T>
void conv2d_forward(const ConvGeometry& g, std::span<const T> input,
                    std::span<const T> weight, std::span<const T> bias,
                    std::span<T> output);
template <typename T>
void conv2d_backward_input(const ConvGeometry& g, std::span<const T> grad_out,
                           std::span<const T> weight, std::span<T> grad_in);
template <typename T>
void conv2d_backward_weight(const ConvGeometry& g, std::span<const T> grad_out,
                            std::span<const T> input, std::span<T> grad_weight,
                            std::span<T> grad_bias);
template <typename T>
void maxpool2x2_forward(int n, int c, int h, int w, std::span<const T> input,
                        std::span<T> output, std::span<std::size_t> argmax);
template <typename T>
void batchnorm_stats(const BatchNormGeometry& g, std::span<const T> input,
                     std::span<T> mean, std::span<T> var);
template <typename T>
void batchnorm_apply(const BatchNormGeometry& g, std::span<const T> input,
                     std::span<const T> mean, std::span<const T> inv_std,
                     std::span<const T> gamma, std::span<const T> beta,
                     std::span<T> x_hat, std::span<T> output);
template <typename T>
void batchnorm_backward(const BatchNormGeometry& g, std::span<const T> grad_out,
                        std::span<const T> x_hat, std::span<const T> inv_std,
                        std::span<const T> gamma, bool batch_stats,
                        std::span<T> grad_in, std::span<T> grad_gamma,
                        std::span<T> grad_beta);

}  // namespace parallel
}  // namespace hg::kernels

#endif  // HGNET_KERNELS_HPP_
