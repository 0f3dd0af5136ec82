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

// Serial reference kernels. Kept deliberately plain: they are the ground
// truth the OpenMP kernels are tested and benchmarked against.

#include <limits>

#include "hgnet/kernels.hpp"

namespace hg::kernels {

int conv_out_size(int in, int kernel, int stride, int pad, int dilation) {
  const int span = dilation * (kernel - 1) + 1;
  const int room = in + 2 * pad - span;
  if (room < 0) return 0;
  return room / stride + 1;
}

namespace reference {
namespace {

std::size_t idx(int c_total, int h_total, int w_total, int n, int c, int y,
                int x) {
  return ((static_cast<std::size_t>(n) * c_total + c) * h_total + y) * w_total +
         x;
}

}  // namespace

template <typename T>
void conv2d_forward(const ConvGeometry& g, std::span<const T> input,
                    std::span<const T> weight, std::span<const T> bias,
                    std::span<T> output) {
  const int ipg = g.in_per_group();
  const int opg = g.out_per_group();
  for (int n = 0; n < g.n; ++n) {
    for (int oc = 0; oc < g.out_c; ++oc) {
      const int group = oc / opg;
      for (int oy = 0; oy < g.out_h; ++oy) {
        for (int ox = 0; ox < g.out_w; ++ox) {
          T acc = T(0);
          for (int icg = 0; icg < ipg; ++icg) {
            const int ic = group * ipg + icg;
            for (int ky = 0; ky < g.kh; ++ky) {
              const int iy = oy * g.stride_h - g.pad_h + ky * g.dilation;
              if (iy < 0 || iy >= g.in_h) continue;
              for (int kx = 0; kx < g.kw; ++kx) {
                const int ix = ox * g.stride_w - g.pad_w + kx * g.dilation;
                if (ix < 0 || ix >= g.in_w) continue;
                acc += input[idx(g.in_c, g.in_h, g.in_w, n, ic, iy, ix)] *
                       weight[idx(ipg, g.kh, g.kw, oc, icg, ky, kx)];
              }
            }
          }
          if (!bias.empty()) acc += bias[oc];
          output[idx(g.out_c, g.out_h, g.out_w, n, oc, oy, ox)] = acc;
        }
      }
    }
  }
}

template <typename T>
void conv2d_backward_input(const ConvGeometry& g, std::span<const T> grad_out,
                           std::span<const T> weight, std::span<T> grad_in) {
  const int ipg = g.in_per_group();
  const int opg = g.out_per_group();
  for (int n = 0; n < g.n; ++n) {
    for (int ic = 0; ic < g.in_c; ++ic) {
      const int group = ic / ipg;
      const int icg = ic % ipg;
      for (int iy = 0; iy < g.in_h; ++iy) {
        for (int ix = 0; ix < g.in_w; ++ix) {
          T acc = T(0);
          for (int ocg = 0; ocg < opg; ++ocg) {
            const int oc = group * opg + ocg;
            for (int ky = 0; ky < g.kh; ++ky) {
              const int ny = iy + g.pad_h - ky * g.dilation;
              if (ny < 0 || ny % g.stride_h != 0) continue;
              const int oy = ny / g.stride_h;
              if (oy >= g.out_h) continue;
              for (int kx = 0; kx < g.kw; ++kx) {
                const int nx = ix + g.pad_w - kx * g.dilation;
                if (nx < 0 || nx % g.stride_w != 0) continue;
                const int ox = nx / g.stride_w;
                if (ox >= g.out_w) continue;
                acc += grad_out[idx(g.out_c, g.out_h, g.out_w, n, oc, oy, ox)] *
                       weight[idx(ipg, g.kh, g.kw, oc, icg, ky, kx)];
              }
            }
          }
          grad_in[idx(g.in_c, g.in_h, g.in_w, n, ic, iy, ix)] = acc;
        }
      }
    }
  }
}

template <typename T>
void conv2d_backward_weight(const ConvGeometry& g, std::span<const T> grad_out,
                            std::span<const T> input, std::span<T> grad_weight,
                            std::span<T> grad_bias) {
  const int ipg = g.in_per_group();
  const int opg = g.out_per_group();
  for (int oc = 0; oc < g.out_c; ++oc) {
    const int group = oc / opg;
    for (int icg = 0; icg < ipg; ++icg) {
      const int ic = group * ipg + icg;
      for (int ky = 0; ky < g.kh; ++ky) {
        for (int kx = 0; kx < g.kw; ++kx) {
          T acc = T(0);
          for (int n = 0; n < g.n; ++n) {
            for (int oy = 0; oy < g.out_h; ++oy) {
              const int iy = oy * g.stride_h - g.pad_h + ky * g.dilation;
              if (iy < 0 || iy >= g.in_h) continue;
              for (int ox = 0; ox < g.out_w; ++ox) {
                const int ix = ox * g.stride_w - g.pad_w + kx * g.dilation;
                if (ix < 0 || ix >= g.in_w) continue;
                acc += grad_out[idx(g.out_c, g.out_h, g.out_w, n, oc, oy, ox)] *
                       input[idx(g.in_c, g.in_h, g.in_w, n, ic, iy, ix)];
              }
            }
          }
          grad_weight[idx(ipg, g.kh, g.kw, oc, icg, ky, kx)] = acc;
        }
      }
    }
    if (!grad_bias.empty()) {
      T acc = T(0);
      for (int n = 0; n < g.n; ++n) {
        for (int oy = 0; oy < g.out_h; ++oy) {
          for (int ox = 0; ox < g.out_w; ++ox) {
            acc += grad_out[idx(g.out_c, g.out_h, g.out_w, n, oc, oy, ox)];
          }
        }
      }
      grad_bias[oc] = acc;
    }
  }
}

template <typename T>
void maxpool2x2_forward(int n, int c, int h, int w, std::span<const T> input,
                        std::span<T> output, std::span<std::size_t> argmax) {
  const int oh = h / 2;
  const int ow = w / 2;
  for (int b = 0; b < n; ++b) {
    for (int ch = 0; ch < c; ++ch) {
      for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
          std::size_t best = idx(c, h, w, b, ch, 2 * y, 2 * x);
          for (int dy = 0; dy < 2; ++dy) {
            for (int dx = 0; dx < 2; ++dx) {
              const std::size_t i = idx(c, h, w, b, ch, 2 * y + dy, 2 * x + dx);
              if (input[i] > input[best]) best = i;
            }
          }
          const std::size_t o = idx(c, oh, ow, b, ch, y, x);
          output[o] = input[best];
          argmax[o] = best;
        }
      }
    }
  }
}

template <typename T>
void batchnorm_stats(const BatchNormGeometry& g, std::span<const T> input,
                     std::span<T> mean, std::span<T> var) {
  const T count = static_cast<T>(static_cast<std::size_t>(g.n) * g.h * g.w);
  for (int ch = 0; ch < g.c; ++ch) {
    T sum = T(0);
    for (int b = 0; b < g.n; ++b)
      for (int y = 0; y < g.h; ++y)
        for (int x = 0; x < g.w; ++x) sum += input[idx(g.c, g.h, g.w, b, ch, y, x)];
    const T m = sum / count;
    T sq = T(0);
    for (int b = 0; b < g.n; ++b) {
      for (int y = 0; y < g.h; ++y) {
        for (int x = 0; x < g.w; ++x) {
          const T d = input[idx(g.c, g.h, g.w, b, ch, y, x)] - m;
          sq += d * d;
        }
      }
    }
    mean[ch] = m;
    var[ch] = sq / count;
  }
}

template <typename T>
void batchnorm_apply(const BatchNormGeometry& g, std::span<const T> input,
                     std::span<const T> mean, std::span<const T> inv_std,
                     std::span<const T> gamma, std::span<const T> beta,
                     std::span<T> x_hat, std::span<T> output) {
  for (int b = 0; b < g.n; ++b) {
    for (int ch = 0; ch < g.c; ++ch) {
      for (int y = 0; y < g.h; ++y) {
        for (int x = 0; x < g.w; ++x) {
          const std::size_t i = idx(g.c, g.h, g.w, b, ch, y, x);
          const T xh = (input[i] - mean[ch]) * inv_std[ch];
          x_hat[i] = xh;
          output[i] = gamma[ch] * xh + beta[ch];
        }
      }
    }
  }
}

template <typename T>
void batchnorm_backward(const BatchNormGeometry& g, std::span<const T> grad_out,
                        std::span<const T> x_hat, std::span<const T> inv_std,
                        std::span<const T> gamma, bool batch_stats,
                        std::span<T> grad_in, std::span<T> grad_gamma,
                        std::span<T> grad_beta) {
  const T count = static_cast<T>(static_cast<std::size_t>(g.n) * g.h * g.w);
  for (int ch = 0; ch < g.c; ++ch) {
    T sum_dy = T(0);
    T sum_dy_xh = T(0);
    for (int b = 0; b < g.n; ++b) {
      for (int y = 0; y < g.h; ++y) {
        for (int x = 0; x < g.w; ++x) {
          const std::size_t i = idx(g.c, g.h, g.w, b, ch, y, x);
          sum_dy += grad_out[i];
          sum_dy_xh += grad_out[i] * x_hat[i];
        }
      }
    }
    grad_gamma[ch] = sum_dy_xh;
    grad_beta[ch] = sum_dy;
    const T scale = gamma[ch] * inv_std[ch];
    const T mean_dy = sum_dy / count;
    const T mean_dy_xh = sum_dy_xh / count;
    for (int b = 0; b < g.n; ++b) {
      for (int y = 0; y < g.h; ++y) {
        for (int x = 0; x < g.w; ++x) {
          const std::size_t i = idx(g.c, g.h, g.w, b, ch, y, x);
          grad_in[i] = batch_stats
                           ? scale * (grad_out[i] - mean_dy - x_hat[i] * mean_dy_xh)
                           : scale * grad_out[i];
        }
      }
    }
  }
}

#define HGNET_INSTANTIATE(T)                                                   \
  template void conv2d_forward<T>(const ConvGeometry&, std::span<const T>,     \
                                  std::span<const T>, std::span<const T>,      \
                                  std::span<T>);                               \
  template void conv2d_backward_input<T>(const ConvGeometry&,                  \
                                         std::span<const T>,                   \
                                         std::span<const T>, std::span<T>);    \
  template void conv2d_backward_weight<T>(                                     \
      const ConvGeometry&, std::span<const T>, std::span<const T>,             \
      std::span<T>, std::span<T>);                                             \
  template void maxpool2x2_forward<T>(int, int, int, int, std::span<const T>,  \
                                      std::span<T>, std::span<std::size_t>);   \
  template void batchnorm_stats<T>(const BatchNormGeometry&,                   \
                                   std::span<const T>, std::span<T>,           \
                                   std::span<T>);                              \
  template void batchnorm_apply<T>(                                            \
      const BatchNormGeometry&, std::span<const T>, std::span<const T>,        \
      std::span<const T>, std::span<const T>, std::span<const T>,              \
      std::span<T>, std::span<T>);                                             \
  template void batchnorm_backward<T>(                                         \
      const BatchNormGeometry&, std::span<const T>, std::span<const T>,        \
      std::span<const T>, std::span<const T>, bool, std::span<T>,              \
      std::span<T>, std::span<T>);

HGNET_INSTANTIATE(float)
HGNET_INSTANTIATE(double)
#undef HGNET_INSTANTIATE

}  // namespace reference
}  // namespace hg::kernels
