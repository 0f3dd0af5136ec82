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

#include <algorithm>
#include <atomic>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "hgnet/error.hpp"
#include "hgnet/kernels.hpp"

namespace hg::kernels {
namespace {

std::atomic<int> g_threads{1};

int ceil_div(int a, int b) { return a >= 0 ? (a + b - 1) / b : -((-a) / b); }
int floor_div(int a, int b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }

// Output columns [lo, hi) whose input column ox*stride - pad + offset lies
// inside [0, in_w).
void valid_range(int out_w, int in_w, int stride, int pad, int offset, int& lo,
                 int& hi) {
  lo = std::max(0, ceil_div(pad - offset, stride));
  hi = std::min(out_w, floor_div(in_w - 1 + pad - offset, stride) + 1);
}

}  // namespace

int num_threads() { return g_threads.load(); }

void set_num_threads(int threads) {
  if (threads < 1) throw ConfigError("thread count must be >= 1");
  g_threads.store(threads);
}

namespace parallel {

template <typename T>
void conv2d_forward(const ConvGeometry& g, std::span<const T> input,
                    std::span<const T> weight, std::span<const T> bias,
                    std::span<T> output) {
  const int ipg = g.in_per_group();
  const int opg = g.out_per_group();
  const std::size_t in_plane = static_cast<std::size_t>(g.in_h) * g.in_w;
  const std::size_t out_plane = static_cast<std::size_t>(g.out_h) * g.out_w;
  const std::size_t k_area = static_cast<std::size_t>(g.kh) * g.kw;
  const int threads = num_threads();

#pragma omp parallel for collapse(2) schedule(static) num_threads(threads) if (threads > 1)
  for (int n = 0; n < g.n; ++n) {
    for (int oc = 0; oc < g.out_c; ++oc) {
      const int group = oc / opg;
      T* out = output.data() + (static_cast<std::size_t>(n) * g.out_c + oc) * out_plane;
      std::fill(out, out + out_plane, T(0));
      for (int icg = 0; icg < ipg; ++icg) {
        const int ic = group * ipg + icg;
        const T* in = input.data() + (static_cast<std::size_t>(n) * g.in_c + ic) * in_plane;
        const T* wk = weight.data() + (static_cast<std::size_t>(oc) * ipg + icg) * k_area;
        for (int ky = 0; ky < g.kh; ++ky) {
          for (int kx = 0; kx < g.kw; ++kx) {
            const T wv = wk[ky * g.kw + kx];
            const int x_off = kx * g.dilation;
            int lo = 0, hi = 0;
            valid_range(g.out_w, g.in_w, g.stride_w, g.pad_w, x_off, lo, hi);
            if (lo >= hi) continue;
            for (int oy = 0; oy < g.out_h; ++oy) {
              const int iy = oy * g.stride_h - g.pad_h + ky * g.dilation;
              if (iy < 0 || iy >= g.in_h) continue;
              T* orow = out + static_cast<std::size_t>(oy) * g.out_w;
              const T* irow = in + static_cast<std::size_t>(iy) * g.in_w;
              if (g.stride_w == 1) {
                const T* src = irow - g.pad_w + x_off;
                for (int ox = lo; ox < hi; ++ox) orow[ox] += src[ox] * wv;
              } else {
                for (int ox = lo; ox < hi; ++ox) {
                  orow[ox] += irow[ox * g.stride_w - g.pad_w + x_off] * wv;
                }
              }
            }
          }
        }
      }
      if (!bias.empty()) {
        const T b = bias[oc];
        for (std::size_t i = 0; i < out_plane; ++i) out[i] += b;
      }
    }
  }
}

template <typename T>
void conv2d_backward_input(const ConvGeometry& g, std::span<const T> grad_out,
                           std::span<const T> weight, std::span<T> grad_in) {
  const int ipg = g.in_per_group();
  const int opg = g.out_per_group();
  const std::size_t in_plane = static_cast<std::size_t>(g.in_h) * g.in_w;
  const std::size_t out_plane = static_cast<std::size_t>(g.out_h) * g.out_w;
  const std::size_t k_area = static_cast<std::size_t>(g.kh) * g.kw;
  const int threads = num_threads();

#pragma omp parallel for collapse(2) schedule(static) num_threads(threads) if (threads > 1)
  for (int n = 0; n < g.n; ++n) {
    for (int ic = 0; ic < g.in_c; ++ic) {
      const int group = ic / ipg;
      const int icg = ic % ipg;
      T* dx = grad_in.data() + (static_cast<std::size_t>(n) * g.in_c + ic) * in_plane;
      std::fill(dx, dx + in_plane, T(0));
      for (int ocg = 0; ocg < opg; ++ocg) {
        const int oc = group * opg + ocg;
        const T* dy = grad_out.data() + (static_cast<std::size_t>(n) * g.out_c + oc) * out_plane;
        const T* wk = weight.data() + (static_cast<std::size_t>(oc) * ipg + icg) * k_area;
        for (int ky = 0; ky < g.kh; ++ky) {
          for (int kx = 0; kx < g.kw; ++kx) {
            const T wv = wk[ky * g.kw + kx];
            const int x_off = kx * g.dilation;
            int lo = 0, hi = 0;
            valid_range(g.out_w, g.in_w, g.stride_w, g.pad_w, x_off, lo, hi);
            if (lo >= hi) continue;
            for (int oy = 0; oy < g.out_h; ++oy) {
              const int iy = oy * g.stride_h - g.pad_h + ky * g.dilation;
              if (iy < 0 || iy >= g.in_h) continue;
              const T* dyrow = dy + static_cast<std::size_t>(oy) * g.out_w;
              T* dxrow = dx + static_cast<std::size_t>(iy) * g.in_w;
              if (g.stride_w == 1) {
                T* dst = dxrow - g.pad_w + x_off;
                for (int ox = lo; ox < hi; ++ox) dst[ox] += dyrow[ox] * wv;
              } else {
                for (int ox = lo; ox < hi; ++ox) {
                  dxrow[ox * g.stride_w - g.pad_w + x_off] += dyrow[ox] * wv;
                }
              }
            }
          }
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
  const std::size_t in_plane = static_cast<std::size_t>(g.in_h) * g.in_w;
  const std::size_t out_plane = static_cast<std::size_t>(g.out_h) * g.out_w;
  const std::size_t k_area = static_cast<std::size_t>(g.kh) * g.kw;
  const int threads = num_threads();

#pragma omp parallel for collapse(2) schedule(static) num_threads(threads) if (threads > 1)
  for (int oc = 0; oc < g.out_c; ++oc) {
    for (int icg = 0; icg < ipg; ++icg) {
      const int ic = (oc / opg) * ipg + icg;
      T* dw = grad_weight.data() + (static_cast<std::size_t>(oc) * ipg + icg) * k_area;
      for (int ky = 0; ky < g.kh; ++ky) {
        for (int kx = 0; kx < g.kw; ++kx) {
          const int x_off = kx * g.dilation;
          int lo = 0, hi = 0;
          valid_range(g.out_w, g.in_w, g.stride_w, g.pad_w, x_off, lo, hi);
          T acc = T(0);
          for (int n = 0; n < g.n; ++n) {
            const T* dy = grad_out.data() + (static_cast<std::size_t>(n) * g.out_c + oc) * out_plane;
            const T* in = input.data() + (static_cast<std::size_t>(n) * g.in_c + ic) * in_plane;
            for (int oy = 0; oy < g.out_h; ++oy) {
              const int iy = oy * g.stride_h - g.pad_h + ky * g.dilation;
              if (iy < 0 || iy >= g.in_h) continue;
              const T* dyrow = dy + static_cast<std::size_t>(oy) * g.out_w;
              const T* irow = in + static_cast<std::size_t>(iy) * g.in_w;
              for (int ox = lo; ox < hi; ++ox) {
                acc += dyrow[ox] * irow[ox * g.stride_w - g.pad_w + x_off];
              }
            }
          }
          dw[ky * g.kw + kx] = acc;
        }
      }
    }
  }

  if (!grad_bias.empty()) {
#pragma omp parallel for schedule(static) num_threads(threads) if (threads > 1)
    for (int oc = 0; oc < g.out_c; ++oc) {
      T acc = T(0);
      for (int n = 0; n < g.n; ++n) {
        const T* dy = grad_out.data() + (static_cast<std::size_t>(n) * g.out_c + oc) * out_plane;
        for (std::size_t i = 0; i < out_plane; ++i) acc += dy[i];
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
  const int threads = num_threads();

#pragma omp parallel for collapse(2) schedule(static) num_threads(threads) if (threads > 1)
  for (int b = 0; b < n; ++b) {
    for (int ch = 0; ch < c; ++ch) {
      const std::size_t in_base = (static_cast<std::size_t>(b) * c + ch) * h * w;
      const std::size_t out_base = (static_cast<std::size_t>(b) * c + ch) * oh * ow;
      for (int y = 0; y < oh; ++y) {
        const std::size_t r0 = in_base + static_cast<std::size_t>(2 * y) * w;
        const std::size_t r1 = r0 + w;
        for (int x = 0; x < ow; ++x) {
          // Candidates in row-major window order; strict '>' keeps the first.
          std::size_t best = r0 + 2 * x;
          if (input[r0 + 2 * x + 1] > input[best]) best = r0 + 2 * x + 1;
          if (input[r1 + 2 * x] > input[best]) best = r1 + 2 * x;
          if (input[r1 + 2 * x + 1] > input[best]) best = r1 + 2 * x + 1;
          output[out_base + static_cast<std::size_t>(y) * ow + x] = input[best];
          argmax[out_base + static_cast<std::size_t>(y) * ow + x] = best;
        }
      }
    }
  }
}

template <typename T>
void batchnorm_stats(const BatchNormGeometry& g, std::span<const T> input,
                     std::span<T> mean, std::span<T> var) {
  const std::size_t plane = static_cast<std::size_t>(g.h) * g.w;
  const T count = static_cast<T>(static_cast<std::size_t>(g.n) * plane);
  const int threads = num_threads();

#pragma omp parallel for schedule(static) num_threads(threads) if (threads > 1)
  for (int ch = 0; ch < g.c; ++ch) {
    T sum = T(0);
    for (int b = 0; b < g.n; ++b) {
      const T* p = input.data() + (static_cast<std::size_t>(b) * g.c + ch) * plane;
      for (std::size_t i = 0; i < plane; ++i) sum += p[i];
    }
    const T m = sum / count;
    T sq = T(0);
    for (int b = 0; b < g.n; ++b) {
      const T* p = input.data() + (static_cast<std::size_t>(b) * g.c + ch) * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        const T d = p[i] - m;
        sq += d * d;
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
  const std::size_t plane = static_cast<std::size_t>(g.h) * g.w;
  const int threads = num_threads();

#pragma omp parallel for collapse(2) schedule(static) num_threads(threads) if (threads > 1)
  for (int b = 0; b < g.n; ++b) {
    for (int ch = 0; ch < g.c; ++ch) {
      const std::size_t base = (static_cast<std::size_t>(b) * g.c + ch) * plane;
      const T m = mean[ch], s = inv_std[ch], ga = gamma[ch], be = beta[ch];
      for (std::size_t i = 0; i < plane; ++i) {
        const T xh = (input[base + i] - m) * s;
        x_hat[base + i] = xh;
        output[base + i] = ga * xh + be;
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
  const std::size_t plane = static_cast<std::size_t>(g.h) * g.w;
  const T count = static_cast<T>(static_cast<std::size_t>(g.n) * plane);
  const int threads = num_threads();

#pragma omp parallel for schedule(static) num_threads(threads) if (threads > 1)
  for (int ch = 0; ch < g.c; ++ch) {
    T sum_dy = T(0);
    T sum_dy_xh = T(0);
    for (int b = 0; b < g.n; ++b) {
      const std::size_t base = (static_cast<std::size_t>(b) * g.c + ch) * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        sum_dy += grad_out[base + i];
        sum_dy_xh += grad_out[base + i] * x_hat[base + i];
      }
    }
    grad_gamma[ch] = sum_dy_xh;
    grad_beta[ch] = sum_dy;
    const T scale = gamma[ch] * inv_std[ch];
    const T mean_dy = sum_dy / count;
    const T mean_dy_xh = sum_dy_xh / count;
    for (int b = 0; b < g.n; ++b) {
      const std::size_t base = (static_cast<std::size_t>(b) * g.c + ch) * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        const std::size_t k = base + i;
        grad_in[k] = batch_stats
                         ? scale * (grad_out[k] - mean_dy - x_hat[k] * mean_dy_xh)
                         : scale * grad_out[k];
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

}  // namespace parallel
}  // namespace hg::kernels
