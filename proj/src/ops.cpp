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

#include "hgnet/ops.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "hgnet/error.hpp"
#include "hgnet/kernels.hpp"
#include "hgnet/tape.hpp"

namespace hg {
namespace {

thread_local BranchTrace* g_trace = nullptr;

template <typename F>
void record(const char* name, std::vector<Tensor> inputs, Tensor& output,
            F&& backward) {
  Tape* tape = Tape::active();
  if (tape == nullptr) return;
  const bool any = std::any_of(inputs.begin(), inputs.end(),
                               [](const Tensor& t) { return t.requires_grad(); });
  if (!any) return;
  output.set_requires_grad(true);
  tape->record(name, std::move(inputs), output, std::forward<F>(backward));
}

// Gradient of a tensor that wants one, else an empty span.
template <typename T>
std::span<T> grad_of(const Tensor& t) {
  if (!t.requires_grad()) return {};
  return t.grad_values<T>();
}

template <typename T>
std::span<const T> out_grad(Tensor& out) {
  return out.grad_values<T>();
}

void check_same_dtype(const Tensor& a, const Tensor& b, const char* op) {
  if (a.dtype() != b.dtype()) {
    throw ConfigError(std::string(op) + ": mixed dtypes " +
                      dtype_name(a.dtype()) + " and " + dtype_name(b.dtype()));
  }
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ConfigError(std::string(op) + ": shape mismatch " + a.shape().str() +
                      " vs " + b.shape().str());
  }
  check_same_dtype(a, b, op);
}

void check_channel_vector(const Tensor& t, int channels, const char* what) {
  if (t.shape() != Shape{1, channels, 1, 1}) {
    throw ConfigError(std::string(what) + " must be 1x" +
                      std::to_string(channels) + "x1x1, got " + t.shape().str());
  }
}

kernels::ConvGeometry geometry(const Shape& in, const Shape& out,
                               const ConvSpec& s) {
  kernels::ConvGeometry g;
  g.n = in.n;
  g.in_c = in.c;
  g.in_h = in.h;
  g.in_w = in.w;
  g.out_c = out.c;
  g.out_h = out.h;
  g.out_w = out.w;
  g.kh = s.kernel_h;
  g.kw = s.kernel_w;
  g.stride_h = s.stride_h;
  g.stride_w = s.stride_w;
  g.pad_h = s.pad_h;
  g.pad_w = s.pad_w;
  g.dilation = s.dilation;
  g.groups = s.groups;
  return g;
}

template <typename T>
void accumulate(std::span<T> dst, std::span<const T> src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

}  // namespace

// ---------------------------------------------------------------- ConvSpec

ConvSpec ConvSpec::same(int in, int out, int kernel, int dilation, int groups) {
  ConvSpec s;
  s.in_channels = in;
  s.out_channels = out;
  s.kernel_h = s.kernel_w = kernel;
  s.dilation = dilation;
  s.pad_h = s.pad_w = dilation * (kernel - 1) / 2;
  s.groups = groups;
  return s;
}

ConvSpec ConvSpec::pointwise(int in, int out, int groups) {
  return same(in, out, 1, 1, groups);
}

void ConvSpec::validate() const {
  if (in_channels < 1 || out_channels < 1) {
    throw ConfigError("conv2d: channel counts must be positive (in=" +
                      std::to_string(in_channels) +
                      ", out=" + std::to_string(out_channels) + ")");
  }
  if (kernel_h < 1 || kernel_w < 1 || stride_h < 1 || stride_w < 1 ||
      pad_h < 0 || pad_w < 0) {
    throw ConfigError("conv2d: invalid kernel/stride/padding");
  }
  if (dilation < 1) {
    throw ConfigError("conv2d: dilation must be >= 1, got " +
                      std::to_string(dilation));
  }
  if (groups < 1 || in_channels % groups != 0 || out_channels % groups != 0) {
    throw ConfigError("conv2d: in_channels " + std::to_string(in_channels) +
                      " and out_channels " + std::to_string(out_channels) +
                      " must both be divisible by groups " +
                      std::to_string(groups));
  }
}

Shape ConvSpec::weight_shape() const {
  return {out_channels, in_channels / groups, kernel_h, kernel_w};
}

Shape ConvSpec::output_shape(const Shape& input) const {
  validate();
  if (input.c != in_channels) {
    throw ConfigError("conv2d: input channel dimension is " +
                      std::to_string(input.c) + ", spec expects " +
                      std::to_string(in_channels));
  }
  const int oh = kernels::conv_out_size(input.h, kernel_h, stride_h, pad_h, dilation);
  const int ow = kernels::conv_out_size(input.w, kernel_w, stride_w, pad_w, dilation);
  if (oh < 1 || ow < 1) {
    throw ConfigError("conv2d: input " + input.str() +
                      " too small for kernel/dilation (output height " +
                      std::to_string(oh) + ", width " + std::to_string(ow) + ")");
  }
  return {input.n, out_channels, oh, ow};
}

// ------------------------------------------------------------------ conv2d

Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias,
              const ConvSpec& spec) {
  const Shape out_shape = spec.output_shape(input.shape());
  if (weight.shape() != spec.weight_shape()) {
    throw ConfigError("conv2d: weight shape " + weight.shape().str() +
                      " does not match expected " + spec.weight_shape().str());
  }
  if (spec.has_bias != bias.defined()) {
    throw ConfigError("conv2d: bias presence does not match spec.has_bias");
  }
  if (bias.defined()) check_channel_vector(bias, spec.out_channels, "conv2d bias");
  check_same_dtype(input, weight, "conv2d");

  if (input.is_meta() || weight.is_meta()) {
    return Tensor::meta(out_shape, input.dtype());
  }

  Tensor out = Tensor::zeros(out_shape, input.dtype());
  const auto g = geometry(input.shape(), out_shape, spec);
  visit_dtype(input.dtype(), [&](auto tag) {
    using T = decltype(tag);
    std::span<const T> b;
    if (bias.defined()) b = bias.values<T>();
    kernels::parallel::conv2d_forward<T>(g, input.values<T>(),
                                         weight.values<T>(), b,
                                         out.values<T>());
  });

  std::vector<Tensor> inputs{input, weight};
  if (bias.defined()) inputs.push_back(bias);
  record("conv2d", inputs, out, [=]() mutable {
    visit_dtype(out.dtype(), [&](auto tag) {
      using T = decltype(tag);
      auto dy = out_grad<T>(out);
      if (input.requires_grad()) {
        std::vector<T> dx(input.numel());
        kernels::parallel::conv2d_backward_input<T>(g, dy, weight.values<T>(), dx);
        accumulate<T>(input.grad_values<T>(), dx);
      }
      const bool want_b = bias.defined() && bias.requires_grad();
      if (weight.requires_grad() || want_b) {
        std::vector<T> dw(weight.numel());
        std::vector<T> db(want_b ? spec.out_channels : 0);
        kernels::parallel::conv2d_backward_weight<T>(g, dy, input.values<T>(),
                                                     dw, db);
        if (weight.requires_grad()) accumulate<T>(weight.grad_values<T>(), dw);
        if (want_b) accumulate<T>(bias.grad_values<T>(), db);
      }
    });
  });
  return out;
}

// ----------------------------------------------------------- pooling / up

Tensor maxpool2x2(const Tensor& input) {
  const Shape s = input.shape();
  if (s.h % 2 != 0 || s.w % 2 != 0) {
    throw ConfigError("maxpool2x2: spatial dims must be even, got " + s.str());
  }
  const Shape out_shape{s.n, s.c, s.h / 2, s.w / 2};
  if (input.is_meta()) return Tensor::meta(out_shape, input.dtype());

  Tensor out = Tensor::zeros(out_shape, input.dtype());
  auto argmax = std::make_shared<std::vector<std::size_t>>(out_shape.numel());
  visit_dtype(input.dtype(), [&](auto tag) {
    using T = decltype(tag);
    kernels::parallel::maxpool2x2_forward<T>(s.n, s.c, s.h, s.w,
                                             input.values<T>(),
                                             out.values<T>(), *argmax);
  });
  if (g_trace != nullptr) {
    std::uint64_t h = 0;
    for (std::size_t i = 0; i < argmax->size(); ++i) {
      h = h * 1099511628211ull + (*argmax)[i];
    }
    BranchTrace::fold(h);
  }

  record("maxpool2x2", {input}, out, [=]() mutable {
    visit_dtype(out.dtype(), [&](auto tag) {
      using T = decltype(tag);
      auto dy = out_grad<T>(out);
      auto dx = input.grad_values<T>();
      for (std::size_t i = 0; i < dy.size(); ++i) dx[(*argmax)[i]] += dy[i];
    });
  });
  return out;
}

Tensor upsample_nearest2x(const Tensor& input) {
  const Shape s = input.shape();
  const Shape out_shape{s.n, s.c, s.h * 2, s.w * 2};
  if (input.is_meta()) return Tensor::meta(out_shape, input.dtype());

  Tensor out = Tensor::zeros(out_shape, input.dtype());
  visit_dtype(input.dtype(), [&](auto tag) {
    using T = decltype(tag);
    auto x = input.values<T>();
    auto y = out.values<T>();
    const int planes = s.n * s.c;
    for (int p = 0; p < planes; ++p) {
      const T* src = x.data() + static_cast<std::size_t>(p) * s.h * s.w;
      T* dst = y.data() + static_cast<std::size_t>(p) * 4 * s.h * s.w;
      for (int r = 0; r < 2 * s.h; ++r) {
        for (int c = 0; c < 2 * s.w; ++c) {
          dst[static_cast<std::size_t>(r) * 2 * s.w + c] =
              src[static_cast<std::size_t>(r / 2) * s.w + c / 2];
        }
      }
    }
  });

  record("upsample_nearest2x", {input}, out, [=]() mutable {
    visit_dtype(out.dtype(), [&](auto tag) {
      using T = decltype(tag);
      auto dy = out_grad<T>(out);
      auto dx = input.grad_values<T>();
      const int planes = s.n * s.c;
      for (int p = 0; p < planes; ++p) {
        const T* src = dy.data() + static_cast<std::size_t>(p) * 4 * s.h * s.w;
        T* dst = dx.data() + static_cast<std::size_t>(p) * s.h * s.w;
        for (int y = 0; y < s.h; ++y) {
          for (int x = 0; x < s.w; ++x) {
            const std::size_t r0 = static_cast<std::size_t>(2 * y) * 2 * s.w + 2 * x;
            const std::size_t r1 = r0 + 2 * s.w;
            dst[static_cast<std::size_t>(y) * s.w + x] +=
                src[r0] + src[r0 + 1] + src[r1] + src[r1 + 1];
          }
        }
      }
    });
  });
  return out;
}

// --------------------------------------------------------------- batchnorm

Tensor batchnorm2d(const Tensor& input, const Tensor& gamma,
                   const Tensor& beta, BatchNormState& state, bool training) {
  const Shape s = input.shape();
  check_channel_vector(gamma, s.c, "batchnorm2d gamma");
  check_channel_vector(beta, s.c, "batchnorm2d beta");
  check_channel_vector(state.running_mean, s.c, "batchnorm2d running_mean");
  check_channel_vector(state.running_var, s.c, "batchnorm2d running_var");
  if (input.is_meta() || gamma.is_meta()) return Tensor::meta(s, input.dtype());
  check_same_dtype(input, gamma, "batchnorm2d");

  Tensor out = Tensor::zeros(s, input.dtype());
  const kernels::BatchNormGeometry g{s.n, s.c, s.h, s.w};
  const std::size_t count = s.n * s.plane();

  auto saved = visit_dtype(input.dtype(), [&](auto tag) {
    using T = decltype(tag);
    auto x_hat = std::make_shared<std::vector<T>>(s.numel());
    auto inv_std = std::make_shared<std::vector<T>>(s.c);
    std::vector<T> mean(s.c), var(s.c);
    auto rm = state.running_mean.values<T>();
    auto rv = state.running_var.values<T>();
    if (training) {
      kernels::parallel::batchnorm_stats<T>(g, input.values<T>(), mean, var);
      const T m = static_cast<T>(kBatchNormMomentum);
      const T unbias = count > 1 ? static_cast<T>(count) / static_cast<T>(count - 1) : T(1);
      for (int c = 0; c < s.c; ++c) {
        rm[c] = (T(1) - m) * rm[c] + m * mean[c];
        rv[c] = (T(1) - m) * rv[c] + m * var[c] * unbias;
      }
    } else {
      std::copy(rm.begin(), rm.end(), mean.begin());
      std::copy(rv.begin(), rv.end(), var.begin());
    }
    for (int c = 0; c < s.c; ++c) {
      (*inv_std)[c] = T(1) / std::sqrt(var[c] + static_cast<T>(kBatchNormEps));
    }
    kernels::parallel::batchnorm_apply<T>(g, input.values<T>(), mean, *inv_std,
                                          gamma.values<T>(), beta.values<T>(),
                                          *x_hat, out.values<T>());
    return std::make_pair(std::shared_ptr<void>(x_hat), std::shared_ptr<void>(inv_std));
  });

  record("batchnorm2d", {input, gamma, beta}, out, [=]() mutable {
    visit_dtype(out.dtype(), [&](auto tag) {
      using T = decltype(tag);
      const auto& x_hat = *static_cast<std::vector<T>*>(saved.first.get());
      const auto& inv_std = *static_cast<std::vector<T>*>(saved.second.get());
      std::vector<T> dx(s.numel()), dgamma(s.c), dbeta(s.c);
      kernels::parallel::batchnorm_backward<T>(g, out_grad<T>(out), x_hat,
                                               inv_std, gamma.values<T>(),
                                               training, dx, dgamma, dbeta);
      if (input.requires_grad()) accumulate<T>(input.grad_values<T>(), dx);
      if (gamma.requires_grad()) accumulate<T>(gamma.grad_values<T>(), dgamma);
      if (beta.requires_grad()) accumulate<T>(beta.grad_values<T>(), dbeta);
    });
  });
  return out;
}

// -------------------------------------------------------------- elementwise

Tensor relu(const Tensor& input) {
  if (input.is_meta()) return Tensor::meta(input.shape(), input.dtype());
  Tensor out = Tensor::zeros(input.shape(), input.dtype());
  visit_dtype(input.dtype(), [&](auto tag) {
    using T = decltype(tag);
    auto x = input.values<T>();
    auto y = out.values<T>();
    std::uint64_t h = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const bool on = x[i] > T(0);
      y[i] = on ? x[i] : T(0);
      if (g_trace != nullptr) h = h * 31 + (on ? i + 1 : 0);
    }
    if (g_trace != nullptr) BranchTrace::fold(h);
  });
  record("relu", {input}, out, [=]() mutable {
    visit_dtype(out.dtype(), [&](auto tag) {
      using T = decltype(tag);
      auto dy = out_grad<T>(out);
      auto x = input.values<T>();
      auto dx = input.grad_values<T>();
      for (std::size_t i = 0; i < dy.size(); ++i) {
        if (x[i] > T(0)) dx[i] += dy[i];
      }
    });
  });
  return out;
}

Tensor sigmoid(const Tensor& input) {
  if (input.is_meta()) return Tensor::meta(input.shape(), input.dtype());
  Tensor out = Tensor::zeros(input.shape(), input.dtype());
  visit_dtype(input.dtype(), [&](auto tag) {
    using T = decltype(tag);
    auto x = input.values<T>();
    auto y = out.values<T>();
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = T(1) / (T(1) + std::exp(-x[i]));
  });
  record("sigmoid", {input}, out, [=]() mutable {
    visit_dtype(out.dtype(), [&](auto tag) {
      using T = decltype(tag);
      auto dy = out_grad<T>(out);
      auto y = out.values<T>();
      auto dx = input.grad_values<T>();
      for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += dy[i] * y[i] * (T(1) - y[i]);
    });
  });
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  if (a.is_meta() || b.is_meta()) return Tensor::meta(a.shape(), a.dtype());
  Tensor out = Tensor::zeros(a.shape(), a.dtype());
  visit_dtype(a.dtype(), [&](auto tag) {
    using T = decltype(tag);
    auto x = a.values<T>();
    auto y = b.values<T>();
    auto z = out.values<T>();
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = x[i] + y[i];
  });
  record("add", {a, b}, out, [=]() mutable {
    visit_dtype(out.dtype(), [&](auto tag) {
      using T = decltype(tag);
      auto dy = out_grad<T>(out);
      if (auto da = grad_of<T>(a); !da.empty()) accumulate<T>(da, dy);
      if (auto db = grad_of<T>(b); !db.empty()) accumulate<T>(db, dy);
    });
  });
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mul");
  if (a.is_meta() || b.is_meta()) return Tensor::meta(a.shape(), a.dtype());
  Tensor out = Tensor::zeros(a.shape(), a.dtype());
  visit_dtype(a.dtype(), [&](auto tag) {
    using T = decltype(tag);
    auto x = a.values<T>();
    auto y = b.values<T>();
    auto z = out.values<T>();
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = x[i] * y[i];
  });
  record("mul", {a, b}, out, [=]() mutable {
    visit_dtype(out.dtype(), [&](auto tag) {
      using T = decltype(tag);
      auto dy = out_grad<T>(out);
      auto x = a.values<T>();
      auto y = b.values<T>();
      if (auto da = grad_of<T>(a); !da.empty()) {
        for (std::size_t i = 0; i < dy.size(); ++i) da[i] += dy[i] * y[i];
      }
      if (auto db = grad_of<T>(b); !db.empty()) {
        for (std::size_t i = 0; i < dy.size(); ++i) db[i] += dy[i] * x[i];
      }
    });
  });
  return out;
}

Tensor scale(const Tensor& input, double factor) {
  if (input.is_meta()) return Tensor::meta(input.shape(), input.dtype());
  Tensor out = Tensor::zeros(input.shape(), input.dtype());
  visit_dtype(input.dtype(), [&](auto tag) {
    using T = decltype(tag);
    auto x = input.values<T>();
    auto y = out.values<T>();
    const T f = static_cast<T>(factor);
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] * f;
  });
  record("scale", {input}, out, [=]() mutable {
    visit_dtype(out.dtype(), [&](auto tag) {
      using T = decltype(tag);
      auto dy = out_grad<T>(out);
      auto dx = input.grad_values<T>();
      const T f = static_cast<T>(factor);
      for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += dy[i] * f;
    });
  });
  return out;
}

// ------------------------------------------------------------ channel ops

Tensor concat_channels(std::span<const Tensor> inputs) {
  if (inputs.empty()) throw ConfigError("concat_channels: no inputs");
  const Shape first = inputs[0].shape();
  int channels = 0;
  bool meta = false;
  for (const Tensor& t : inputs) {
    const Shape s = t.shape();
    if (s.n != first.n || s.h != first.h || s.w != first.w) {
      throw ConfigError("concat_channels: (n,h,w) mismatch " + first.str() +
                        " vs " + s.str());
    }
    check_same_dtype(inputs[0], t, "concat_channels");
    channels += s.c;
    meta = meta || t.is_meta();
  }
  const Shape out_shape{first.n, channels, first.h, first.w};
  if (meta) return Tensor::meta(out_shape, inputs[0].dtype());

  Tensor out = Tensor::zeros(out_shape, inputs[0].dtype());
  const std::size_t plane = first.plane();
  visit_dtype(out.dtype(), [&](auto tag) {
    using T = decltype(tag);
    auto y = out.values<T>();
    for (int n = 0; n < first.n; ++n) {
      std::size_t dst = static_cast<std::size_t>(n) * channels * plane;
      for (const Tensor& t : inputs) {
        auto x = t.values<T>();
        const std::size_t len = t.shape().c * plane;
        std::copy_n(x.begin() + n * len, len, y.begin() + dst);
        dst += len;
      }
    }
  });

  std::vector<Tensor> parts(inputs.begin(), inputs.end());
  record("concat_channels", parts, out, [=]() mutable {
    visit_dtype(out.dtype(), [&](auto tag) {
      using T = decltype(tag);
      auto dy = out_grad<T>(out);
      for (int n = 0; n < first.n; ++n) {
        std::size_t src = static_cast<std::size_t>(n) * channels * plane;
        for (const Tensor& t : parts) {
          const std::size_t len = t.shape().c * plane;
          if (auto dx = grad_of<T>(t); !dx.empty()) {
            for (std::size_t i = 0; i < len; ++i) dx[n * len + i] += dy[src + i];
          }
          src += len;
        }
      }
    });
  });
  return out;
}

Tensor slice_channels(const Tensor& input, int begin, int count) {
  const Shape s = input.shape();
  if (begin < 0 || count < 1 || begin + count > s.c) {
    throw ConfigError("slice_channels: range [" + std::to_string(begin) + ", " +
                      std::to_string(begin + count) + ") outside " +
                      std::to_string(s.c) + " channels");
  }
  const Shape out_shape{s.n, count, s.h, s.w};
  if (input.is_meta()) return Tensor::meta(out_shape, input.dtype());
  Tensor out = Tensor::zeros(out_shape, input.dtype());
  const std::size_t plane = s.plane();
  const std::size_t len = count * plane;
  visit_dtype(input.dtype(), [&](auto tag) {
    using T = decltype(tag);
    auto x = input.values<T>();
    auto y = out.values<T>();
    for (int n = 0; n < s.n; ++n) {
      std::copy_n(x.begin() + (static_cast<std::size_t>(n) * s.c + begin) * plane,
                  len, y.begin() + n * len);
    }
  });
  record("slice_channels", {input}, out, [=]() mutable {
    visit_dtype(out.dtype(), [&](auto tag) {
      using T = decltype(tag);
      auto dy = out_grad<T>(out);
      auto dx = input.grad_values<T>();
      for (int n = 0; n < s.n; ++n) {
        const std::size_t base = (static_cast<std::size_t>(n) * s.c + begin) * plane;
        for (std::size_t i = 0; i < len; ++i) dx[base + i] += dy[n * len + i];
      }
    });
  });
  return out;
}

Tensor global_avg_pool(const Tensor& input) {
  const Shape s = input.shape();
  const Shape out_shape{s.n, s.c, 1, 1};
  if (input.is_meta()) return Tensor::meta(out_shape, input.dtype());
  Tensor out = Tensor::zeros(out_shape, input.dtype());
  const std::size_t plane = s.plane();
  visit_dtype(input.dtype(), [&](auto tag) {
    using T = decltype(tag);
    auto x = input.values<T>();
    auto y = out.values<T>();
    for (std::size_t p = 0; p < y.size(); ++p) {
      T acc = T(0);
      for (std::size_t i = 0; i < plane; ++i) acc += x[p * plane + i];
      y[p] = acc / static_cast<T>(plane);
    }
  });
  record("global_avg_pool", {input}, out, [=]() mutable {
    visit_dtype(out.dtype(), [&](auto tag) {
      using T = decltype(tag);
      auto dy = out_grad<T>(out);
      auto dx = input.grad_values<T>();
      for (std::size_t p = 0; p < dy.size(); ++p) {
        const T g = dy[p] / static_cast<T>(plane);
        for (std::size_t i = 0; i < plane; ++i) dx[p * plane + i] += g;
      }
    });
  });
  return out;
}

Tensor mul_broadcast(const Tensor& input, const Tensor& gate) {
  const Shape s = input.shape();
  if (gate.shape() != Shape{s.n, s.c, 1, 1}) {
    throw ConfigError("mul_broadcast: gate must be " +
                      Shape{s.n, s.c, 1, 1}.str() + ", got " + gate.shape().str());
  }
  check_same_dtype(input, gate, "mul_broadcast");
  if (input.is_meta() || gate.is_meta()) return Tensor::meta(s, input.dtype());
  Tensor out = Tensor::zeros(s, input.dtype());
  const std::size_t plane = s.plane();
  visit_dtype(input.dtype(), [&](auto tag) {
    using T = decltype(tag);
    auto x = input.values<T>();
    auto gv = gate.values<T>();
    auto y = out.values<T>();
    for (std::size_t p = 0; p < gv.size(); ++p) {
      for (std::size_t i = 0; i < plane; ++i) y[p * plane + i] = x[p * plane + i] * gv[p];
    }
  });
  record("mul_broadcast", {input, gate}, out, [=]() mutable {
    visit_dtype(out.dtype(), [&](auto tag) {
      using T = decltype(tag);
      auto dy = out_grad<T>(out);
      auto x = input.values<T>();
      auto gv = gate.values<T>();
      if (auto dx = grad_of<T>(input); !dx.empty()) {
        for (std::size_t p = 0; p < gv.size(); ++p)
          for (std::size_t i = 0; i < plane; ++i) dx[p * plane + i] += dy[p * plane + i] * gv[p];
      }
      if (auto dg = grad_of<T>(gate); !dg.empty()) {
        for (std::size_t p = 0; p < gv.size(); ++p) {
          T acc = T(0);
          for (std::size_t i = 0; i < plane; ++i) acc += dy[p * plane + i] * x[p * plane + i];
          dg[p] += acc;
        }
      }
    });
  });
  return out;
}

namespace {

// Generic channel permutation: out channel o reads input channel src[o].
Tensor permute_channels(const Tensor& input, std::vector<int> src,
                        const char* name) {
  const Shape s = input.shape();
  Tensor out = Tensor::zeros(s, input.dtype());
  const std::size_t plane = s.plane();
  visit_dtype(input.dtype(), [&](auto tag) {
    using T = decltype(tag);
    auto x = input.values<T>();
    auto y = out.values<T>();
    for (int n = 0; n < s.n; ++n) {
      for (int o = 0; o < s.c; ++o) {
        std::copy_n(x.begin() + (static_cast<std::size_t>(n) * s.c + src[o]) * plane,
                    plane, y.begin() + (static_cast<std::size_t>(n) * s.c + o) * plane);
      }
    }
  });
  record(name, {input}, out, [=]() mutable {
    visit_dtype(out.dtype(), [&](auto tag) {
      using T = decltype(tag);
      auto dy = out_grad<T>(out);
      auto dx = input.grad_values<T>();
      for (int n = 0; n < s.n; ++n) {
        for (int o = 0; o < s.c; ++o) {
          const std::size_t from = (static_cast<std::size_t>(n) * s.c + o) * plane;
          const std::size_t to = (static_cast<std::size_t>(n) * s.c + src[o]) * plane;
          for (std::size_t i = 0; i < plane; ++i) dx[to + i] += dy[from + i];
        }
      }
    });
  });
  return out;
}

}  // namespace

Tensor channel_shuffle(const Tensor& input, int groups) {
  const Shape s = input.shape();
  if (groups < 1 || s.c % groups != 0) {
    throw ConfigError("channel_shuffle: " + std::to_string(s.c) +
                      " channels not divisible by groups " +
                      std::to_string(groups));
  }
  if (input.is_meta()) return Tensor::meta(s, input.dtype());
  const int per_group = s.c / groups;
  std::vector<int> src(s.c);
  for (int i = 0; i < groups; ++i) {
    for (int j = 0; j < per_group; ++j) src[j * groups + i] = i * per_group + j;
  }
  return permute_channels(input, std::move(src), "channel_shuffle");
}

Tensor permute(const Tensor& input, std::array<int, 4> perm) {
  std::array<int, 4> seen{};
  for (int p : perm) {
    if (p < 0 || p > 3 || seen[p]++) throw ConfigError("permute: invalid axis order");
  }
  const Shape s = input.shape();
  const std::array<int, 4> in_dims{s.n, s.c, s.h, s.w};
  const Shape out_shape{in_dims[perm[0]], in_dims[perm[1]], in_dims[perm[2]],
                        in_dims[perm[3]]};
  if (input.is_meta()) return Tensor::meta(out_shape, input.dtype());

  // Flat input offset for every output element.
  std::array<std::size_t, 4> in_strides{static_cast<std::size_t>(s.c) * s.h * s.w,
                                        static_cast<std::size_t>(s.h) * s.w,
                                        static_cast<std::size_t>(s.w), 1};
  auto map = std::make_shared<std::vector<std::size_t>>(out_shape.numel());
  std::size_t k = 0;
  for (int a = 0; a < out_shape.n; ++a)
    for (int b = 0; b < out_shape.c; ++b)
      for (int c = 0; c < out_shape.h; ++c)
        for (int d = 0; d < out_shape.w; ++d) {
          const std::array<int, 4> o{a, b, c, d};
          std::size_t off = 0;
          for (int ax = 0; ax < 4; ++ax) off += o[ax] * in_strides[perm[ax]];
          (*map)[k++] = off;
        }

  Tensor out = Tensor::zeros(out_shape, input.dtype());
  visit_dtype(input.dtype(), [&](auto tag) {
    using T = decltype(tag);
    auto x = input.values<T>();
    auto y = out.values<T>();
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = x[(*map)[i]];
  });
  record("permute", {input}, out, [=]() mutable {
    visit_dtype(out.dtype(), [&](auto tag) {
      using T = decltype(tag);
      auto dy = out_grad<T>(out);
      auto dx = input.grad_values<T>();
      for (std::size_t i = 0; i < dy.size(); ++i) dx[(*map)[i]] += dy[i];
    });
  });
  return out;
}

Tensor reshape(const Tensor& input, Shape shape) {
  if (!shape.valid() || shape.numel() != input.numel()) {
    throw ConfigError("reshape: cannot view " + input.shape().str() + " as " +
                      shape.str());
  }
  if (input.is_meta()) return Tensor::meta(shape, input.dtype());
  Tensor out = Tensor::zeros(shape, input.dtype());
  visit_dtype(input.dtype(), [&](auto tag) {
    using T = decltype(tag);
    auto x = input.values<T>();
    std::copy(x.begin(), x.end(), out.values<T>().begin());
  });
  record("reshape", {input}, out, [=]() mutable {
    visit_dtype(out.dtype(), [&](auto tag) {
      using T = decltype(tag);
      accumulate<T>(input.grad_values<T>(), out_grad<T>(out));
    });
  });
  return out;
}

// --------------------------------------------------------------- reductions

Tensor sum(const Tensor& input) {
  const Shape scalar{1, 1, 1, 1};
  if (input.is_meta()) return Tensor::meta(scalar, input.dtype());
  Tensor out = Tensor::zeros(scalar, input.dtype());
  visit_dtype(input.dtype(), [&](auto tag) {
    using T = decltype(tag);
    double acc = 0.0;
    for (T v : input.values<T>()) acc += v;
    out.values<T>()[0] = static_cast<T>(acc);
  });
  record("sum", {input}, out, [=]() mutable {
    visit_dtype(out.dtype(), [&](auto tag) {
      using T = decltype(tag);
      const T g = out_grad<T>(out)[0];
      for (T& d : input.grad_values<T>()) d += g;
    });
  });
  return out;
}

Tensor mse(const Tensor& prediction, const Tensor& target) {
  check_same_shape(prediction, target, "mse");
  const Shape scalar{1, 1, 1, 1};
  if (prediction.is_meta() || target.is_meta()) {
    return Tensor::meta(scalar, prediction.dtype());
  }
  Tensor out = Tensor::zeros(scalar, prediction.dtype());
  const double count = static_cast<double>(prediction.numel());
  visit_dtype(prediction.dtype(), [&](auto tag) {
    using T = decltype(tag);
    auto p = prediction.values<T>();
    auto t = target.values<T>();
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double d = static_cast<double>(p[i]) - static_cast<double>(t[i]);
      acc += d * d;
    }
    out.values<T>()[0] = static_cast<T>(acc / count);
  });
  record("mse", {prediction, target}, out, [=]() mutable {
    visit_dtype(out.dtype(), [&](auto tag) {
      using T = decltype(tag);
      const double g = out_grad<T>(out)[0];
      auto p = prediction.values<T>();
      auto t = target.values<T>();
      auto dp = grad_of<T>(prediction);
      auto dt = grad_of<T>(target);
      for (std::size_t i = 0; i < p.size(); ++i) {
        const double d = 2.0 * g * (static_cast<double>(p[i]) - t[i]) / count;
        if (!dp.empty()) dp[i] += static_cast<T>(d);
        if (!dt.empty()) dt[i] -= static_cast<T>(d);
      }
    });
  });
  return out;
}

// ------------------------------------------------------------- BranchTrace

BranchTrace::BranchTrace() : previous_(g_trace) { g_trace = this; }

BranchTrace::~BranchTrace() { g_trace = previous_; }

void BranchTrace::fold(std::uint64_t value) {
  if (g_trace == nullptr) return;
  g_trace->hash_ = (g_trace->hash_ ^ value) * 1099511628211ull;
}

}  // namespace hg
