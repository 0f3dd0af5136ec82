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

// Reference loops against the OpenMP kernels on hourglass-sized shapes.
// Thread count follows OMP_NUM_THREADS.

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "hgnet/kernels.hpp"

namespace {

namespace k = hg::kernels;

struct ConvCase {
  k::ConvGeometry g;
  std::vector<float> input, weight, bias, output;
};

// args: channels, side, kernel, groups, dilation
ConvCase make_case(const benchmark::State& state) {
  const int c = static_cast<int>(state.range(0));
  const int side = static_cast<int>(state.range(1));
  const int kernel = static_cast<int>(state.range(2));
  const int groups = static_cast<int>(state.range(3));
  const int dilation = static_cast<int>(state.range(4));
  ConvCase cc;
  k::ConvGeometry& g = cc.g;
  g.n = 1;
  g.in_c = g.out_c = c;
  g.in_h = g.in_w = g.out_h = g.out_w = side;
  g.kh = g.kw = kernel;
  g.pad_h = g.pad_w = dilation * (kernel / 2);
  g.dilation = dilation;
  g.groups = groups;
  std::mt19937 rng(1);
  std::uniform_real_distribution<float> d(-1.f, 1.f);
  auto fill = [&](std::vector<float>& v, std::size_t n) {
    v.resize(n);
    for (float& x : v) x = d(rng);
  };
  fill(cc.input, static_cast<std::size_t>(c) * side * side);
  fill(cc.weight, static_cast<std::size_t>(c) * (c / groups) * kernel * kernel);
  fill(cc.bias, c);
  cc.output.resize(cc.input.size());
  return cc;
}

template <bool kParallel>
void BM_ConvForward(benchmark::State& state) {
  ConvCase cc = make_case(state);
  for (auto _ : state) {
    if constexpr (kParallel) {
      k::parallel::conv2d_forward<float>(cc.g, cc.input, cc.weight, cc.bias, cc.output);
    } else {
      k::reference::conv2d_forward<float>(cc.g, cc.input, cc.weight, cc.bias, cc.output);
    }
    benchmark::DoNotOptimize(cc.output.data());
  }
  const double madds = static_cast<double>(cc.output.size()) * (cc.g.in_c / cc.g.groups) *
                       cc.g.kh * cc.g.kw;
  state.counters["MAdds/s"] =
      benchmark::Counter(madds, benchmark::Counter::kIsIterationInvariantRate);
}

template <bool kParallel>
void BM_ConvBackward(benchmark::State& state) {
  ConvCase cc = make_case(state);
  std::vector<float> grad_in(cc.input.size());
  std::vector<float> grad_w(cc.weight.size());
  std::vector<float> grad_b(cc.bias.size());
  for (auto _ : state) {
    if constexpr (kParallel) {
      k::parallel::conv2d_backward_input<float>(cc.g, cc.input, cc.weight, grad_in);
      k::parallel::conv2d_backward_weight<float>(cc.g, cc.input, cc.input, grad_w, grad_b);
    } else {
      k::reference::conv2d_backward_input<float>(cc.g, cc.input, cc.weight, grad_in);
      k::reference::conv2d_backward_weight<float>(cc.g, cc.input, cc.input, grad_w, grad_b);
    }
    benchmark::DoNotOptimize(grad_w.data());
  }
}

template <bool kParallel>
void BM_BatchNorm(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0));
  const int side = static_cast<int>(state.range(1));
  const k::BatchNormGeometry g{4, c, side, side};
  const std::size_t n = static_cast<std::size_t>(4) * c * side * side;
  std::vector<float> x(n), xh(n), y(n), mean(c), var(c), inv(c, 1.f), gamma(c, 1.f), beta(c);
  std::mt19937 rng(2);
  std::uniform_real_distribution<float> d(-1.f, 1.f);
  for (float& v : x) v = d(rng);
  for (auto _ : state) {
    if constexpr (kParallel) {
      k::parallel::batchnorm_stats<float>(g, x, mean, var);
      k::parallel::batchnorm_apply<float>(g, x, mean, inv, gamma, beta, xh, y);
    } else {
      k::reference::batchnorm_stats<float>(g, x, mean, var);
      k::reference::batchnorm_apply<float>(g, x, mean, inv, gamma, beta, xh, y);
    }
    benchmark::DoNotOptimize(y.data());
  }
}

void conv_args(benchmark::internal::Benchmark* b) {
  b->ArgNames({"c", "side", "k", "groups", "dil"});
  b->Args({128, 64, 1, 1, 1});    // pointwise
  b->Args({128, 64, 3, 1, 1});    // full 3x3
  b->Args({128, 64, 3, 128, 1});  // depthwise
  b->Args({128, 64, 3, 128, 2});  // dilated depthwise
  b->Args({128, 32, 1, 4, 1});    // grouped pointwise
  b->Unit(benchmark::kMicrosecond);
}

}  // namespace

BENCHMARK(BM_ConvForward<false>)->Name("conv_forward/reference")->Apply(conv_args);
BENCHMARK(BM_ConvForward<true>)->Name("conv_forward/parallel")->Apply(conv_args);
BENCHMARK(BM_ConvBackward<false>)->Name("conv_backward/reference")->Apply(conv_args);
BENCHMARK(BM_ConvBackward<true>)->Name("conv_backward/parallel")->Apply(conv_args);
BENCHMARK(BM_BatchNorm<false>)
    ->Name("batchnorm/reference")
    ->Args({256, 64})
    ->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_BatchNorm<true>)
    ->Name("batchnorm/parallel")
    ->Args({256, 64})
    ->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
