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

#include <set>
#include <string>

#include "doctest.h"
#include "hgnet/blocks.hpp"
#include "hgnet/complexity.hpp"
#include "hgnet/error.hpp"
#include "hgnet/train.hpp"
#include "support.hpp"

using hg::BlockKind;
using hg::BlockSpec;
using hg::DType;
using hg::Shape;
using hg::Tensor;

namespace {

BlockSpec spec_of(BlockKind kind, int in, int out) {
  BlockSpec s;
  s.kind = kind;
  s.in_channels = in;
  s.out_channels = out;
  return s;
}

std::unique_ptr<hg::Block> make(const BlockSpec& s, DType dtype = DType::kF64,
                                std::uint64_t seed = 1) {
  hg::Initializer init(seed, dtype);
  return hg::make_block(s, std::string(hg::block_kind_name(s.kind)), init);
}

std::int64_t params_of(BlockKind kind, int c) {
  return hg::enumerate_params(*make(spec_of(kind, c, c), DType::kF32));
}

void zero_convs(const hg::Module& m, const std::string& filter = "") {
  for (const hg::NamedTensor& p : m.parameters()) {
    const bool conv = p.name.ends_with("/weight") || p.name.ends_with("/bias");
    if (conv && p.name.find(filter) != std::string::npos) {
      Tensor t = p.tensor;
      t.fill(0.0);
    }
  }
}

Tensor eval(hg::Block& b, const Tensor& x) { return b.forward(x, hg::ForwardContext{false}); }

}  // namespace

TEST_SUITE("nn_blocks") {

TEST_CASE("every kind preserves n, h, w and emits out_channels") {
  for (BlockKind kind : hg::all_block_kinds()) {
    for (auto [in, out] : {std::pair{24, 24}, std::pair{16, 24}, std::pair{48, 24}}) {
      auto b = make(spec_of(kind, in, out));
      const Tensor x = hgtest::random_tensor({2, in, 8, 6}, DType::kF64, 3);
      for (bool training : {true, false}) {
        const Tensor y = b->forward(x, hg::ForwardContext{training});
        CHECK_MESSAGE((y.shape() == Shape{2, out, 8, 6}), hg::block_kind_name(kind), " ", in,
                      "->", out);
      }
    }
  }
}

TEST_CASE("zeroed main branch returns the input; the gate halves it for dice") {
  for (BlockKind kind : hg::all_block_kinds()) {
    auto b = make(spec_of(kind, 16, 16));
    zero_convs(*b);
    const Tensor x = hgtest::random_tensor({2, 16, 8, 8}, DType::kF64, 4);
    const Tensor y = b->forward(x, hg::ForwardContext{true});
    const double factor = kind == BlockKind::kDiCE ? 0.5 : 1.0;
    bool same = true;
    for (std::size_t i = 0; i < x.numel(); ++i) same = same && y.at(i) == factor * x.at(i);
    CHECK_MESSAGE(same, hg::block_kind_name(kind));
  }
}

TEST_CASE("residual: parameter count at 256 channels") {
  const std::int64_t c = 256, m = 128;
  const std::int64_t bns = 2 * c + 2 * m + 2 * m;
  const std::int64_t convs = (c * m + m) + (9 * m * m + m) + (m * c + c);
  CHECK(params_of(BlockKind::kResidual, 256) == bns + convs);
  CHECK(params_of(BlockKind::kResidual, 256) == 214528);
  // Projected skip: 1x1 in -> out with bias.
  const auto proj = hg::enumerate_params(*make(spec_of(BlockKind::kResidual, 128, 256)));
  CHECK(proj == (2 * 128 + 2 * m + 2 * m) + (128 * m + m) + (9 * m * m + m) + (m * c + c) +
                    (128 * c + c));
}

TEST_CASE("separable: the 3x3 stage shrinks by the depthwise plus pointwise ratio") {
  for (int c : {32, 256}) {
    const std::int64_t m = c / 2;
    const std::int64_t dense_stage = 9 * m * m + m;
    const std::int64_t sep_stage = (9 * m + m) + (m * m + m);
    CHECK(params_of(BlockKind::kResidual, c) - params_of(BlockKind::kSeparableResidual, c) ==
          dense_stage - sep_stage);
    const double ratio = static_cast<double>(9 * m + m * m) / (9 * m * m);
    CHECK(static_cast<double>(sep_stage - 2 * m) / (dense_stage - m) == doctest::Approx(ratio));
  }
}

TEST_CASE("depthwise convolution keeps channels independent") {
  const Tensor w = hgtest::random_tensor({6, 1, 3, 3}, DType::kF64, 5);
  const hg::ConvSpec s = [] {
    auto sp = hg::ConvSpec::same(6, 6, 3, 1, 6);
    sp.has_bias = false;
    return sp;
  }();
  Tensor x = hgtest::random_tensor({1, 6, 5, 5}, DType::kF64, 6);
  const Tensor y0 = hg::conv2d(x, w, Tensor(), s);
  x.set(hg::offset(x.shape(), 0, 2, 2, 2), 10.0);
  const Tensor y1 = hg::conv2d(x, w, Tensor(), s);
  for (int c = 0; c < 6; ++c) {
    bool unchanged = true;
    for (int i = 0; i < 25; ++i) unchanged = unchanged && y0.at(0, c, i / 5, i % 5) == y1.at(0, c, i / 5, i % 5);
    CHECK(unchanged == (c != 2));
  }
}

TEST_CASE("ghost: channel split, ratio 1, and fewer params than residual") {
  hg::Initializer init(1, DType::kF64);
  hg::GhostModule g("g", 16, 16, 2, init);
  CHECK(g.primary_channels() == 8);
  CHECK(g.cheap_channels() == 8);
  const Tensor y = g.forward(hgtest::random_tensor({1, 16, 5, 5}, DType::kF64, 7));
  CHECK(y.shape() == Shape{1, 16, 5, 5});

  hg::GhostModule plain("p", 16, 16, 1, init);
  CHECK(plain.primary_channels() == 16);
  CHECK(plain.cheap_channels() == 0);
  CHECK(plain.parameters().size() == 2);

  for (int c : {16, 64, 256}) {
    CHECK(params_of(BlockKind::kGhost, c) < params_of(BlockKind::kResidual, c));
  }
  BlockSpec bad = spec_of(BlockKind::kGhost, 16, 18);
  bad.ghost_ratio = 4;
  CHECK_THROWS_AS(bad.validate(), hg::ConfigError);
}

TEST_CASE("shuffle: below ghost, groups 1 is a plain bottleneck, divisibility enforced") {
  CHECK(params_of(BlockKind::kShuffle, 256) < params_of(BlockKind::kGhost, 256));
  BlockSpec s = spec_of(BlockKind::kShuffle, 16, 16);
  s.groups = 1;
  auto b = make(s);
  const std::int64_t m = 8;
  CHECK(hg::enumerate_params(*b) ==
        (2 * 16 + 4 * m) + (16 * m + m) + (9 * m + m) + (m * 16 + 16));
  CHECK(eval(*b, hgtest::random_tensor({1, 16, 4, 4}, DType::kF64, 8)).shape() ==
        Shape{1, 16, 4, 4});
  BlockSpec bad = spec_of(BlockKind::kShuffle, 12, 12);
  bad.groups = 4;  // mid 6
  CHECK_THROWS_AS(bad.validate(), hg::ConfigError);
  CHECK_THROWS_AS(hg::make_block(bad, "x", *std::make_unique<hg::Initializer>(1, DType::kF32)),
                  hg::ConfigError);
}

TEST_CASE("dice: shape, projection wrapper, and mismatch without it") {
  auto b = make(spec_of(BlockKind::kDiCE, 12, 12));
  CHECK(eval(*b, hgtest::random_tensor({1, 12, 8, 8}, DType::kF64, 9)).shape() ==
        Shape{1, 12, 8, 8});
  auto wrapped = make(spec_of(BlockKind::kDiCE, 8, 12));
  CHECK(eval(*wrapped, hgtest::random_tensor({1, 8, 8, 8}, DType::kF64, 10)).shape() ==
        Shape{1, 12, 8, 8});
  hg::Initializer init(1, DType::kF32);
  CHECK_THROWS_AS(hg::build_dice(8, 12, init), hg::ConfigError);
}

TEST_CASE("dice: zero gate logits scale the shortcut by one half") {
  auto b = make(spec_of(BlockKind::kDiCE, 12, 12));
  zero_convs(*b, "/gate/");
  zero_convs(*b, "/final/");
  const Tensor x = hgtest::random_tensor({1, 12, 6, 6}, DType::kF64, 11);
  const Tensor y = eval(*b, x);
  for (std::size_t i = 0; i < x.numel(); ++i) CHECK(y.at(i) == 0.5 * x.at(i));
}

TEST_CASE("dilated: nine by nine receptive field") {
  auto b = make(spec_of(BlockKind::kDilated, 4, 4));
  Tensor x = hgtest::random_tensor({1, 4, 17, 17}, DType::kF64, 12);
  const double centre = eval(*b, x).at(0, 1, 8, 8);
  auto moved = [&](int dy, int dx) {
    Tensor p = x.clone();
    for (int c = 0; c < 4; ++c) p.set(hg::offset(p.shape(), 0, c, 8 + dy, 8 + dx), 5.0);
    return eval(*b, p).at(0, 1, 8, 8) != centre;
  };
  CHECK(moved(4, 0));
  CHECK(moved(0, -4));
  CHECK(moved(4, 4));
  CHECK_FALSE(moved(5, 0));
  CHECK_FALSE(moved(0, -5));
  CHECK_FALSE(moved(-5, 5));
}

TEST_CASE("dilated: separable variant has fewer params") {
  for (int c : {16, 256}) {
    BlockSpec dense = spec_of(BlockKind::kDilated, c, c);
    BlockSpec sep = dense;
    sep.separable = true;
    CHECK(hg::enumerate_params(*make(sep, DType::kF32)) <
          hg::enumerate_params(*make(dense, DType::kF32)));
  }
}

TEST_CASE("multidilated: shape, split widths and local support of the l=1 branch") {
  auto b = make(spec_of(BlockKind::kMultiDilated, 24, 24));
  CHECK(eval(*b, hgtest::random_tensor({1, 24, 16, 16}, DType::kF64, 13)).shape() ==
        Shape{1, 24, 16, 16});

  CHECK(hg::multidilated_entry_channels(84, 3) == 42);
  auto m84 = make(spec_of(BlockKind::kMultiDilated, 84, 84), DType::kF32);
  int branches = 0;
  for (const auto& p : m84->parameters()) {
    if (p.name.ends_with("/entry/weight")) CHECK(p.tensor.shape().n == 42);
    if (p.name.find("_dw/weight") != std::string::npos) {
      CHECK(p.tensor.shape().n == 14);
      ++branches;
    }
  }
  CHECK(branches == 3);

  zero_convs(*b, "_d2_dw/weight");
  zero_convs(*b, "_d3_dw/weight");
  Tensor x = hgtest::random_tensor({1, 24, 11, 11}, DType::kF64, 14);
  const double centre = eval(*b, x).at(0, 3, 5, 5);
  auto moved = [&](int dy, int dx) {
    Tensor p = x.clone();
    for (int c = 0; c < 24; ++c) p.set(hg::offset(p.shape(), 0, c, 5 + dy, 5 + dx), 4.0);
    return eval(*b, p).at(0, 3, 5, 5) != centre;
  };
  CHECK(moved(1, 1));
  CHECK_FALSE(moved(2, 0));
  CHECK_FALSE(moved(0, 3));
  CHECK_FALSE(moved(-3, -3));
}

TEST_CASE("spec validation") {
  CHECK_THROWS_AS(spec_of(BlockKind::kResidual, 8, 7).validate(), hg::ConfigError);
  CHECK_THROWS_AS(spec_of(BlockKind::kResidual, 0, 8).validate(), hg::ConfigError);
  CHECK_THROWS_AS(spec_of(BlockKind::kMultiDilated, 8, 4).validate(), hg::ConfigError);
  BlockSpec d = spec_of(BlockKind::kMultiDilated, 12, 12);
  d.dilations = {};
  CHECK_THROWS_AS(d.validate(), hg::ConfigError);
  d.dilations = {1, 0, 2};
  CHECK_THROWS_AS(d.validate(), hg::ConfigError);
  CHECK_THROWS_AS(hg::parse_block_kind("bottleneck"), hg::ConfigError);
  for (BlockKind k : hg::all_block_kinds()) {
    CHECK(hg::parse_block_kind(hg::block_kind_name(k)) == k);
  }
}

TEST_CASE("parameter ordering at equal channels") {
  for (int c : {64, 256}) {
    const auto shuffle = params_of(BlockKind::kShuffle, c);
    const auto ghost = params_of(BlockKind::kGhost, c);
    const auto sep = params_of(BlockKind::kSeparableResidual, c);
    const auto res = params_of(BlockKind::kResidual, c);
    const auto dil = params_of(BlockKind::kDilated, c);
    CHECK(shuffle < ghost);
    CHECK(ghost < sep);
    CHECK(sep < res);
    CHECK(res < dil);
  }
}

TEST_CASE("parameter names are unique") {
  for (BlockKind kind : hg::all_block_kinds()) {
    auto b = make(spec_of(kind, 16, 24));
    std::set<std::string> names;
    for (const auto& p : b->parameters()) CHECK(names.insert(p.name).second);
    for (const auto& p : b->buffers()) CHECK(names.insert(p.name).second);
  }
}

TEST_CASE("gradients of every block match finite differences (64-bit)") {
  for (BlockKind kind : hg::all_block_kinds()) {
    for (std::uint64_t seed : {7u, 19u}) {
      hg::GradcheckOptions opts;
      opts.seed = seed;
      const hg::GradcheckReport r = hg::gradcheck_block(kind, opts);
      int checked = 0;
      for (const auto& e : r.entries) {
        CHECK(e.checked >= std::min<int>(20, static_cast<int>(e.checked + e.resampled)));
        checked += e.checked;
      }
      CHECK(checked > 0);
      CHECK_MESSAGE(r.max_rel_error() < 1e-5, hg::block_kind_name(kind), " seed ", seed);
    }
  }
}

TEST_CASE("the gradient check itself agrees with an independent difference quotient") {
  auto b = make(spec_of(BlockKind::kResidual, 6, 6), DType::kF64, 3);
  const Tensor x = hgtest::random_tensor({2, 6, 4, 4}, DType::kF64, 15);
  const Tensor r = hgtest::random_tensor({2, 6, 4, 4}, DType::kF64, 16);
  const auto params = b->parameters();
  for (const auto& p : params) {
    Tensor t = p.tensor;
    t.set_requires_grad(true);
    t.zero_grad();
  }
  hgtest::backprop([&] { return hg::sum(hg::mul(b->forward(x, {false}), r)); });
  auto f = [&] { return hg::sum(hg::mul(b->forward(x, {false}), r)).at(0); };
  for (const auto& p : params) {
    if (!p.name.ends_with("/weight")) continue;
    CHECK_MESSAGE(hgtest::fd_max_error(f, p.tensor, p.tensor.grad_vector(), 17) < 1e-6, p.name);
  }
}

}  // TEST_SUITE
