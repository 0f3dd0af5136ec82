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

#include <cmath>
#include <set>

#include "doctest.h"
#include "hgnet/complexity.hpp"
#include "hgnet/error.hpp"
#include "hgnet/losses.hpp"
#include "hgnet/network.hpp"
#include "hgnet/train.hpp"
#include "support.hpp"

using hg::DType;
using hg::NetworkConfig;
using hg::Shape;
using hg::SkipMode;
using hg::Tensor;

namespace {

NetworkConfig toy() {
  return hg::load_network_config(hgtest::source_path("presets/toy-2hg.json"));
}

NetworkConfig small_hg(int depth, SkipMode mode) {
  NetworkConfig c;
  c.hourglass_depth = depth;
  c.channels_main = 8;
  c.channels_inner = 4;
  c.skip_mode = mode;
  return c;
}

Tensor find(const hg::Module& m, const std::string& name) {
  for (const auto& p : m.parameters())
    if (p.name == name) return p.tensor;
  FAIL("no parameter ", name);
  return {};
}

void zero_all_convs(const hg::Module& m) {
  for (const auto& p : m.parameters()) {
    if (p.name.ends_with("/weight") || p.name.ends_with("/bias")) {
      Tensor t = p.tensor;
      t.fill(0.0);
    }
  }
}

bool same_values(const Tensor& a, const Tensor& b) { return hgtest::bit_equal(a, b); }

}  // namespace

TEST_SUITE("hourglass_net") {

TEST_CASE("hourglass: depth-1 shapes") {
  NetworkConfig c = small_hg(1, SkipMode::kAdd);
  hg::Initializer init(1, DType::kF64);
  hg::Hourglass h("hg", 1, c, init);
  const auto r = h.forward(hgtest::random_tensor({1, 8, 4, 4}, DType::kF64, 1), {true});
  CHECK(r.output.shape() == Shape{1, 8, 4, 4});
  CHECK(r.neck.shape() == Shape{1, 8, 2, 2});
  CHECK_THROWS_AS(h.forward(hgtest::random_tensor({1, 8, 5, 5}, DType::kF64, 1), {true}),
                  hg::ConfigError);
}

TEST_CASE("hourglass: identity blocks reduce it to skip plus upsampled pooled path") {
  const Tensor x = hgtest::random_tensor({2, 8, 8, 8}, DType::kF64, 2);
  auto up_pool = [](const Tensor& t) { return hg::upsample_nearest2x(hg::maxpool2x2(t)); };
  for (int depth : {1, 2}) {
    hg::Initializer init(1, DType::kF64);
    hg::Hourglass h("hg", depth, small_hg(depth, SkipMode::kAdd), init);
    zero_all_convs(h);
    const Tensor y = h.forward(x, {true}).output;
    Tensor expect;
    if (depth == 1) {
      expect = hg::add(x, up_pool(x));
    } else {
      const Tensor p = hg::maxpool2x2(x);
      expect = hg::add(x, hg::upsample_nearest2x(hg::add(p, up_pool(p))));
    }
    CHECK(same_values(y, expect));
  }
}

TEST_CASE("merge_skip and narrow_res_connect contracts") {
  const Tensor skip = hgtest::random_tensor({1, 4, 3, 3}, DType::kF64, 3);
  const Tensor zero = Tensor::zeros({1, 4, 3, 3}, DType::kF64);
  CHECK(same_values(hg::merge_skip(skip, zero, SkipMode::kAdd, nullptr), skip));

  hg::Initializer init(2, DType::kF64);
  hg::Conv2d merge("merge", hg::ConvSpec::pointwise(4 + 6, 4), init);
  const Tensor up = hgtest::random_tensor({1, 6, 3, 3}, DType::kF64, 4);
  CHECK(hg::merge_skip(skip, up, SkipMode::kResConcat, &merge).shape() == Shape{1, 4, 3, 3});
  merge.weight().fill(0.0);
  merge.bias().fill(0.0);
  for (int i = 0; i < 4; ++i) merge.weight().set(i * 10 + i, 1.0);  // [I | 0]
  CHECK(same_values(hg::merge_skip(skip, up, SkipMode::kResConcat, &merge), skip));
  CHECK_THROWS_AS(hg::merge_skip(skip, up, SkipMode::kAdd, nullptr), hg::ConfigError);
  CHECK_THROWS_AS(
      hg::merge_skip(skip, hgtest::random_tensor({1, 6, 2, 2}, DType::kF64, 5),
                     SkipMode::kResConcat, &merge),
      hg::ConfigError);

  CHECK(same_values(hg::narrow_res_connect(zero, skip), skip));
  CHECK_THROWS_AS(hg::narrow_res_connect(up, skip), hg::ConfigError);
}

TEST_CASE("network: toy forward shapes and determinism") {
  hg::Network net(toy(), 3);
  const Tensor x = hgtest::random_tensor({2, 3, 64, 64}, DType::kF32, 6, 0.0, 1.0);
  const auto a = net.forward(x, {false});
  const auto b = net.forward(x, {false});
  REQUIRE(a.heatmaps.size() == 2);
  REQUIRE(a.necks.size() == 2);
  REQUIRE(a.tails.size() == 2);
  for (std::size_t s = 0; s < 2; ++s) {
    CHECK(a.heatmaps[s].shape() == Shape{2, 16, 16, 16});
    CHECK(same_values(a.heatmaps[s], b.heatmaps[s]));
  }
  hg::Network twin(toy(), 3);
  CHECK(same_values(twin.forward(x, {false}).heatmaps[1], a.heatmaps[1]));
}

TEST_CASE("network: permuting the batch permutes the outputs in eval mode") {
  hg::Network net(toy(), 4);
  const Tensor x = hgtest::random_tensor({3, 3, 64, 64}, DType::kF32, 7, 0.0, 1.0);
  const int perm[3] = {2, 0, 1};
  Tensor xp = Tensor::zeros(x.shape());
  const std::size_t per = x.numel() / 3;
  for (int i = 0; i < 3; ++i)
    for (std::size_t k = 0; k < per; ++k) xp.set(i * per + k, x.at(perm[i] * per + k));
  const Tensor y = net.forward(x, {false}).heatmaps[1];
  const Tensor yp = net.forward(xp, {false}).heatmaps[1];
  const std::size_t out_per = y.numel() / 3;
  bool ok = true;
  for (int i = 0; i < 3; ++i)
    for (std::size_t k = 0; k < out_per; ++k) ok = ok && yp.at(i * out_per + k) == y.at(perm[i] * out_per + k);
  CHECK(ok);
}

TEST_CASE("network: input and config validation") {
  hg::Network net(toy(), 1);
  CHECK_THROWS_AS(net.forward(Tensor::zeros({1, 3, 32, 32}), {false}), hg::ConfigError);
  CHECK_THROWS_AS(net.forward(Tensor::zeros({1, 1, 64, 64}), {false}), hg::ConfigError);
  CHECK_THROWS_AS(net.forward(Tensor::zeros({1, 3, 64, 64}, DType::kF64), {false}),
                  hg::ConfigError);

  NetworkConfig c = toy();
  c.channels_inner = c.channels_main;
  CHECK_THROWS_AS(c.validate(), hg::ConfigError);
  c = toy();
  c.input_resolution = 96;
  CHECK_THROWS_AS(c.validate(), hg::ConfigError);
  c = toy();
  c.num_stacks = 0;
  CHECK_THROWS_AS(c.validate(), hg::ConfigError);
  c = toy();
  c.hourglass_depth = 0;
  CHECK_THROWS_AS(c.validate(), hg::ConfigError);
}

TEST_CASE("network: architecture JSON round trip and strict keys") {
  const NetworkConfig c =
      hg::load_network_config(hgtest::source_path("presets/best-model.json"));
  const NetworkConfig back = hg::network_config_from_json(hg::to_json(c));
  CHECK(hg::to_json(back) == hg::to_json(c));
  CHECK(c.stack_merge == SkipMode::kResConcat);
  CHECK(c.narrow_res);

  nlohmann::json j = hg::to_json(c);
  j["channel_main"] = 3;
  CHECK_THROWS_WITH_AS(hg::network_config_from_json(j), doctest::Contains("channel_main"),
                       hg::ConfigError);
  j = hg::to_json(c);
  j["num_stacks"] = "two";
  CHECK_THROWS_AS(hg::network_config_from_json(j), hg::ConfigError);
  j = hg::to_json(c);
  j["block"] = "hyper";
  CHECK_THROWS_AS(hg::network_config_from_json(j), hg::ConfigError);
}

TEST_CASE("network: params are affine in the number of stacks") {
  std::int64_t p[3];
  for (int s = 1; s <= 3; ++s) {
    NetworkConfig c;
    c.num_stacks = s;
    p[s - 1] = hg::enumerate_params(hg::Network(c, 0));
  }
  CHECK(p[0] == 3426448);
  CHECK(p[1] == 6570400);
  CHECK(p[2] == 9714352);
  CHECK(p[1] - p[0] == p[2] - p[1]);
}

TEST_CASE("network: each resconcat merge adds 2C*C + C params") {
  for (int stacks : {1, 2}) {
    NetworkConfig add = toy();
    add.num_stacks = stacks;
    NetworkConfig rc = add;
    rc.skip_mode = SkipMode::kResConcat;
    NetworkConfig sm = add;
    sm.stack_merge = SkipMode::kResConcat;
    const std::int64_t c = add.channels_main;
    const std::int64_t per_merge = 2 * c * c + c;
    const auto base = hg::enumerate_params(hg::Network(add, 0));
    CHECK(hg::enumerate_params(hg::Network(rc, 0)) - base ==
          per_merge * add.hourglass_depth * stacks);
    CHECK(hg::enumerate_params(hg::Network(sm, 0)) - base == per_merge * (stacks - 1));
    const Tensor x = Tensor::zeros({1, 3, 64, 64});
    hg::Network a(add, 0), b(rc, 0);
    CHECK(a.forward(x, {false}).heatmaps.back().shape() ==
          b.forward(x, {false}).heatmaps.back().shape());
  }
}

// Eval mode: with batch statistics a conv bias feeding batch-norm is
// cancelled by the mean subtraction and provably receives no gradient.
TEST_CASE("network: every parameter receives gradient from the stacked losses") {
  for (const char* preset : {"presets/toy-2hg.json", "presets/toy-2hg-resconcat-narrowres.json"}) {
    hg::Network net(hg::load_network_config(hgtest::source_path(preset)), 5);
    const auto params = net.parameters();
    for (const auto& p : params) {
      Tensor t = p.tensor;
      t.set_requires_grad(true);
    }
    const Tensor x = hgtest::random_tensor({2, 3, 64, 64}, DType::kF32, 8, 0.0, 1.0);
    const Tensor target = hgtest::random_tensor({2, 16, 16, 16}, DType::kF32, 9, 0.0, 1.0);
    hgtest::backprop([&] {
      return hg::total_loss(net.forward(x, {false}), target, hg::LossConfig{}).total;
    });
    for (const auto& p : params) {
      double norm = 0;
      for (double g : p.tensor.grad_vector()) norm += g * g;
      CHECK_MESSAGE(norm > 0.0, preset, " ", p.name);
    }
  }
}

TEST_CASE("narrow_res: the neck path alone carries gradient into the first stack") {
  for (bool narrow : {false, true}) {
    NetworkConfig c = toy();
    c.narrow_res = narrow;
    hg::Network net(c, 6);
    for (const char* name : {"stack0/remap_feat/weight", "stack0/remap_pred/weight"}) {
      Tensor w = find(net, name);
      w.fill(0.0);
    }
    Tensor probe = find(net, "stack0/hg/level1/low1/conv1/weight");
    probe.set_requires_grad(true);
    const Tensor x = hgtest::random_tensor({1, 3, 64, 64}, DType::kF32, 10, 0.0, 1.0);
    const Tensor target = Tensor::zeros({1, 16, 16, 16});
    hgtest::backprop([&] { return hg::heatmap_mse(net.forward(x, {false}).heatmaps[1], target); });
    double norm = 0;
    for (double g : probe.grad_vector()) norm += std::abs(g);
    CHECK_MESSAGE((norm > 0.0) == narrow, "narrow_res=", narrow);
  }
}

TEST_CASE("narrow_res: ignored for a single stack") {
  NetworkConfig c = toy();
  c.num_stacks = 1;
  c.narrow_res = true;
  CHECK_NOTHROW(c.validate());
  hg::Network net(c, 1);
  CHECK(net.forward(Tensor::zeros({1, 3, 64, 64}), {false}).heatmaps.size() == 1);
}

TEST_CASE("parameter names are unique network-wide") {
  for (const char* preset : {"presets/best-model.json", "presets/multidilated-everywhere.json",
                             "presets/dice.json", "presets/toy-2hg-resconcat-narrowres.json"}) {
    hg::Network net(hg::load_network_config(hgtest::source_path(preset)), 0);
    std::set<std::string> names;
    for (const auto& p : net.parameters()) CHECK(names.insert(p.name).second);
    for (const auto& b : net.buffers()) CHECK(names.insert(b.name).second);
  }
}

TEST_CASE("gradients through a depth-2 hourglass match finite differences (64-bit)") {
  for (SkipMode mode : {SkipMode::kAdd, SkipMode::kResConcat}) {
    hg::GradcheckOptions opts;
    opts.seed = 7;
    const auto r = hg::gradcheck_hourglass(2, mode, opts);
    CHECK_MESSAGE(r.max_rel_error() < 1e-5, hg::skip_mode_name(mode));
    for (const auto& e : r.entries) CHECK(e.checked > 0);
  }
}

}  // TEST_SUITE
