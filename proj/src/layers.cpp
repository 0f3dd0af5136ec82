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

#include "hgnet/layers.hpp"

#include <cmath>

namespace hg {
namespace {

thread_local LayerProfiler* g_profiler = nullptr;

}  // namespace

Tensor Initializer::kaiming(Shape shape, int fan_in) {
  Tensor t = Tensor::zeros(shape, dtype_);
  std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
  for (std::size_t i = 0; i < t.numel(); ++i) t.set(i, dist(rng_));
  return t;
}

Tensor Initializer::constant(Shape shape, double value) {
  return Tensor::full(shape, value, dtype_);
}

LayerProfiler::LayerProfiler(int images) : images_(images), previous_(g_profiler) {
  g_profiler = this;
}

LayerProfiler::~LayerProfiler() { g_profiler = previous_; }

void LayerProfiler::record(LayerRecord rec) {
  if (g_profiler == nullptr) return;
  rec.madds /= g_profiler->images_;
  g_profiler->records_.push_back(std::move(rec));
}

// ------------------------------------------------------------------ Conv2d

Conv2d::Conv2d(std::string name, const ConvSpec& spec, Initializer& init)
    : name_(std::move(name)), spec_(spec) {
  spec_.validate();
  const Shape ws = spec_.weight_shape();
  weight_ = init.kaiming(ws, ws.c * ws.h * ws.w);
  weight_.set_requires_grad(true);
  if (spec_.has_bias) {
    bias_ = init.constant({1, spec_.out_channels, 1, 1}, 0.0);
    bias_.set_requires_grad(true);
  }
}

std::int64_t Conv2d::param_count() const {
  return static_cast<std::int64_t>(weight_.numel()) +
         (bias_.defined() ? static_cast<std::int64_t>(bias_.numel()) : 0);
}

Tensor Conv2d::operator()(const Tensor& input) const {
  Tensor out = conv2d(input, weight_, bias_, spec_);
  const Shape& o = out.shape();
  const std::int64_t per_output = static_cast<std::int64_t>(spec_.in_channels /
                                                            spec_.groups) *
                                  spec_.kernel_h * spec_.kernel_w;
  LayerProfiler::record({name_, "conv", param_count(),
                         static_cast<std::int64_t>(o.numel()) * per_output, o});
  return out;
}

void Conv2d::collect(std::vector<NamedTensor>& params) const {
  params.push_back({name_ + "/weight", weight_});
  if (bias_.defined()) params.push_back({name_ + "/bias", bias_});
}

// ------------------------------------------------------------- BatchNorm2d

BatchNorm2d::BatchNorm2d(std::string name, int channels, Initializer& init)
    : name_(std::move(name)) {
  const Shape s{1, channels, 1, 1};
  gamma_ = init.constant(s, 1.0);
  beta_ = init.constant(s, 0.0);
  gamma_.set_requires_grad(true);
  beta_.set_requires_grad(true);
  state_.running_mean = init.constant(s, 0.0);
  state_.running_var = init.constant(s, 1.0);
}

Tensor BatchNorm2d::operator()(const Tensor& input, const ForwardContext& ctx) {
  Tensor out = batchnorm2d(input, gamma_, beta_, state_, ctx.training);
  LayerProfiler::record({name_, "batchnorm",
                         static_cast<std::int64_t>(gamma_.numel() + beta_.numel()),
                         0, out.shape()});
  return out;
}

void BatchNorm2d::collect(std::vector<NamedTensor>& params) const {
  params.push_back({name_ + "/gamma", gamma_});
  params.push_back({name_ + "/beta", beta_});
}

void BatchNorm2d::collect_buffers(std::vector<NamedTensor>& buffers) const {
  buffers.push_back({name_ + "/running_mean", state_.running_mean});
  buffers.push_back({name_ + "/running_var", state_.running_var});
}

// ------------------------------------------------------------------ Module

std::string Module::child_name(const std::string& name) const {
  return prefix_.empty() ? name : prefix_ + "/" + name;
}

Conv2d& Module::add_conv(const std::string& name, const ConvSpec& spec,
                         Initializer& init) {
  convs_.emplace_back(child_name(name), spec, init);
  items_.push_back({Item::kConv, convs_.size() - 1});
  return convs_.back();
}

BatchNorm2d& Module::add_bn(const std::string& name, int channels,
                            Initializer& init) {
  bns_.emplace_back(child_name(name), channels, init);
  items_.push_back({Item::kBn, bns_.size() - 1});
  return bns_.back();
}

void Module::collect(std::vector<NamedTensor>* params,
                     std::vector<NamedTensor>* buffers) const {
  for (const Item& item : items_) {
    switch (item.kind) {
      case Item::kConv:
        if (params) convs_[item.index].collect(*params);
        break;
      case Item::kBn:
        if (params) bns_[item.index].collect(*params);
        if (buffers) bns_[item.index].collect_buffers(*buffers);
        break;
      case Item::kChild:
        children_[item.index]->collect(params, buffers);
        break;
    }
  }
}

std::vector<NamedTensor> Module::parameters() const {
  std::vector<NamedTensor> out;
  collect(&out, nullptr);
  return out;
}

std::vector<NamedTensor> Module::buffers() const {
  std::vector<NamedTensor> out;
  collect(nullptr, &out);
  return out;
}

std::vector<Conv2d*> Module::convs() {
  std::vector<Conv2d*> out;
  for (const Item& item : items_) {
    if (item.kind == Item::kConv) out.push_back(&convs_[item.index]);
    if (item.kind == Item::kChild) {
      auto sub = children_[item.index]->convs();
      out.insert(out.end(), sub.begin(), sub.end());
    }
  }
  return out;
}

Tensor bn_relu(BatchNorm2d& bn, const Tensor& x, const ForwardContext& ctx) {
  return relu(bn(x, ctx));
}

}  // namespace hg
