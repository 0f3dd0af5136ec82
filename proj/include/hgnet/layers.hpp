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

#ifndef HGNET_LAYERS_HPP_
#define HGNET_LAYERS_HPP_

#include <cstdint>
#include <deque>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "hgnet/ops.hpp"
#include "hgnet/tensor.hpp"

namespace hg {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

struct ForwardContext {
  bool training = true;
};

// Seeded parameter factory. Conv weights are fan-in scaled normals
// (std = sqrt(2 / fan_in)); biases and beta are zero, gamma is one.
class Initializer {
 public:
  Initializer(std::uint64_t seed, DType dtype) : rng_(seed), dtype_(dtype) {}

  DType dtype() const { return dtype_; }
  Tensor kaiming(Shape shape, int fan_in);
  Tensor constant(Shape shape, double value);

 private:
  std::mt19937_64 rng_;
  DType dtype_;
};

// One profiled layer execution (see LayerProfiler).
struct LayerRecord {
  std::string name;
  std::string kind;  // "conv" or "batchnorm"
  std::int64_t params = 0;
  std::int64_t madds = 0;  // per image
  Shape output;
};

// While alive, Conv2d and BatchNorm2d executions on this thread append a
// LayerRecord. MAdds count one per multiply-accumulate and are divided by
// `images` so they describe a single input image.
class LayerProfiler {
 public:
  explicit LayerProfiler(int images = 1);
  ~LayerProfiler();
  LayerProfiler(const LayerProfiler&) = delete;
  LayerProfiler& operator=(const LayerProfiler&) = delete;

  const std::vector<LayerRecord>& records() const { return records_; }
  static void record(LayerRecord rec);

 private:
  std::vector<LayerRecord> records_;
  int images_;
  LayerProfiler* previous_;
};

class Conv2d {
 public:
  Conv2d(std::string name, const ConvSpec& spec, Initializer& init);

  Tensor operator()(const Tensor& input) const;

  const std::string& name() const { return name_; }
  const ConvSpec& spec() const { return spec_; }
  Tensor& weight() { return weight_; }
  Tensor& bias() { return bias_; }
  const Tensor& weight() const { return weight_; }
  const Tensor& bias() const { return bias_; }
  std::int64_t param_count() const;

  void collect(std::vector<NamedTensor>& params) const;

 private:
  std::string name_;
  ConvSpec spec_;
  Tensor weight_;
  Tensor bias_;
};

class BatchNorm2d {
 public:
  BatchNorm2d(std::string name, int channels, Initializer& init);

  Tensor operator()(const Tensor& input, const ForwardContext& ctx);

  const std::string& name() const { return name_; }
  Tensor& gamma() { return gamma_; }
  Tensor& beta() { return beta_; }
  BatchNormState& state() { return state_; }

  void collect(std::vector<NamedTensor>& params) const;
  void collect_buffers(std::vector<NamedTensor>& buffers) const;

 private:
  std::string name_;
  Tensor gamma_;
  Tensor beta_;
  BatchNormState state_;
};

// Owner of named layers and child modules. Names are hierarchical
// ("stack0/hg/l1/up/conv1") and unique within a network.
class Module {
 public:
  explicit Module(std::string prefix) : prefix_(std::move(prefix)) {}
  virtual ~Module() = default;
  Module(const Module&) = delete;
  Module& operator=(const Module&) = delete;

  const std::string& prefix() const { return prefix_; }

  // Learnable tensors in registration order.
  std::vector<NamedTensor> parameters() const;
  // Non-learnable state (batch-norm running statistics).
  std::vector<NamedTensor> buffers() const;

  // Every Conv2d owned by this module or its descendants.
  std::vector<Conv2d*> convs();

 protected:
  Conv2d& add_conv(const std::string& name, const ConvSpec& spec,
                   Initializer& init);
  BatchNorm2d& add_bn(const std::string& name, int channels, Initializer& init);
  template <typename M>
  M& add_child(std::unique_ptr<M> child) {
    M& ref = *child;
    children_.push_back(std::move(child));
    items_.push_back({Item::kChild, children_.size() - 1});
    return ref;
  }
  std::string child_name(const std::string& name) const;

 private:
  struct Item {
    enum Kind { kConv, kBn, kChild } kind;
    std::size_t index;
  };

  void collect(std::vector<NamedTensor>* params,
               std::vector<NamedTensor>* buffers) const;

  std::string prefix_;
  std::deque<Conv2d> convs_;
  std::deque<BatchNorm2d> bns_;
  std::vector<std::unique_ptr<Module>> children_;
  std::vector<Item> items_;
};

// relu(bn(x)), the pre-activation used throughout the blocks.
Tensor bn_relu(BatchNorm2d& bn, const Tensor& x, const ForwardContext& ctx);

}  // namespace hg

#endif  // HGNET_LAYERS_HPP_
