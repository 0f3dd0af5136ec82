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

#ifndef HGNET_NETWORK_HPP_
#define HGNET_NETWORK_HPP_

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hgnet/blocks.hpp"
#include "json.hpp"

namespace hg {

enum class SkipMode { kAdd, kResConcat };

std::string_view skip_mode_name(SkipMode mode);
SkipMode parse_skip_mode(std::string_view name);

// Stacked hourglass recipe. `block` describes the blocks inside the
// hourglasses, `outer_block` those of the preamble and the per-stack tail;
// only their kind and variant options are read, channels come from here.
//
// Every hourglass level runs at channels_main; channels_inner is the
// bottleneck width (BlockSpec::mid_channels) of every interior and tail
// block.
struct NetworkConfig {
  int num_stacks = 2;
  int hourglass_depth = 4;
  int channels_main = 256;
  int channels_inner = 128;
  BlockSpec block{};
  BlockSpec outer_block{};
  // Merge of the skip branch with the upsampled branch at every level.
  SkipMode skip_mode = SkipMode::kAdd;
  // Merge of a stack's input with its remapped features and predictions.
  SkipMode stack_merge = SkipMode::kAdd;
  bool narrow_res = false;
  int num_joints = 16;
  int input_resolution = 256;
  int stem_channels = 64;
  int preamble_channels = 128;

  void validate() const;
  BlockSpec interior_spec() const;
  BlockSpec outer_spec(int in_ch, int out_ch) const;
};

nlohmann::json to_json(const NetworkConfig& config);
// Unknown keys and wrong types are ConfigErrors naming the key.
NetworkConfig network_config_from_json(const nlohmann::json& j);
NetworkConfig load_network_config(const std::string& path);

struct NetworkOutput {
  std::vector<Tensor> heatmaps;  // one per stack, n x joints x R/4 x R/4
  std::vector<Tensor> necks;     // lowest-resolution map of each hourglass
  std::vector<Tensor> tails;     // features feeding each prediction head
};

// Add: skip + up. ResConcat: merge(concat(skip, up)), a 1x1 conv back to
// skip's channel count.
Tensor merge_skip(const Tensor& skip, const Tensor& up, SkipMode mode,
                  const Conv2d* merge);
Tensor narrow_res_connect(const Tensor& neck_prev, const Tensor& neck_cur);

// One hourglass level; owns the next lower level or, at depth 1, the core
// block.
class Hourglass : public Module {
 public:
  struct Result {
    Tensor output;
    Tensor neck;
  };

  Hourglass(std::string prefix, int depth, const NetworkConfig& config,
            Initializer& init);

  // `inject`, when given, is added to the neck before the core block runs.
  Result forward(const Tensor& input, const ForwardContext& ctx,
                 const Tensor* inject = nullptr);
  int depth() const { return depth_; }

 private:
  int depth_;
  SkipMode skip_mode_;
  Block* up_ = nullptr;
  Block* low1_ = nullptr;
  Block* core_ = nullptr;
  Hourglass* inner_ = nullptr;
  Block* low3_ = nullptr;
  Conv2d* merge_ = nullptr;
};

class Network : public Module {
 public:
  Network(NetworkConfig config, std::uint64_t seed, DType dtype = DType::kF32);

  const NetworkConfig& config() const { return config_; }
  DType dtype() const { return dtype_; }
  std::uint64_t seed() const { return seed_; }

  NetworkOutput forward(const Tensor& images, const ForwardContext& ctx);

 private:
  struct Stack {
    Hourglass* hourglass = nullptr;
    Block* tail_block = nullptr;
    Conv2d* tail_conv = nullptr;
    BatchNorm2d* tail_bn = nullptr;
    Conv2d* head = nullptr;
    Conv2d* remap_feat = nullptr;
    Conv2d* remap_pred = nullptr;
    Conv2d* merge = nullptr;
  };

  NetworkConfig config_;
  DType dtype_;
  std::uint64_t seed_;
  Conv2d* stem_ = nullptr;
  BatchNorm2d* stem_bn_ = nullptr;
  std::vector<Block*> preamble_;
  std::vector<Stack> stacks_;
};

}  // namespace hg

#endif  // HGNET_NETWORK_HPP_
