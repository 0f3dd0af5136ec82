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

#ifndef HGNET_BLOCKS_HPP_
#define HGNET_BLOCKS_HPP_

// Bottleneck variants. Every block is stride 1, preserves (n, h, w), emits
// spec.out_channels channels and uses pre-activation ordering
// (batch-norm -> relu -> conv). Downsampling belongs to the hourglass.

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "hgnet/layers.hpp"

namespace hg {

enum class BlockKind {
  kResidual,
  kSeparableResidual,
  kGhost,
  kShuffle,
  kDiCE,
  kDilated,
  kMultiDilated,
};

std::string_view block_kind_name(BlockKind kind);
BlockKind parse_block_kind(std::string_view name);
const std::vector<BlockKind>& all_block_kinds();

struct BlockSpec {
  BlockKind kind = BlockKind::kResidual;
  int in_channels = 0;
  int out_channels = 0;
  // Bottleneck width; 0 means out_channels / 2.
  int mid_channels = 0;
  std::vector<int> dilations{1, 2, 3};  // kMultiDilated
  int groups = 4;                       // kShuffle
  int ghost_ratio = 2;                  // kGhost
  bool separable = false;               // kDilated

  int mid() const { return mid_channels > 0 ? mid_channels : out_channels / 2; }
  void validate() const;
};

class Block : public Module {
 public:
  Block(std::string prefix, BlockSpec spec)
      : Module(std::move(prefix)), spec_(std::move(spec)) {}

  const BlockSpec& spec() const { return spec_; }
  virtual Tensor forward(const Tensor& input, const ForwardContext& ctx) = 0;

 private:
  BlockSpec spec_;
};

std::unique_ptr<Block> make_block(const BlockSpec& spec, const std::string& name,
                                  Initializer& init);

std::unique_ptr<Block> build_residual(int in_ch, int out_ch, Initializer& init,
                                      const std::string& name = "residual");
std::unique_ptr<Block> build_separable_residual(
    int in_ch, int out_ch, Initializer& init,
    const std::string& name = "separable");
std::unique_ptr<Block> build_ghost(int in_ch, int out_ch, int ratio,
                                   Initializer& init,
                                   const std::string& name = "ghost");
std::unique_ptr<Block> build_shuffle(int in_ch, int out_ch, int groups,
                                     Initializer& init,
                                     const std::string& name = "shuffle");
// Channel preserving; in_ch != out_ch is a ConfigError here (make_block
// wraps a 1x1 projection instead).
std::unique_ptr<Block> build_dice(int in_ch, int out_ch, Initializer& init,
                                  const std::string& name = "dice");
std::unique_ptr<Block> build_dilated(int in_ch, int out_ch, bool separable,
                                     Initializer& init,
                                     const std::string& name = "dilated");
std::unique_ptr<Block> build_multidilated(
    int in_ch, int out_ch, Initializer& init,
    const std::string& name = "multidilated");

// Ghost module: a 1x1 conv emits out/ratio "intrinsic" channels, a 3x3
// depthwise conv derives the remaining out*(ratio-1)/ratio from them, and
// the two are concatenated. ratio == 1 leaves only the 1x1 conv.
class GhostModule : public Module {
 public:
  GhostModule(std::string prefix, int in_ch, int out_ch, int ratio,
              Initializer& init);

  Tensor forward(const Tensor& input);
  int primary_channels() const { return primary_channels_; }
  int cheap_channels() const { return cheap_channels_; }

 private:
  Conv2d* primary_ = nullptr;
  Conv2d* cheap_ = nullptr;
  int primary_channels_ = 0;
  int cheap_channels_ = 0;
};

// Entry width of the multi-dilated bottleneck: k * floor(out / (2k)) for k
// branches, split evenly.
int multidilated_entry_channels(int out_ch, int branches);

}  // namespace hg

#endif  // HGNET_BLOCKS_HPP_
