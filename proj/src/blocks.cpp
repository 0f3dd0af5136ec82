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

#include "hgnet/blocks.hpp"

#include <algorithm>
#include <array>

#include "hgnet/error.hpp"

namespace hg {
namespace {

constexpr std::array<std::pair<BlockKind, std::string_view>, 7> kKindNames{{
    {BlockKind::kResidual, "residual"},
    {BlockKind::kSeparableResidual, "separable"},
    {BlockKind::kGhost, "ghost"},
    {BlockKind::kShuffle, "shuffle"},
    {BlockKind::kDiCE, "dice"},
    {BlockKind::kDilated, "dilated"},
    {BlockKind::kMultiDilated, "multidilated"},
}};

std::string where(const BlockSpec& s) {
  return std::string(block_kind_name(s.kind)) + " block (in " +
         std::to_string(s.in_channels) + ", out " +
         std::to_string(s.out_channels) + ")";
}

// Shared shortcut handling: identity when channels match, else a 1x1
// projection of the raw input.
class ShortcutBlock : public Block {
 public:
  ShortcutBlock(std::string prefix, BlockSpec spec, Initializer& init)
      : Block(std::move(prefix), std::move(spec)) {
    if (this->spec().in_channels != this->spec().out_channels) {
      skip_ = &add_conv("skip", ConvSpec::pointwise(this->spec().in_channels,
                                                    this->spec().out_channels),
                        init);
    }
  }

 protected:
  Tensor shortcut(const Tensor& x) const { return skip_ ? (*skip_)(x) : x; }

 private:
  Conv2d* skip_ = nullptr;
};

// 1x1 reduce -> spatial stage -> 1x1 expand, shortcut added. The spatial
// stage differs per variant.
class BottleneckBlock : public ShortcutBlock {
 public:
  BottleneckBlock(std::string prefix, BlockSpec spec, Initializer& init)
      : ShortcutBlock(std::move(prefix), std::move(spec), init) {
    const BlockSpec& s = this->spec();
    const int mid = s.mid();
    bn1_ = &add_bn("bn1", s.in_channels, init);
    conv1_ = &add_conv("conv1", ConvSpec::pointwise(s.in_channels, mid), init);
    bn2_ = &add_bn("bn2", mid, init);
    switch (s.kind) {
      case BlockKind::kResidual:
        conv2_ = &add_conv("conv2", ConvSpec::same(mid, mid, 3), init);
        break;
      case BlockKind::kSeparableResidual:
        conv2_ = &add_conv("conv2_dw", ConvSpec::same(mid, mid, 3, 1, mid), init);
        conv2_pw_ = &add_conv("conv2_pw", ConvSpec::pointwise(mid, mid), init);
        break;
      case BlockKind::kGhost:
        ghost_ = &add_child(std::make_unique<GhostModule>(
            child_name("ghost"), mid, mid, s.ghost_ratio, init));
        break;
      default:
        throw ConfigError("bottleneck cannot host " + where(s));
    }
    bn3_ = &add_bn("bn3", mid, init);
    conv3_ = &add_conv("conv3", ConvSpec::pointwise(mid, s.out_channels), init);
  }

  Tensor forward(const Tensor& x, const ForwardContext& ctx) override {
    Tensor y = (*conv1_)(bn_relu(*bn1_, x, ctx));
    y = bn_relu(*bn2_, y, ctx);
    if (ghost_ != nullptr) {
      y = ghost_->forward(y);
    } else {
      y = (*conv2_)(y);
      if (conv2_pw_ != nullptr) y = (*conv2_pw_)(y);
    }
    y = (*conv3_)(bn_relu(*bn3_, y, ctx));
    return add(y, shortcut(x));
  }

 private:
  BatchNorm2d* bn1_ = nullptr;
  BatchNorm2d* bn2_ = nullptr;
  BatchNorm2d* bn3_ = nullptr;
  Conv2d* conv1_ = nullptr;
  Conv2d* conv2_ = nullptr;
  Conv2d* conv2_pw_ = nullptr;
  Conv2d* conv3_ = nullptr;
  GhostModule* ghost_ = nullptr;
};

// Pointwise group conv -> channel shuffle -> depthwise 3x3 -> pointwise
// group conv, shortcut added.
class ShuffleBlock : public ShortcutBlock {
 public:
  ShuffleBlock(std::string prefix, BlockSpec spec, Initializer& init)
      : ShortcutBlock(std::move(prefix), std::move(spec), init) {
    const BlockSpec& s = this->spec();
    const int mid = s.mid();
    bn1_ = &add_bn("bn1", s.in_channels, init);
    gconv1_ = &add_conv("gconv1", ConvSpec::pointwise(s.in_channels, mid, s.groups), init);
    bn2_ = &add_bn("bn2", mid, init);
    dw_ = &add_conv("dw", ConvSpec::same(mid, mid, 3, 1, mid), init);
    bn3_ = &add_bn("bn3", mid, init);
    gconv3_ = &add_conv("gconv3", ConvSpec::pointwise(mid, s.out_channels, s.groups), init);
  }

  Tensor forward(const Tensor& x, const ForwardContext& ctx) override {
    Tensor y = (*gconv1_)(bn_relu(*bn1_, x, ctx));
    y = channel_shuffle(y, spec().groups);
    y = (*dw_)(bn_relu(*bn2_, y, ctx));
    y = (*gconv3_)(bn_relu(*bn3_, y, ctx));
    return add(y, shortcut(x));
  }

 private:
  BatchNorm2d* bn1_ = nullptr;
  BatchNorm2d* bn2_ = nullptr;
  BatchNorm2d* bn3_ = nullptr;
  Conv2d* gconv1_ = nullptr;
  Conv2d* dw_ = nullptr;
  Conv2d* gconv3_ = nullptr;
};

// Dimension-wise convolutions along depth (per-channel 3x3 over h,w),
// width (3x3 over the c,h plane of every w-slice) and height (3x3 over the
// c,w plane of every h-slice). The three responses of each channel are
// interleaved and fused by a per-channel group conv; a channel gate
// sigmoid(W * avgpool(fused)) then scales both the fused features (before
// the final 1x1) and the shortcut:
//
//   out = final(fused * gate) + input * gate
//
// so with all conv parameters at zero the unit returns input * 0.5.
class DiceBlock : public Block {
 public:
  DiceBlock(std::string prefix, BlockSpec spec, Initializer& init)
      : Block(std::move(prefix), std::move(spec)) {
    const BlockSpec& s = this->spec();
    const int c = s.out_channels;
    if (s.in_channels != c) {
      project_ = &add_conv("project", ConvSpec::pointwise(s.in_channels, c), init);
    }
    bn_ = &add_bn("bn", c, init);
    depth_ = &add_conv("depthwise", ConvSpec::same(c, c, 3, 1, c), init);
    width_ = &add_conv("widthwise", ConvSpec::same(1, 1, 3), init);
    height_ = &add_conv("heightwise", ConvSpec::same(1, 1, 3), init);
    fuse_ = &add_conv("fuse", ConvSpec::pointwise(3 * c, c, c), init);
    gate_ = &add_conv("gate", ConvSpec::pointwise(c, c), init);
    final_ = &add_conv("final", ConvSpec::pointwise(c, c), init);
  }

  Tensor forward(const Tensor& input, const ForwardContext& ctx) override {
    const Tensor x = project_ ? (*project_)(input) : input;
    const Tensor a = bn_relu(*bn_, x, ctx);
    const std::array<Tensor, 3> dims{(*depth_)(a), slice_conv(a, *width_, 3),
                                     slice_conv(a, *height_, 2)};
    // [D | W | H] -> D0 W0 H0 D1 W1 H1 ...
    const Tensor grouped = channel_shuffle(concat_channels(dims), 3);
    const Tensor fused = (*fuse_)(grouped);
    const Tensor gate = sigmoid((*gate_)(global_avg_pool(fused)));
    return add((*final_)(mul_broadcast(fused, gate)), mul_broadcast(x, gate));
  }

 private:
  // Runs a 1->1 3x3 conv over the plane spanned by the channel axis and the
  // spatial axis that is not `slice_axis`, independently for every slice.
  static Tensor slice_conv(const Tensor& a, const Conv2d& conv, int slice_axis) {
    const Shape s = a.shape();
    if (slice_axis == 3) {  // w-slices: (n, w, c, h)
      Tensor t = permute(a, {0, 3, 1, 2});
      t = conv(reshape(t, {s.n * s.w, 1, s.c, s.h}));
      return permute(reshape(t, {s.n, s.w, s.c, s.h}), {0, 2, 3, 1});
    }
    // h-slices: (n, h, c, w)
    Tensor t = permute(a, {0, 2, 1, 3});
    t = conv(reshape(t, {s.n * s.h, 1, s.c, s.w}));
    return permute(reshape(t, {s.n, s.h, s.c, s.w}), {0, 2, 1, 3});
  }

  Conv2d* project_ = nullptr;
  BatchNorm2d* bn_ = nullptr;
  Conv2d* depth_ = nullptr;
  Conv2d* width_ = nullptr;
  Conv2d* height_ = nullptr;
  Conv2d* fuse_ = nullptr;
  Conv2d* gate_ = nullptr;
  Conv2d* final_ = nullptr;
};

// Two 3x3 convs at dilation 2 (padding 2), in -> mid -> out, shortcut
// added. Separable replaces each with depthwise + pointwise.
class DilatedBlock : public ShortcutBlock {
 public:
  DilatedBlock(std::string prefix, BlockSpec spec, Initializer& init)
      : ShortcutBlock(std::move(prefix), std::move(spec), init) {
    const BlockSpec& s = this->spec();
    bn1_ = &add_bn("bn1", s.in_channels, init);
    add_stage("conv1", s.in_channels, s.mid(), s.separable, init, conv1_);
    bn2_ = &add_bn("bn2", s.mid(), init);
    add_stage("conv2", s.mid(), s.out_channels, s.separable, init, conv2_);
  }

  Tensor forward(const Tensor& x, const ForwardContext& ctx) override {
    Tensor y = run_stage(conv1_, bn_relu(*bn1_, x, ctx));
    y = run_stage(conv2_, bn_relu(*bn2_, y, ctx));
    return add(y, shortcut(x));
  }

 private:
  using Stage = std::array<Conv2d*, 2>;

  void add_stage(const std::string& name, int in, int out, bool separable,
                 Initializer& init, Stage& stage) {
    if (separable) {
      stage[0] = &add_conv(name + "_dw", ConvSpec::same(in, in, 3, 2, in), init);
      stage[1] = &add_conv(name + "_pw", ConvSpec::pointwise(in, out), init);
    } else {
      stage[0] = &add_conv(name, ConvSpec::same(in, out, 3, 2), init);
    }
  }

  static Tensor run_stage(const Stage& stage, const Tensor& x) {
    Tensor y = (*stage[0])(x);
    return stage[1] ? (*stage[1])(y) : y;
  }

  BatchNorm2d* bn1_ = nullptr;
  BatchNorm2d* bn2_ = nullptr;
  Stage conv1_{};
  Stage conv2_{};
};

// Entry 1x1 -> parallel separable 3x3 branches at the configured dilations,
// each on an equal channel split -> concat -> exit 1x1, shortcut added.
class MultiDilatedBlock : public ShortcutBlock {
 public:
  MultiDilatedBlock(std::string prefix, BlockSpec spec, Initializer& init)
      : ShortcutBlock(std::move(prefix), std::move(spec), init) {
    const BlockSpec& s = this->spec();
    const int k = static_cast<int>(s.dilations.size());
    entry_channels_ = multidilated_entry_channels(s.out_channels, k);
    branch_channels_ = entry_channels_ / k;
    bn1_ = &add_bn("bn1", s.in_channels, init);
    entry_ = &add_conv("entry", ConvSpec::pointwise(s.in_channels, entry_channels_), init);
    bn2_ = &add_bn("bn2", entry_channels_, init);
    for (int b = 0; b < k; ++b) {
      const int d = s.dilations[b];
      const int bc = branch_channels_;
      const std::string name = "branch" + std::to_string(b) + "_d" + std::to_string(d);
      branches_.push_back({&add_conv(name + "_dw", ConvSpec::same(bc, bc, 3, d, bc), init),
                           &add_conv(name + "_pw", ConvSpec::pointwise(bc, bc), init)});
    }
    bn3_ = &add_bn("bn3", entry_channels_, init);
    exit_ = &add_conv("exit", ConvSpec::pointwise(entry_channels_, s.out_channels), init);
  }

  int entry_channels() const { return entry_channels_; }
  int branch_channels() const { return branch_channels_; }

  Tensor forward(const Tensor& x, const ForwardContext& ctx) override {
    const Tensor e = bn_relu(*bn2_, (*entry_)(bn_relu(*bn1_, x, ctx)), ctx);
    std::vector<Tensor> outs;
    outs.reserve(branches_.size());
    for (std::size_t b = 0; b < branches_.size(); ++b) {
      Tensor part = slice_channels(e, static_cast<int>(b) * branch_channels_,
                                   branch_channels_);
      outs.push_back((*branches_[b][1])((*branches_[b][0])(part)));
    }
    Tensor y = (*exit_)(bn_relu(*bn3_, concat_channels(outs), ctx));
    return add(y, shortcut(x));
  }

 private:
  int entry_channels_ = 0;
  int branch_channels_ = 0;
  BatchNorm2d* bn1_ = nullptr;
  BatchNorm2d* bn2_ = nullptr;
  BatchNorm2d* bn3_ = nullptr;
  Conv2d* entry_ = nullptr;
  Conv2d* exit_ = nullptr;
  std::vector<std::array<Conv2d*, 2>> branches_;
};

}  // namespace

std::string_view block_kind_name(BlockKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

BlockKind parse_block_kind(std::string_view name) {
  for (const auto& [k, n] : kKindNames) {
    if (n == name) return k;
  }
  throw ConfigError("unknown block kind '" + std::string(name) + "'");
}

const std::vector<BlockKind>& all_block_kinds() {
  static const std::vector<BlockKind> kinds = [] {
    std::vector<BlockKind> v;
    for (const auto& [k, name] : kKindNames) v.push_back(k);
    return v;
  }();
  return kinds;
}

int multidilated_entry_channels(int out_ch, int branches) {
  return branches * (out_ch / (2 * branches));
}

void BlockSpec::validate() const {
  if (in_channels < 1 || out_channels < 1) {
    throw ConfigError(where(*this) + ": channel counts must be positive");
  }
  switch (kind) {
    case BlockKind::kResidual:
    case BlockKind::kSeparableResidual:
    case BlockKind::kGhost:
    case BlockKind::kShuffle:
    case BlockKind::kDilated:
      if (mid_channels == 0 && (out_channels < 2 || out_channels % 2 != 0)) {
        throw ConfigError(where(*this) + ": out_channels must be even and >= 2");
      }
      if (mid() < 1) throw ConfigError(where(*this) + ": empty bottleneck");
      break;
    default:
      break;
  }
  if (kind == BlockKind::kGhost) {
    if (ghost_ratio < 1 || out_channels % ghost_ratio != 0 ||
        mid() % ghost_ratio != 0) {
      throw ConfigError(where(*this) + ": out_channels and bottleneck width " +
                        std::to_string(mid()) + " must be divisible by ghost_ratio " +
                        std::to_string(ghost_ratio));
    }
  }
  if (kind == BlockKind::kShuffle) {
    if (groups < 1 || in_channels % groups != 0 || mid() % groups != 0 ||
        out_channels % groups != 0) {
      throw ConfigError(where(*this) + ": channels (in, mid " +
                        std::to_string(mid()) + ", out) must be divisible by groups " +
                        std::to_string(groups));
    }
  }
  if (kind == BlockKind::kMultiDilated) {
    if (dilations.empty() ||
        std::any_of(dilations.begin(), dilations.end(), [](int d) { return d < 1; })) {
      throw ConfigError(where(*this) + ": dilations must be nonempty and positive");
    }
    const int k = static_cast<int>(dilations.size());
    if (out_channels < 2 * k) {
      throw ConfigError(where(*this) + ": out_channels must be >= " +
                        std::to_string(2 * k) + " for " + std::to_string(k) +
                        " branches");
    }
  }
}

GhostModule::GhostModule(std::string prefix, int in_ch, int out_ch, int ratio,
                         Initializer& init)
    : Module(std::move(prefix)) {
  if (ratio < 1 || out_ch % ratio != 0) {
    throw ConfigError("ghost module: out_channels " + std::to_string(out_ch) +
                      " not divisible by ratio " + std::to_string(ratio));
  }
  primary_channels_ = out_ch / ratio;
  cheap_channels_ = out_ch - primary_channels_;
  primary_ = &add_conv("primary", ConvSpec::pointwise(in_ch, primary_channels_), init);
  if (cheap_channels_ > 0) {
    cheap_ = &add_conv("cheap",
                       ConvSpec::same(primary_channels_, cheap_channels_, 3, 1,
                                      primary_channels_),
                       init);
  }
}

Tensor GhostModule::forward(const Tensor& input) {
  Tensor intrinsic = (*primary_)(input);
  if (cheap_ == nullptr) return intrinsic;
  const std::array<Tensor, 2> parts{intrinsic, (*cheap_)(intrinsic)};
  return concat_channels(parts);
}

std::unique_ptr<Block> make_block(const BlockSpec& spec, const std::string& name,
                                  Initializer& init) {
  spec.validate();
  switch (spec.kind) {
    case BlockKind::kResidual:
    case BlockKind::kSeparableResidual:
    case BlockKind::kGhost:
      return std::make_unique<BottleneckBlock>(name, spec, init);
    case BlockKind::kShuffle:
      return std::make_unique<ShuffleBlock>(name, spec, init);
    case BlockKind::kDiCE:
      return std::make_unique<DiceBlock>(name, spec, init);
    case BlockKind::kDilated:
      return std::make_unique<DilatedBlock>(name, spec, init);
    case BlockKind::kMultiDilated:
      return std::make_unique<MultiDilatedBlock>(name, spec, init);
  }
  throw ConfigError("unhandled block kind");
}

namespace {

BlockSpec spec_of(BlockKind kind, int in_ch, int out_ch) {
  BlockSpec s;
  s.kind = kind;
  s.in_channels = in_ch;
  s.out_channels = out_ch;
  return s;
}

}  // namespace

std::unique_ptr<Block> build_residual(int in_ch, int out_ch, Initializer& init,
                                      const std::string& name) {
  return make_block(spec_of(BlockKind::kResidual, in_ch, out_ch), name, init);
}

std::unique_ptr<Block> build_separable_residual(int in_ch, int out_ch,
                                                Initializer& init,
                                                const std::string& name) {
  return make_block(spec_of(BlockKind::kSeparableResidual, in_ch, out_ch), name,
                    init);
}

std::unique_ptr<Block> build_ghost(int in_ch, int out_ch, int ratio,
                                   Initializer& init, const std::string& name) {
  BlockSpec s = spec_of(BlockKind::kGhost, in_ch, out_ch);
  s.ghost_ratio = ratio;
  return make_block(s, name, init);
}

std::unique_ptr<Block> build_shuffle(int in_ch, int out_ch, int groups,
                                     Initializer& init, const std::string& name) {
  BlockSpec s = spec_of(BlockKind::kShuffle, in_ch, out_ch);
  s.groups = groups;
  return make_block(s, name, init);
}

std::unique_ptr<Block> build_dice(int in_ch, int out_ch, Initializer& init,
                                  const std::string& name) {
  if (in_ch != out_ch) {
    throw ConfigError("dice unit is channel preserving: in " +
                      std::to_string(in_ch) + " != out " + std::to_string(out_ch));
  }
  return make_block(spec_of(BlockKind::kDiCE, in_ch, out_ch), name, init);
}

std::unique_ptr<Block> build_dilated(int in_ch, int out_ch, bool separable,
                                     Initializer& init, const std::string& name) {
  BlockSpec s = spec_of(BlockKind::kDilated, in_ch, out_ch);
  s.separable = separable;
  return make_block(s, name, init);
}

std::unique_ptr<Block> build_multidilated(int in_ch, int out_ch,
                                          Initializer& init,
                                          const std::string& name) {
  return make_block(spec_of(BlockKind::kMultiDilated, in_ch, out_ch), name, init);
}

}  // namespace hg
