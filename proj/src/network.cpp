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

#include "hgnet/network.hpp"

#include <fstream>

#include "hgnet/error.hpp"

namespace hg {

using nlohmann::json;

std::string_view skip_mode_name(SkipMode mode) {
  return mode == SkipMode::kAdd ? "add" : "resconcat";
}

SkipMode parse_skip_mode(std::string_view name) {
  if (name == "add") return SkipMode::kAdd;
  if (name == "resconcat") return SkipMode::kResConcat;
  throw ConfigError("unknown skip mode '" + std::string(name) +
                    "' (expected add or resconcat)");
}

// ----------------------------------------------------------- NetworkConfig

void NetworkConfig::validate() const {
  auto require = [](bool ok, const std::string& field, const std::string& what) {
    if (!ok) throw ConfigError("network config: " + field + " " + what);
  };
  require(num_stacks >= 1, "num_stacks", "must be >= 1");
  require(hourglass_depth >= 1 && hourglass_depth <= 8, "hourglass_depth",
          "must be in [1, 8]");
  require(channels_main >= 1, "channels_main", "must be positive");
  require(channels_inner >= 1, "channels_inner", "must be positive");
  require(channels_inner < channels_main, "channels_inner",
          "must be smaller than channels_main");
  require(num_joints >= 1, "num_joints", "must be positive");
  require(stem_channels >= 1, "stem_channels", "must be positive");
  require(preamble_channels >= 1, "preamble_channels", "must be positive");
  const int divisor = 4 << hourglass_depth;
  require(input_resolution >= divisor && input_resolution % divisor == 0,
          "input_resolution",
          "must be a positive multiple of " + std::to_string(divisor) +
              " (4 * 2^hourglass_depth), got " + std::to_string(input_resolution));
  interior_spec().validate();
  outer_spec(stem_channels, preamble_channels).validate();
  outer_spec(preamble_channels, preamble_channels).validate();
  outer_spec(preamble_channels, channels_main).validate();
  BlockSpec tail = outer_spec(channels_main, channels_main);
  tail.mid_channels = channels_inner;
  tail.validate();
}

BlockSpec NetworkConfig::interior_spec() const {
  BlockSpec s = block;
  s.in_channels = channels_main;
  s.out_channels = channels_main;
  s.mid_channels = channels_inner;
  return s;
}

BlockSpec NetworkConfig::outer_spec(int in_ch, int out_ch) const {
  BlockSpec s = outer_block;
  s.in_channels = in_ch;
  s.out_channels = out_ch;
  s.mid_channels = 0;
  return s;
}

namespace {

json block_to_json(const BlockSpec& s) {
  json j{{"kind", block_kind_name(s.kind)}};
  switch (s.kind) {
    case BlockKind::kMultiDilated: j["dilations"] = s.dilations; break;
    case BlockKind::kShuffle: j["groups"] = s.groups; break;
    case BlockKind::kGhost: j["ghost_ratio"] = s.ghost_ratio; break;
    case BlockKind::kDilated: j["separable"] = s.separable; break;
    default: break;
  }
  return j;
}

template <typename T>
T field(const json& j, const std::string& key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + ": field '" + key + "' has the wrong type");
  }
}

BlockSpec block_from_json(const json& j, const std::string& where) {
  BlockSpec s;
  if (j.is_string()) {
    s.kind = parse_block_kind(j.get<std::string>());
    return s;
  }
  if (!j.is_object()) throw ConfigError(where + " must be a string or an object");
  for (const auto& [key, value] : j.items()) {
    if (key == "kind") {
      s.kind = parse_block_kind(field<std::string>(j, key, where));
    } else if (key == "dilations") {
      s.dilations = field<std::vector<int>>(j, key, where);
    } else if (key == "groups") {
      s.groups = field<int>(j, key, where);
    } else if (key == "ghost_ratio") {
      s.ghost_ratio = field<int>(j, key, where);
    } else if (key == "separable") {
      s.separable = field<bool>(j, key, where);
    } else {
      throw ConfigError(where + ": unknown field '" + key + "'");
    }
  }
  if (!j.contains("kind")) throw ConfigError(where + ": missing field 'kind'");
  return s;
}

}  // namespace

json to_json(const NetworkConfig& c) {
  return json{
      {"num_stacks", c.num_stacks},
      {"hourglass_depth", c.hourglass_depth},
      {"channels_main", c.channels_main},
      {"channels_inner", c.channels_inner},
      {"block", block_to_json(c.block)},
      {"outer_block", block_to_json(c.outer_block)},
      {"skip_mode", skip_mode_name(c.skip_mode)},
      {"stack_merge", skip_mode_name(c.stack_merge)},
      {"narrow_res", c.narrow_res},
      {"num_joints", c.num_joints},
      {"input_resolution", c.input_resolution},
      {"stem_channels", c.stem_channels},
      {"preamble_channels", c.preamble_channels},
  };
}

NetworkConfig network_config_from_json(const json& j) {
  const std::string where = "network config";
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  NetworkConfig c;
  bool outer_given = false;
  for (const auto& [key, value] : j.items()) {
    if (key == "num_stacks") c.num_stacks = field<int>(j, key, where);
    else if (key == "hourglass_depth") c.hourglass_depth = field<int>(j, key, where);
    else if (key == "channels_main") c.channels_main = field<int>(j, key, where);
    else if (key == "channels_inner") c.channels_inner = field<int>(j, key, where);
    else if (key == "block") c.block = block_from_json(value, where + ": block");
    else if (key == "outer_block") {
      c.outer_block = block_from_json(value, where + ": outer_block");
      outer_given = true;
    } else if (key == "skip_mode") c.skip_mode = parse_skip_mode(field<std::string>(j, key, where));
    else if (key == "stack_merge") c.stack_merge = parse_skip_mode(field<std::string>(j, key, where));
    else if (key == "narrow_res") c.narrow_res = field<bool>(j, key, where);
    else if (key == "num_joints") c.num_joints = field<int>(j, key, where);
    else if (key == "input_resolution") c.input_resolution = field<int>(j, key, where);
    else if (key == "stem_channels") c.stem_channels = field<int>(j, key, where);
    else if (key == "preamble_channels") c.preamble_channels = field<int>(j, key, where);
    else if (key == "name" || key == "description") continue;
    else throw ConfigError(where + ": unknown field '" + key + "'");
  }
  // Residual outside the hourglass unless stated otherwise.
  if (!outer_given) c.outer_block = BlockSpec{};
  c.validate();
  return c;
}

NetworkConfig load_network_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open architecture file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("architecture file '" + path + "': " + e.what());
  }
  return network_config_from_json(j);
}

// ------------------------------------------------------------------ merges

Tensor merge_skip(const Tensor& skip, const Tensor& up, SkipMode mode,
                  const Conv2d* merge) {
  const Shape& a = skip.shape();
  const Shape& b = up.shape();
  if (a.n != b.n || a.h != b.h || a.w != b.w) {
    throw ConfigError("merge_skip: spatial mismatch " + a.str() + " vs " + b.str());
  }
  if (mode == SkipMode::kAdd) return add(skip, up);
  if (merge == nullptr) throw UsageError("merge_skip: resconcat needs a merge conv");
  const std::array<Tensor, 2> parts{skip, up};
  return (*merge)(concat_channels(parts));
}

Tensor narrow_res_connect(const Tensor& neck_prev, const Tensor& neck_cur) {
  if (neck_prev.shape() != neck_cur.shape()) {
    throw ConfigError("narrow_res_connect: neck shapes differ " +
                      neck_prev.shape().str() + " vs " + neck_cur.shape().str());
  }
  return add(neck_cur, neck_prev);
}

// --------------------------------------------------------------- Hourglass

Hourglass::Hourglass(std::string prefix, int depth, const NetworkConfig& config,
                     Initializer& init)
    : Module(prefix + "/level" + std::to_string(depth)),
      depth_(depth),
      skip_mode_(config.skip_mode) {
  const BlockSpec spec = config.interior_spec();
  up_ = &add_child(make_block(spec, child_name("up"), init));
  low1_ = &add_child(make_block(spec, child_name("low1"), init));
  if (depth > 1) {
    inner_ = &add_child(std::make_unique<Hourglass>(prefix, depth - 1, config, init));
  } else {
    core_ = &add_child(make_block(spec, child_name("core"), init));
  }
  low3_ = &add_child(make_block(spec, child_name("low3"), init));
  if (skip_mode_ == SkipMode::kResConcat) {
    const int c = config.channels_main;
    merge_ = &add_conv("merge", ConvSpec::pointwise(2 * c, c), init);
  }
}

Hourglass::Result Hourglass::forward(const Tensor& input, const ForwardContext& ctx,
                                     const Tensor* inject) {
  const Shape& s = input.shape();
  const int step = 1 << depth_;
  if (s.h % step != 0 || s.w % step != 0) {
    throw ConfigError("hourglass depth " + std::to_string(depth_) +
                      ": spatial dims of " + s.str() + " not divisible by " +
                      std::to_string(step));
  }
  const Tensor up = up_->forward(input, ctx);
  const Tensor low1 = low1_->forward(maxpool2x2(input), ctx);
  Result r;
  Tensor low2;
  if (inner_ != nullptr) {
    Result inner = inner_->forward(low1, ctx, inject);
    low2 = inner.output;
    r.neck = inner.neck;
  } else {
    r.neck = inject != nullptr ? narrow_res_connect(*inject, low1) : low1;
    low2 = core_->forward(r.neck, ctx);
  }
  const Tensor low3 = low3_->forward(low2, ctx);
  r.output = merge_skip(up, upsample_nearest2x(low3), skip_mode_, merge_);
  return r;
}

// ----------------------------------------------------------------- Network

Network::Network(NetworkConfig config, std::uint64_t seed, DType dtype)
    : Module(""), config_(std::move(config)), dtype_(dtype), seed_(seed) {
  config_.validate();
  Initializer init(seed, dtype);
  const NetworkConfig& c = config_;
  ConvSpec stem{};
  stem.in_channels = 3;
  stem.out_channels = c.stem_channels;
  stem.kernel_h = stem.kernel_w = 7;
  stem.stride_h = stem.stride_w = 2;
  stem.pad_h = stem.pad_w = 3;
  stem_ = &add_conv("preamble/stem", stem, init);
  stem_bn_ = &add_bn("preamble/stem_bn", c.stem_channels, init);
  preamble_.push_back(&add_child(make_block(
      c.outer_spec(c.stem_channels, c.preamble_channels), "preamble/block0", init)));
  preamble_.push_back(&add_child(make_block(
      c.outer_spec(c.preamble_channels, c.preamble_channels), "preamble/block1", init)));
  preamble_.push_back(&add_child(make_block(
      c.outer_spec(c.preamble_channels, c.channels_main), "preamble/block2", init)));

  const int f = c.channels_main;
  for (int i = 0; i < c.num_stacks; ++i) {
    const std::string p = "stack" + std::to_string(i);
    Stack st;
    st.hourglass = &add_child(std::make_unique<Hourglass>(p + "/hg", c.hourglass_depth, c, init));
    BlockSpec tail = c.outer_spec(f, f);
    tail.mid_channels = c.channels_inner;
    st.tail_block = &add_child(make_block(tail, p + "/tail/block", init));
    st.tail_conv = &add_conv(p + "/tail/conv", ConvSpec::pointwise(f, f), init);
    st.tail_bn = &add_bn(p + "/tail/bn", f, init);
    st.head = &add_conv(p + "/head", ConvSpec::pointwise(f, c.num_joints), init);
    if (i + 1 < c.num_stacks) {
      st.remap_feat = &add_conv(p + "/remap_feat", ConvSpec::pointwise(f, f), init);
      st.remap_pred = &add_conv(p + "/remap_pred", ConvSpec::pointwise(c.num_joints, f), init);
      if (c.stack_merge == SkipMode::kResConcat) {
        st.merge = &add_conv(p + "/merge", ConvSpec::pointwise(2 * f, f), init);
      }
    }
    stacks_.push_back(st);
  }
}

NetworkOutput Network::forward(const Tensor& images, const ForwardContext& ctx) {
  const Shape& s = images.shape();
  const int r = config_.input_resolution;
  if (s.c != 3 || s.h != r || s.w != r) {
    throw ConfigError("network input must be n x 3 x " + std::to_string(r) + " x " +
                      std::to_string(r) + ", got " + s.str());
  }
  if (images.dtype() != dtype_) {
    throw ConfigError("network input dtype " + std::string(dtype_name(images.dtype())) +
                      " does not match parameters (" + std::string(dtype_name(dtype_)) + ")");
  }
  Tensor x = relu((*stem_bn_)((*stem_)(images), ctx));
  x = preamble_[0]->forward(x, ctx);
  x = preamble_[1]->forward(x, ctx);
  x = preamble_[2]->forward(maxpool2x2(x), ctx);

  NetworkOutput out;
  Tensor prev_neck;
  for (std::size_t i = 0; i < stacks_.size(); ++i) {
    const Stack& st = stacks_[i];
    const bool inject = config_.narrow_res && prev_neck.defined();
    Hourglass::Result hg = st.hourglass->forward(x, ctx, inject ? &prev_neck : nullptr);
    Tensor tail = st.tail_block->forward(hg.output, ctx);
    tail = relu((*st.tail_bn)((*st.tail_conv)(tail), ctx));
    Tensor pred = (*st.head)(tail);
    if (st.remap_feat != nullptr) {
      const Tensor feats = add((*st.remap_feat)(tail), (*st.remap_pred)(pred));
      if (st.merge != nullptr) {
        const std::array<Tensor, 2> parts{x, feats};
        x = (*st.merge)(concat_channels(parts));
      } else {
        x = add(x, feats);
      }
    }
    prev_neck = hg.neck;
    out.heatmaps.push_back(std::move(pred));
    out.necks.push_back(std::move(hg.neck));
    out.tails.push_back(std::move(tail));
  }
  return out;
}

}  // namespace hg
