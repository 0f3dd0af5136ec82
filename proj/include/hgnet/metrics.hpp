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

#ifndef HGNET_METRICS_HPP_
#define HGNET_METRICS_HPP_

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hgnet/tensor.hpp"

namespace hg {

// MPII joint order: 0 r-ankle, 1 r-knee, 2 r-hip, 3 l-hip, 4 l-knee,
// 5 l-ankle, 6 pelvis, 7 thorax, 8 upper-neck, 9 head-top, 10 r-wrist,
// 11 r-elbow, 12 r-shoulder, 13 l-shoulder, 14 l-elbow, 15 l-wrist.
inline constexpr int kNumJoints = 16;

struct Point {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point&) const = default;
};

using Joints = std::array<Point, kNumJoints>;
using Visibility = std::array<bool, kNumJoints>;

// Per (sample, joint) argmax pixel; ties go to the smallest row-major
// index. `refine` shifts a quarter pixel toward the larger neighbour on each
// axis. Coordinates are heatmap pixels, x = column.
std::vector<std::vector<Point>> decode_heatmap(const Tensor& heatmap,
                                               bool refine = false);

inline constexpr int kNumPckhGroups = 7;
// Head, Shoulder, Elbow, Wrist, Hip, Knee, Ankle. Pelvis and thorax belong
// to no group.
const std::array<std::string_view, kNumPckhGroups>& pckh_group_names();
const std::array<std::array<int, 2>, kNumPckhGroups>& pckh_group_joints();

enum class PckhMean { kJoints, kGroups };

struct PckhResult {
  std::array<double, kNumPckhGroups> accuracy{};  // fraction in [0, 1]
  std::array<int, kNumPckhGroups> counts{};       // visible joints evaluated
  std::array<int, kNumPckhGroups> correct{};
  double mean = 0.0;

  // Header "Head,Shoulder,...,Ankle,Mean" and one row of percentages.
  std::string to_csv() const;
  std::string to_table() const;
};

// A joint is correct iff its distance to ground truth is <= threshold *
// head_size. Invisible joints are skipped. Groups without any evaluated
// joint report 0 and are left out of the group mean.
PckhResult pckh(std::span<const Joints> predicted, std::span<const Joints> truth,
                std::span<const double> head_sizes,
                std::span<const Visibility> visible, double threshold = 0.5,
                PckhMean mean_mode = PckhMean::kJoints);

struct ModelStats {
  double mean_pckh = 0.0;  // percent
  double params = 0.0;
  double madds = 0.0;
};

struct TradeoffWeights {
  double accuracy = 1.0;
  double params = 0.1;
  double madds = 0.1;
};

// w_acc * (pckh_c - pckh_b) + w_params * (-%change params)
//   + w_madds * (-%change madds)
double tradeoff_metric(const ModelStats& baseline, const ModelStats& candidate,
                       const TradeoffWeights& weights);

}  // namespace hg

#endif  // HGNET_METRICS_HPP_
