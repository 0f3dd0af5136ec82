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

#ifndef HGNET_DATA_HPP_
#define HGNET_DATA_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hgnet/metrics.hpp"
#include "hgnet/tensor.hpp"

namespace hg {

// Input pixels per heatmap pixel.
inline constexpr int kHeatmapStride = 4;

struct PoseSample {
  Tensor image;  // 1 x 3 x R x R, float32, values in [0, 1]
  Joints joints{};
  Visibility visible{};
  double head_size = 0.0;  // distance between the two head joints
};

// Channel j holds exp(-((x - cx)^2 + (y - cy)^2) / (2 sigma^2)) over the
// grid, centred on (cx, cy) = round(joint / 4), so the peak is exactly 1.
// Centres falling just outside the grid leave truncated tails; a visible
// joint outside [0, 4 * out_resolution) is a DataError.
Tensor make_gaussian_target(std::span<const Point> joints,
                            std::span<const bool> visible, int out_resolution,
                            double sigma = 1.0, DType dtype = DType::kF32);

// Stick figures on a noisy background. Sample i depends only on
// (resolution, seed, i); every visible joint lies inside the frame.
std::vector<PoseSample> generate_synthetic_dataset(int count, int resolution,
                                                   std::uint64_t seed);

// Stacks the selected samples' images into n x 3 x R x R and their targets
// into n x 16 x R/4 x R/4.
Tensor batch_images(std::span<const PoseSample> samples,
                    std::span<const std::size_t> indices, DType dtype);
Tensor batch_targets(std::span<const PoseSample> samples,
                     std::span<const std::size_t> indices, double sigma,
                     DType dtype);

// One line of an annotation file:
//   {"joints": [[x, y] x 16], "visible": [bool x 16], "head_size": h,
//    "pred_joints": [[x, y] x 16]}   (pred_joints optional)
struct Annotation {
  Joints joints{};
  Visibility visible{};
  double head_size = 0.0;
  std::optional<Joints> pred_joints;
};

// Blank lines are skipped; malformed ones raise DataError with the 1-based
// line number.
std::vector<Annotation> load_annotations(const std::string& path);
std::vector<Annotation> parse_annotations(const std::string& text);
void save_annotations(const std::string& path, std::span<const Annotation> records);

Annotation to_annotation(const PoseSample& sample);

}  // namespace hg

#endif  // HGNET_DATA_HPP_
