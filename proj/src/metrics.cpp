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

#include "hgnet/metrics.hpp"

#include <cmath>

#include <fmt/format.h>

#include "hgnet/error.hpp"

namespace hg {

std::vector<std::vector<Point>> decode_heatmap(const Tensor& heatmap, bool refine) {
  const Shape s = heatmap.shape();
  std::vector<std::vector<Point>> out(s.n, std::vector<Point>(s.c));
  visit_dtype(heatmap.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const auto v = heatmap.values<T>();
    for (int n = 0; n < s.n; ++n) {
      for (int j = 0; j < s.c; ++j) {
        const T* plane = v.data() + offset(s, n, j, 0, 0);
        std::size_t best = 0;
        for (std::size_t i = 1; i < s.plane(); ++i) {
          if (plane[i] > plane[best]) best = i;
        }
        const int y = static_cast<int>(best) / s.w;
        const int x = static_cast<int>(best) % s.w;
        Point p{static_cast<double>(x), static_cast<double>(y)};
        if (refine) {
          auto at = [&](int yy, int xx) { return plane[yy * s.w + xx]; };
          if (x > 0 && x + 1 < s.w) {
            const T d = at(y, x + 1) - at(y, x - 1);
            p.x += d > 0 ? 0.25 : (d < 0 ? -0.25 : 0.0);
          }
          if (y > 0 && y + 1 < s.h) {
            const T d = at(y + 1, x) - at(y - 1, x);
            p.y += d > 0 ? 0.25 : (d < 0 ? -0.25 : 0.0);
          }
        }
        out[n][j] = p;
      }
    }
  });
  return out;
}

const std::array<std::string_view, kNumPckhGroups>& pckh_group_names() {
  static constexpr std::array<std::string_view, kNumPckhGroups> names{
      "Head", "Shoulder", "Elbow", "Wrist", "Hip", "Knee", "Ankle"};
  return names;
}

const std::array<std::array<int, 2>, kNumPckhGroups>& pckh_group_joints() {
  static constexpr std::array<std::array<int, 2>, kNumPckhGroups> joints{{
      {8, 9}, {12, 13}, {11, 14}, {10, 15}, {2, 3}, {1, 4}, {0, 5}}};
  return joints;
}

std::string PckhResult::to_csv() const {
  std::string header;
  std::string row;
  for (int g = 0; g < kNumPckhGroups; ++g) {
    header += fmt::format("{},", pckh_group_names()[g]);
    row += fmt::format("{:.2f},", 100.0 * accuracy[g]);
  }
  return header + "Mean\n" + row + fmt::format("{:.2f}\n", 100.0 * mean);
}

std::string PckhResult::to_table() const {
  std::string out;
  for (int g = 0; g < kNumPckhGroups; ++g) {
    out += fmt::format("{:<9} {:6.2f}%  ({}/{})\n", pckh_group_names()[g],
                       100.0 * accuracy[g], correct[g], counts[g]);
  }
  out += fmt::format("{:<9} {:6.2f}%\n", "Mean", 100.0 * mean);
  return out;
}

PckhResult pckh(std::span<const Joints> predicted, std::span<const Joints> truth,
                std::span<const double> head_sizes,
                std::span<const Visibility> visible, double threshold,
                PckhMean mean_mode) {
  const std::size_t n = truth.size();
  if (predicted.size() != n || head_sizes.size() != n || visible.size() != n) {
    throw UsageError("pckh: predicted, truth, head_sizes and visibility differ in length");
  }
  // joint -> group, -1 when ungrouped
  std::array<int, kNumJoints> group_of;
  group_of.fill(-1);
  for (int g = 0; g < kNumPckhGroups; ++g) {
    for (int j : pckh_group_joints()[g]) group_of[j] = g;
  }

  PckhResult r;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(head_sizes[i] > 0.0)) {
      throw DataError("pckh: sample " + std::to_string(i) +
                      " has nonpositive head size " + std::to_string(head_sizes[i]));
    }
    const double radius = threshold * head_sizes[i];
    for (int j = 0; j < kNumJoints; ++j) {
      const int g = group_of[j];
      if (g < 0 || !visible[i][j]) continue;
      const Point& p = predicted[i][j];
      const Point& t = truth[i][j];
      ++r.counts[g];
      if (std::hypot(p.x - t.x, p.y - t.y) <= radius) ++r.correct[g];
    }
  }

  int total = 0;
  int correct = 0;
  int groups = 0;
  double group_sum = 0.0;
  for (int g = 0; g < kNumPckhGroups; ++g) {
    total += r.counts[g];
    correct += r.correct[g];
    if (r.counts[g] > 0) {
      r.accuracy[g] = static_cast<double>(r.correct[g]) / r.counts[g];
      group_sum += r.accuracy[g];
      ++groups;
    }
  }
  if (mean_mode == PckhMean::kJoints) {
    r.mean = total > 0 ? static_cast<double>(correct) / total : 0.0;
  } else {
    r.mean = groups > 0 ? group_sum / groups : 0.0;
  }
  return r;
}

double tradeoff_metric(const ModelStats& baseline, const ModelStats& candidate,
                       const TradeoffWeights& weights) {
  if (weights.accuracy < 0 || weights.params < 0 || weights.madds < 0) {
    throw UsageError("tradeoff: weights must be nonnegative");
  }
  if (baseline.params == 0.0 || baseline.madds == 0.0) {
    throw UsageError("tradeoff: baseline params and madds must be nonzero");
  }
  const double d_acc = candidate.mean_pckh - baseline.mean_pckh;
  const double d_params = 100.0 * (candidate.params - baseline.params) / baseline.params;
  const double d_madds = 100.0 * (candidate.madds - baseline.madds) / baseline.madds;
  return weights.accuracy * d_acc - weights.params * d_params - weights.madds * d_madds;
}

}  // namespace hg
