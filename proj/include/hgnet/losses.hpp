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

#ifndef HGNET_LOSSES_HPP_
#define HGNET_LOSSES_HPP_

#include <vector>

#include "hgnet/network.hpp"

namespace hg {

// total = lambda * (alpha * sum_s mse_s + (1 - alpha) * percep) when
// use_perceptual is set (exactly two stacks), else sum_s mse_s.
struct LossConfig {
  double lambda = 2.0;
  double alpha = 0.7;  // weight of the prediction losses
  bool use_perceptual = false;

  void validate() const;
};

struct LossBreakdown {
  std::vector<double> per_stack_mse;
  double l_percep = 0.0;
  double total = 0.0;
};

struct LossResult {
  Tensor total;  // 1x1x1x1, on the active tape
  LossBreakdown breakdown;
};

Tensor heatmap_mse(const Tensor& prediction, const Tensor& target);
// Feature-level MSE; gradients reach both inputs.
Tensor perceptual_loss(const Tensor& features_a, const Tensor& features_b);

// Combines already computed scalar terms. `percep` may be undefined when
// use_perceptual is false.
LossResult combine_losses(const std::vector<Tensor>& per_stack,
                          const Tensor& percep, const LossConfig& config);

// Per-stack heatmap MSE against `target` plus, if configured, the
// perceptual term between the two stacks' tail features.
LossResult total_loss(const NetworkOutput& output, const Tensor& target,
                      const LossConfig& config);

}  // namespace hg

#endif  // HGNET_LOSSES_HPP_
