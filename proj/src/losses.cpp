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

#include "hgnet/losses.hpp"

#include <cmath>

#include "hgnet/error.hpp"

namespace hg {

void LossConfig::validate() const {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw ConfigError("loss: lambda must be positive and finite");
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw ConfigError("loss: alpha must lie in [0, 1]");
  }
}

Tensor heatmap_mse(const Tensor& prediction, const Tensor& target) {
  if (prediction.shape() != target.shape()) {
    throw ConfigError("heatmap_mse: shape mismatch " + prediction.shape().str() +
                      " vs " + target.shape().str());
  }
  return mse(prediction, target);
}

Tensor perceptual_loss(const Tensor& features_a, const Tensor& features_b) {
  if (features_a.shape() != features_b.shape()) {
    throw ConfigError("perceptual_loss: shape mismatch " + features_a.shape().str() +
                      " vs " + features_b.shape().str());
  }
  return mse(features_a, features_b);
}

LossResult combine_losses(const std::vector<Tensor>& per_stack,
                          const Tensor& percep, const LossConfig& config) {
  config.validate();
  if (per_stack.empty()) throw ConfigError("loss: no stack losses given");
  if (config.use_perceptual && per_stack.size() != 2) {
    throw ConfigError("loss: perceptual term needs exactly 2 stacks, got " +
                      std::to_string(per_stack.size()));
  }
  LossResult r;
  Tensor stacks = per_stack.front();
  for (std::size_t i = 1; i < per_stack.size(); ++i) stacks = add(stacks, per_stack[i]);
  for (const Tensor& t : per_stack) r.breakdown.per_stack_mse.push_back(t.at(0));
  if (config.use_perceptual) {
    if (!percep.defined()) throw UsageError("loss: perceptual term missing");
    r.total = scale(add(scale(stacks, config.alpha), scale(percep, 1.0 - config.alpha)),
                    config.lambda);
    r.breakdown.l_percep = percep.at(0);
  } else {
    r.total = stacks;
  }
  r.breakdown.total = r.total.at(0);
  return r;
}

LossResult total_loss(const NetworkOutput& output, const Tensor& target,
                      const LossConfig& config) {
  std::vector<Tensor> per_stack;
  per_stack.reserve(output.heatmaps.size());
  for (const Tensor& h : output.heatmaps) per_stack.push_back(heatmap_mse(h, target));
  Tensor percep;
  if (config.use_perceptual) {
    if (output.tails.size() != 2) {
      throw ConfigError("loss: perceptual term needs exactly 2 stacks, got " +
                        std::to_string(output.tails.size()));
    }
    percep = perceptual_loss(output.tails[0], output.tails[1]);
  }
  return combine_losses(per_stack, percep, config);
}

}  // namespace hg
