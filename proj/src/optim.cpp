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

#include "hgnet/optim.hpp"

#include "hgnet/error.hpp"

namespace hg {

void RmspropOptions::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("rmsprop: learning_rate must be finite and >= 0");
  }
  if (!(decay > 0.0 && decay < 1.0)) throw ConfigError("rmsprop: decay must lie in (0, 1)");
  if (!(eps >= 0.0)) throw ConfigError("rmsprop: eps must be >= 0");
}

Rmsprop::Rmsprop(std::vector<NamedTensor> params, RmspropOptions options)
    : params_(std::move(params)), options_(options) {
  options_.validate();
  for (const NamedTensor& p : params_) {
    state_.square_avg.push_back(
        {p.name, Tensor::zeros(p.tensor.shape(), p.tensor.dtype())});
  }
}

Rmsprop::Rmsprop(std::vector<NamedTensor> params, RmspropOptions options,
                 RmspropState state)
    : params_(std::move(params)), options_(options), state_(std::move(state)) {
  options_.validate();
  if (state_.square_avg.size() != params_.size()) {
    throw DataError("rmsprop state holds " + std::to_string(state_.square_avg.size()) +
                    " accumulators for " + std::to_string(params_.size()) + " parameters");
  }
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const NamedTensor& v = state_.square_avg[i];
    if (v.name != params_[i].name || v.tensor.shape() != params_[i].tensor.shape() ||
        v.tensor.dtype() != params_[i].tensor.dtype()) {
      throw DataError("rmsprop state entry '" + v.name + "' does not match parameter '" +
                      params_[i].name + "'");
    }
  }
}

void Rmsprop::step() {
  for (const NamedTensor& p : params_) {
    if (!p.tensor.has_grad()) continue;
    for (double g : p.tensor.grad_vector()) {
      if (!std::isfinite(g)) {
        throw TrainingError("non-finite gradient in parameter '" + p.name + "'");
      }
    }
  }
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor param = params_[i].tensor;
    Tensor v = state_.square_avg[i].tensor;
    visit_dtype(param.dtype(), [&](auto tag) {
      using T = decltype(tag);
      const std::span<T> grad = param.grad_values<T>();
      rmsprop_update<T>(param.values<T>(), grad, v.values<T>(), options_.learning_rate,
                        options_.decay, options_.eps);
    });
  }
  ++state_.step;
}

void Rmsprop::zero_grad() {
  for (NamedTensor& p : params_) p.tensor.zero_grad();
}

}  // namespace hg
