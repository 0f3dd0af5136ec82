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

#ifndef HGNET_OPTIM_HPP_
#define HGNET_OPTIM_HPP_

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hgnet/layers.hpp"

namespace hg {

struct RmspropOptions {
  double learning_rate = 1e-3;
  double decay = 0.99;
  double eps = 1e-8;

  void validate() const;
};

// Squared-gradient running averages, aligned with the parameter list the
// optimizer was built from.
struct RmspropState {
  std::vector<NamedTensor> square_avg;
  std::int64_t step = 0;
};

// Uncentred RMSprop without momentum, elementwise:
//   v     <- decay * v + (1 - decay) * g^2
//   theta <- theta - lr * g / (sqrt(v) + eps)
template <typename T>
void rmsprop_update(std::span<T> param, std::span<const T> grad, std::span<T> v,
                    double lr, double decay, double eps) {
  const T d = static_cast<T>(decay);
  const T one_minus_d = static_cast<T>(1.0 - decay);
  const T rate = static_cast<T>(lr);
  const T e = static_cast<T>(eps);
  for (std::size_t i = 0; i < param.size(); ++i) {
    const T g = grad[i];
    v[i] = d * v[i] + one_minus_d * g * g;
    const T denom = std::sqrt(v[i]) + e;
    if (denom > T(0)) param[i] -= rate * g / denom;
  }
}

class Rmsprop {
 public:
  Rmsprop(std::vector<NamedTensor> params, RmspropOptions options);
  // Resumes from a saved state; names and shapes must match `params`.
  Rmsprop(std::vector<NamedTensor> params, RmspropOptions options, RmspropState state);

  // Applies one update from the parameters' gradients. A non-finite
  // gradient raises TrainingError naming the parameter, before any
  // parameter is touched.
  void step();
  void zero_grad();

  const RmspropState& state() const { return state_; }
  const RmspropOptions& options() const { return options_; }
  void set_learning_rate(double lr) { options_.learning_rate = lr; }

 private:
  std::vector<NamedTensor> params_;
  RmspropOptions options_;
  RmspropState state_;
};

}  // namespace hg

#endif  // HGNET_OPTIM_HPP_
