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

#ifndef HGNET_COMPLEXITY_HPP_
#define HGNET_COMPLEXITY_HPP_

// Parameter and multiply-add accounting. MAdds count one per
// multiply-accumulate of a convolution, per image; batch-norm, activations,
// pooling, upsampling and additions are free.

#include <cstdint>
#include <string>
#include <vector>

#include "hgnet/network.hpp"

namespace hg {

struct ComplexityRow {
  std::string layer;
  std::string kind;  // "conv" or "batchnorm"
  std::int64_t params = 0;
  std::int64_t madds = 0;
  Shape output{};
};

struct ComplexityReport {
  std::vector<ComplexityRow> rows;
  std::int64_t total_params = 0;
  std::int64_t total_madds = 0;
  Shape input_shape{};

  std::string to_csv() const;
  // Aligned table with totals, for terminals.
  std::string to_table() const;
};

// Params only, one row per layer, from the constructed parameter tensors.
ComplexityReport count_params(const Network& network);
// Shape-only forward at `input_shape`; rows in execution order.
ComplexityReport count_madds(Network& network, Shape input_shape);
// count_madds at 1 x 3 x R x R with R = the configured resolution.
ComplexityReport profile(Network& network);

// Parameters and MAdds summed over layers sharing the first `levels` name
// components ("stack0/hg" for levels = 2).
std::vector<ComplexityRow> section_totals(const ComplexityReport& report,
                                          int levels);

struct ComplexityDelta {
  double params_pct = 0.0;
  double madds_pct = 0.0;
};

// Signed % change of `candidate` relative to `baseline`.
ComplexityDelta compare(const ComplexityReport& baseline,
                        const ComplexityReport& candidate);

// Exact element count of every parameter tensor.
std::int64_t enumerate_params(const Module& module);

}  // namespace hg

#endif  // HGNET_COMPLEXITY_HPP_
