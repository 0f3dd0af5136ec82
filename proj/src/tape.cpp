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

#include "hgnet/tape.hpp"

#include "hgnet/error.hpp"

namespace hg {
namespace {

thread_local Tape* g_active_tape = nullptr;

}  // namespace

Tape* Tape::active() { return g_active_tape; }

TapeScope::TapeScope(Tape& tape) : previous_(g_active_tape) {
  g_active_tape = &tape;
}

TapeScope::~TapeScope() { g_active_tape = previous_; }

void Tape::record(std::string op, std::vector<Tensor> inputs, Tensor output,
                  std::function<void()> backward) {
  if (consumed_) {
    throw UsageError("recording '" + op + "' on a tape that was already "
                     "differentiated; call reset() first");
  }
  entries_.push_back(
      {std::move(op), std::move(inputs), std::move(output), std::move(backward)});
}

void Tape::backward(Tensor loss) {
  if (consumed_) {
    throw UsageError("backward called twice on the same tape without reset()");
  }
  if (!loss.defined() || loss.shape() != Shape{1, 1, 1, 1}) {
    throw UsageError("backward needs a scalar 1x1x1x1 loss, got " +
                     (loss.defined() ? loss.shape().str() : "undefined"));
  }
  consumed_ = true;
  visit_dtype(loss.dtype(), [&](auto tag) {
    using T = decltype(tag);
    loss.grad_values<T>()[0] += T(1);
  });
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    if (it->output.has_grad()) it->backward();
  }
}

void Tape::reset() {
  entries_.clear();
  consumed_ = false;
}

}  // namespace hg
