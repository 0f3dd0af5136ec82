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

#ifndef HGNET_TAPE_HPP_
#define HGNET_TAPE_HPP_

#include <functional>
#include <string>
#include <vector>

#include "hgnet/tensor.hpp"

namespace hg {

// Reverse-mode autodiff record. Ops executed while a tape is active (see
// TapeScope) append one entry each when any input requires a gradient.
// backward() replays the entries in exact reverse order; gradients of
// tensors used by several ops accumulate additively.
class Tape {
 public:
  struct Entry {
    std::string op;
    std::vector<Tensor> inputs;
    Tensor output;
    // Reads output's gradient and accumulates into the inputs' gradients.
    std::function<void()> backward;
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  void record(std::string op, std::vector<Tensor> inputs, Tensor output,
              std::function<void()> backward);

  // Seeds d(loss)/d(loss) = 1 and propagates. loss must be 1x1x1x1. A tape
  // can be differentiated once; reset() makes it reusable.
  void backward(Tensor loss);

  void reset();
  bool consumed() const { return consumed_; }
  const std::vector<Entry>& entries() const { return entries_; }

  // Innermost tape activated on this thread, or nullptr.
  static Tape* active();

 private:
  friend class TapeScope;

  std::vector<Entry> entries_;
  bool consumed_ = false;
};

class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

}  // namespace hg

#endif  // HGNET_TAPE_HPP_
