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

#ifndef HGNET_TRAIN_HPP_
#define HGNET_TRAIN_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hgnet/data.hpp"
#include "hgnet/losses.hpp"
#include "hgnet/metrics.hpp"
#include "hgnet/network.hpp"
#include "hgnet/optim.hpp"

namespace hg {

struct DatasetConfig {
  int count = 8;
  std::uint64_t seed = 0;
  double sigma = 1.0;  // target Gaussian width, heatmap pixels
};

struct TrainConfig {
  double learning_rate = 1e-3;
  int batch_size = 24;
  int epochs = 20;
  // Stop after this many optimizer steps in total (0: epochs * batches).
  std::int64_t max_steps = 0;
  double rmsprop_decay = 0.99;
  double rmsprop_eps = 1e-8;
  std::uint64_t seed = 0;
  int threads = 1;
  DType precision = DType::kF32;
  LossConfig loss;
  NetworkConfig network;
  DatasetConfig dataset;
  std::string checkpoint;  // empty: no checkpoints
  std::string log;         // empty: no CSV log
  // Log a row every this many steps (0: once per epoch).
  int log_interval = 0;
  // Continue from `checkpoint` if it exists.
  bool resume = false;

  void validate() const;
};

// TOML mirroring TrainConfig; `architecture` names the network JSON,
// relative paths resolve against the config file's directory.
TrainConfig parse_train_config(const std::string& toml_text,
                               const std::string& base_dir = ".");
TrainConfig load_train_config(const std::string& path);

struct StepRecord {
  int epoch = 0;
  std::int64_t step = 0;  // 1-based global step
  LossBreakdown loss;
};

struct TrainResult {
  std::vector<StepRecord> steps;  // steps run by this call
  std::int64_t final_step = 0;
};

// Epoch e visits the samples in an order drawn from (seed, e); the final
// incomplete batch is dropped. Training resumed from a checkpoint saved at
// step j continues exactly as an uninterrupted run would, log rows
// included (the seconds column aside). A non-finite loss
// raises TrainingError; the last checkpoint written stays on disk.
TrainResult train(const TrainConfig& config);
// Same loop on a caller-provided network and optimizer, without files.
TrainResult train_steps(Network& network, Rmsprop& optimizer,
                        std::span<const PoseSample> data, const TrainConfig& config,
                        std::int64_t first_step, std::int64_t last_step,
                        const std::function<void(const StepRecord&)>& on_step = {});

std::vector<std::size_t> epoch_order(std::size_t count, std::uint64_t seed, int epoch);

std::string log_header(int stacks);
std::string log_row(const StepRecord& record, double learning_rate, double seconds);

struct EvalResult {
  PckhResult pckh;
  std::vector<Joints> predictions;  // input pixels
};

// Eval-mode forward, last-stack heatmaps decoded and scaled by 4 back to
// input pixels.
EvalResult evaluate(Network& network, std::span<const PoseSample> samples,
                    int batch_size = 8, bool refine = false,
                    PckhMean mean_mode = PckhMean::kJoints);
// PCKh of the stored pred_joints; every record must carry them.
EvalResult evaluate_annotations(std::span<const Annotation> records,
                                PckhMean mean_mode = PckhMean::kJoints);

// ------------------------------------------------------------- gradcheck

struct GradcheckOptions {
  std::uint64_t seed = 0;
  int samples = 20;     // coordinates per tensor (all if fewer)
  double step = 1e-5;   // central difference half-width
  int max_resample = 50;
};

struct GradcheckEntry {
  std::string name;
  double max_rel_error = 0.0;
  int checked = 0;
  int resampled = 0;  // coordinates replaced after crossing a kink
};

struct GradcheckReport {
  std::vector<GradcheckEntry> entries;
  double max_rel_error() const;
};

// Optional higher-precision twin: central differences are taken on
// `output` and `wrt` here while gradients come from the checked tensors.
struct GradcheckReference {
  std::function<Tensor()> output;
  std::vector<NamedTensor> wrt;
};

// Compares autodiff gradients of loss = sum(output() * projection) with
// central differences. Coordinates whose +-step evaluation changes a relu
// mask or max-pool choice are resampled. Relative error uses the
// denominator max(|a|, |b|, 1e-8).
GradcheckReport gradcheck(const std::function<Tensor()>& output, const Tensor& projection,
                          const std::vector<NamedTensor>& wrt,
                          const GradcheckOptions& options,
                          const GradcheckReference* reference = nullptr);

// Block of the given kind at toy width, eval-mode batch-norm with
// randomised statistics, fixed random input and projection; checks the
// input and every parameter. 32-bit checks difference a 64-bit twin
// holding the same values.
GradcheckReport gradcheck_block(BlockKind kind, const GradcheckOptions& options,
                                DType dtype = DType::kF64);
// Depth-2 hourglass at toy width, same loss construction.
GradcheckReport gradcheck_hourglass(int depth, SkipMode skip_mode,
                                    const GradcheckOptions& options,
                                    DType dtype = DType::kF64);
// Whole network in eval mode; output = all stacks' heatmaps concatenated.
GradcheckReport gradcheck_network(const NetworkConfig& config,
                                  const GradcheckOptions& options,
                                  DType dtype = DType::kF64);

}  // namespace hg

#endif  // HGNET_TRAIN_HPP_
