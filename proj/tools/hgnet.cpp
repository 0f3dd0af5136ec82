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

// hgnet: describe, train, eval, gradcheck and tradeoff subcommands.
//
// Exit codes: 0 success, 1 gradient check failure, 2 non-finite loss during
// training, 64 usage, configuration or input errors.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "hgnet/checkpoint.hpp"
#include "hgnet/complexity.hpp"
#include "hgnet/error.hpp"
#include "hgnet/kernels.hpp"
#include "hgnet/train.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitGradcheck = 1;
constexpr int kExitNaN = 2;
constexpr int kExitUsage = 64;

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw hg::IoError("cannot write '" + path + "'");
  out << text;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw hg::IoError("cannot open '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(item);
  return out;
}

double number(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw hg::UsageError("cannot read " + what + " from '" + text + "'");
  }
}

// "report.csv+pckh.csv" (describe --csv and eval --csv outputs) or
// "pckh:params:madds" with PCKh in percent.
hg::ModelStats read_stats(const std::string& spec) {
  hg::ModelStats st;
  if (const auto plus = spec.find('+'); plus != std::string::npos) {
    const std::string report = spec.substr(0, plus);
    const std::string pckh = spec.substr(plus + 1);
    bool found = false;
    for (const std::string& line : split(read_file(report), '\n')) {
      const auto f = split(line, ',');
      if (f.size() >= 4 && f[0] == "total") {
        st.params = number(f[2], "params in " + report);
        st.madds = number(f[3], "madds in " + report);
        found = true;
      }
    }
    if (!found) throw hg::UsageError("no total row in complexity report '" + report + "'");
    const auto lines = split(read_file(pckh), '\n');
    if (lines.size() < 2) throw hg::UsageError("PCKh file '" + pckh + "' has no data row");
    const auto header = split(lines[0], ',');
    const auto row = split(lines[1], ',');
    if (header.empty() || header.back() != "Mean" || row.size() != header.size()) {
      throw hg::UsageError("PCKh file '" + pckh + "' lacks a Mean column");
    }
    st.mean_pckh = number(row.back(), "mean PCKh in " + pckh);
    return st;
  }
  const auto f = split(spec, ':');
  if (f.size() != 3) {
    throw hg::UsageError("model stats '" + spec +
                         "' must be report.csv+pckh.csv or pckh:params:madds");
  }
  st.mean_pckh = number(f[0], "PCKh");
  st.params = number(f[1], "params");
  st.madds = number(f[2], "madds");
  return st;
}

int run_describe(const std::string& arch, int input_res, const std::string& csv,
                 int section_levels) {
  hg::NetworkConfig config = hg::load_network_config(arch);
  if (input_res > 0) {
    config.input_resolution = input_res;
    config.validate();
  }
  hg::Network net(config, 0);
  const hg::ComplexityReport report = hg::profile(net);
  std::cout << report.to_table();
  if (section_levels > 0) {
    std::cout << "\nsections\n";
    for (const hg::ComplexityRow& s : hg::section_totals(report, section_levels)) {
      std::cout << fmt::format("  {:<28} {:>10} {:>14}\n", s.layer, s.params, s.madds);
    }
  }
  if (!csv.empty()) write_file(csv, report.to_csv());
  return kExitOk;
}

int run_train(const std::string& config_path, std::int64_t max_steps, bool resume) {
  hg::TrainConfig config = hg::load_train_config(config_path);
  if (max_steps > 0) config.max_steps = max_steps;
  if (resume) config.resume = true;
  const hg::TrainResult r = hg::train(config);
  if (!r.steps.empty()) {
    const hg::StepRecord& last = r.steps.back();
    std::cout << fmt::format("trained to step {} (epoch {}), loss {:.6g}\n", last.step,
                             last.epoch, last.loss.total);
  } else {
    std::cout << fmt::format("nothing to do: already at step {}\n", r.final_step);
  }
  return kExitOk;
}

int run_eval(const std::string& checkpoint, const std::string& annotations, int synthetic,
             std::uint64_t data_seed, const std::string& csv, const std::string& export_path,
             bool refine, bool group_mean) {
  const hg::PckhMean mode = group_mean ? hg::PckhMean::kGroups : hg::PckhMean::kJoints;
  hg::EvalResult result;
  std::vector<hg::Annotation> records;
  if (!annotations.empty()) {
    records = hg::load_annotations(annotations);
    result = hg::evaluate_annotations(records, mode);
  } else {
    if (checkpoint.empty()) throw hg::UsageError("eval: --checkpoint is required with --synthetic");
    hg::Checkpoint ck = hg::load_checkpoint(checkpoint);
    const auto samples = hg::generate_synthetic_dataset(
        synthetic, ck.network->config().input_resolution, data_seed);
    result = hg::evaluate(*ck.network, samples, 8, refine, mode);
    for (std::size_t i = 0; i < samples.size(); ++i) {
      records.push_back(hg::to_annotation(samples[i]));
    }
  }
  std::cout << result.pckh.to_table();
  if (!csv.empty()) write_file(csv, result.pckh.to_csv());
  if (!export_path.empty()) {
    for (std::size_t i = 0; i < records.size(); ++i) records[i].pred_joints = result.predictions[i];
    hg::save_annotations(export_path, records);
  }
  return kExitOk;
}

int run_gradcheck(const std::string& block, const std::string& network, int hourglass,
                  std::uint64_t seed, int precision, int samples) {
  if (precision != 32 && precision != 64) throw hg::UsageError("--precision must be 32 or 64");
  const hg::DType dtype = precision == 64 ? hg::DType::kF64 : hg::DType::kF32;
  hg::GradcheckOptions opts;
  opts.seed = seed;
  opts.samples = samples;
  opts.step = 1e-5;
  const double tolerance = precision == 64 ? 1e-5 : 1e-3;
  const int chosen = !block.empty() + !network.empty() + (hourglass > 0);
  if (chosen != 1) {
    throw hg::UsageError("gradcheck: give exactly one of --block, --network, --hourglass");
  }
  hg::GradcheckReport report;
  if (!block.empty()) {
    report = hg::gradcheck_block(hg::parse_block_kind(block), opts, dtype);
  } else if (!network.empty()) {
    report = hg::gradcheck_network(hg::load_network_config(network), opts, dtype);
  } else {
    report = hg::gradcheck_hourglass(hourglass, hg::SkipMode::kAdd, opts, dtype);
  }
  for (const hg::GradcheckEntry& e : report.entries) {
    std::cout << fmt::format("{:<48} {:>10.3e}  checked {:>3}  resampled {}\n", e.name,
                             e.max_rel_error, e.checked, e.resampled);
  }
  const double worst = report.max_rel_error();
  const bool ok = worst < tolerance;
  std::cout << fmt::format("max relative error {:.3e} (tolerance {:.0e}): {}\n", worst,
                           tolerance, ok ? "PASS" : "FAIL");
  return ok ? kExitOk : kExitGradcheck;
}

int run_tradeoff(const std::string& baseline, const std::string& candidate,
                 const std::string& weights) {
  const auto w = split(weights, ',');
  if (w.size() != 3) throw hg::UsageError("--weights takes three numbers a,b,c");
  const hg::TradeoffWeights tw{number(w[0], "weight"), number(w[1], "weight"),
                               number(w[2], "weight")};
  const double m = hg::tradeoff_metric(read_stats(baseline), read_stats(candidate), tw);
  std::cout << fmt::format("{:.2f}\n", m);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stacked hourglass pose networks on the CPU"};
  app.require_subcommand(1);
  int threads = 1;
  app.add_option("--threads", threads, "Kernel threads (1 keeps runs bit-reproducible)")
      ->check(CLI::PositiveNumber);

  auto* describe = app.add_subcommand("describe", "Per-layer parameter and MAdd report");
  std::string arch;
  int input_res = 0;
  std::string describe_csv;
  int sections = 0;
  describe->add_option("--arch", arch, "Architecture JSON")->required()->check(CLI::ExistingFile);
  describe->add_option("--input-res", input_res, "Override the input resolution");
  describe->add_option("--csv", describe_csv, "Write the report as CSV");
  describe->add_option("--sections", sections, "Also print totals per name prefix of this depth");

  auto* train = app.add_subcommand("train", "Train from a TOML config");
  std::string config;
  std::int64_t max_steps = 0;
  bool resume = false;
  train->add_option("--config", config, "Training config (TOML)")->required()->check(CLI::ExistingFile);
  train->add_option("--max-steps", max_steps, "Override the total step count");
  train->add_flag("--resume", resume, "Continue from the configured checkpoint");

  auto* eval = app.add_subcommand("eval", "PCKh@0.5 evaluation");
  std::string checkpoint;
  std::string annotations;
  int synthetic = 0;
  std::uint64_t data_seed = 0;
  std::string eval_csv;
  std::string export_path;
  bool refine = false;
  bool group_mean = false;
  eval->add_option("--checkpoint", checkpoint, "Network checkpoint")->check(CLI::ExistingFile);
  auto* ann = eval->add_option("--annotations", annotations,
                               "JSON-lines annotations carrying pred_joints")
                  ->check(CLI::ExistingFile);
  auto* syn = eval->add_option("--synthetic", synthetic, "Evaluate on this many synthetic samples")
                  ->check(CLI::PositiveNumber);
  ann->excludes(syn);
  eval->add_option("--data-seed", data_seed, "Seed of the synthetic samples");
  eval->add_option("--csv", eval_csv, "Write the PCKh row as CSV");
  eval->add_option("--export", export_path, "Write annotations with predictions (JSON lines)");
  eval->add_flag("--refine", refine, "Quarter-pixel refinement of decoded peaks");
  eval->add_flag("--group-mean", group_mean, "Mean over joint groups instead of joints");

  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient check");
  std::string block;
  std::string network;
  int hourglass = 0;
  std::uint64_t seed = 0;
  int precision = 64;
  int samples = 20;
  gradcheck->add_option("--block", block, "Block kind")
      ->check(CLI::IsMember({"residual", "separable", "ghost", "shuffle", "dice", "dilated",
                             "multidilated"}));
  gradcheck->add_option("--network", network, "Architecture JSON")->check(CLI::ExistingFile);
  gradcheck->add_option("--hourglass", hourglass, "Toy hourglass of this depth");
  gradcheck->add_option("--seed", seed, "Seed")->required();
  gradcheck->add_option("--precision", precision, "32 or 64");
  gradcheck->add_option("--samples", samples, "Coordinates per tensor")->check(CLI::PositiveNumber);

  auto* tradeoff = app.add_subcommand("tradeoff", "Accuracy / compute tradeoff against a baseline");
  std::string baseline;
  std::string candidate;
  std::string weights = "1,0.1,0.1";
  tradeoff->add_option("--baseline", baseline, "report.csv+pckh.csv or pckh:params:madds")->required();
  tradeoff->add_option("--candidate", candidate, "report.csv+pckh.csv or pckh:params:madds")->required();
  tradeoff->add_option("--weights", weights, "w_acc,w_params,w_madds");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    hg::kernels::set_num_threads(threads);
    if (*describe) return run_describe(arch, input_res, describe_csv, sections);
    if (*train) return run_train(config, max_steps, resume);
    if (*eval) {
      if (annotations.empty() && synthetic == 0) {
        throw hg::UsageError("eval: give --annotations or --synthetic");
      }
      return run_eval(checkpoint, annotations, synthetic, data_seed, eval_csv, export_path,
                      refine, group_mean);
    }
    if (*gradcheck) return run_gradcheck(block, network, hourglass, seed, precision, samples);
    if (*tradeoff) return run_tradeoff(baseline, candidate, weights);
  } catch (const hg::TrainingError& e) {
    std::cerr << "training aborted: " << e.what() << '\n';
    return kExitNaN;
  } catch (const hg::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
