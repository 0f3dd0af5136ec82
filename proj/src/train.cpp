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

#include "hgnet/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <fmt/format.h>

#include "hgnet/checkpoint.hpp"
#include "hgnet/error.hpp"
#include "hgnet/kernels.hpp"
#include "hgnet/tape.hpp"
#include "toml.hpp"

namespace hg {

// ---------------------------------------------------------------- config

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("train: learning_rate must be > 0");
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
  if (max_steps < 0) throw ConfigError("train: max_steps must be >= 0");
  if (!(rmsprop_decay > 0.0 && rmsprop_decay < 1.0)) {
    throw ConfigError("train: rmsprop_decay must lie in (0, 1)");
  }
  if (!(rmsprop_eps >= 0.0)) throw ConfigError("train: rmsprop_eps must be >= 0");
  if (threads < 1) throw ConfigError("train: threads must be >= 1");
  if (log_interval < 0) throw ConfigError("train: log_interval must be >= 0");
  if (dataset.count < batch_size) {
    throw ConfigError("train: dataset.count " + std::to_string(dataset.count) +
                      " is smaller than batch_size " + std::to_string(batch_size));
  }
  if (!(dataset.sigma > 0.0)) throw ConfigError("train: dataset.sigma must be > 0");
  if (network.input_resolution % 64 != 0) {
    throw ConfigError("train: synthetic data needs input_resolution divisible by 64");
  }
  loss.validate();
  network.validate();
}

namespace {

using Keys = std::initializer_list<std::string_view>;

void check_keys(const toml::table& t, Keys allowed, const std::string& where) {
  for (const auto& [key, node] : t) {
    if (std::find(allowed.begin(), allowed.end(), key.str()) == allowed.end()) {
      throw ConfigError(where + ": unknown key '" + std::string(key.str()) + "'");
    }
  }
}

template <typename T>
void read(const toml::table& t, std::string_view key, T& out, const std::string& where) {
  const toml::node* node = t.get(key);
  if (node == nullptr) return;
  if constexpr (std::is_same_v<T, double>) {
    if (auto v = node->value<double>()) {
      out = *v;
      return;
    }
  } else if constexpr (std::is_same_v<T, bool>) {
    if (auto v = node->as_boolean()) {
      out = v->get();
      return;
    }
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (auto v = node->as_string()) {
      out = v->get();
      return;
    }
  } else {
    if (auto v = node->as_integer()) {
      const std::int64_t x = v->get();
      if constexpr (std::is_unsigned_v<T>) {
        if (x < 0) throw ConfigError(where + ": '" + std::string(key) + "' must be >= 0");
      }
      out = static_cast<T>(x);
      return;
    }
  }
  throw ConfigError(where + ": '" + std::string(key) + "' has the wrong type");
}

std::string resolve(const std::string& base_dir, const std::string& path) {
  if (path.empty()) return path;
  const std::filesystem::path p(path);
  return p.is_absolute() ? path : (std::filesystem::path(base_dir) / p).string();
}

}  // namespace

TrainConfig parse_train_config(const std::string& toml_text, const std::string& base_dir) {
  toml::table root;
  try {
    root = toml::parse(toml_text);
  } catch (const toml::parse_error& e) {
    throw ConfigError(fmt::format("train config line {}: {}", e.source().begin.line,
                                  e.description()));
  }
  const std::string where = "train config";
  check_keys(root,
             {"learning_rate", "batch_size", "epochs", "max_steps", "rmsprop_decay",
              "rmsprop_eps", "seed", "threads", "precision", "architecture", "loss",
              "dataset", "output"},
             where);
  TrainConfig c;
  read(root, "learning_rate", c.learning_rate, where);
  read(root, "batch_size", c.batch_size, where);
  read(root, "epochs", c.epochs, where);
  read(root, "max_steps", c.max_steps, where);
  read(root, "rmsprop_decay", c.rmsprop_decay, where);
  read(root, "rmsprop_eps", c.rmsprop_eps, where);
  read(root, "seed", c.seed, where);
  read(root, "threads", c.threads, where);
  std::string precision = "f32";
  read(root, "precision", precision, where);
  if (precision == "f32" || precision == "32") {
    c.precision = DType::kF32;
  } else if (precision == "f64" || precision == "64") {
    c.precision = DType::kF64;
  } else {
    throw ConfigError(where + ": precision must be f32 or f64");
  }

  std::string arch;
  read(root, "architecture", arch, where);
  if (arch.empty()) throw ConfigError(where + ": 'architecture' (network JSON path) is required");
  c.network = load_network_config(resolve(base_dir, arch));

  if (const toml::table* loss = root["loss"].as_table()) {
    check_keys(*loss, {"lambda", "alpha", "use_perceptual"}, where + " [loss]");
    read(*loss, "lambda", c.loss.lambda, where + " [loss]");
    read(*loss, "alpha", c.loss.alpha, where + " [loss]");
    read(*loss, "use_perceptual", c.loss.use_perceptual, where + " [loss]");
  }
  if (const toml::table* ds = root["dataset"].as_table()) {
    const std::string w = where + " [dataset]";
    check_keys(*ds, {"kind", "count", "seed", "sigma", "annotations"}, w);
    std::string kind = "synthetic";
    read(*ds, "kind", kind, w);
    if (kind != "synthetic" || ds->contains("annotations")) {
      throw ConfigError(w + ": only synthetic datasets can be trained on; annotation "
                            "files carry no images (use them with eval)");
    }
    read(*ds, "count", c.dataset.count, w);
    read(*ds, "seed", c.dataset.seed, w);
    read(*ds, "sigma", c.dataset.sigma, w);
  }
  if (const toml::table* out = root["output"].as_table()) {
    const std::string w = where + " [output]";
    check_keys(*out, {"checkpoint", "log", "log_interval", "resume"}, w);
    read(*out, "checkpoint", c.checkpoint, w);
    read(*out, "log", c.log, w);
    read(*out, "log_interval", c.log_interval, w);
    read(*out, "resume", c.resume, w);
    c.checkpoint = resolve(base_dir, c.checkpoint);
    c.log = resolve(base_dir, c.log);
  }
  c.validate();
  return c;
}

TrainConfig load_train_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open train config '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  const auto dir = std::filesystem::path(path).parent_path();
  return parse_train_config(text.str(), dir.empty() ? "." : dir.string());
}

// ------------------------------------------------------------------ train

std::vector<std::size_t> epoch_order(std::size_t count, std::uint64_t seed, int epoch) {
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), 0);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch), 0x5eedu};
  std::mt19937_64 rng(seq);
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

std::string log_header(int stacks) {
  std::string h = "epoch,step,loss_total";
  for (int s = 1; s <= stacks; ++s) h += fmt::format(",loss_hg{}", s);
  return h + ",loss_percep,lr,seconds\n";
}

std::string log_row(const StepRecord& r, double learning_rate, double seconds) {
  std::string row = fmt::format("{},{},{:.9g}", r.epoch, r.step, r.loss.total);
  for (double l : r.loss.per_stack_mse) row += fmt::format(",{:.9g}", l);
  return row + fmt::format(",{:.9g},{:g},{:.3f}\n", r.loss.l_percep, learning_rate, seconds);
}

TrainResult train_steps(Network& network, Rmsprop& optimizer,
                        std::span<const PoseSample> data, const TrainConfig& config,
                        std::int64_t first_step, std::int64_t last_step,
                        const std::function<void(const StepRecord&)>& on_step) {
  const auto batches = static_cast<std::int64_t>(data.size()) / config.batch_size;
  if (batches < 1) throw ConfigError("train: dataset smaller than one batch");
  TrainResult result;
  std::vector<std::size_t> order;
  int order_epoch = -1;
  for (std::int64_t step = first_step; step < last_step; ++step) {
    const int epoch = static_cast<int>(step / batches);
    const std::int64_t b = step % batches;
    if (epoch != order_epoch) {
      order = epoch_order(data.size(), config.seed, epoch);
      order_epoch = epoch;
    }
    const std::span<const std::size_t> idx(order.data() + b * config.batch_size,
                                           static_cast<std::size_t>(config.batch_size));
    const Tensor images = batch_images(data, idx, network.dtype());
    const Tensor targets = batch_targets(data, idx, config.dataset.sigma, network.dtype());

    Tape tape;
    LossResult loss;
    {
      TapeScope scope(tape);
      const NetworkOutput out = network.forward(images, ForwardContext{true});
      loss = total_loss(out, targets, config.loss);
    }
    if (!std::isfinite(loss.breakdown.total)) {
      throw TrainingError(fmt::format("non-finite loss at step {} (epoch {})", step + 1, epoch));
    }
    tape.backward(loss.total);
    optimizer.step();
    optimizer.zero_grad();

    StepRecord rec{epoch, step + 1, loss.breakdown};
    if (on_step) on_step(rec);
    result.steps.push_back(std::move(rec));
  }
  result.final_step = std::max(first_step, last_step);
  return result;
}

namespace {

StepRecord mean_of(std::span<const StepRecord> records) {
  StepRecord m = records.back();
  const double n = static_cast<double>(records.size());
  m.loss.total = 0;
  m.loss.l_percep = 0;
  std::fill(m.loss.per_stack_mse.begin(), m.loss.per_stack_mse.end(), 0.0);
  for (const StepRecord& r : records) {
    m.loss.total += r.loss.total / n;
    m.loss.l_percep += r.loss.l_percep / n;
    for (std::size_t s = 0; s < r.loss.per_stack_mse.size(); ++s) {
      m.loss.per_stack_mse[s] += r.loss.per_stack_mse[s] / n;
    }
  }
  return m;
}

}  // namespace

TrainResult train(const TrainConfig& config) {
  config.validate();
  kernels::set_num_threads(config.threads);

  std::unique_ptr<Network> network;
  std::optional<RmspropState> state;
  std::int64_t start = 0;
  nlohmann::json resume_meta = nlohmann::json::object();
  const bool resuming = config.resume && !config.checkpoint.empty() &&
                        std::filesystem::exists(config.checkpoint);
  if (resuming) {
    Checkpoint ck = load_checkpoint(config.checkpoint);
    if (to_json(ck.network->config()) != to_json(config.network)) {
      throw ConfigError("train: checkpoint architecture differs from the configured one");
    }
    if (ck.network->dtype() != config.precision) {
      throw ConfigError("train: checkpoint precision differs from the configured one");
    }
    network = std::move(ck.network);
    state = std::move(ck.optimizer);
    start = ck.meta.value("step", std::int64_t{0});
    resume_meta = ck.meta;
  } else {
    network = std::make_unique<Network>(config.network, config.seed, config.precision);
  }
  const RmspropOptions opts{config.learning_rate, config.rmsprop_decay, config.rmsprop_eps};
  Rmsprop optimizer = state ? Rmsprop(network->parameters(), opts, std::move(*state))
                            : Rmsprop(network->parameters(), opts);

  const std::vector<PoseSample> data = generate_synthetic_dataset(
      config.dataset.count, config.network.input_resolution, config.dataset.seed);
  const std::int64_t batches = config.dataset.count / config.batch_size;
  const std::int64_t total = config.max_steps > 0 ? config.max_steps : config.epochs * batches;

  // Rows fall on epoch ends and interval multiples; a run that stops
  // elsewhere also writes a closing row. Resume drops such closing rows and
  // anything past the checkpoint, and folds the losses they covered (kept
  // in the checkpoint) into the next row, so the log matches an
  // uninterrupted run.
  auto boundary = [&](std::int64_t step) {
    return step % batches == 0 || (config.log_interval > 0 && step % config.log_interval == 0);
  };
  std::vector<StepRecord> pending;
  for (const auto& l : resume_meta.value("pending", nlohmann::json::array())) {
    StepRecord r;
    r.loss.total = l.at(0).get<double>();
    r.loss.l_percep = l.at(1).get<double>();
    r.loss.per_stack_mse = l.at(2).get<std::vector<double>>();
    pending.push_back(std::move(r));
  }

  std::ofstream log;
  if (!config.log.empty()) {
    if (resuming && std::filesystem::exists(config.log)) {
      std::ifstream in(config.log);
      std::string kept, line;
      for (bool header = true; std::getline(in, line); header = false) {
        const auto a = line.find(',');
        const auto b = a == std::string::npos ? a : line.find(',', a + 1);
        if (!header && b == std::string::npos) continue;
        const std::int64_t step = header ? 0 : std::stoll(line.substr(a + 1, b - a - 1));
        if (header || (step <= start && boundary(step))) kept += line + "\n";
      }
      in.close();
      log.open(config.log, std::ios::trunc);
      log << kept;
    } else {
      log.open(config.log, std::ios::trunc);
      log << log_header(config.network.num_stacks);
    }
    if (!log) throw IoError("cannot write log '" + config.log + "'");
  }

  const auto t0 = std::chrono::steady_clock::now();
  auto seconds = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };
  auto on_step = [&](const StepRecord& rec) {
    pending.push_back(rec);
    const bool epoch_end = rec.step % batches == 0;
    const bool last = rec.step == total;
    if ((boundary(rec.step) || last) && log.is_open()) {
      log << log_row(mean_of(pending), config.learning_rate, seconds());
      log.flush();
    }
    if ((epoch_end || last) && !config.checkpoint.empty()) {
      nlohmann::json meta{{"step", rec.step}, {"epoch", rec.epoch}};
      if (!boundary(rec.step) && log.is_open()) {
        nlohmann::json open = nlohmann::json::array();
        for (const StepRecord& r : pending) {
          open.push_back({r.loss.total, r.loss.l_percep, r.loss.per_stack_mse});
        }
        meta["pending"] = std::move(open);
      }
      save_checkpoint(config.checkpoint, *network, &optimizer.state(), meta);
    }
    if (boundary(rec.step) || last) pending.clear();
  };
  return train_steps(*network, optimizer, data, config, start, total, on_step);
}

// --------------------------------------------------------------- evaluate

EvalResult evaluate(Network& network, std::span<const PoseSample> samples, int batch_size,
                    bool refine, PckhMean mean_mode) {
  if (samples.empty()) throw UsageError("evaluate: no samples");
  const int r = network.config().input_resolution;
  for (const PoseSample& s : samples) {
    if (s.image.shape().h != r || s.image.shape().w != r) {
      throw ConfigError("evaluate: sample resolution " + std::to_string(s.image.shape().h) +
                        " does not match the network's " + std::to_string(r));
    }
  }
  EvalResult result;
  std::vector<Joints> truth;
  std::vector<double> heads;
  std::vector<Visibility> visible;
  for (std::size_t begin = 0; begin < samples.size();
       begin += static_cast<std::size_t>(batch_size)) {
    const std::size_t end = std::min(samples.size(), begin + batch_size);
    std::vector<std::size_t> idx(end - begin);
    std::iota(idx.begin(), idx.end(), begin);
    const Tensor images = batch_images(samples, idx, network.dtype());
    const NetworkOutput out = network.forward(images, ForwardContext{false});
    const auto decoded = decode_heatmap(out.heatmaps.back(), refine);
    for (std::size_t b = 0; b < decoded.size(); ++b) {
      Joints p{};
      for (int j = 0; j < kNumJoints && j < static_cast<int>(decoded[b].size()); ++j) {
        p[j] = {decoded[b][j].x * kHeatmapStride, decoded[b][j].y * kHeatmapStride};
      }
      result.predictions.push_back(p);
    }
  }
  for (const PoseSample& s : samples) {
    truth.push_back(s.joints);
    heads.push_back(s.head_size);
    visible.push_back(s.visible);
  }
  result.pckh = pckh(result.predictions, truth, heads, visible, 0.5, mean_mode);
  return result;
}

EvalResult evaluate_annotations(std::span<const Annotation> records, PckhMean mean_mode) {
  EvalResult result;
  std::vector<Joints> truth;
  std::vector<double> heads;
  std::vector<Visibility> visible;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!records[i].pred_joints) {
      throw DataError("evaluate: annotation record " + std::to_string(i + 1) +
                      " has no pred_joints");
    }
    result.predictions.push_back(*records[i].pred_joints);
    truth.push_back(records[i].joints);
    heads.push_back(records[i].head_size);
    visible.push_back(records[i].visible);
  }
  result.pckh = pckh(result.predictions, truth, heads, visible, 0.5, mean_mode);
  return result;
}

// -------------------------------------------------------------- gradcheck

double GradcheckReport::max_rel_error() const {
  double m = 0.0;
  for (const GradcheckEntry& e : entries) m = std::max(m, e.max_rel_error);
  return m;
}

GradcheckReport gradcheck(const std::function<Tensor()>& output, const Tensor& projection,
                          const std::vector<NamedTensor>& wrt,
                          const GradcheckOptions& options, const GradcheckReference* reference) {
  if (reference != nullptr && reference->wrt.size() != wrt.size()) {
    throw UsageError("gradcheck: reference tensors do not match the checked tensors");
  }
  for (const NamedTensor& w : wrt) {
    Tensor t = w.tensor;
    t.zero_grad();
    t.set_requires_grad(true);
  }
  std::uint64_t base_signature = 0;
  {
    Tape tape;
    Tensor loss;
    {
      TapeScope scope(tape);
      BranchTrace trace;
      loss = sum(mul(output(), projection));
      base_signature = trace.signature();
    }
    tape.backward(loss);
  }
  const std::vector<double> r = projection.to_vector();
  const std::function<Tensor()>& fd_output = reference ? reference->output : output;
  auto eval = [&](std::uint64_t& signature) {
    BranchTrace trace;
    std::vector<double> v = fd_output().to_vector();
    signature = trace.signature();
    return v;
  };
  if (reference != nullptr) eval(base_signature);

  std::mt19937_64 rng(options.seed);
  GradcheckReport report;
  for (std::size_t wi = 0; wi < wrt.size(); ++wi) {
    const NamedTensor& w = wrt[wi];
    const std::vector<double> analytic = w.tensor.grad_vector();
    Tensor t = reference ? reference->wrt[wi].tensor : w.tensor;
    const std::size_t n = t.numel();
    std::vector<std::size_t> pool(n);
    std::iota(pool.begin(), pool.end(), 0);
    std::shuffle(pool.begin(), pool.end(), rng);
    const std::size_t wanted = std::min<std::size_t>(n, static_cast<std::size_t>(options.samples));

    GradcheckEntry entry{w.name, 0.0, 0, 0};
    for (std::size_t k = 0; k < pool.size() && static_cast<std::size_t>(entry.checked) < wanted;
         ++k) {
      const std::size_t i = pool[k];
      const double orig = t.at(i);
      std::uint64_t sp = 0;
      std::uint64_t sm = 0;
      t.set(i, orig + options.step);
      const std::vector<double> plus = eval(sp);
      t.set(i, orig - options.step);
      const std::vector<double> minus = eval(sm);
      t.set(i, orig);
      if (sp != base_signature || sm != base_signature) {
        if (++entry.resampled > options.max_resample) break;
        continue;
      }
      // Differencing per output element before projecting keeps the
      // rounding noise of large, unaffected outputs out of the estimate.
      long double diff = 0.0L;
      for (std::size_t j = 0; j < r.size(); ++j) {
        diff += static_cast<long double>(r[j]) * (plus[j] - minus[j]);
      }
      const double numeric = static_cast<double>(diff / (2.0L * options.step));
      const double a = analytic[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
      entry.max_rel_error = std::max(entry.max_rel_error, std::abs(a - numeric) / denom);
      ++entry.checked;
    }
    report.entries.push_back(entry);
  }
  return report;
}

namespace {

Tensor random_tensor(Shape s, DType dtype, std::mt19937_64& rng) {
  Tensor t = Tensor::zeros(s, dtype);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (std::size_t i = 0; i < t.numel(); ++i) t.set(i, dist(rng));
  return t;
}

// Moves batch-norm affine parameters and running statistics off their
// initial values so every path carries a generic gradient.
void perturb_batchnorm(const Module& m, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(0.5, 1.5);
  for (const NamedTensor& p : m.parameters()) {
    if (p.name.ends_with("/gamma") || p.name.ends_with("/beta")) {
      Tensor t = p.tensor;
      for (std::size_t i = 0; i < t.numel(); ++i) t.set(i, dist(rng) - (p.name.ends_with("/beta") ? 1.0 : 0.0));
    }
  }
  for (const NamedTensor& b : m.buffers()) {
    Tensor t = b.tensor;
    const bool var = b.name.ends_with("/running_var");
    for (std::size_t i = 0; i < t.numel(); ++i) t.set(i, var ? dist(rng) : dist(rng) - 1.0);
  }
}

std::vector<NamedTensor> with_input(const Module& m, const Tensor& x) {
  std::vector<NamedTensor> wrt{{"input", x}};
  for (const NamedTensor& p : m.parameters()) wrt.push_back(p);
  return wrt;
}

void copy_values(const Tensor& from, Tensor to) {
  for (std::size_t i = 0; i < from.numel(); ++i) to.set(i, from.at(i));
}

// Copies parameters and buffers of `from` into the same-shaped `to`.
void copy_module(const Module& from, const Module& to) {
  const auto fp = from.parameters();
  const auto tp = to.parameters();
  for (std::size_t i = 0; i < fp.size(); ++i) copy_values(fp[i].tensor, tp[i].tensor);
  const auto fb = from.buffers();
  const auto tb = to.buffers();
  for (std::size_t i = 0; i < fb.size(); ++i) copy_values(fb[i].tensor, tb[i].tensor);
}

// Runs the check; for 32-bit modules the differences are taken on a 64-bit
// twin holding the same values, so only the 32-bit backward is under test.
template <class Make, class Forward>
GradcheckReport check_module(Make make, Forward forward, Shape in, Shape out,
                             const GradcheckOptions& options, DType dtype) {
  std::mt19937_64 rng(options.seed);
  auto m = make(dtype);
  perturb_batchnorm(*m, rng);
  Tensor x = random_tensor(in, dtype, rng);
  const Tensor r = random_tensor(out, dtype, rng);
  auto output = [&] { return forward(*m, x); };
  if (dtype == DType::kF64) return gradcheck(output, r, with_input(*m, x), options);
  auto twin = make(DType::kF64);
  copy_module(*m, *twin);
  Tensor x64 = Tensor::zeros(in, DType::kF64);
  copy_values(x, x64);
  GradcheckReference ref{[&] { return forward(*twin, x64); }, with_input(*twin, x64)};
  return gradcheck(output, r, with_input(*m, x), options, &ref);
}

}  // namespace

GradcheckReport gradcheck_block(BlockKind kind, const GradcheckOptions& options, DType dtype) {
  BlockSpec spec;
  spec.kind = kind;
  spec.in_channels = 16;
  spec.out_channels = 16;
  auto make = [&](DType d) {
    Initializer init(options.seed, d);
    return make_block(spec, std::string(block_kind_name(kind)), init);
  };
  auto forward = [](Block& b, const Tensor& x) { return b.forward(x, ForwardContext{false}); };
  return check_module(make, forward, {2, 16, 6, 6}, {2, 16, 6, 6}, options, dtype);
}

GradcheckReport gradcheck_hourglass(int depth, SkipMode skip_mode,
                                    const GradcheckOptions& options, DType dtype) {
  NetworkConfig c;
  c.hourglass_depth = depth;
  c.channels_main = 8;
  c.channels_inner = 4;
  c.skip_mode = skip_mode;
  auto make = [&](DType d) {
    Initializer init(options.seed, d);
    return std::make_unique<Hourglass>("hg", depth, c, init);
  };
  auto forward = [](Hourglass& h, const Tensor& x) {
    return h.forward(x, ForwardContext{false}).output;
  };
  const int side = 2 << depth;
  return check_module(make, forward, {1, 8, side, side}, {1, 8, side, side}, options,
                                 dtype);
}

GradcheckReport gradcheck_network(const NetworkConfig& config, const GradcheckOptions& options,
                                  DType dtype) {
  auto make = [&](DType d) { return std::make_unique<Network>(config, options.seed, d); };
  auto forward = [](Network& n, const Tensor& x) {
    return concat_channels(n.forward(x, ForwardContext{false}).heatmaps);
  };
  const int res = config.input_resolution;
  return check_module(make, forward, {1, 3, res, res},
                               {1, config.num_joints * config.num_stacks, res / 4, res / 4},
                               options, dtype);
}

}  // namespace hg
