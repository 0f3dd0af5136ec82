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

#include "hgnet/complexity.hpp"

#include <map>

#include <fmt/format.h>

#include "hgnet/error.hpp"

namespace hg {
namespace {

std::string shape_csv(const Shape& s) {
  return fmt::format("{}x{}x{}x{}", s.n, s.c, s.h, s.w);
}

std::string layer_of(const std::string& tensor_name) {
  const auto slash = tensor_name.rfind('/');
  return slash == std::string::npos ? tensor_name : tensor_name.substr(0, slash);
}

void add_totals(ComplexityReport& r) {
  r.total_params = 0;
  r.total_madds = 0;
  for (const ComplexityRow& row : r.rows) {
    r.total_params += row.params;
    r.total_madds += row.madds;
  }
}

}  // namespace

std::string ComplexityReport::to_csv() const {
  std::string out = "layer,kind,params,madds,output_shape\n";
  for (const ComplexityRow& r : rows) {
    out += fmt::format("{},{},{},{},{}\n", r.layer, r.kind, r.params, r.madds,
                       shape_csv(r.output));
  }
  out += fmt::format("total,,{},{},{}\n", total_params, total_madds,
                     shape_csv(input_shape));
  return out;
}

std::string ComplexityReport::to_table() const {
  std::size_t width = 5;
  for (const ComplexityRow& r : rows) width = std::max(width, r.layer.size());
  std::string out = fmt::format("{:<{}}  {:>10}  {:>14}  {}\n", "layer", width,
                                "params", "madds", "output");
  for (const ComplexityRow& r : rows) {
    out += fmt::format("{:<{}}  {:>10}  {:>14}  {}\n", r.layer, width, r.params,
                       r.madds, r.output.str());
  }
  out += fmt::format("{:<{}}  {:>10}  {:>14}  input {}\n", "total", width,
                     total_params, total_madds, input_shape.str());
  out += fmt::format("params {:.4f}M  madds {:.4f}G\n", total_params / 1e6,
                     total_madds / 1e9);
  return out;
}

std::int64_t enumerate_params(const Module& module) {
  std::int64_t n = 0;
  for (const NamedTensor& p : module.parameters()) {
    n += static_cast<std::int64_t>(p.tensor.numel());
  }
  return n;
}

ComplexityReport count_params(const Network& network) {
  ComplexityReport report;
  std::map<std::string, std::size_t> index;
  for (const NamedTensor& p : network.parameters()) {
    const std::string layer = layer_of(p.name);
    auto [it, inserted] = index.emplace(layer, report.rows.size());
    if (inserted) {
      const bool bn = p.name.ends_with("/gamma") || p.name.ends_with("/beta");
      report.rows.push_back({layer, bn ? "batchnorm" : "conv", 0, 0, {}});
    }
    report.rows[it->second].params += static_cast<std::int64_t>(p.tensor.numel());
  }
  const int r = network.config().input_resolution;
  report.input_shape = {1, 3, r, r};
  add_totals(report);
  return report;
}

ComplexityReport count_madds(Network& network, Shape input_shape) {
  ComplexityReport report;
  report.input_shape = input_shape;
  {
    LayerProfiler profiler(input_shape.n);
    network.forward(Tensor::meta(input_shape, network.dtype()), ForwardContext{false});
    for (const LayerRecord& rec : profiler.records()) {
      report.rows.push_back({rec.name, rec.kind, rec.params, rec.madds, rec.output});
    }
  }
  add_totals(report);
  return report;
}

ComplexityReport profile(Network& network) {
  const int r = network.config().input_resolution;
  return count_madds(network, {1, 3, r, r});
}

std::vector<ComplexityRow> section_totals(const ComplexityReport& report,
                                          int levels) {
  std::vector<ComplexityRow> out;
  std::map<std::string, std::size_t> index;
  for (const ComplexityRow& row : report.rows) {
    std::size_t cut = std::string::npos;
    for (std::size_t from = 0, i = 0; i < static_cast<std::size_t>(levels); ++i) {
      cut = row.layer.find('/', from);
      if (cut == std::string::npos) break;
      from = cut + 1;
    }
    const std::string key = row.layer.substr(0, cut);
    auto [it, inserted] = index.emplace(key, out.size());
    if (inserted) out.push_back({key, "section", 0, 0, {}});
    out[it->second].params += row.params;
    out[it->second].madds += row.madds;
  }
  return out;
}

ComplexityDelta compare(const ComplexityReport& baseline,
                        const ComplexityReport& candidate) {
  if (baseline.input_shape != candidate.input_shape) {
    throw UsageError("compare: reports use different input shapes (" +
                     baseline.input_shape.str() + " vs " +
                     candidate.input_shape.str() + ")");
  }
  if (baseline.total_params == 0 || baseline.total_madds == 0) {
    throw UsageError("compare: baseline has zero params or madds");
  }
  auto pct = [](double base, double cand) { return 100.0 * (cand - base) / base; };
  return {pct(baseline.total_params, candidate.total_params),
          pct(baseline.total_madds, candidate.total_madds)};
}

}  // namespace hg
