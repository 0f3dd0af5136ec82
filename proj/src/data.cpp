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

#include "hgnet/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "hgnet/error.hpp"
#include "json.hpp"

namespace hg {

using nlohmann::json;

Tensor make_gaussian_target(std::span<const Point> joints,
                            std::span<const bool> visible, int out_resolution,
                            double sigma, DType dtype) {
  if (joints.size() != visible.size()) {
    throw UsageError("make_gaussian_target: joints and visibility differ in length");
  }
  if (out_resolution < 1 || !(sigma > 0.0)) {
    throw UsageError("make_gaussian_target: need out_resolution >= 1 and sigma > 0");
  }
  const int r = out_resolution;
  const int count = static_cast<int>(joints.size());
  Tensor t = Tensor::zeros({1, count, r, r}, dtype);
  const double in_extent = static_cast<double>(kHeatmapStride) * r;
  const double inv = 1.0 / (2.0 * sigma * sigma);
  visit_dtype(dtype, [&](auto tag) {
    using T = decltype(tag);
    auto v = t.values<T>();
    for (int j = 0; j < count; ++j) {
      if (!visible[j]) continue;
      const Point& p = joints[j];
      if (!(p.x >= 0.0 && p.x < in_extent && p.y >= 0.0 && p.y < in_extent)) {
        throw DataError("make_gaussian_target: visible joint " + std::to_string(j) +
                        " at (" + std::to_string(p.x) + ", " + std::to_string(p.y) +
                        ") is outside the frame");
      }
      const double cx = std::round(p.x / kHeatmapStride);
      const double cy = std::round(p.y / kHeatmapStride);
      T* plane = v.data() + offset(t.shape(), 0, j, 0, 0);
      for (int y = 0; y < r; ++y) {
        for (int x = 0; x < r; ++x) {
          const double dx = x - cx;
          const double dy = y - cy;
          plane[y * r + x] = static_cast<T>(std::exp(-(dx * dx + dy * dy) * inv));
        }
      }
    }
  });
  return t;
}

// ------------------------------------------------------------- synthetic

namespace {

// Limb pairs, drawn in this order.
constexpr std::array<std::array<int, 2>, 15> kBones{{
    {0, 1}, {1, 2}, {2, 6}, {6, 3}, {3, 4}, {4, 5}, {6, 7}, {7, 8},
    {8, 9}, {7, 12}, {12, 11}, {11, 10}, {7, 13}, {13, 14}, {14, 15}}};

enum class Side { kRight, kLeft, kCentre };

Side side_of(int joint) {
  switch (joint) {
    case 0: case 1: case 2: case 10: case 11: case 12: return Side::kRight;
    case 3: case 4: case 5: case 13: case 14: case 15: return Side::kLeft;
    default: return Side::kCentre;
  }
}

using Rgb = std::array<float, 3>;

Rgb bone_colour(const std::array<int, 2>& bone) {
  const Side s = side_of(bone[1]) == Side::kCentre ? side_of(bone[0]) : side_of(bone[1]);
  switch (s) {
    case Side::kRight: return {0.95f, 0.35f, 0.30f};
    case Side::kLeft: return {0.30f, 0.90f, 0.35f};
    default: return {0.40f, 0.45f, 0.95f};
  }
}

Rgb joint_colour(int joint) {
  // Evenly spaced hues, full saturation.
  const double h = 6.0 * joint / kNumJoints;
  const double f = h - std::floor(h);
  const auto q = static_cast<float>(1.0 - f);
  const auto t = static_cast<float>(f);
  switch (static_cast<int>(h)) {
    case 0: return {1.f, t, 0.f};
    case 1: return {q, 1.f, 0.f};
    case 2: return {0.f, 1.f, t};
    case 3: return {0.f, q, 1.f};
    case 4: return {t, 0.f, 1.f};
    default: return {1.f, 0.f, q};
  }
}

class Canvas {
 public:
  Canvas(Tensor& image, int res) : v_(image.values<float>()), res_(res) {}

  void blend(int x, int y, const Rgb& c, double alpha) {
    if (x < 0 || y < 0 || x >= res_ || y >= res_ || alpha <= 0.0) return;
    const auto a = static_cast<float>(std::min(alpha, 1.0));
    for (int ch = 0; ch < 3; ++ch) {
      float& px = v_[(static_cast<std::size_t>(ch) * res_ + y) * res_ + x];
      px = px * (1.f - a) + c[ch] * a;
    }
  }

  // Anti-aliased thick segment: coverage falls off linearly over one pixel
  // past the half width.
  void segment(const Point& a, const Point& b, double half_width, const Rgb& c) {
    const double pad = half_width + 1.0;
    const int x0 = static_cast<int>(std::floor(std::min(a.x, b.x) - pad));
    const int x1 = static_cast<int>(std::ceil(std::max(a.x, b.x) + pad));
    const int y0 = static_cast<int>(std::floor(std::min(a.y, b.y) - pad));
    const int y1 = static_cast<int>(std::ceil(std::max(a.y, b.y) + pad));
    const double dx = b.x - a.x;
    const double dy = b.y - a.y;
    const double len2 = dx * dx + dy * dy;
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        double t = len2 > 0 ? ((x - a.x) * dx + (y - a.y) * dy) / len2 : 0.0;
        t = std::clamp(t, 0.0, 1.0);
        const double d = std::hypot(x - (a.x + t * dx), y - (a.y + t * dy));
        blend(x, y, c, half_width + 0.5 - d);
      }
    }
  }

  void blob(const Point& p, double radius, const Rgb& c) {
    const int r = static_cast<int>(std::ceil(3 * radius));
    const int cx = static_cast<int>(std::round(p.x));
    const int cy = static_cast<int>(std::round(p.y));
    for (int y = cy - r; y <= cy + r; ++y) {
      for (int x = cx - r; x <= cx + r; ++x) {
        const double d2 = (x - p.x) * (x - p.x) + (y - p.y) * (y - p.y);
        blend(x, y, c, std::exp(-d2 / (2 * radius * radius)));
      }
    }
  }

 private:
  std::span<float> v_;
  int res_;
};

// Skeleton in body units (height ~ 1), y pointing down, pelvis at origin.
Joints random_skeleton(std::mt19937_64& rng) {
  auto uni = [&](double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };
  auto step = [](const Point& from, double length, double angle) {
    // angle 0 points down, positive turns towards +x.
    return Point{from.x + length * std::sin(angle), from.y + length * std::cos(angle)};
  };
  constexpr double pi = std::numbers::pi;
  Joints j{};
  const double lean = uni(-0.3, 0.3);
  const Point across{std::cos(lean), std::sin(-lean)};  // perpendicular to torso
  j[6] = {0.0, 0.0};
  j[7] = step(j[6], uni(0.28, 0.34), pi + lean);
  j[8] = step(j[7], uni(0.06, 0.09), pi + lean + uni(-0.2, 0.2));
  j[9] = step(j[8], uni(0.10, 0.14), pi + lean + uni(-0.4, 0.4));
  const double hip = uni(0.08, 0.11);
  j[2] = {j[6].x - hip * across.x, j[6].y - hip * across.y};
  j[3] = {j[6].x + hip * across.x, j[6].y + hip * across.y};
  const double shoulder = uni(0.10, 0.14);
  j[12] = {j[7].x - shoulder * across.x, j[7].y - shoulder * across.y};
  j[13] = {j[7].x + shoulder * across.x, j[7].y + shoulder * across.y};
  for (const auto& [h, k, a] : {std::array<int, 3>{2, 1, 0}, std::array<int, 3>{3, 4, 5}}) {
    const double thigh = uni(-0.5, 0.5);
    j[k] = step(j[h], uni(0.22, 0.27), thigh);
    j[a] = step(j[k], uni(0.22, 0.27), thigh + uni(-0.6, 0.6));
  }
  for (const auto& [s, e, w] : {std::array<int, 3>{12, 11, 10}, std::array<int, 3>{13, 14, 15}}) {
    const double upper = uni(-2.5, 2.5);
    j[e] = step(j[s], uni(0.15, 0.19), upper);
    j[w] = step(j[e], uni(0.13, 0.17), upper + uni(-1.5, 1.5));
  }
  return j;
}

PoseSample synthetic_sample(int res, std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  std::mt19937_64 rng(seq);
  auto uni = [&](double lo, double hi) {
    return hi > lo ? std::uniform_real_distribution<double>(lo, hi)(rng) : lo;
  };

  PoseSample s;
  Joints body = random_skeleton(rng);

  // Fit into [margin, res - 1 - margin] at a random scale and position.
  const double margin = std::max(4.0, res / 16.0);
  const double span = res - 1 - 2 * margin;
  double lo_x = body[0].x, hi_x = lo_x, lo_y = body[0].y, hi_y = lo_y;
  for (const Point& p : body) {
    lo_x = std::min(lo_x, p.x);
    hi_x = std::max(hi_x, p.x);
    lo_y = std::min(lo_y, p.y);
    hi_y = std::max(hi_y, p.y);
  }
  const double extent = std::max(hi_x - lo_x, hi_y - lo_y);
  const double scale = std::min(uni(0.55, 0.9) * res, span / extent);
  const double off_x = margin + uni(0.0, span - scale * (hi_x - lo_x));
  const double off_y = margin + uni(0.0, span - scale * (hi_y - lo_y));
  for (int j = 0; j < kNumJoints; ++j) {
    s.joints[j] = {off_x + scale * (body[j].x - lo_x), off_y + scale * (body[j].y - lo_y)};
    // Head joints stay visible so the head size is always observable.
    s.visible[j] = j == 8 || j == 9 || uni(0.0, 1.0) < 0.92;
  }
  s.head_size = std::hypot(s.joints[9].x - s.joints[8].x, s.joints[9].y - s.joints[8].y);

  s.image = Tensor::zeros({1, 3, res, res}, DType::kF32);
  auto v = s.image.values<float>();
  const std::array<double, 3> base{uni(0.05, 0.3), uni(0.05, 0.3), uni(0.05, 0.3)};
  for (int ch = 0; ch < 3; ++ch) {
    for (std::size_t i = 0; i < static_cast<std::size_t>(res) * res; ++i) {
      v[ch * static_cast<std::size_t>(res) * res + i] =
          static_cast<float>(base[ch] + uni(-0.05, 0.05));
    }
  }
  Canvas canvas(s.image, res);
  const double half_width = std::max(0.75, res / 64.0);
  for (const auto& bone : kBones) {
    canvas.segment(s.joints[bone[0]], s.joints[bone[1]], half_width, bone_colour(bone));
  }
  const double radius = std::max(1.0, res / 48.0);
  for (int j = 0; j < kNumJoints; ++j) {
    if (s.visible[j]) canvas.blob(s.joints[j], radius, joint_colour(j));
  }
  for (float& px : v) px = std::clamp(px, 0.f, 1.f);
  return s;
}

}  // namespace

std::vector<PoseSample> generate_synthetic_dataset(int count, int resolution,
                                                   std::uint64_t seed) {
  if (count < 1) throw ConfigError("synthetic dataset: count must be >= 1");
  if (resolution < 64 || resolution % 64 != 0) {
    throw ConfigError("synthetic dataset: resolution must be a positive multiple of 64");
  }
  std::vector<PoseSample> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    out.push_back(synthetic_sample(resolution, seed, static_cast<std::uint64_t>(i)));
  }
  return out;
}

Tensor batch_images(std::span<const PoseSample> samples,
                    std::span<const std::size_t> indices, DType dtype) {
  if (indices.empty()) throw UsageError("batch_images: empty batch");
  const Shape one = samples[indices[0]].image.shape();
  Tensor out = Tensor::zeros({static_cast<int>(indices.size()), 3, one.h, one.w}, dtype);
  visit_dtype(dtype, [&](auto tag) {
    using T = decltype(tag);
    auto dst = out.values<T>();
    for (std::size_t b = 0; b < indices.size(); ++b) {
      const auto src = samples[indices[b]].image.values<float>();
      std::transform(src.begin(), src.end(), dst.begin() + b * one.numel(),
                     [](float x) { return static_cast<T>(x); });
    }
  });
  return out;
}

Tensor batch_targets(std::span<const PoseSample> samples,
                     std::span<const std::size_t> indices, double sigma,
                     DType dtype) {
  if (indices.empty()) throw UsageError("batch_targets: empty batch");
  const int r = samples[indices[0]].image.shape().h / kHeatmapStride;
  Tensor out = Tensor::zeros({static_cast<int>(indices.size()), kNumJoints, r, r}, dtype);
  visit_dtype(dtype, [&](auto tag) {
    using T = decltype(tag);
    auto dst = out.values<T>();
    for (std::size_t b = 0; b < indices.size(); ++b) {
      const PoseSample& s = samples[indices[b]];
      const Tensor t = make_gaussian_target(s.joints, s.visible, r, sigma, dtype);
      const auto src = t.values<T>();
      std::copy(src.begin(), src.end(), dst.begin() + b * src.size());
    }
  });
  return out;
}

// ------------------------------------------------------------- annotations

namespace {

Joints parse_joints(const json& j, const char* key) {
  if (!j.is_array() || j.size() != kNumJoints) {
    throw DataError(std::string("'") + key + "' must hold 16 [x, y] pairs");
  }
  Joints out{};
  for (int i = 0; i < kNumJoints; ++i) {
    const json& p = j[i];
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
      throw DataError(std::string("'") + key + "' entry " + std::to_string(i) +
                      " is not an [x, y] number pair");
    }
    out[i] = {p[0].get<double>(), p[1].get<double>()};
  }
  return out;
}

Annotation parse_line(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error&) {
    throw DataError("not valid JSON");
  }
  if (!j.is_object()) throw DataError("expected a JSON object");
  for (const char* key : {"joints", "visible", "head_size"}) {
    if (!j.contains(key)) throw DataError(std::string("missing field '") + key + "'");
  }
  Annotation a;
  a.joints = parse_joints(j["joints"], "joints");
  const json& vis = j["visible"];
  if (!vis.is_array() || vis.size() != kNumJoints) {
    throw DataError("'visible' must hold 16 booleans");
  }
  for (int i = 0; i < kNumJoints; ++i) {
    if (!vis[i].is_boolean()) throw DataError("'visible' must hold 16 booleans");
    a.visible[i] = vis[i].get<bool>();
  }
  if (!j["head_size"].is_number()) throw DataError("'head_size' must be a number");
  a.head_size = j["head_size"].get<double>();
  if (!(a.head_size > 0.0)) throw DataError("'head_size' must be positive");
  if (j.contains("pred_joints")) a.pred_joints = parse_joints(j["pred_joints"], "pred_joints");
  return a;
}

json joints_json(const Joints& joints) {
  json arr = json::array();
  for (const Point& p : joints) arr.push_back({p.x, p.y});
  return arr;
}

}  // namespace

std::vector<Annotation> parse_annotations(const std::string& text) {
  std::vector<Annotation> out;
  std::istringstream in(text);
  std::string line;
  for (int number = 1; std::getline(in, line); ++number) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(parse_line(line));
    } catch (const DataError& e) {
      throw DataError("annotations line " + std::to_string(number) + ": " + e.what());
    }
  }
  return out;
}

std::vector<Annotation> load_annotations(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open annotation file '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_annotations(text.str());
}

void save_annotations(const std::string& path, std::span<const Annotation> records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write annotation file '" + path + "'");
  for (const Annotation& a : records) {
    json j{{"joints", joints_json(a.joints)},
           {"visible", json(std::vector<bool>(a.visible.begin(), a.visible.end()))},
           {"head_size", a.head_size}};
    if (a.pred_joints) j["pred_joints"] = joints_json(*a.pred_joints);
    out << j.dump() << '\n';
  }
  if (!out) throw IoError("failed writing annotation file '" + path + "'");
}

Annotation to_annotation(const PoseSample& sample) {
  return {sample.joints, sample.visible, sample.head_size, std::nullopt};
}

}  // namespace hg
