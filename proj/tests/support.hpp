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

// Oracles and fixtures shared by the unit tests. Nothing here calls into
// the code it is used to check.

#ifndef HGNET_TESTS_SUPPORT_HPP_
#define HGNET_TESTS_SUPPORT_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "hgnet/metrics.hpp"
#include "hgnet/ops.hpp"
#include "hgnet/tape.hpp"
#include "hgnet/tensor.hpp"

namespace hgtest {

inline hg::Tensor random_tensor(hg::Shape s, hg::DType dtype, std::uint64_t seed,
                                double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(s.numel());
  for (double& x : v) x = d(rng);
  return hg::Tensor::from_values(s, v, dtype);
}

inline double rel_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

// Dilated convolution written as the sum over index pairs s + l*t = p of
// x(s) * w(t), cross-correlation form, in the padded frame. Pairs are
// visited in row-major order of s, which is the accumulation order of the
// library kernels, so the result is comparable bit for bit.
template <typename T>
std::vector<T> dilated_conv_oracle(const std::vector<T>& x, hg::Shape xs,
                                   const std::vector<T>& w, int out_c, int k, int l,
                                   int stride, int pad, int groups,
                                   const std::vector<T>& bias, hg::Shape* out_shape) {
  const int span = l * (k - 1) + 1;
  const int oh = (xs.h + 2 * pad - span) / stride + 1;
  const int ow = (xs.w + 2 * pad - span) / stride + 1;
  const int ipg = xs.c / groups;
  const int opg = out_c / groups;
  *out_shape = {xs.n, out_c, oh, ow};
  std::vector<T> out(out_shape->numel());
  for (int n = 0; n < xs.n; ++n) {
    for (int oc = 0; oc < out_c; ++oc) {
      for (int py = 0; py < oh; ++py) {
        for (int px = 0; px < ow; ++px) {
          const int p_y = py * stride;
          const int p_x = px * stride;
          T acc = T(0);
          for (int j = 0; j < ipg; ++j) {
            const int ic = (oc / opg) * ipg + j;
            for (int sy = 0; sy < xs.h + 2 * pad; ++sy) {
              for (int ty = 0; ty < k; ++ty) {
                if (sy != p_y + l * ty) continue;
                const int iy = sy - pad;
                if (iy < 0 || iy >= xs.h) continue;
                for (int sx = 0; sx < xs.w + 2 * pad; ++sx) {
                  for (int tx = 0; tx < k; ++tx) {
                    if (sx != p_x + l * tx) continue;
                    const int ix = sx - pad;
                    if (ix < 0 || ix >= xs.w) continue;
                    acc += x[((static_cast<std::size_t>(n) * xs.c + ic) * xs.h + iy) * xs.w + ix] *
                           w[((static_cast<std::size_t>(oc) * ipg + j) * k + ty) * k + tx];
                  }
                }
              }
            }
          }
          if (!bias.empty()) acc += bias[oc];
          out[((static_cast<std::size_t>(n) * out_c + oc) * oh + py) * ow + px] = acc;
        }
      }
    }
  }
  return out;
}

// Central differences of a scalar function of `t`'s values, compared with
// `analytic` on up to `samples` coordinates (all when fewer). Returns the
// largest relative error.
inline double fd_max_error(const std::function<double()>& f, hg::Tensor t,
                           const std::vector<double>& analytic, std::uint64_t seed,
                           int samples = 20, double h = 1e-5) {
  std::vector<std::size_t> idx(t.numel());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(std::min<std::size_t>(idx.size(), samples));
  double worst = 0.0;
  for (std::size_t i : idx) {
    const double orig = t.at(i);
    t.set(i, orig + h);
    const double fp = f();
    t.set(i, orig - h);
    const double fm = f();
    t.set(i, orig);
    worst = std::max(worst, rel_error(analytic[i], (fp - fm) / (2 * h)));
  }
  return worst;
}

// Runs `loss` on a fresh tape and back-propagates.
inline void backprop(const std::function<hg::Tensor()>& loss) {
  hg::Tape tape;
  hg::Tensor l;
  {
    hg::TapeScope scope(tape);
    l = loss();
  }
  tape.backward(l);
}

inline double scalar(const hg::Tensor& t) { return t.at(0); }

inline bool bit_equal(const hg::Tensor& a, const hg::Tensor& b) {
  if (!(a.shape() == b.shape()) || a.dtype() != b.dtype()) return false;
  const auto va = a.to_vector();
  const auto vb = b.to_vector();
  return std::equal(va.begin(), va.end(), vb.begin(), [](double x, double y) {
    return std::memcmp(&x, &y, sizeof x) == 0;
  });
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("hgnet-" + tag + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::string source_path(const std::string& rel) {
  return std::string(HGNET_SOURCE_DIR) + "/" + rel;
}

// Group membership written out from the MPII joint order.
struct OracleGroup {
  const char* name;
  int a, b;
};
inline constexpr OracleGroup kGroups[7] = {{"Head", 8, 9},  {"Shoulder", 12, 13}, {"Elbow", 11, 14},
                                    {"Wrist", 10, 15}, {"Hip", 2, 3},        {"Knee", 1, 4},
                                    {"Ankle", 0, 5}};

struct OracleResult {
  int counts[7] = {};
  int correct[7] = {};
};

inline OracleResult brute_force_pckh(const std::vector<hg::Joints>& pred, const std::vector<hg::Joints>& gt,
                              const std::vector<double>& head, const std::vector<hg::Visibility>& vis) {
  OracleResult r;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    for (int g = 0; g < 7; ++g) {
      for (int j : {kGroups[g].a, kGroups[g].b}) {
        if (!vis[i][j]) continue;
        const double dx = pred[i][j].x - gt[i][j].x;
        const double dy = pred[i][j].y - gt[i][j].y;
        r.counts[g] += 1;
        if (std::sqrt(dx * dx + dy * dy) <= 0.5 * head[i]) r.correct[g] += 1;
      }
    }
  }
  return r;
}

struct Sampled {
  std::vector<hg::Joints> pred, gt;
  std::vector<double> head;
  std::vector<hg::Visibility> vis;
};

// Random samples; about a quarter of the joints sit exactly on the
// 0.5 * head boundary (3-4-5 offsets scaled by powers of two).
inline Sampled sample_pckh(int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coord(0, 256), off(-12, 12);
  std::uniform_int_distribution<int> kind(0, 3), exp(-3, 3);
  Sampled s;
  for (int i = 0; i < count; ++i) {
    hg::Joints p{}, g{};
    hg::Visibility v{};
    const double unit = std::ldexp(1.0, exp(rng));
    const double head = 10.0 * unit;
    for (int j = 0; j < hg::kNumJoints; ++j) {
      g[j] = {std::floor(coord(rng)), std::floor(coord(rng))};
      v[j] = (rng() % 10) != 0;
      switch (kind(rng)) {
        case 0:
          p[j] = {g[j].x + 3 * unit, g[j].y - 4 * unit};  // exactly 0.5 head
          break;
        case 1:
          p[j] = {g[j].x, g[j].y + 5 * unit};  // exactly 0.5 head, axis aligned
          break;
        default:
          p[j] = {g[j].x + off(rng) * unit, g[j].y + off(rng) * unit};
      }
    }
    s.pred.push_back(p);
    s.gt.push_back(g);
    s.head.push_back(head);
    s.vis.push_back(v);
  }
  return s;
}

}  // namespace hgtest

#endif  // HGNET_TESTS_SUPPORT_HPP_
