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

#ifndef HGNET_TENSOR_HPP_
#define HGNET_TENSOR_HPP_

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

namespace hg {

enum class DType { kF32, kF64 };

const char* dtype_name(DType dtype);

template <typename T>
constexpr DType dtype_of() {
  static_assert(std::is_same_v<T, float> || std::is_same_v<T, double>);
  return std::is_same_v<T, float> ? DType::kF32 : DType::kF64;
}

// Calls f(float{}) or f(double{}) depending on the runtime dtype.
template <typename F>
decltype(auto) visit_dtype(DType dtype, F&& f) {
  if (dtype == DType::kF32) return f(float{});
  return f(double{});
}

// (batch, channel, height, width); row-major with w fastest.
struct Shape {
  int n = 1;
  int c = 1;
  int h = 1;
  int w = 1;

  std::size_t numel() const {
    return static_cast<std::size_t>(n) * c * h * w;
  }
  std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
  bool valid() const { return n >= 1 && c >= 1 && h >= 1 && w >= 1; }
  std::string str() const;

  friend bool operator==(const Shape&, const Shape&) = default;
};

struct TensorImpl {
  using Buffer = std::variant<std::vector<float>, std::vector<double>>;

  Shape shape;
  DType dtype = DType::kF32;
  bool meta = false;  // shape-only tensor, no storage
  bool requires_grad = false;
  Buffer data;
  Buffer grad;
  bool has_grad = false;
};

// Dense NCHW tensor. A Tensor is a shared handle: copies alias the same
// storage and gradient. Use clone() for an independent copy.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, DType dtype = DType::kF32);
  static Tensor full(Shape shape, double value, DType dtype = DType::kF32);
  static Tensor from_values(Shape shape, std::span<const double> values,
                            DType dtype = DType::kF32);
  // Shape-only tensor used for complexity accounting.
  static Tensor meta(Shape shape, DType dtype = DType::kF32);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  DType dtype() const { return impl_->dtype; }
  std::size_t numel() const { return impl_->shape.numel(); }
  bool is_meta() const { return impl_->meta; }
  const void* id() const { return impl_.get(); }

  template <typename T>
  std::span<T> values() {
    check_dtype(dtype_of<T>());
    return std::get<std::vector<T>>(impl_->data);
  }
  template <typename T>
  std::span<const T> values() const {
    check_dtype(dtype_of<T>());
    return std::get<std::vector<T>>(impl_->data);
  }

  double at(std::size_t i) const;
  void set(std::size_t i, double value);
  double at(int n, int c, int h, int w) const;
  std::vector<double> to_vector() const;
  void fill(double value);
  // Overwrites the values from a same-shaped tensor, converting dtype.
  void assign(const Tensor& other);

  bool requires_grad() const { return impl_->requires_grad; }
  void set_requires_grad(bool on) { impl_->requires_grad = on; }

  bool has_grad() const { return impl_->has_grad; }
  // Gradient buffer, allocated as zeros on first use.
  template <typename T>
  std::span<T> grad_values() const {
    check_dtype(dtype_of<T>());
    ensure_grad();
    return std::get<std::vector<T>>(impl_->grad);
  }
  std::vector<double> grad_vector() const;
  void zero_grad();

  Tensor clone() const;
  Tensor to(DType dtype) const;

 private:
  explicit Tensor(std::shared_ptr<TensorImpl> impl) : impl_(std::move(impl)) {}
  void check_dtype(DType expected) const;
  void ensure_grad() const;

  std::shared_ptr<TensorImpl> impl_;
};

inline std::size_t offset(const Shape& s, int n, int c, int h, int w) {
  return ((static_cast<std::size_t>(n) * s.c + c) * s.h + h) * s.w + w;
}

}  // namespace hg

#endif  // HGNET_TENSOR_HPP_
