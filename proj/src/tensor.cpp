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

#include "hgnet/tensor.hpp"

#include <algorithm>
#include <sstream>

#include "hgnet/error.hpp"

namespace hg {
namespace {

TensorImpl::Buffer make_buffer(DType dtype, std::size_t count, double value) {
  if (dtype == DType::kF32) {
    return std::vector<float>(count, static_cast<float>(value));
  }
  return std::vector<double>(count, value);
}

}  // namespace

const char* dtype_name(DType dtype) {
  return dtype == DType::kF32 ? "f32" : "f64";
}

std::string Shape::str() const {
  std::ostringstream os;
  os << n << 'x' << c << 'x' << h << 'x' << w;
  return os.str();
}

Tensor Tensor::full(Shape shape, double value, DType dtype) {
  if (!shape.valid()) {
    throw ConfigError("invalid tensor shape " + shape.str());
  }
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = shape;
  impl->dtype = dtype;
  impl->data = make_buffer(dtype, shape.numel(), value);
  return Tensor(std::move(impl));
}

Tensor Tensor::zeros(Shape shape, DType dtype) {
  return full(shape, 0.0, dtype);
}

Tensor Tensor::from_values(Shape shape, std::span<const double> values,
                           DType dtype) {
  Tensor t = zeros(shape, dtype);
  if (values.size() != shape.numel()) {
    throw ConfigError("tensor " + shape.str() + " needs " +
                      std::to_string(shape.numel()) + " values, got " +
                      std::to_string(values.size()));
  }
  for (std::size_t i = 0; i < values.size(); ++i) t.set(i, values[i]);
  return t;
}

Tensor Tensor::meta(Shape shape, DType dtype) {
  if (!shape.valid()) {
    throw ConfigError("invalid tensor shape " + shape.str());
  }
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = shape;
  impl->dtype = dtype;
  impl->meta = true;
  return Tensor(std::move(impl));
}

void Tensor::check_dtype(DType expected) const {
  if (impl_->meta) {
    throw UsageError("meta tensor " + impl_->shape.str() + " has no storage");
  }
  if (impl_->dtype != expected) {
    throw UsageError(std::string("tensor dtype is ") + dtype_name(impl_->dtype) +
                     ", accessed as " + dtype_name(expected));
  }
}

double Tensor::at(std::size_t i) const {
  return visit_dtype(dtype(), [&](auto tag) {
    using T = decltype(tag);
    return static_cast<double>(values<T>()[i]);
  });
}

double Tensor::at(int n, int c, int h, int w) const {
  return at(offset(shape(), n, c, h, w));
}

void Tensor::set(std::size_t i, double value) {
  visit_dtype(dtype(), [&](auto tag) {
    using T = decltype(tag);
    values<T>()[i] = static_cast<T>(value);
  });
}

std::vector<double> Tensor::to_vector() const {
  return visit_dtype(dtype(), [&](auto tag) {
    using T = decltype(tag);
    auto v = values<T>();
    return std::vector<double>(v.begin(), v.end());
  });
}

void Tensor::fill(double value) {
  visit_dtype(dtype(), [&](auto tag) {
    using T = decltype(tag);
    auto v = values<T>();
    std::fill(v.begin(), v.end(), static_cast<T>(value));
  });
}

void Tensor::assign(const Tensor& other) {
  if (other.shape() != shape()) {
    throw ConfigError("assign: shape " + other.shape().str() + " into " +
                      shape().str());
  }
  visit_dtype(dtype(), [&](auto tag) {
    using T = decltype(tag);
    auto dst = values<T>();
    visit_dtype(other.dtype(), [&](auto src_tag) {
      using S = decltype(src_tag);
      auto src = other.values<S>();
      std::transform(src.begin(), src.end(), dst.begin(),
                     [](S x) { return static_cast<T>(x); });
    });
  });
}

void Tensor::ensure_grad() const {
  if (impl_->has_grad) return;
  impl_->grad = make_buffer(impl_->dtype, numel(), 0.0);
  impl_->has_grad = true;
}

std::vector<double> Tensor::grad_vector() const {
  if (!impl_->has_grad) return std::vector<double>(numel(), 0.0);
  return std::visit(
      [](const auto& g) { return std::vector<double>(g.begin(), g.end()); },
      impl_->grad);
}

void Tensor::zero_grad() {
  impl_->grad = TensorImpl::Buffer{};
  impl_->has_grad = false;
}

Tensor Tensor::clone() const {
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = impl_->shape;
  impl->dtype = impl_->dtype;
  impl->meta = impl_->meta;
  impl->data = impl_->data;
  return Tensor(std::move(impl));
}

Tensor Tensor::to(DType dtype) const {
  if (is_meta()) return meta(shape(), dtype);
  Tensor out = zeros(shape(), dtype);
  out.assign(*this);
  return out;
}

}  // namespace hg
