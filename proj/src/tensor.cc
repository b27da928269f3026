// Copyright 2026 The DSCL Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dscl/tensor.h"

#include <cmath>
#include <cstring>
#include <sstream>

#include "dscl/errors.h"

namespace dscl {

const char* dtype_name(DType dtype) {
  switch (dtype) {
    case DType::kFloat32:
      return "float32";
    case DType::kFloat64:
      return "float64";
    case DType::kUInt16:
      return "uint16";
  }
  return "unknown";
}

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << "x";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

namespace {

void check_extents(const Shape& shape, std::size_t n) {
  for (std::size_t d : shape) {
    if (d == 0) throw ShapeError("tensor extents must be positive, got " + shape_string(shape));
  }
  if (shape_numel(shape) != n) {
    throw ShapeError("tensor " + shape_string(shape) + " needs " +
                     std::to_string(shape_numel(shape)) + " values, got " + std::to_string(n));
  }
}

template <typename T>
std::span<T> typed(auto& variant, DType want, DType have) {
  auto* v = std::get_if<std::vector<std::remove_const_t<T>>>(&variant);
  if (v == nullptr) {
    throw ContractError(std::string("tensor holds ") + dtype_name(have) + ", requested " +
                        dtype_name(want));
  }
  return std::span<T>(v->data(), v->size());
}

}  // namespace

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  check_extents(shape_, std::get<0>(data_).size());
}

Tensor::Tensor(Shape shape, std::vector<float> data) : shape_(std::move(shape)), data_(std::move(data)) {
  check_extents(shape_, std::get<1>(data_).size());
}

Tensor::Tensor(Shape shape, std::vector<std::uint16_t> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  check_extents(shape_, std::get<2>(data_).size());
}

Tensor Tensor::zeros(Shape shape, DType dtype) {
  const std::size_t n = shape_numel(shape);
  switch (dtype) {
    case DType::kFloat32:
      return Tensor(std::move(shape), std::vector<float>(n, 0.0f));
    case DType::kUInt16:
      return Tensor(std::move(shape), std::vector<std::uint16_t>(n, 0));
    case DType::kFloat64:
      break;
  }
  return Tensor(std::move(shape), std::vector<double>(n, 0.0));
}

Tensor Tensor::filled(Shape shape, double value) {
  const std::size_t n = shape_numel(shape);
  return Tensor(std::move(shape), std::vector<double>(n, value));
}

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= shape_.size()) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for " + shape_string(shape_));
  }
  return shape_[axis];
}

DType Tensor::dtype() const {
  switch (data_.index()) {
    case 1:
      return DType::kFloat32;
    case 2:
      return DType::kUInt16;
    default:
      return DType::kFloat64;
  }
}

std::span<const double> Tensor::f64() const { return typed<const double>(data_, DType::kFloat64, dtype()); }
std::span<double> Tensor::f64() { return typed<double>(data_, DType::kFloat64, dtype()); }
std::span<const float> Tensor::f32() const { return typed<const float>(data_, DType::kFloat32, dtype()); }
std::span<float> Tensor::f32() { return typed<float>(data_, DType::kFloat32, dtype()); }
std::span<const std::uint16_t> Tensor::u16() const {
  return typed<const std::uint16_t>(data_, DType::kUInt16, dtype());
}
std::span<std::uint16_t> Tensor::u16() { return typed<std::uint16_t>(data_, DType::kUInt16, dtype()); }

double Tensor::item() const {
  if (size() != 1) throw ShapeError("item() on non-scalar tensor " + shape_string(shape_));
  return f64()[0];
}

Tensor Tensor::reshaped(Shape shape) const {
  if (shape_numel(shape) != size()) {
    throw ShapeError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
  }
  Tensor out = *this;
  out.shape_ = std::move(shape);
  return out;
}

Tensor Tensor::as_float64() const {
  switch (dtype()) {
    case DType::kFloat64:
      return *this;
    case DType::kFloat32: {
      auto src = f32();
      return Tensor(shape_, std::vector<double>(src.begin(), src.end()));
    }
    case DType::kUInt16: {
      auto src = u16();
      return Tensor(shape_, std::vector<double>(src.begin(), src.end()));
    }
  }
  return *this;
}

Tensor Tensor::as_float32() const {
  switch (dtype()) {
    case DType::kFloat32:
      return *this;
    case DType::kFloat64: {
      auto src = f64();
      return Tensor(shape_, std::vector<float>(src.begin(), src.end()));
    }
    case DType::kUInt16: {
      auto src = u16();
      return Tensor(shape_, std::vector<float>(src.begin(), src.end()));
    }
  }
  return *this;
}

bool Tensor::all_finite() const {
  switch (dtype()) {
    case DType::kFloat64:
      for (double v : f64())
        if (!std::isfinite(v)) return false;
      return true;
    case DType::kFloat32:
      for (float v : f32())
        if (!std::isfinite(v)) return false;
      return true;
    case DType::kUInt16:
      return true;
  }
  return true;
}

bool Tensor::identical(const Tensor& other) const {
  if (shape_ != other.shape_ || dtype() != other.dtype()) return false;
  return std::visit(
      [&](const auto& mine) {
        using V = std::decay_t<decltype(mine)>;
        const auto& theirs = std::get<V>(other.data_);
        return std::memcmp(mine.data(), theirs.data(), mine.size() * sizeof(typename V::value_type)) == 0;
      },
      data_);
}

}  // namespace dscl
