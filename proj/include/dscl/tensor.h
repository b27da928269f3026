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

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace dscl {

enum class DType : std::uint8_t { kFloat32 = 1, kFloat64 = 2, kUInt16 = 3 };

const char* dtype_name(DType dtype);

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_string(const Shape& shape);

// Dense row-major array. A rank-0 tensor is a scalar holding one value.
class Tensor {
 public:
  Tensor() : Tensor(Shape{}, std::vector<double>{0.0}) {}
  Tensor(Shape shape, std::vector<double> data);
  Tensor(Shape shape, std::vector<float> data);
  Tensor(Shape shape, std::vector<std::uint16_t> data);

  static Tensor zeros(Shape shape, DType dtype = DType::kFloat64);
  static Tensor filled(Shape shape, double value);
  static Tensor scalar(double value) { return Tensor(Shape{}, std::vector<double>{value}); }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const { return shape_numel(shape_); }
  DType dtype() const;

  // Typed views. Asking for the wrong dtype throws ContractError.
  std::span<const double> f64() const;
  std::span<double> f64();
  std::span<const float> f32() const;
  std::span<float> f32();
  std::span<const std::uint16_t> u16() const;
  std::span<std::uint16_t> u16();

  // 2-D float64 element access.
  double at(std::size_t r, std::size_t c) const { return f64()[r * shape_[1] + c]; }
  double& at(std::size_t r, std::size_t c) { return f64()[r * shape_[1] + c]; }

  double item() const;

  // Same data, new extents with equal element count.
  Tensor reshaped(Shape shape) const;
  Tensor as_float64() const;
  Tensor as_float32() const;

  bool all_finite() const;
  // Bitwise equality of shape, dtype and payload.
  bool identical(const Tensor& other) const;

 private:
  Shape shape_;
  std::variant<std::vector<double>, std::vector<float>, std::vector<std::uint16_t>> data_;
};

}  // namespace dscl
