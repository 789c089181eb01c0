// Copyright 2026 The CSRN Authors
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

#include <Eigen/Core>

#include <cstdint>
#include <string>

#include "csrn/errors.hpp"

namespace csrn {

using Index = Eigen::Index;

/// Extents of a rank-4 (batch, channels, rows, cols) tensor.
struct Shape {
  Index n = 1;
  Index c = 1;
  Index h = 1;
  Index w = 1;

  Index size() const { return n * c * h * w; }
  Index plane() const { return h * w; }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

void check_shape_valid(const Shape& s);

/// Names the first axis on which two shapes differ ("batch", "channels", ...), or "" when equal.
std::string first_mismatched_axis(const Shape& a, const Shape& b);

/// Throws DimensionError naming `what` and the mismatched axis when a != b.
void require_same_shape(const Shape& a, const Shape& b, const std::string& what);

/// Dense row-major (n, c, h, w) tensor backed by an Eigen column vector.
template <typename Scalar_>
class Tensor {
 public:
  using Scalar = Scalar_;
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
  using PlaneMap = Eigen::Map<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
  using ConstPlaneMap =
      Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

  Tensor() : shape_{}, data_(Array::Zero(1)) {}

  explicit Tensor(const Shape& shape) : shape_(shape) {
    check_shape_valid(shape);
    data_ = Array::Zero(shape.size());
  }

  Tensor(const Shape& shape, Scalar fill) : Tensor(shape) { data_.setConstant(fill); }

  Tensor(const Shape& shape, Array data) : shape_(shape), data_(std::move(data)) {
    check_shape_valid(shape);
    if (data_.size() != shape.size()) {
      throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                           " does not match shape " + shape.str());
    }
  }

  static Tensor zeros(const Shape& shape) { return Tensor(shape); }
  static Tensor scalar(Scalar v) { return Tensor(Shape{}, v); }

  const Shape& shape() const { return shape_; }
  Index size() const { return data_.size(); }

  Array& array() { return data_; }
  const Array& array() const { return data_; }
  Scalar* data() { return data_.data(); }
  const Scalar* data() const { return data_.data(); }

  Index offset(Index n, Index c, Index y, Index x) const {
    return ((n * shape_.c + c) * shape_.h + y) * shape_.w + x;
  }
  Scalar& operator()(Index n, Index c, Index y, Index x) { return data_[offset(n, c, y, x)]; }
  Scalar operator()(Index n, Index c, Index y, Index x) const { return data_[offset(n, c, y, x)]; }

  /// Scalar value of a 1x1x1x1 tensor.
  Scalar item() const {
    if (shape_ != Shape{}) throw RankError("item() on non-scalar tensor " + shape_.str());
    return data_[0];
  }

  PlaneMap plane(Index n, Index c) {
    return PlaneMap(data() + offset(n, c, 0, 0), shape_.h, shape_.w);
  }
  ConstPlaneMap plane(Index n, Index c) const {
    return ConstPlaneMap(data() + offset(n, c, 0, 0), shape_.h, shape_.w);
  }

  template <typename Other>
  Tensor<Other> cast() const {
    return Tensor<Other>(shape_, data_.template cast<Other>());
  }

  bool all_finite() const { return data_.allFinite(); }

  /// Bit-level equality of shape and values.
  bool identical(const Tensor& other) const;

 private:
  Shape shape_;
  Array data_;
};

extern template class Tensor<float>;
extern template class Tensor<double>;

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

}  // namespace csrn
