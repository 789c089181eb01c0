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

#include "csrn/tensor.hpp"

#include <cstring>

namespace csrn {

std::string Shape::str() const {
  return "(" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) + "," +
         std::to_string(w) + ")";
}

void check_shape_valid(const Shape& s) {
  if (s.n < 1 || s.c < 1 || s.h < 1 || s.w < 1) {
    throw DimensionError("tensor dimensions must be >= 1, got " + s.str());
  }
}

std::string first_mismatched_axis(const Shape& a, const Shape& b) {
  if (a.n != b.n) return "batch";
  if (a.c != b.c) return "channels";
  if (a.h != b.h) return "rows";
  if (a.w != b.w) return "cols";
  return "";
}

void require_same_shape(const Shape& a, const Shape& b, const std::string& what) {
  const auto axis = first_mismatched_axis(a, b);
  if (!axis.empty()) {
    throw DimensionError(what + ": shape mismatch on " + axis + " axis, " + a.str() + " vs " +
                         b.str());
  }
}

template <typename Scalar>
bool Tensor<Scalar>::identical(const Tensor& other) const {
  return shape_ == other.shape_ &&
         std::memcmp(data(), other.data(), sizeof(Scalar) * static_cast<size_t>(size())) == 0;
}

template class Tensor<float>;
template class Tensor<double>;

}  // namespace csrn
