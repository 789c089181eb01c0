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

#include <filesystem>
#include <vector>

#include "csrn/tensor.hpp"

namespace csrn {

/// Interleaved 8-bit-derived pixels normalized to [0, 1].
struct ImageBuffer {
  Index width = 0;
  Index height = 0;
  Index channels = 1;
  std::vector<float> values;

  ImageBuffer() = default;
  ImageBuffer(Index width, Index height, Index channels, float fill = 0.0f);

  float& at(Index y, Index x, Index ch = 0) { return values[index(y, x, ch)]; }
  float at(Index y, Index x, Index ch = 0) const { return values[index(y, x, ch)]; }
  Index index(Index y, Index x, Index ch) const { return (y * width + x) * channels + ch; }
};

/// Reads PNG (via libpng) or binary PGM/PPM (P5/P6, maxval <= 255).
ImageBuffer read_image(const std::filesystem::path& path);

/// Writes a 1- or 3-channel image as PNG or PGM/PPM according to the extension;
/// values are clamped to [0, 1] and rounded to 8 bits.
void write_image(const std::filesystem::path& path, const ImageBuffer& image);

/// True for extensions read_image understands.
bool is_image_file(const std::filesystem::path& path);

/// Sorted image files directly inside `dir`.
std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir);

/// Single-channel image to a (1, 1, H, W) tensor and back.
template <typename Scalar>
Tensor<Scalar> to_tensor(const ImageBuffer& gray);

template <typename Scalar>
ImageBuffer from_tensor(const Tensor<Scalar>& t, Index batch = 0);

}  // namespace csrn
