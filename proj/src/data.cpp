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

#include "csrn/data.hpp"

#include <iostream>
#include <numeric>
#include <random>

namespace csrn {

ImageBuffer rgb_to_luma(const ImageBuffer& img, LumaRange range) {
  if (img.channels == 1) return img;
  if (img.channels != 3) {
    throw DataError("rgb_to_luma: expected 3 channels, got " + std::to_string(img.channels));
  }
  ImageBuffer out(img.width, img.height, 1);
  for (Index y = 0; y < img.height; ++y) {
    for (Index x = 0; x < img.width; ++x) {
      const double r = img.at(y, x, 0);
      const double g = img.at(y, x, 1);
      const double b = img.at(y, x, 2);
      const double luma = range == LumaRange::studio
                              ? (65.481 * r + 128.553 * g + 24.966 * b + 16.0) / 255.0
                              : 0.299 * r + 0.587 * g + 0.114 * b;
      out.at(y, x) = static_cast<float>(luma);
    }
  }
  return out;
}

namespace {

Patch rotate_ccw(const Patch& p) { return p.transpose().colwise().reverse(); }

}  // namespace

Patch augment(const Patch& patch, int k) {
  if (k < 0 || k > 7) throw ConfigError("augment: index must be in 0..7, got " + std::to_string(k));
  if (patch.rows() != patch.cols()) throw GeometryError("augment: patch must be square");
  Patch out = k >= 4 ? Patch(patch.rowwise().reverse()) : patch;
  for (int r = 0; r < k % 4; ++r) out = rotate_ccw(out);
  return out;
}

int augment_inverse(int k) {
  if (k < 0 || k > 7) throw ConfigError("augment: index must be in 0..7");
  // Reflections are involutions; rotations invert to the opposite rotation.
  return k >= 4 ? k : (4 - k) % 4;
}

Patch PatchSet::patch(std::size_t i) const {
  const auto& e = entries.at(i);
  return augment(crops.at(e.crop), e.augmentation);
}

void PatchSet::append(const PatchSet& other) {
  if (!other.entries.empty() && !entries.empty() && other.size != size) {
    throw DimensionError("PatchSet::append: patch sizes differ");
  }
  if (entries.empty()) size = other.size;
  const std::size_t base = crops.size();
  crops.insert(crops.end(), other.crops.begin(), other.crops.end());
  for (auto e : other.entries) {
    e.crop += base;
    entries.push_back(e);
  }
}

PatchSet crop_patches(const ImageBuffer& gray, const CropOptions& options, std::size_t image_id) {
  if (gray.channels != 1) throw DataError("crop_patches: expected a single-channel image");
  if (options.size < 1 || options.stride < 1) throw ConfigError("crop size/stride must be >= 1");
  PatchSet set;
  set.size = options.size;
  if (gray.width < options.size || gray.height < options.size) return set;
  for (Index y = 0; y + options.size <= gray.height; y += options.stride) {
    for (Index x = 0; x + options.size <= gray.width; x += options.stride) {
      Patch p(options.size, options.size);
      for (Index r = 0; r < options.size; ++r) {
        for (Index c = 0; c < options.size; ++c) p(r, c) = gray.at(y + r, x + c);
      }
      const std::size_t crop = set.crops.size();
      set.crops.push_back(std::move(p));
      const int variants = options.augment ? 8 : 1;
      for (int k = 0; k < variants; ++k) set.entries.push_back({crop, image_id, y, x, k});
    }
  }
  return set;
}

PatchSet load_patch_set(const std::filesystem::path& dir, const CropOptions& options,
                        LumaRange range) {
  PatchSet all;
  all.size = options.size;
  const auto files = list_images(dir);
  for (std::size_t i = 0; i < files.size(); ++i) {
    ImageBuffer img;
    try {
      img = rgb_to_luma(read_image(files[i]), range);
    } catch (const Error& e) {
      std::cerr << "warning: skipping " << files[i] << ": " << e.what() << "\n";
      continue;
    }
    auto set = crop_patches(img, options, i);
    if (set.entries.empty()) {
      std::cerr << "warning: " << files[i] << " is smaller than the " << options.size << "x"
                << options.size << " crop; skipped\n";
      continue;
    }
    all.append(set);
  }
  return all;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace

std::vector<std::vector<std::size_t>> batch_order(std::size_t count, std::size_t batch_size,
                                                  std::uint64_t seed, std::uint64_t epoch) {
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(splitmix64(seed) ^ splitmix64(epoch + 0x5851F42D4C957F2Dull));
  for (std::size_t i = count; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t b = 0; b + batch_size <= count; b += batch_size) {
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(b),
                     order.begin() + static_cast<std::ptrdiff_t>(b + batch_size));
  }
  return out;
}

Tensor<float> make_batch(const PatchSet& patches, std::span<const std::size_t> indices) {
  if (indices.empty()) throw DataError("make_batch: empty batch");
  const Index s = patches.size;
  Tensor<float> out(Shape{static_cast<Index>(indices.size()), 1, s, s});
  for (std::size_t b = 0; b < indices.size(); ++b) {
    out.plane(static_cast<Index>(b), 0) = patches.patch(indices[b]);
  }
  return out;
}

std::vector<Tensor<float>> batches(const PatchSet& patches, std::size_t batch_size,
                                   std::uint64_t seed, std::uint64_t epoch) {
  std::vector<Tensor<float>> out;
  for (const auto& idx : batch_order(patches.count(), batch_size, seed, epoch)) {
    out.push_back(make_batch(patches, idx));
  }
  return out;
}

}  // namespace csrn
