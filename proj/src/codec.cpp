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

#include "csrn/codec.hpp"

#include <algorithm>

#include "csrn/binary_io.hpp"

namespace csrn {

namespace {

constexpr char kMagic[] = "CSMF";

Index reflect(Index i, Index n) {
  if (n == 1) return 0;
  const Index period = 2 * (n - 1);
  i %= period;
  return i < n ? i : period - i;
}

Index round_up(Index v, Index multiple) { return (v + multiple - 1) / multiple * multiple; }

void check_model_matches(const Csrn<float>& model, const MeasurementFile& file) {
  const auto& cfg = model.config();
  if (file.ratio != cfg.ratio || file.block != cfg.block) {
    throw ConfigMismatchError("measurement file (ratio " + file.ratio.str() + ", block " +
                              std::to_string(file.block) + ") does not match model (ratio " +
                              cfg.ratio.str() + ", block " + std::to_string(cfg.block) + ")");
  }
  const auto plan = cfg.measurement_plan();
  if (plan.size() != file.groups.size()) {
    throw ConfigMismatchError("measurement file has " + std::to_string(file.groups.size()) +
                              " groups, model expects " + std::to_string(plan.size()));
  }
  for (std::size_t k = 0; k < plan.size(); ++k) {
    if (file.groups[k].shape().c != plan[k]) {
      throw ConfigMismatchError("measurement group " + std::to_string(k) + " has " +
                                std::to_string(file.groups[k].shape().c) +
                                " channels, model expects " + std::to_string(plan[k]));
    }
  }
}

ImageBuffer finish(const Tensor<float>& xf, Index height, Index width) {
  ImageBuffer out = crop(from_tensor(xf), height, width);
  for (auto& v : out.values) v = std::clamp(v, 0.0f, 1.0f);
  return out;
}

}  // namespace

std::vector<std::uint8_t> MeasurementFile::serialize() const {
  ByteWriter w;
  w.raw(std::string_view(kMagic, 4));
  w.u16(kVersion);
  w.u16(ratio.num);
  w.u16(ratio.den);
  w.u16(block);
  w.u16(static_cast<std::uint16_t>(groups.size()));
  w.u32(height);
  w.u32(width);
  w.u32(padded_height);
  w.u32(padded_width);
  for (const auto& g : groups) w.u16(static_cast<std::uint16_t>(g.shape().c));
  for (const auto& g : groups) {
    for (Index i = 0; i < g.size(); ++i) w.f32(g.data()[i]);
  }
  return w.bytes();
}

MeasurementFile MeasurementFile::parse(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, "measurement header");
  if (r.raw(4) != std::string(kMagic, 4)) throw FormatError("not a measurement file (bad magic)");
  const auto version = r.u16();
  if (version != kVersion) {
    throw FormatError("unsupported measurement file version " + std::to_string(version));
  }
  MeasurementFile f;
  const auto num = r.u16();
  const auto den = r.u16();
  try {
    f.ratio = SampleRatio::from_fraction(num, den);
  } catch (const ConfigError& e) {
    throw FormatError(std::string("measurement header: ") + e.what());
  }
  f.block = r.u16();
  const auto groups = r.u16();
  f.height = r.u32();
  f.width = r.u32();
  f.padded_height = r.u32();
  f.padded_width = r.u32();
  if (f.block == 0 || f.padded_height % f.block != 0 || f.padded_width % f.block != 0 ||
      f.padded_height < f.height || f.padded_width < f.width || f.height == 0 || f.width == 0) {
    throw FormatError("measurement header: inconsistent block geometry");
  }
  std::vector<std::uint16_t> channels(groups);
  for (auto& c : channels) {
    c = r.u16();
    if (c == 0) throw FormatError("measurement header: empty group");
  }
  const Index bh = f.padded_height / f.block;
  const Index bw = f.padded_width / f.block;
  r.set_context("measurement payload");
  for (auto c : channels) {
    Tensor<float> g(Shape{1, c, bh, bw});
    r.need(static_cast<std::size_t>(g.size()) * 4);
    for (Index i = 0; i < g.size(); ++i) g.data()[i] = r.f32();
    f.groups.push_back(std::move(g));
  }
  if (r.remaining() != 0) {
    throw FormatError("measurement payload: " + std::to_string(r.remaining()) +
                      " trailing bytes");
  }
  return f;
}

void MeasurementFile::write(const std::filesystem::path& path) const {
  write_file_atomic(path, serialize());
}

MeasurementFile MeasurementFile::read(const std::filesystem::path& path) {
  return parse(read_file_bytes(path));
}

std::size_t MeasurementFile::payload_bytes() const {
  std::size_t n = 0;
  for (const auto& g : groups) n += static_cast<std::size_t>(g.size()) * 4;
  return n;
}

PaddedImage pad_to_blocks(const ImageBuffer& gray, Index block) {
  if (block < 1) throw ConfigError("pad_to_blocks: block must be >= 1");
  const Index h = round_up(gray.height, block);
  const Index w = round_up(gray.width, block);
  if (h == gray.height && w == gray.width) return {gray, gray.height, gray.width};
  ImageBuffer out(w, h, gray.channels);
  for (Index y = 0; y < h; ++y) {
    const Index sy = reflect(y, gray.height);
    for (Index x = 0; x < w; ++x) {
      const Index sx = reflect(x, gray.width);
      for (Index c = 0; c < gray.channels; ++c) out.at(y, x, c) = gray.at(sy, sx, c);
    }
  }
  return {out, gray.height, gray.width};
}

ImageBuffer crop(const ImageBuffer& img, Index height, Index width) {
  if (height > img.height || width > img.width) {
    throw GeometryError("crop window exceeds image");
  }
  ImageBuffer out(width, height, img.channels);
  for (Index y = 0; y < height; ++y) {
    for (Index x = 0; x < width; ++x) {
      for (Index c = 0; c < img.channels; ++c) out.at(y, x, c) = img.at(y, x, c);
    }
  }
  return out;
}

MeasurementFile encode(const Csrn<float>& model, const ImageBuffer& gray) {
  if (gray.channels != 1) throw DataError("encode: expected a single-channel luminance image");
  const auto& cfg = model.config();
  const auto padded = pad_to_blocks(gray, cfg.block);
  auto fm = model.sample(to_tensor<float>(padded.image));
  MeasurementFile f;
  f.ratio = cfg.ratio;
  f.block = static_cast<std::uint16_t>(cfg.block);
  f.height = static_cast<std::uint32_t>(gray.height);
  f.width = static_cast<std::uint32_t>(gray.width);
  f.padded_height = static_cast<std::uint32_t>(padded.image.height);
  f.padded_width = static_cast<std::uint32_t>(padded.image.width);
  f.groups = std::move(fm.groups);
  return f;
}

Reconstruction<float> decode_raw(const Csrn<float>& model, const MeasurementFile& file) {
  check_model_matches(model, file);
  MeasurementSet<float> fm{file.groups, file.ratio, file.block};
  return model.reconstruct(fm);
}

ImageBuffer decode(const Csrn<float>& model, const MeasurementFile& file) {
  return finish(decode_raw(model, file).final, file.height, file.width);
}

ImageBuffer reconstruct_image(const Csrn<float>& model, const ImageBuffer& gray) {
  const auto padded = pad_to_blocks(gray, model.config().block);
  return finish(model.forward(to_tensor<float>(padded.image)).final, gray.height, gray.width);
}

}  // namespace csrn
