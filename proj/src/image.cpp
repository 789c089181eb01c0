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

#include "csrn/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace csrn {

namespace fs = std::filesystem;

ImageBuffer::ImageBuffer(Index w, Index h, Index c, float fill)
    : width(w), height(h), channels(c), values(static_cast<std::size_t>(w * h * c), fill) {
  if (w < 1 || h < 1 || (c != 1 && c != 3)) {
    throw DataError("image dimensions must be >= 1 with 1 or 3 channels");
  }
}

namespace {

std::string lower_extension(const fs::path& p) {
  auto ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
  return ext;
}

std::uint8_t to_byte(float v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
}

ImageBuffer read_png(const fs::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw DataError("cannot read PNG '" + path.string() + "': " + image.message);
  }
  const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  std::vector<std::uint8_t> bytes(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, bytes.data(), 0, nullptr)) {
    png_image_free(&image);
    throw DataError("cannot decode PNG '" + path.string() + "': " + image.message);
  }
  ImageBuffer out(image.width, image.height, color ? 3 : 1);
  for (std::size_t i = 0; i < bytes.size(); ++i) out.values[i] = bytes[i] / 255.0f;
  return out;
}

void write_png(const fs::path& path, const ImageBuffer& img) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width);
  image.height = static_cast<png_uint_32>(img.height);
  image.format = img.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  std::vector<std::uint8_t> bytes(img.values.size());
  std::transform(img.values.begin(), img.values.end(), bytes.begin(), to_byte);
  if (!png_image_write_to_file(&image, path.c_str(), 0, bytes.data(), 0, nullptr)) {
    throw DataError("cannot write PNG '" + path.string() + "': " + image.message);
  }
}

// Skips whitespace and '#' comments between PNM header tokens.
long read_pnm_token(std::istream& in) {
  while (true) {
    const int c = in.peek();
    if (c == '#') {
      std::string skip;
      std::getline(in, skip);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      break;
    }
  }
  long v = -1;
  in >> v;
  return v;
}

ImageBuffer read_pnm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  char magic[2] = {0, 0};
  in.read(magic, 2);
  if (magic[0] != 'P' || (magic[1] != '5' && magic[1] != '6')) {
    throw DataError("'" + path.string() + "' is not a binary PGM/PPM file");
  }
  const Index channels = magic[1] == '6' ? 3 : 1;
  const long w = read_pnm_token(in);
  const long h = read_pnm_token(in);
  const long maxval = read_pnm_token(in);
  if (w < 1 || h < 1 || maxval < 1 || maxval > 255) {
    throw DataError("unsupported PNM header in '" + path.string() + "'");
  }
  in.get();  // single whitespace before the raster
  ImageBuffer out(w, h, channels);
  std::vector<std::uint8_t> bytes(out.values.size());
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(bytes.size())) {
    throw DataError("truncated raster in '" + path.string() + "'");
  }
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    out.values[i] = static_cast<float>(bytes[i]) / static_cast<float>(maxval);
  }
  return out;
}

void write_pnm(const fs::path& path, const ImageBuffer& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << (img.channels == 3 ? "P6" : "P5") << "\n" << img.width << " " << img.height << "\n255\n";
  std::vector<std::uint8_t> bytes(img.values.size());
  std::transform(img.values.begin(), img.values.end(), bytes.begin(), to_byte);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

bool is_image_file(const fs::path& path) {
  const auto ext = lower_extension(path);
  return ext == ".png" || ext == ".pgm" || ext == ".ppm" || ext == ".pnm";
}

ImageBuffer read_image(const fs::path& path) {
  if (lower_extension(path) == ".png") return read_png(path);
  return read_pnm(path);
}

void write_image(const fs::path& path, const ImageBuffer& image) {
  if (image.channels != 1 && image.channels != 3) {
    throw DataError("write_image: 1 or 3 channels required");
  }
  if (lower_extension(path) == ".png") {
    write_png(path, image);
  } else {
    write_pnm(path, image);
  }
}

std::vector<fs::path> list_images(const fs::path& dir) {
  std::vector<fs::path> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && is_image_file(entry.path())) out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

template <typename Scalar>
Tensor<Scalar> to_tensor(const ImageBuffer& gray) {
  if (gray.channels != 1) throw DataError("to_tensor: expected a single-channel image");
  Tensor<Scalar> t(Shape{1, 1, gray.height, gray.width});
  for (std::size_t i = 0; i < gray.values.size(); ++i) {
    t.data()[i] = static_cast<Scalar>(gray.values[i]);
  }
  return t;
}

template <typename Scalar>
ImageBuffer from_tensor(const Tensor<Scalar>& t, Index batch) {
  if (t.shape().c != 1) throw DataError("from_tensor: expected a single-channel tensor");
  ImageBuffer out(t.shape().w, t.shape().h, 1);
  const Scalar* src = t.data() + t.offset(batch, 0, 0, 0);
  for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] = static_cast<float>(src[i]);
  return out;
}

template Tensor<float> to_tensor(const ImageBuffer&);
template Tensor<double> to_tensor(const ImageBuffer&);
template ImageBuffer from_tensor(const Tensor<float>&, Index);
template ImageBuffer from_tensor(const Tensor<double>&, Index);

}  // namespace csrn
