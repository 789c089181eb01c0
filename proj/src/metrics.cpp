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

#include "csrn/metrics.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace csrn {

namespace {

void require_same_image_shape(const ImageBuffer& a, const ImageBuffer& b, const char* what) {
  if (a.width != b.width || a.height != b.height || a.channels != b.channels) {
    throw DimensionError(std::string(what) + ": image shapes differ (" + std::to_string(a.width) +
                         "x" + std::to_string(a.height) + "x" + std::to_string(a.channels) +
                         " vs " + std::to_string(b.width) + "x" + std::to_string(b.height) +
                         "x" + std::to_string(b.channels) + ")");
  }
}

using Plane = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Plane channel_plane(const ImageBuffer& img, Index ch) {
  Plane p(img.height, img.width);
  for (Index y = 0; y < img.height; ++y) {
    for (Index x = 0; x < img.width; ++x) p(y, x) = img.at(y, x, ch);
  }
  return p;
}

// Separable 'valid' filtering with a normalized 1-D kernel.
Plane filter_valid(const Plane& in, const Eigen::ArrayXd& k) {
  const Index r = k.size();
  Plane rows(in.rows(), in.cols() - r + 1);
  for (Index x = 0; x < rows.cols(); ++x) {
    rows.col(x) = Plane::Zero(in.rows(), 1);
    for (Index i = 0; i < r; ++i) rows.col(x) += k[i] * in.col(x + i);
  }
  Plane out(in.rows() - r + 1, rows.cols());
  for (Index y = 0; y < out.rows(); ++y) {
    out.row(y) = Plane::Zero(1, rows.cols());
    for (Index i = 0; i < r; ++i) out.row(y) += k[i] * rows.row(y + i);
  }
  return out;
}

}  // namespace

double psnr(const ImageBuffer& a, const ImageBuffer& b, const PsnrOptions& options) {
  require_same_image_shape(a, b, "psnr");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    double va = a.values[i];
    double vb = b.values[i];
    if (options.quantize_8bit) {
      va = std::round(std::clamp(va, 0.0, 1.0) * 255.0) / 255.0;
      vb = std::round(std::clamp(vb, 0.0, 1.0) * 255.0) / 255.0;
    }
    sum += (va - vb) * (va - vb);
  }
  const double mse_value = sum / static_cast<double>(a.values.size());
  if (mse_value == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(options.peak * options.peak / mse_value));
}

double ssim(const ImageBuffer& a, const ImageBuffer& b, const SsimOptions& o) {
  require_same_image_shape(a, b, "ssim");
  if (a.width < o.window || a.height < o.window) {
    throw GeometryError("ssim: image " + std::to_string(a.width) + "x" + std::to_string(a.height) +
                        " smaller than the " + std::to_string(o.window) + "x" +
                        std::to_string(o.window) + " window");
  }
  Eigen::ArrayXd kernel(o.window);
  const double centre = (o.window - 1) / 2.0;
  for (int i = 0; i < o.window; ++i) {
    const double d = i - centre;
    kernel[i] = std::exp(-d * d / (2.0 * o.sigma * o.sigma));
  }
  kernel /= kernel.sum();
  const double c1 = (o.k1 * o.peak) * (o.k1 * o.peak);
  const double c2 = (o.k2 * o.peak) * (o.k2 * o.peak);

  double total = 0.0;
  for (Index ch = 0; ch < a.channels; ++ch) {
    const Plane x = channel_plane(a, ch);
    const Plane y = channel_plane(b, ch);
    const Plane mx = filter_valid(x, kernel);
    const Plane my = filter_valid(y, kernel);
    const Plane sxx = filter_valid(x * x, kernel) - mx * mx;
    const Plane syy = filter_valid(y * y, kernel) - my * my;
    const Plane sxy = filter_valid(x * y, kernel) - mx * my;
    const Plane map = ((2.0 * mx * my + c1) * (2.0 * sxy + c2)) /
                      ((mx * mx + my * my + c1) * (sxx + syy + c2));
    total += map.mean();
  }
  return total / static_cast<double>(a.channels);
}

template <typename Scalar>
double csrn_loss(const Tensor<Scalar>& target, const Tensor<Scalar>& initial,
                 const Tensor<Scalar>& final, Index batch_count) {
  require_same_shape(initial.shape(), target.shape(), "csrn_loss initial");
  require_same_shape(final.shape(), target.shape(), "csrn_loss final");
  if (batch_count < 1) throw ConfigError("csrn_loss: batch count must be >= 1");
  const double a = (initial.array().template cast<double>() - target.array().template cast<double>())
                       .square()
                       .sum();
  const double b = (final.array().template cast<double>() - target.array().template cast<double>())
                       .square()
                       .sum();
  return (a + b) / (2.0 * static_cast<double>(batch_count));
}

template <typename Scalar>
Var<Scalar> csrn_loss(const Var<Scalar>& target, const Var<Scalar>& initial,
                      const Var<Scalar>& final, Index batch_count) {
  require_same_shape(initial.shape(), target.shape(), "csrn_loss initial");
  require_same_shape(final.shape(), target.shape(), "csrn_loss final");
  if (batch_count < 1) throw ConfigError("csrn_loss: batch count must be >= 1");
  const Scalar k = Scalar(1) / (Scalar(2) * static_cast<Scalar>(batch_count));
  return scale(add(sse(initial, target), sse(final, target)), k);
}

double QualityReport::mean_psnr() const {
  double s = 0.0;
  for (const auto& r : rows) s += r.psnr_db;
  return rows.empty() ? 0.0 : s / static_cast<double>(rows.size());
}

double QualityReport::mean_ssim() const {
  double s = 0.0;
  for (const auto& r : rows) s += r.ssim;
  return rows.empty() ? 0.0 : s / static_cast<double>(rows.size());
}

std::string QualityReport::to_csv() const {
  std::ostringstream os;
  char line[256];
  os << "image,psnr_db,ssim\n";
  for (const auto& r : rows) {
    std::snprintf(line, sizeof(line), ",%.4f,%.6f\n", r.psnr_db, r.ssim);
    os << r.image << line;
  }
  std::snprintf(line, sizeof(line), "mean,%.4f,%.6f\n", mean_psnr(), mean_ssim());
  os << line;
  return os.str();
}

void QualityReport::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << to_csv();
}

template double csrn_loss(const Tensor<float>&, const Tensor<float>&, const Tensor<float>&, Index);
template double csrn_loss(const Tensor<double>&, const Tensor<double>&, const Tensor<double>&,
                          Index);
template Var<float> csrn_loss(const Var<float>&, const Var<float>&, const Var<float>&, Index);
template Var<double> csrn_loss(const Var<double>&, const Var<double>&, const Var<double>&, Index);

}  // namespace csrn
