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
#include <string>
#include <vector>

#include "csrn/autodiff.hpp"
#include "csrn/image.hpp"

namespace csrn {

inline constexpr double kPsnrCap = 99.0;

struct PsnrOptions {
  double peak = 1.0;
  bool quantize_8bit = false;  // round both images to 8-bit levels first
};

/// 10·log10(peak² / MSE); exact matches return kPsnrCap.
double psnr(const ImageBuffer& a, const ImageBuffer& b, const PsnrOptions& options = {});

struct SsimOptions {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double peak = 1.0;
};

/// Mean SSIM over all valid window positions with normalized Gaussian weights.
double ssim(const ImageBuffer& a, const ImageBuffer& b, const SsimOptions& options = {});

/// (1/2M)·Σ‖x_i − x‖² + (1/2M)·Σ‖x_f − x‖², with ‖·‖² the summed squared error per image.
template <typename Scalar>
double csrn_loss(const Tensor<Scalar>& target, const Tensor<Scalar>& initial,
                 const Tensor<Scalar>& final, Index batch_count);

/// Differentiable form of csrn_loss.
template <typename Scalar>
Var<Scalar> csrn_loss(const Var<Scalar>& target, const Var<Scalar>& initial,
                      const Var<Scalar>& final, Index batch_count);

struct QualityRow {
  std::string image;
  double psnr_db = 0.0;
  double ssim = 0.0;
};

struct QualityReport {
  std::vector<QualityRow> rows;

  double mean_psnr() const;
  double mean_ssim() const;
  /// `image,psnr_db,ssim` header, one row per image, then a `mean` row.
  std::string to_csv() const;
  void write_csv(const std::filesystem::path& path) const;
};

}  // namespace csrn
