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

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "csrn/checkpoint.hpp"
#include "csrn/data.hpp"
#include "csrn/metrics.hpp"
#include "csrn/model.hpp"
#include "csrn/optimizer.hpp"

namespace csrn {

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double lr = 0.0;
  double seconds = 0.0;
};

struct TrainLog {
  std::vector<EpochRecord> epochs;
  int best_epoch = -1;

  /// `epoch,train_loss,val_loss,lr,seconds`.
  std::string to_csv() const;
  void write_csv(const std::filesystem::path& path) const;
};

/// Index of the first epoch with the smallest validation loss, or -1 when empty.
int argmin_validation(const std::vector<EpochRecord>& epochs);

struct TrainConfig {
  CsrnConfig model;
  std::filesystem::path data_root;  // expects train/ and val/ subdirectories
  int epochs = 100;
  std::size_t batch_size = 16;
  LrSchedule schedule;              // 5e-4, ×0.1 at epochs 50 and 80
  std::uint64_t seed = 42;
  std::filesystem::path checkpoint_dir;
  CropOptions crop{96, 96, true};
  LumaRange luma = LumaRange::studio;
  /// When false the seconds column is written as 0 so logs byte-compare across runs.
  bool record_time = true;
  std::function<void(const EpochRecord&)> on_epoch;

  void validate() const;
};

/// Adam state plus the two-term loss over one model.
class Trainer {
 public:
  explicit Trainer(Csrn<float> model) : model_(std::move(model)) {}

  /// One gradient step on `batch`; returns the loss evaluated before the update.
  double step(const Tensor<float>& batch, double rate);

  /// Two-term loss of the current weights on `batch` (inference mode).
  double loss(const Tensor<float>& batch) const;

  const Csrn<float>& model() const { return model_; }
  Csrn<float>& model() { return model_; }
  const AdamState<float>& adam() const { return adam_; }

 private:
  Csrn<float> model_;
  AdamState<float> adam_;
};

struct TrainResult {
  Csrn<float> model;  // weights of the best epoch
  TrainLog log;
  std::filesystem::path checkpoint;
};

/// Mean two-term loss per image over `patches` in fixed order.
double dataset_loss(const Csrn<float>& model, const PatchSet& patches, std::size_t batch_size);

/// Full protocol over in-memory patch sets.
TrainResult train(const TrainConfig& config, const PatchSet& train_set, const PatchSet& val_set);

/// Loads `<data_root>/train` and `<data_root>/val`, then trains.
TrainResult train(const TrainConfig& config);

struct EvalOptions {
  bool identity = false;  // score ground truth against itself (pipeline sanity bypass)
  bool quantize_8bit = false;
  LumaRange luma = LumaRange::studio;
  unsigned threads = 1;
};

/// Per-image PSNR/SSIM of decode(encode(img)) against the luminance ground truth.
QualityReport evaluate(const Csrn<float>& model, const std::filesystem::path& dir,
                       const EvalOptions& options = {});

struct AblationResult {
  Variant variant;
  TrainLog base_log;
  TrainLog variant_log;
  ParamCounts<float> base_params;
  ParamCounts<float> variant_params;

  Index initial_delta() const {
    return variant_params.initial - base_params.initial;
  }
  Index residual_delta() const { return variant_params.residual - base_params.residual; }
  Index total_delta() const {
    return variant_params.reconstruction_total() - base_params.reconstruction_total();
  }
};

/// Config for an ablation variant of `base` (same ratio, sizes and seed).
CsrnConfig variant_config(const CsrnConfig& base, Variant variant);

/// Trains `base` and its variant under identical seeds and data order.
AblationResult ablation_run(const TrainConfig& base, Variant variant, const PatchSet& train_set,
                            const PatchSet& val_set);
AblationResult ablation_run(const TrainConfig& base, Variant variant);

}  // namespace csrn
