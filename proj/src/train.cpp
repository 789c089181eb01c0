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

#include "csrn/train.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "csrn/codec.hpp"

namespace csrn {

namespace fs = std::filesystem;

std::string TrainLog::to_csv() const {
  std::ostringstream os;
  os << "epoch,train_loss,val_loss,lr,seconds\n";
  char line[160];
  for (const auto& e : epochs) {
    std::snprintf(line, sizeof(line), "%d,%.9g,%.9g,%.9g,%.3f\n", e.epoch, e.train_loss,
                  e.val_loss, e.lr, e.seconds);
    os << line;
  }
  return os.str();
}

void TrainLog::write_csv(const fs::path& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << to_csv();
}

int argmin_validation(const std::vector<EpochRecord>& epochs) {
  int best = -1;
  for (std::size_t i = 0; i < epochs.size(); ++i) {
    if (best < 0 || epochs[i].val_loss < epochs[static_cast<std::size_t>(best)].val_loss) {
      best = static_cast<int>(i);
    }
  }
  return best;
}

void TrainConfig::validate() const {
  model.validate();
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (crop.size % model.block != 0) {
    throw ConfigError("crop size " + std::to_string(crop.size) + " is not a multiple of block " +
                      std::to_string(model.block));
  }
}

double Trainer::step(const Tensor<float>& batch, double rate) {
  Tape<float> tape;
  const auto params = model_.bind(&tape);
  const auto x = tape.constant(batch);
  const auto out = model_.forward(params, x);
  const auto loss = csrn_loss(x, out.initial, out.final, batch.shape().n);
  const double value = loss.value().item();
  if (!std::isfinite(value)) return value;
  const auto grads = params.gradients(tape.backward(loss));
  adam_step(model_.params(), grads, adam_, rate);
  return value;
}

double Trainer::loss(const Tensor<float>& batch) const {
  const auto out = model_.forward(batch);
  return csrn_loss(batch, out.initial, out.final, batch.shape().n);
}

double dataset_loss(const Csrn<float>& model, const PatchSet& patches, std::size_t batch_size) {
  if (patches.count() == 0) return 0.0;
  double total = 0.0;
  for (std::size_t b = 0; b < patches.count(); b += batch_size) {
    std::vector<std::size_t> idx;
    for (std::size_t i = b; i < std::min(patches.count(), b + batch_size); ++i) idx.push_back(i);
    const auto batch = make_batch(patches, idx);
    const auto out = model.forward(batch);
    // csrn_loss divides by 2M; undo it so the sum is per image.
    total += csrn_loss(batch, out.initial, out.final, 1);
  }
  return total / static_cast<double>(patches.count());
}

TrainResult train(const TrainConfig& config, const PatchSet& train_set, const PatchSet& val_set) {
  config.validate();
  if (train_set.count() < config.batch_size) {
    throw DataError("training set has " + std::to_string(train_set.count()) +
                    " patches, fewer than one batch of " + std::to_string(config.batch_size));
  }
  if (train_set.size % config.model.block != 0) {
    throw ConfigError("patch size is not a multiple of the block size");
  }
  const PatchSet& validation = val_set.count() > 0 ? val_set : train_set;
  if (val_set.count() == 0) {
    std::cerr << "warning: empty validation set; selecting on training loss\n";
  }

  Trainer trainer(Csrn<float>::build(config.model, config.seed));
  TrainResult result{trainer.model(), {}, {}};
  if (!config.checkpoint_dir.empty()) {
    fs::create_directories(config.checkpoint_dir);
    result.checkpoint = config.checkpoint_dir / "best.ckpt";
  }

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    const double rate = config.schedule.at_epoch(epoch);
    double loss_sum = 0.0;
    std::size_t steps = 0;
    for (const auto& idx : batch_order(train_set.count(), config.batch_size, config.seed,
                                       static_cast<std::uint64_t>(epoch))) {
      const double loss = trainer.step(make_batch(train_set, idx), rate);
      if (!std::isfinite(loss)) {
        throw DivergenceError("non-finite training loss at epoch " + std::to_string(epoch) +
                              ", step " + std::to_string(steps) +
                              (result.checkpoint.empty()
                                   ? std::string()
                                   : "; last good checkpoint: " + result.checkpoint.string()));
      }
      loss_sum += loss;
      ++steps;
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(steps);
    rec.val_loss = dataset_loss(trainer.model(), validation, config.batch_size);
    rec.lr = rate;
    if (!std::isfinite(rec.val_loss)) {
      throw DivergenceError("non-finite validation loss at epoch " + std::to_string(epoch));
    }
    if (config.record_time) {
      rec.seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
    result.log.epochs.push_back(rec);
    const int best = argmin_validation(result.log.epochs);
    if (best == epoch) {
      result.log.best_epoch = best;
      result.model = trainer.model();
      if (!result.checkpoint.empty()) {
        save_checkpoint(result.model, result.checkpoint,
                        {config.seed, static_cast<std::uint32_t>(epoch), rec.val_loss});
      }
    }
    if (!config.checkpoint_dir.empty()) {
      result.log.write_csv(config.checkpoint_dir / "train_log.csv");
    }
    if (config.on_epoch) config.on_epoch(rec);
  }
  return result;
}

TrainResult train(const TrainConfig& config) {
  config.validate();
  auto train_set = load_patch_set(config.data_root / "train", config.crop, config.luma);
  if (train_set.count() == 0) {
    throw DataError("no training patches found under '" + (config.data_root / "train").string() +
                    "'");
  }
  auto val_crop = config.crop;
  auto val_set = load_patch_set(config.data_root / "val", val_crop, config.luma);
  return train(config, train_set, val_set);
}

QualityReport evaluate(const Csrn<float>& model, const fs::path& dir, const EvalOptions& options) {
  const auto files = list_images(dir);
  std::vector<std::optional<QualityRow>> rows(files.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;

  auto worker = [&] {
    for (std::size_t i = next++; i < files.size(); i = next++) {
      try {
        const auto truth = rgb_to_luma(read_image(files[i]), options.luma);
        ImageBuffer recon = truth;
        if (!options.identity) {
          const auto bytes = encode(model, truth).serialize();
          recon = decode(model, MeasurementFile::parse(bytes));
        }
        QualityRow row;
        row.image = files[i].filename().string();
        row.psnr_db = psnr(recon, truth, {1.0, options.quantize_8bit});
        row.ssim = ssim(recon, truth);
        rows[i] = row;
      } catch (const Error& e) {
        std::lock_guard lock(log_mutex);
        std::cerr << "warning: skipping " << files[i] << ": " << e.what() << "\n";
      }
    }
  };

  const unsigned threads = std::max(1u, std::min<unsigned>(options.threads,
                                                           static_cast<unsigned>(files.size())));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  QualityReport report;
  for (auto& r : rows) {
    if (r) report.rows.push_back(*r);
  }
  return report;
}

CsrnConfig variant_config(const CsrnConfig& base, Variant variant) {
  CsrnConfig c = base;
  c.progressive_init = variant != Variant::simple_init;
  c.use_rrfm = variant != Variant::rb_only;
  c.use_fcm = variant != Variant::no_fcm;
  return c;
}

AblationResult ablation_run(const TrainConfig& base, Variant variant, const PatchSet& train_set,
                            const PatchSet& val_set) {
  AblationResult result{variant, {}, {}, {}, {}};
  TrainConfig a = base;
  a.model = variant_config(base.model, Variant::progressive);
  TrainConfig b = base;
  b.model = variant_config(base.model, variant);
  if (!base.checkpoint_dir.empty()) {
    a.checkpoint_dir = base.checkpoint_dir / "base";
    b.checkpoint_dir = base.checkpoint_dir / to_string(variant);
  }
  auto ra = train(a, train_set, val_set);
  auto rb = train(b, train_set, val_set);
  result.base_log = std::move(ra.log);
  result.variant_log = std::move(rb.log);
  result.base_params = ra.model.count_params();
  result.variant_params = rb.model.count_params();
  return result;
}

AblationResult ablation_run(const TrainConfig& base, Variant variant) {
  base.validate();
  auto train_set = load_patch_set(base.data_root / "train", base.crop, base.luma);
  if (train_set.count() == 0) throw DataError("no training patches found");
  auto val_set = load_patch_set(base.data_root / "val", base.crop, base.luma);
  return ablation_run(base, variant, train_set, val_set);
}

}  // namespace csrn
