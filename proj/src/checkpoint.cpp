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

#include "csrn/checkpoint.hpp"

#include <set>

#include "csrn/binary_io.hpp"

namespace csrn {

namespace {

constexpr char kMagic[] = "CSRN";

// Biases are stored as rank-1 records; weights as rank-4.
bool is_bias(const Shape& s) { return s.c == 1 && s.h == 1 && s.w == 1; }

}  // namespace

std::vector<std::uint8_t> checkpoint_bytes(const Csrn<float>& model, const CheckpointMeta& meta) {
  const auto& cfg = model.config();
  ByteWriter w;
  w.raw(std::string_view(kMagic, 4));
  w.u16(kCheckpointVersion);
  w.u16(cfg.ratio.num);
  w.u16(cfg.ratio.den);
  w.u16(static_cast<std::uint16_t>(cfg.block));
  w.u16(static_cast<std::uint16_t>(cfg.filters));
  w.u16(static_cast<std::uint16_t>(cfg.rrfm_count));
  w.u16(static_cast<std::uint16_t>(cfg.recurrences));
  w.u8(static_cast<std::uint8_t>((cfg.progressive_init ? 1 : 0) | (cfg.use_rrfm ? 2 : 0) |
                                 (cfg.use_fcm ? 4 : 0)));
  w.u64(meta.seed);
  w.u32(meta.epoch);
  w.f64(meta.validation_loss);
  const auto& entries = model.params().entries();
  w.u32(static_cast<std::uint32_t>(entries.size()));
  for (const auto& p : entries) {
    w.u16(static_cast<std::uint16_t>(p.name.size()));
    w.raw(p.name);
    const Shape& s = p.value.shape();
    const bool bias = p.name.ends_with(".bias") && is_bias(s);
    if (bias) {
      w.u8(1);
      w.u32(static_cast<std::uint32_t>(s.n));
    } else {
      w.u8(4);
      for (Index d : {s.n, s.c, s.h, s.w}) w.u32(static_cast<std::uint32_t>(d));
    }
    for (Index i = 0; i < p.value.size(); ++i) w.f32(p.value.data()[i]);
  }
  return w.bytes();
}

LoadedCheckpoint parse_checkpoint(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, "checkpoint header");
  if (r.raw(4) != std::string(kMagic, 4)) throw FormatError("not a checkpoint file (bad magic)");
  const auto version = r.u16();
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  CsrnConfig cfg;
  const auto num = r.u16();
  const auto den = r.u16();
  try {
    cfg.ratio = SampleRatio::from_fraction(num, den);
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint header: ") + e.what());
  }
  cfg.block = r.u16();
  cfg.filters = r.u16();
  cfg.rrfm_count = r.u16();
  cfg.recurrences = r.u16();
  const auto flags = r.u8();
  cfg.progressive_init = (flags & 1) != 0;
  cfg.use_rrfm = (flags & 2) != 0;
  cfg.use_fcm = (flags & 4) != 0;
  CheckpointMeta meta;
  meta.seed = r.u64();
  meta.epoch = r.u32();
  meta.validation_loss = r.f64();
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint header: ") + e.what());
  }

  const auto manifest = layer_manifest(cfg);
  std::set<std::string> expected;
  std::map<std::string, Partition> partition_of;
  for (const auto& l : manifest) {
    expected.insert(l.name + ".weight");
    partition_of[l.name + ".weight"] = l.partition;
    if (l.conv.bias) {
      expected.insert(l.name + ".bias");
      partition_of[l.name + ".bias"] = l.partition;
    }
  }

  const auto count = r.u32();
  ParamStore<float> store;
  for (std::uint32_t i = 0; i < count; ++i) {
    r.set_context("checkpoint record #" + std::to_string(i));
    const auto name_len = r.u16();
    const auto name = r.raw(name_len);
    r.set_context("checkpoint record '" + name + "'");
    const auto it = partition_of.find(name);
    if (it == partition_of.end()) {
      throw FormatError("checkpoint record '" + name + "': not a parameter of this architecture");
    }
    if (store.contains(name)) throw FormatError("checkpoint record '" + name + "': duplicated");
    const auto rank = r.u8();
    Shape shape;
    if (rank == 1) {
      shape.n = r.u32();
    } else if (rank == 4) {
      shape.n = r.u32();
      shape.c = r.u32();
      shape.h = r.u32();
      shape.w = r.u32();
    } else {
      throw FormatError("checkpoint record '" + name + "': unsupported rank " +
                        std::to_string(rank));
    }
    if (shape.n < 1 || shape.c < 1 || shape.h < 1 || shape.w < 1) {
      throw FormatError("checkpoint record '" + name + "': zero dimension");
    }
    r.need(static_cast<std::size_t>(shape.size()) * 4);
    Tensor<float> t(shape);
    for (Index k = 0; k < t.size(); ++k) t.data()[k] = r.f32();
    store.add(name, it->second, std::move(t));
  }
  r.set_context("checkpoint trailer");
  if (r.remaining() != 0) throw FormatError("checkpoint: trailing bytes after records");
  if (store.size() != expected.size()) {
    for (const auto& name : expected) {
      if (!store.contains(name)) throw FormatError("checkpoint record '" + name + "': missing");
    }
  }
  // Reorder to manifest order so re-serialization is byte-identical.
  ParamStore<float> ordered;
  for (const auto& l : manifest) {
    ordered.add(l.name + ".weight", l.partition, store.at(l.name + ".weight"));
    if (l.conv.bias) ordered.add(l.name + ".bias", l.partition, store.at(l.name + ".bias"));
  }
  try {
    return {Csrn<float>(cfg, std::move(ordered)), meta};
  } catch (const DimensionError& e) {
    throw FormatError(std::string("checkpoint record shape: ") + e.what());
  }
}

void save_checkpoint(const Csrn<float>& model, const std::filesystem::path& path,
                     const CheckpointMeta& meta) {
  write_file_atomic(path, checkpoint_bytes(model, meta));
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  return parse_checkpoint(read_file_bytes(path));
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path, const CsrnConfig& expected) {
  auto loaded = load_checkpoint(path);
  if (!(loaded.model.config() == expected)) {
    throw ConfigMismatchError("checkpoint config {" + loaded.model.config().str() +
                              "} does not match expected {" + expected.str() + "}");
  }
  return loaded;
}

std::size_t checkpoint_record_count(const CsrnConfig& config) {
  std::size_t n = 0;
  for (const auto& l : layer_manifest(config)) n += l.conv.bias ? 2 : 1;
  return n;
}

}  // namespace csrn
