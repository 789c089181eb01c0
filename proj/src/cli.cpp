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

#include "csrn/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "csrn/checkpoint.hpp"
#include "csrn/codec.hpp"
#include "csrn/gradcheck_suite.hpp"
#include "csrn/train.hpp"

namespace csrn::cli {

namespace fs = std::filesystem;

namespace {

struct UsageError : Error {
  using Error::Error;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

unsigned threads_from_env() {
  const char* v = std::getenv("CSRN_THREADS");
  if (v == nullptr) return 1;
  try {
    const long n = std::stol(v);
    return n < 1 ? 1u : static_cast<unsigned>(n);
  } catch (const std::exception&) {
    return 1;
  }
}

SampleRatio parse_supported_ratio(const std::string& text) {
  SampleRatio r;
  try {
    r = SampleRatio::parse(text);
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
  if (!is_supported_ratio(r)) {
    throw UsageError("unsupported sample ratio " + text +
                     ": measurements are grouped as one group of floor(r*B^2) channels below 0.1 "
                     "and as 0.1*B^2-channel groups above, so only 0.01, 0.05, 0.1, 0.2, 0.3, "
                     "0.4 and 0.5 are accepted");
  }
  return r;
}

Variant parse_variant_arg(const std::string& text) {
  try {
    return parse_variant(text);
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
}

LumaRange parse_luma(const std::string& text) {
  if (text == "studio") return LumaRange::studio;
  if (text == "full") return LumaRange::full;
  throw UsageError("unknown luma range '" + text + "' (expected studio|full)");
}

// Expands `--config FILE` into flags for keys not already given on the command line.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::vector<std::string> out;
  std::vector<std::string> from_file;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" || args[i].starts_with("--config=")) {
      std::string path;
      if (args[i] == "--config") {
        if (i + 1 >= args.size()) throw UsageError("--config requires a file path");
        path = args[++i];
      } else {
        path = args[i].substr(9);
      }
      for (const auto& [key, value] : parse_config_file(path)) {
        const std::string flag = "--" + key;
        bool given = false;
        for (const auto& a : args) given = given || a == flag || a.starts_with(flag + "=");
        if (given) continue;
        from_file.push_back(flag);
        if (value != "true") from_file.push_back(value);
      }
      continue;
    }
    out.push_back(args[i]);
  }
  out.insert(out.end(), from_file.begin(), from_file.end());
  return out;
}

void print_resolved(std::ostream& err, const std::string& command,
                    const std::vector<std::pair<std::string, std::string>>& items) {
  err << "# " << command << "\n";
  for (const auto& [k, v] : items) err << "#   " << k << " = " << v << "\n";
}

std::string fmt_k(Index n) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1fK", static_cast<double>(n) / 1000.0);
  return buf;
}

}  // namespace

std::map<std::string, std::string> parse_config_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file '" + path.string() + "'");
  std::map<std::string, std::string> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
    }
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) {
      throw UsageError(path.string() + ":" + std::to_string(lineno) + ": empty key");
    }
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Compressed-sensing image codec with recurrent residual reconstruction", "csrn"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  // train
  std::string ratio_text = "0.1";
  std::string variant_text = "progressive";
  std::string data_dir;
  std::string out_dir;
  int epochs = 100;
  std::size_t batch = 16;
  std::uint64_t seed = 42;
  double lr = 5e-4;
  Index block = 32;
  Index filters = 32;
  Index rrfm = 5;
  Index recurrences = 3;
  Index crop_stride = 96;
  bool no_augment = false;
  bool no_timing = false;
  std::string luma_text = "studio";

  auto* train_cmd = app.add_subcommand("train", "Train a model and keep the best validation checkpoint");
  train_cmd->add_option("--ratio", ratio_text, "Sample ratio")->required();
  train_cmd->add_option("--data", data_dir, "Dataset root with train/ and val/")->required();
  train_cmd->add_option("--out", out_dir, "Output directory")->required();
  train_cmd->add_option("--epochs", epochs, "Epochs")->capture_default_str();
  train_cmd->add_option("--batch", batch, "Batch size")->capture_default_str();
  train_cmd->add_option("--seed", seed, "Random seed")->capture_default_str();
  train_cmd->add_option("--variant", variant_text, "progressive|simple|rb|no-fcm")->capture_default_str();
  train_cmd->add_option("--lr", lr, "Base learning rate")->capture_default_str();
  train_cmd->add_option("--block", block, "Block size B")->capture_default_str();
  train_cmd->add_option("--filters", filters, "Filter count m")->capture_default_str();
  train_cmd->add_option("--rrfm", rrfm, "RRFM count N")->capture_default_str();
  train_cmd->add_option("--recurrences", recurrences, "Recurrences T")->capture_default_str();
  train_cmd->add_option("--crop-stride", crop_stride, "Patch crop stride")->capture_default_str();
  train_cmd->add_flag("--no-augment", no_augment, "Disable the eight-fold augmentation");
  train_cmd->add_flag("--no-timing", no_timing, "Write 0 in the log's seconds column");
  train_cmd->add_option("--luma", luma_text, "studio|full")->capture_default_str();

  // encode / decode
  std::string model_path;
  std::string in_path;
  std::string out_path;
  auto* encode_cmd = app.add_subcommand("encode", "Sample an image into a measurement file");
  encode_cmd->add_option("--model", model_path, "Checkpoint")->required();
  encode_cmd->add_option("--in", in_path, "Input image (PNG/PGM/PPM)")->required();
  encode_cmd->add_option("--out", out_path, "Output measurement file")->required();
  encode_cmd->add_option("--luma", luma_text, "studio|full")->capture_default_str();

  auto* decode_cmd = app.add_subcommand("decode", "Reconstruct an image from a measurement file");
  decode_cmd->add_option("--model", model_path, "Checkpoint")->required();
  decode_cmd->add_option("--in", in_path, "Measurement file")->required();
  decode_cmd->add_option("--out", out_path, "Output image (.png or .pgm)")->required();

  // eval
  bool identity = false;
  bool quantize = false;
  unsigned threads = threads_from_env();
  auto* eval_cmd = app.add_subcommand("eval", "PSNR/SSIM of encode+decode over a directory");
  eval_cmd->add_option("--model", model_path, "Checkpoint")->required();
  eval_cmd->add_option("--data", data_dir, "Directory of test images")->required();
  eval_cmd->add_option("--out", out_path, "CSV report")->required();
  eval_cmd->add_flag("--identity", identity, "Score ground truth against itself");
  eval_cmd->add_flag("--quantize", quantize, "Quantize to 8 bits before PSNR");
  eval_cmd->add_option("--threads", threads, "Concurrent images (default $CSRN_THREADS or 1)");
  eval_cmd->add_option("--luma", luma_text, "studio|full")->capture_default_str();

  // params
  auto* params_cmd = app.add_subcommand("params", "Print the parameter breakdown");
  params_cmd->add_option("--ratio", ratio_text, "Sample ratio")->required();
  params_cmd->add_option("--variant", variant_text, "progressive|simple|rb|no-fcm")->capture_default_str();
  params_cmd->add_option("--block", block, "Block size B")->capture_default_str();
  params_cmd->add_option("--filters", filters, "Filter count m")->capture_default_str();
  params_cmd->add_option("--rrfm", rrfm, "RRFM count N")->capture_default_str();
  params_cmd->add_option("--recurrences", recurrences, "Recurrences T")->capture_default_str();

  // gradcheck
  auto* gradcheck_cmd = app.add_subcommand("gradcheck", "Finite-difference gradient suite");
  gradcheck_cmd->add_option("--seed", seed, "Random seed")->capture_default_str();

  std::vector<std::string> args;
  try {
    args = expand_config(raw_args);
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  auto model_config = [&]() {
    CsrnConfig c = CsrnConfig::with_variant(parse_supported_ratio(ratio_text),
                                            parse_variant_arg(variant_text));
    c.block = block;
    c.filters = filters;
    c.rrfm_count = rrfm;
    c.recurrences = recurrences;
    try {
      c.validate();
    } catch (const ConfigError& e) {
      throw UsageError(e.what());
    }
    return c;
  };

  try {
    if (*train_cmd) {
      TrainConfig tc;
      tc.model = model_config();
      tc.data_root = data_dir;
      tc.epochs = epochs;
      tc.batch_size = batch;
      tc.seed = seed;
      tc.schedule.base = lr;
      tc.checkpoint_dir = out_dir;
      tc.crop = {96, crop_stride, !no_augment};
      tc.luma = parse_luma(luma_text);
      tc.record_time = !no_timing;
      try {
        tc.validate();
      } catch (const ConfigError& e) {
        throw UsageError(e.what());
      }
      print_resolved(err, "train",
                     {{"model", tc.model.str()},
                      {"data", data_dir},
                      {"out", out_dir},
                      {"epochs", std::to_string(epochs)},
                      {"batch", std::to_string(batch)},
                      {"seed", std::to_string(seed)},
                      {"lr", std::to_string(lr)},
                      {"crop_stride", std::to_string(crop_stride)},
                      {"augment", no_augment ? "false" : "true"},
                      {"luma", luma_text}});
      tc.on_epoch = [&err](const EpochRecord& r) {
        err << "epoch " << r.epoch << " train_loss " << r.train_loss << " val_loss " << r.val_loss
            << " lr " << r.lr << "\n";
      };
      const auto result = train(tc);
      out << "best_epoch=" << result.log.best_epoch << "\n";
      out << "checkpoint=" << result.checkpoint.string() << "\n";
      return kExitOk;
    }
    if (*encode_cmd) {
      const auto luma = parse_luma(luma_text);
      print_resolved(err, "encode", {{"model", model_path}, {"in", in_path}, {"out", out_path},
                                     {"luma", luma_text}});
      const auto ckpt = load_checkpoint(model_path);
      const auto file = encode(ckpt.model, rgb_to_luma(read_image(in_path), luma));
      file.write(out_path);
      out << "measurements=" << file.payload_bytes() / 4 << " bytes=" << file.serialize().size()
          << "\n";
      return kExitOk;
    }
    if (*decode_cmd) {
      print_resolved(err, "decode", {{"model", model_path}, {"in", in_path}, {"out", out_path}});
      const auto ckpt = load_checkpoint(model_path);
      const auto file = MeasurementFile::read(in_path);
      write_image(out_path, decode(ckpt.model, file));
      out << "image=" << file.width << "x" << file.height << "\n";
      return kExitOk;
    }
    if (*eval_cmd) {
      EvalOptions opts;
      opts.identity = identity;
      opts.quantize_8bit = quantize;
      opts.luma = parse_luma(luma_text);
      opts.threads = threads;
      print_resolved(err, "eval", {{"model", model_path}, {"data", data_dir}, {"out", out_path},
                                   {"identity", identity ? "true" : "false"},
                                   {"quantize", quantize ? "true" : "false"},
                                   {"threads", std::to_string(threads)},
                                   {"luma", luma_text}});
      const auto ckpt = load_checkpoint(model_path);
      const auto report = evaluate(ckpt.model, data_dir, opts);
      report.write_csv(out_path);
      char line[96];
      std::snprintf(line, sizeof(line), "images=%zu mean_psnr=%.4f mean_ssim=%.6f\n",
                    report.rows.size(), report.mean_psnr(), report.mean_ssim());
      out << line;
      return kExitOk;
    }
    if (*params_cmd) {
      const auto cfg = model_config();
      print_resolved(err, "params", {{"model", cfg.str()}});
      const auto counts = Csrn<float>::build(cfg, 0).count_params();
      out << "ratio=" << cfg.ratio.str() << "\n";
      out << "variant=" << variant_text << "\n";
      out << "sampling=" << counts.sampling << "\n";
      out << "initial=" << counts.initial << " (" << fmt_k(counts.initial) << ")\n";
      if (counts.interface != 0) out << "interface=" << counts.interface << "\n";
      out << "residual=" << counts.residual << " (" << fmt_k(counts.residual) << ")\n";
      out << "total=" << counts.reconstruction_total() << " ("
          << fmt_k(counts.reconstruction_total()) << ")\n";
      return kExitOk;
    }
    if (*gradcheck_cmd) {
      print_resolved(err, "gradcheck", {{"seed", std::to_string(seed)}});
      bool ok = true;
      for (const auto& c : run_gradcheck_suite(seed)) {
        char line[200];
        std::snprintf(line, sizeof(line), "%s  %-48s max_rel_err=%.3e tol=%.0e n=%zu\n",
                      c.report.passed ? "PASS" : "FAIL", c.name.c_str(),
                      c.report.max_relative_error, c.report.tolerance, c.report.checked);
        out << line;
        ok = ok && c.report.passed;
      }
      return ok ? kExitOk : kExitRuntime;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace csrn::cli
