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

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "csrn/binary_io.hpp"
#include "csrn/checkpoint.hpp"
#include "csrn/cli.hpp"
#include "csrn/codec.hpp"
#include "test_util.hpp"

namespace csrn {
namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

class Cli : public csrn::testing::ScratchDir {
 protected:
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::string save_model(std::uint32_t num, std::uint32_t den, const std::string& name) {
    CsrnConfig c;
    c.ratio = SampleRatio::from_fraction(num, den);
    save_checkpoint(Csrn<float>::build(c, 5), path(name), {5, 0, 0.0});
    return path(name);
  }
};

TEST(CliParams, TenPercentBreakdown) {
  const auto r = run({"params", "--ratio", "0.1"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("initial=37465 (37.5K)\n"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("residual=118377 (118.4K)\n"), std::string::npos);
  EXPECT_NE(r.out.find("total=155842 (155.8K)\n"), std::string::npos);
  EXPECT_NE(r.err.find("ratio=0.1 "), std::string::npos) << r.err;
  EXPECT_EQ(run({"params", "--ratio", "0.1"}).out, r.out);
}

TEST(CliParams, SimpleVariantShowsInterface) {
  const auto r = run({"params", "--ratio", "0.5", "--variant", "simple"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("initial=522240 (522.2K)"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("interface="), std::string::npos);
}

TEST(CliUsage, ErrorsExitOne) {
  const auto missing = run({"params"});
  EXPECT_EQ(missing.code, cli::kExitUsage);
  EXPECT_NE(missing.err.find("--ratio"), std::string::npos);
  EXPECT_NE(missing.err.find("Usage"), std::string::npos);

  EXPECT_EQ(run({}).code, cli::kExitUsage);
  EXPECT_EQ(run({"frobnicate"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"params", "--ratio", "0.1", "--bogus", "1"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"params", "--ratio", "0.1", "--variant", "huge"}).code, cli::kExitUsage);

  const auto odd = run({"params", "--ratio", "0.15"});
  EXPECT_EQ(odd.code, cli::kExitUsage);
  EXPECT_NE(odd.err.find("groups"), std::string::npos) << odd.err;
}

TEST(CliUsage, HelpExitsZero) {
  const auto r = run({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("gradcheck"), std::string::npos);
}

TEST_F(Cli, ConfigFileAndOverrides) {
  std::ofstream(path("run.cfg")) << "# defaults\nratio = 0.2   # two groups\nvariant = rb\n";
  const auto from_file = run({"params", "--config", path("run.cfg")});
  ASSERT_EQ(from_file.code, 0) << from_file.err;
  EXPECT_NE(from_file.out.find("ratio=0.2\n"), std::string::npos) << from_file.out;
  EXPECT_NE(from_file.out.find("variant=rb"), std::string::npos);

  const auto flag_wins = run({"params", "--config", path("run.cfg"), "--ratio", "0.01"});
  ASSERT_EQ(flag_wins.code, 0) << flag_wins.err;
  EXPECT_NE(flag_wins.out.find("ratio=0.01\n"), std::string::npos) << flag_wins.out;

  std::ofstream(path("bad.cfg")) << "ratio = 0.1\nturbo = yes\n";
  EXPECT_EQ(run({"params", "--config", path("bad.cfg")}).code, cli::kExitUsage);
  std::ofstream(path("junk.cfg")) << "no equals sign\n";
  EXPECT_EQ(run({"params", "--config", path("junk.cfg")}).code, cli::kExitUsage);
  EXPECT_EQ(run({"params", "--config", path("missing.cfg")}).code, cli::kExitUsage);
}

TEST_F(Cli, EncodeDecodeRoundTrip) {
  const auto ckpt = save_model(1, 10, "m.ckpt");
  const auto img = csrn::testing::scene_image(96, 96, 1, 3);
  write_image(path("in.pgm"), img);
  const auto source = read_file_bytes(path("in.pgm"));

  auto r = run({"encode", "--model", ckpt, "--in", path("in.pgm"), "--out", path("x.csmf")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("measurements=918"), std::string::npos) << r.out;
  r = run({"decode", "--model", ckpt, "--in", path("x.csmf"), "--out", path("out.pgm")});
  ASSERT_EQ(r.code, 0) << r.err;

  const auto model = load_checkpoint(ckpt).model;
  const auto loaded = read_image(path("in.pgm"));
  EXPECT_EQ(read_file_bytes(path("x.csmf")), encode(model, loaded).serialize());
  write_image(path("ref.pgm"), reconstruct_image(model, loaded));
  EXPECT_EQ(read_file_bytes(path("out.pgm")), read_file_bytes(path("ref.pgm")));
  EXPECT_EQ(read_file_bytes(path("in.pgm")), source);
}

TEST_F(Cli, DecodeMismatchExitsTwo) {
  const auto a = save_model(1, 10, "a.ckpt");
  const auto b = save_model(1, 5, "b.ckpt");
  write_image(path("in.png"), csrn::testing::scene_image(64, 64, 3, 4));
  ASSERT_EQ(run({"encode", "--model", b, "--in", path("in.png"), "--out", path("x.csmf")}).code, 0);
  const auto r = run({"decode", "--model", a, "--in", path("x.csmf"), "--out", path("o.png")});
  EXPECT_EQ(r.code, cli::kExitRuntime);
  EXPECT_NE(r.err.find("config mismatch"), std::string::npos) << r.err;
  EXPECT_FALSE(std::filesystem::exists(path("o.png")));
}

TEST_F(Cli, RuntimeErrorsExitTwo) {
  EXPECT_EQ(run({"encode", "--model", path("none.ckpt"), "--in", path("a.png"), "--out",
                 path("b.csmf")}).code,
            cli::kExitRuntime);
  std::ofstream(path("trunc.csmf")) << "CSMF";
  const auto ckpt = save_model(1, 10, "m.ckpt");
  EXPECT_EQ(run({"decode", "--model", ckpt, "--in", path("trunc.csmf"), "--out", path("o.png")}).code,
            cli::kExitRuntime);
}

TEST_F(Cli, EvalWritesReport) {
  const auto ckpt = save_model(1, 10, "m.ckpt");
  std::filesystem::create_directories(dir_ / "imgs");
  for (int i = 0; i < 2; ++i)
    write_image(dir_ / "imgs" / ("p" + std::to_string(i) + ".png"),
                csrn::testing::scene_image(96, 64, 3, i));
  const auto r = run({"eval", "--model", ckpt, "--data", path("imgs"), "--out", path("q.csv"),
                      "--identity"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("images=2 mean_psnr=99.0000 mean_ssim=1.000000"), std::string::npos) << r.out;
  const auto csv = read_file_bytes(path("q.csv"));
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
}

TEST_F(Cli, TrainTinyRun) {
  for (const char* split : {"train", "val"}) {
    std::filesystem::create_directories(dir_ / "data" / split);
    write_image(dir_ / "data" / split / "a.png", csrn::testing::scene_image(96, 96, 3, 1));
  }
  const auto r = run({"train", "--ratio", "0.1", "--data", path("data"), "--out", path("run"),
                      "--epochs", "1", "--batch", "4", "--filters", "8", "--rrfm", "1",
                      "--recurrences", "1", "--no-timing"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("#   epochs = 1"), std::string::npos) << r.err;
  EXPECT_TRUE(std::filesystem::exists(dir_ / "run" / "best.ckpt"));
  EXPECT_TRUE(std::filesystem::exists(dir_ / "run" / "train_log.csv"));

  const auto empty = run({"train", "--ratio", "0.1", "--data", path("nothing"), "--out",
                          path("run2"), "--epochs", "1"});
  EXPECT_EQ(empty.code, cli::kExitRuntime);
}

TEST(CliGradcheck, SuitePasses) {
  const auto r = run({"gradcheck"});
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(r.out.find("FAIL"), std::string::npos);
  EXPECT_NE(r.out.find("end-to-end"), std::string::npos);
}

}  // namespace
}  // namespace csrn
