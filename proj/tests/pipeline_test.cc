#include <cstdlib>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "fragsplat/core/binary_io.h"
#include "fragsplat/pipeline/pipeline.h"
#include "fragsplat/pipeline/run_config.h"
#include "test_util.h"

namespace fragsplat {
namespace {

using testing::ExpectError;
namespace fs = std::filesystem;

TEST(RunConfigTest, EveryKeyRoundTrips) {
  RunConfig config;
  config.Set("fragment_size", "6");
  config.Set("beta", "0.85");
  config.Set("noise_sigma", "0.005");
  config.Set("with_objects", "false");
  config.Set("frames", "/tmp/some dir");
  config.Set("seed", "18446744073709551615");
  EXPECT_EQ(config.fragment_size, 6);
  EXPECT_EQ(config.beta, 0.85);
  EXPECT_FALSE(config.with_objects);
  EXPECT_EQ(config.seed, 18446744073709551615ull);
  EXPECT_EQ(config.frames, "/tmp/some dir");

  RunConfig back;
  ApplyConfigText(FormatConfig(config), &back);
  for (const std::string& key : ConfigKeys()) {
    EXPECT_EQ(back.Get(key), config.Get(key)) << key;
  }
  EXPECT_EQ(FormatConfig(back), FormatConfig(config));
  // Get/Set agree for every key on its own formatting.
  RunConfig copy;
  for (const std::string& key : ConfigKeys()) copy.Set(key, config.Get(key));
  EXPECT_EQ(FormatConfig(copy), FormatConfig(config));
}

TEST(RunConfigTest, ParsingErrors) {
  RunConfig config;
  ExpectError(ErrorCode::kBadConfig, [&] { config.Set("no_such_key", "1"); });
  ExpectError(ErrorCode::kBadConfig, [&] { config.Set("fragment_size", "four"); });
  ExpectError(ErrorCode::kBadConfig, [&] { config.Set("fragment_size", "4x"); });
  ExpectError(ErrorCode::kBadConfig, [&] { config.Set("beta", ""); });
  ExpectError(ErrorCode::kBadConfig, [&] { config.Set("with_objects", "maybe"); });
  ExpectError(ErrorCode::kBadConfig, [&] { ApplyConfigText("beta 0.5\n", &config); });
  ApplyConfigText("# comment\n\n  beta = 0.5  \nfragment_size=3\n", &config);
  EXPECT_EQ(config.beta, 0.5);
  EXPECT_EQ(config.fragment_size, 3);
  ExpectError(ErrorCode::kBadConfig, [&] { ApplyConfigFile("/nonexistent/run.cfg", &config); });
}

TEST(RunConfigTest, ValidationRanges) {
  auto invalid = [](const std::string& key, const std::string& value) {
    RunConfig config;
    config.Set(key, value);
    ExpectError(ErrorCode::kBadConfig, [&] { config.Validate(); });
  };
  invalid("fragment_size", "1");
  invalid("beta", "1");
  invalid("beta", "0");
  invalid("merge_iterations", "-1");
  invalid("pose_step", "0");
  invalid("align_frames", "0");
  invalid("holdout_every", "1");
  invalid("holdout_offset", "8");
  invalid("subsample", "0");
  invalid("outlier_fraction", "1");
  invalid("pair_rotation_sigma", "-0.1");
  invalid("scale_jitter_min", "0");
  RunConfig ok;
  ok.Validate();
  ok.Set("holdout_every", "0");
  ok.Set("holdout_offset", "17");
  ok.Validate();
}

TEST(HoldoutTest, Frames) {
  EXPECT_EQ(HoldoutFrames(32, 8, 4), (std::vector<int>{4, 12, 20, 28}));
  EXPECT_EQ(HoldoutFrames(32, 8, 0), (std::vector<int>{8, 16, 24, 32}));
  EXPECT_EQ(HoldoutFrames(7, 3, 1), (std::vector<int>{1, 4, 7}));
  EXPECT_TRUE(HoldoutFrames(32, 0, 0).empty());
  EXPECT_EQ(RunConfig().holdout_every, 8);
  EXPECT_EQ(RunConfig().holdout_offset, 4);
}

TEST(ExitCodeTest, Categories) {
  EXPECT_EQ(ExitCodeFor(ErrorCode::kBadConfig), 2);
  EXPECT_EQ(ExitCodeFor(ErrorCode::kBadSpec), 2);
  EXPECT_EQ(ExitCodeFor(ErrorCode::kBadMagic), 3);
  EXPECT_EQ(ExitCodeFor(ErrorCode::kMissingReconstruction), 3);
  EXPECT_EQ(ExitCodeFor(ErrorCode::kBadBundlePath), 3);
  EXPECT_EQ(ExitCodeFor(ErrorCode::kNoConsensus), 4);
  EXPECT_EQ(ExitCodeFor(ErrorCode::kEmptyIntersection), 4);
}

TEST(CameraFileTest, RoundTrip) {
  const auto dir = testing::ScratchDir("camera");
  CameraIntrinsics k;
  k.fx = 115.2;
  k.fy = 115.20000000000002;
  k.cx = 63.5;
  k.cy = 31.25;
  k.width = 128;
  k.height = 64;
  WriteCamera(dir / "camera.txt", k);
  const CameraIntrinsics back = ReadCamera(dir / "camera.txt");
  EXPECT_EQ(back.fx, k.fx);
  EXPECT_EQ(back.fy, k.fy);
  EXPECT_EQ(back.cy, k.cy);
  EXPECT_EQ(back.height, 64);
}

int RunCli(const std::string& args, const fs::path& log) {
  const std::string command = std::string(FRAGSPLAT_CLI) + " " + args + " > " + log.string() +
                              " 2>&1";
  const int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string Read(const fs::path& path) { return ReadFileBytes(path); }

TEST(CliTest, ExitCodes) {
  const auto dir = testing::ScratchDir("cli");
  const fs::path log = dir / "log.txt";
  EXPECT_EQ(RunCli("", log), 2);
  EXPECT_EQ(RunCli("frobnicate", log), 2);
  EXPECT_EQ(RunCli("reconstruct --beta 2 --frames a --bundle b --out c", log), 2);
  EXPECT_NE(Read(log).find("BadConfig"), std::string::npos) << Read(log);
  EXPECT_EQ(RunCli("reconstruct --frames " + (dir / "none").string() + " --bundle " +
                       (dir / "none").string() + " --out " + (dir / "run").string(),
                   log),
            3);
  EXPECT_EQ(RunCli("eval --frames x --out " + (dir / "missing").string(), log), 3);
  EXPECT_NE(Read(log).find("MissingReconstruction"), std::string::npos) << Read(log);
  std::ofstream(dir / "bad.cfg") << "fragment_size = 4\nunknown_key = 1\n";
  EXPECT_EQ(RunCli("synth -c " + (dir / "bad.cfg").string() + " --out x", log), 2);
  EXPECT_EQ(RunCli("render --gaussians g --out x", log), 2);
}

// Small end-to-end run through the CLI: synth, reconstruct, eval, render.
TEST(CliTest, EndToEnd) {
  const auto dir = testing::ScratchDir("e2e");
  const fs::path log = dir / "log.txt";
  std::ofstream(dir / "run.cfg") << "synth_frames = 8\nsynth_width = 64\nsynth_height = 48\n"
                                    "keyframe_iterations = 10\nlocal_iterations = 10\n"
                                    "merge_iterations = 10\nalign_iterations = 10\n"
                                    "holdout_every = 4\nholdout_offset = 3\nseed = 7\n";
  const std::string cfg = " -c " + (dir / "run.cfg").string();
  const std::string synth = (dir / "synth").string();
  ASSERT_EQ(RunCli("synth" + cfg + " --out " + synth, log), 0) << Read(log);
  EXPECT_TRUE(fs::is_regular_file(dir / "synth" / "frames" / "frame_0008.ppm"));
  EXPECT_TRUE(fs::is_regular_file(dir / "synth" / "bundle" / "pair_1_5.bin"));

  const std::string run_args = cfg + " --frames " + synth + "/frames --bundle " + synth +
                               "/bundle --reference " + synth + "/gt_trajectory.txt";
  ASSERT_EQ(RunCli("reconstruct" + run_args + " --out " + (dir / "run").string(), log), 0)
      << Read(log);
  for (const char* name : {"gaussians.vlgs", "trajectory.txt", "camera.txt", "merges.txt",
                           "config.txt", "timing.txt"}) {
    EXPECT_TRUE(fs::is_regular_file(dir / "run" / name)) << name;
  }
  const Trajectory trajectory = ReadTrajectory(dir / "run" / "trajectory.txt");
  EXPECT_EQ(trajectory.size(), 8u);

  ASSERT_EQ(RunCli("eval" + run_args + " --out " + (dir / "run").string(), log), 0) << Read(log);
  const std::string eval = Read(dir / "run" / "eval.txt");
  EXPECT_NE(eval.find("\n3 "), std::string::npos) << eval;
  EXPECT_NE(eval.find("\n7 "), std::string::npos) << eval;
  EXPECT_NE(eval.find("ate"), std::string::npos) << eval;

  // Same config and seed: identical outputs.
  ASSERT_EQ(RunCli("reconstruct" + run_args + " --out " + (dir / "again").string(), log), 0);
  EXPECT_EQ(Read(dir / "run" / "gaussians.vlgs"), Read(dir / "again" / "gaussians.vlgs"));
  EXPECT_EQ(Read(dir / "run" / "trajectory.txt"), Read(dir / "again" / "trajectory.txt"));

  const std::string image = (dir / "view.ppm").string();
  ASSERT_EQ(RunCli("render --out " + (dir / "run").string() + " --gaussians " +
                       (dir / "run" / "gaussians.vlgs").string() +
                       " --pose \"0 0 0 0 0 0 1\" --image " + image,
                   log),
            0)
      << Read(log);
  const Image view = ReadPpm(image);
  EXPECT_EQ(view.width(), 64);
  EXPECT_TRUE(fs::is_regular_file(dir / "view_depth.pgm"));
}

}  // namespace
}  // namespace fragsplat
