#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fragsplat/prior/synthetic_scene.h"

namespace fragsplat {

struct RunConfig {
  // Paths.
  std::string frames;     // directory of frame_%04d.ppm
  std::string bundle;     // prior bundle directory
  std::string out;        // run directory
  std::string reference;  // optional ground-truth trajectory

  // Reconstruction.
  int fragment_size = 4;
  double beta = 0.9;
  int keyframe_iterations = 200;
  double keyframe_step = 0.01;
  int local_iterations = 200;
  int merge_iterations = 200;
  int align_iterations = 200;
  int align_frames = 2;
  double pose_step = 1e-3;
  double ransac_threshold = 2.0;
  int ransac_iterations = 500;
  std::uint64_t seed = 0;
  int holdout_every = 8;  // 0 disables the holdout split
  int holdout_offset = 4;  // held-out frames satisfy index % every == offset
  int subsample = 1;      // keep every n-th training frame

  // Synthetic scenes.
  int synth_frames = 32;
  int synth_width = 128;
  int synth_height = 128;
  double noise_sigma = 0.0;  // fraction of the scene diameter
  double outlier_fraction = 0.0;
  double pair_rotation_sigma = 0.0;  // radians
  double scale_jitter_min = 1.0;
  double scale_jitter_max = 1.0;
  int match_stride = 4;
  int max_matches = 0;
  bool with_objects = true;

  // Render subcommand.
  std::string gaussians;
  std::string pose;  // "tx ty tz qx qy qz qw"
  std::string image;

  // Throws BadConfig for an unknown key or a malformed value.
  void Set(const std::string& key, const std::string& value);
  std::string Get(const std::string& key) const;
  // Throws BadConfig for out-of-range settings.
  void Validate() const;

  SceneSpec ToSceneSpec() const;
};

// Every key accepted by RunConfig::Set, in declaration order.
const std::vector<std::string>& ConfigKeys();

// `key = value` lines; blank lines and `#` comments are skipped.
void ApplyConfigText(const std::string& text, RunConfig* config);
void ApplyConfigFile(const std::filesystem::path& path, RunConfig* config);
std::string FormatConfig(const RunConfig& config);

// Frames whose 1-based index is `offset` modulo `every`; empty when every == 0.
std::vector<int> HoldoutFrames(int frame_count, int every, int offset);

}  // namespace fragsplat
