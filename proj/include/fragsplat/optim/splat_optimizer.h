#pragma once

#include <cstdint>
#include <set>
#include <vector>

#include "fragsplat/core/camera.h"
#include "fragsplat/core/image.h"
#include "fragsplat/splat/gaussian_set.h"

namespace fragsplat {

struct OptimSpec {
  double center_step = 1.6e-4;  // multiplied by the set's center extent
  double color_step = 2.5e-3;
  double opacity_step = 5e-2;   // on the logit
  double scale_step = 5e-3;     // on the log
  double pose_step = 1e-3;
  int iterations = 200;
  std::uint64_t seed = 0;
  bool freeze_centers = false;
  bool freeze_colors = false;
  bool freeze_opacities = false;
  bool freeze_scales = false;
  bool freeze_poses = false;
  std::set<int> frozen_pose_frames;

  void FreezeGaussians();
  bool GaussiansFrozen() const;
  // Throws InvalidArgument.
  void Validate() const;
};

struct TrainingView {
  int frame = 0;
  const Image* image = nullptr;
  Pose pose;
};

struct OptimizeResult {
  GaussianSet set;
  std::vector<Pose> poses;      // same order as the views
  std::vector<double> losses;   // loss of the sampled view at every step
};

// Adam (0.9, 0.999, 1e-15) on every unfrozen group; each step renders one
// uniformly sampled view. Throws NoFrames.
OptimizeResult JointOptimize(const GaussianSet& set,
                             const std::vector<TrainingView>& views,
                             const CameraIntrinsics& camera, const OptimSpec& spec);

// Camera refinement against a fixed set. Throws NoFrames for an empty image
// and InvalidArgument unless every Gaussian group is frozen.
Pose OptimizePoseOnly(const GaussianSet& frozen_set, const Image& frame,
                      const Pose& initial, const CameraIntrinsics& camera,
                      const OptimSpec& spec);

double MeanPhotometricLoss(const GaussianSet& set,
                           const std::vector<TrainingView>& views,
                           const CameraIntrinsics& camera);

}  // namespace fragsplat
