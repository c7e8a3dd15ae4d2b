#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fragsplat/core/camera.h"

namespace fragsplat {

struct RansacSpec {
  double inlier_threshold_px = 2.0;
  int iterations = 500;
  std::uint64_t seed = 0;
  // Consensus below this fraction of the input is rejected.
  double min_inlier_ratio = 0.3;
  int refine_iterations = 20;
};

struct PnpResult {
  Pose pose;  // world -> camera
  std::vector<int> inliers;
  double inlier_ratio = 0.0;
};

constexpr int kMinPnpCorrespondences = 6;

// Minimal solver: up to four camera poses explaining three world points and
// their unit bearing vectors (Grunert's formulation).
std::vector<Pose> SolveP3P(std::span<const Vec3, 3> world,
                           std::span<const Vec3, 3> bearings);

// Levenberg-Marquardt on the reprojection error of the selected rows.
Pose RefinePose(std::span<const Vec3> points3d, std::span<const Vec2> pixels,
                const CameraIntrinsics& camera, const Pose& initial,
                std::span<const int> rows, int iterations);

// P3P hypotheses inside RANSAC, then all-inlier refinement. Throws
// InsufficientCorrespondences (< 6 rows) and NoConsensus.
PnpResult EstimatePoseRansac(std::span<const Vec3> points3d,
                             std::span<const Vec2> pixels,
                             const CameraIntrinsics& camera,
                             const RansacSpec& spec);

}  // namespace fragsplat
