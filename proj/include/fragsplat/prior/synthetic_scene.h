#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "fragsplat/core/camera.h"
#include "fragsplat/core/image.h"
#include "fragsplat/core/trajectory.h"
#include "fragsplat/prior/prior_bundle.h"

namespace fragsplat {

struct NoiseSpec {
  // Isotropic Gaussian noise on every pointmap coordinate, world units.
  double pointmap_sigma = 0.0;
  // Per-pair scale of the prior's prediction, drawn uniformly.
  double scale_jitter_min = 1.0;
  double scale_jitter_max = 1.0;
  // Overrides the drawn jitter for every pair whose view_b is the key.
  std::map<int, double> fixed_view_scale;
  double outlier_fraction = 0.0;
  // Per-pair rotation (radians, per axis) of pointmap_b about view_a's
  // camera center: a relative pose error shared by the whole prediction.
  double pair_rotation_sigma = 0.0;
};

struct SceneSpec {
  int frame_count = 32;
  int width = 128;
  int height = 128;
  double focal_factor = 0.9;  // fx = fy = focal_factor * width
  // Camera sweep: lateral travel in world units and total yaw in degrees.
  double path_length = 3.0;
  double yaw_span_deg = 40.0;
  bool with_objects = true;
  NoiseSpec noise;
  int match_stride = 4;
  int max_matches = 0;  // 0 keeps every co-visible grid match
  std::uint64_t seed = 0;
};

struct RayHit {
  double depth = 0.0;  // along a ray whose camera-frame z component is 1
  Vec3 point;
};

// Procedural room (box interior plus optional spheres) with a smooth color
// field, observed by a sweeping camera. Everything is analytic, so pointmaps
// and images are exact ground truth.
class SyntheticScene {
 public:
  explicit SyntheticScene(const SceneSpec& spec);

  const SceneSpec& spec() const { return spec_; }
  const CameraIntrinsics& intrinsics() const { return intrinsics_; }
  const Trajectory& trajectory() const { return trajectory_; }
  // Throws FrameOutOfRange.
  const Pose& FramePose(int frame) const;
  int frame_count() const { return spec_.frame_count; }

  std::optional<RayHit> CastRay(const Vec3& origin, const Vec3& direction) const;
  // World point seen through a (sub-)pixel of a frame.
  std::optional<Vec3> PointAt(int frame, const Vec2& pixel) const;
  Vec3 ColorAt(const Vec3& world_point) const;

  Image RenderFrame(int frame) const;
  std::vector<Frame> RenderFrames() const;
  // Per-pixel world points of a frame, row-major.
  std::vector<Vec3> FramePoints(int frame) const;

  // True when the world point is the first surface hit from the frame.
  bool IsVisible(int frame, const Vec3& world_point) const;

  const std::vector<Vec3>& surfel_positions() const { return surfel_positions_; }
  const std::vector<Vec3>& surfel_colors() const { return surfel_colors_; }
  const std::vector<int>& surfels_per_frame() const { return surfels_per_frame_; }
  // Bounding-box diagonal of the observed surfels.
  double SceneDiameter() const { return diameter_; }

 private:
  SceneSpec spec_;
  CameraIntrinsics intrinsics_;
  Trajectory trajectory_;
  std::vector<Pose> poses_;
  std::vector<Vec3> surfel_positions_;
  std::vector<Vec3> surfel_colors_;
  std::vector<int> surfels_per_frame_;
  double diameter_ = 0.0;
};

struct SyntheticPairDebug {
  std::vector<int> outlier_rows;
  double scale_jitter = 1.0;
  Vec3 rotation_error = Vec3::Zero();  // angle-axis applied to pointmap_b
};

struct SyntheticBundle {
  PriorBundle bundle;
  std::map<PairKey, SyntheticPairDebug> debug;
};

// Pairs reference frames of the scene (1-based); throws FrameOutOfRange.
SyntheticBundle GenerateSynthetic(const SyntheticScene& scene,
                                  const std::vector<PairKey>& pairs);

}  // namespace fragsplat
