#pragma once

#include <span>
#include <vector>

#include "fragsplat/core/camera.h"
#include "fragsplat/prior/prior_bundle.h"
#include "fragsplat/registration/fragments.h"
#include "fragsplat/registration/keyframe_alignment.h"
#include "fragsplat/registration/pnp.h"

namespace fragsplat {

// Keyframe pixels matched in every (keyframe, f) pair of a fragment.
struct CorrespondenceSet {
  std::vector<int> key_pixels;  // row-major pixel index in the keyframe
  std::vector<int> frames;      // non-key frames, fragment order
  // targets[slot][row]: sub-pixel location in frames[slot].
  std::vector<std::vector<Vec2>> targets;

  std::size_t size() const { return key_pixels.size(); }
};

// Throws MissingPair and EmptyIntersection (fewer than 6 pixels survive).
CorrespondenceSet IntersectCorrespondences(const Fragment& fragment,
                                           const PriorBundle& bundle);

// Median of |key_points[n]| / |frame_points[n]|; even counts average the
// two middle ratios. Throws InvalidArgument on empty or unequal input and
// ZeroNormPoint.
double EstimateScale(std::span<const Vec3> key_points,
                     std::span<const Vec3> frame_points);

struct RegistrationOptions {
  RansacSpec ransac;
};

// Everything expressed in the keyframe's camera frame.
struct FragmentRegistration {
  Fragment fragment;
  std::vector<Pose> poses;            // keyframe camera -> frame camera
  std::vector<double> scales;         // s_i; keyframe 1.0
  std::vector<double> inlier_ratios;  // keyframe 1.0
  // Dense per-pixel points of every frame (pointmap_b rescaled by s_i for
  // non-key frames, the aligned pointmap for the keyframe).
  std::vector<std::vector<Vec3>> points;

  int SlotOf(int frame) const;
};

FragmentRegistration RegisterFragment(const Fragment& fragment,
                                      const PriorBundle& bundle,
                                      const KeyframeAlignment& alignment,
                                      const RegistrationOptions& options);

}  // namespace fragsplat
