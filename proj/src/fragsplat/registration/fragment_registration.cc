#include "fragsplat/registration/fragment_registration.h"

#include <algorithm>
#include <cmath>
#include <map>

#include "fragsplat/core/error.h"

namespace fragsplat {

CorrespondenceSet IntersectCorrespondences(const Fragment& fragment,
                                           const PriorBundle& bundle) {
  const int keyframe = fragment.keyframe();
  const int width = bundle.intrinsics().width;
  const int height = bundle.intrinsics().height;
  CorrespondenceSet out;
  std::vector<std::map<int, Vec2>> per_frame;
  for (std::size_t i = 1; i < fragment.frame_indices.size(); ++i) {
    const int frame = fragment.frame_indices[i];
    const PairwisePrior& pair = bundle.Pair(keyframe, frame);
    std::map<int, Vec2> lookup;
    for (const Match& match : pair.matches) {
      const int x = static_cast<int>(std::lround(match.xa));
      const int y = static_cast<int>(std::lround(match.ya));
      if (x < 0 || y < 0 || x >= width || y >= height) continue;
      // The first match claiming a pixel wins.
      lookup.emplace(y * width + x, Vec2(match.xb, match.yb));
    }
    out.frames.push_back(frame);
    per_frame.push_back(std::move(lookup));
  }
  if (per_frame.empty()) return out;

  out.targets.resize(per_frame.size());
  for (const auto& [pixel, target] : per_frame[0]) {
    bool everywhere = true;
    for (std::size_t s = 1; s < per_frame.size() && everywhere; ++s) {
      everywhere = per_frame[s].count(pixel) > 0;
    }
    if (!everywhere) continue;
    out.key_pixels.push_back(pixel);
    for (std::size_t s = 0; s < per_frame.size(); ++s) {
      out.targets[s].push_back(per_frame[s].at(pixel));
    }
  }
  if (out.size() < static_cast<std::size_t>(kMinPnpCorrespondences)) {
    Throw(ErrorCode::kEmptyIntersection,
          "fragment " + std::to_string(fragment.index) + " keeps " +
              std::to_string(out.size()) + " common keyframe pixels");
  }
  return out;
}

double EstimateScale(std::span<const Vec3> key_points,
                     std::span<const Vec3> frame_points) {
  if (key_points.empty() || key_points.size() != frame_points.size()) {
    Throw(ErrorCode::kInvalidArgument, "scale needs equal, non-empty point lists");
  }
  std::vector<double> ratios(key_points.size());
  for (std::size_t n = 0; n < ratios.size(); ++n) {
    const double denominator = frame_points[n].norm();
    if (denominator == 0.0) {
      Throw(ErrorCode::kZeroNormPoint, "frame point " + std::to_string(n) + " is zero");
    }
    ratios[n] = key_points[n].norm() / denominator;
  }
  std::sort(ratios.begin(), ratios.end());
  const std::size_t mid = ratios.size() / 2;
  if (ratios.size() % 2 == 1) return ratios[mid];
  return 0.5 * (ratios[mid - 1] + ratios[mid]);
}

int FragmentRegistration::SlotOf(int frame) const {
  const auto& f = fragment.frame_indices;
  const auto it = std::find(f.begin(), f.end(), frame);
  if (it == f.end()) {
    Throw(ErrorCode::kFrameOutOfRange,
          "frame " + std::to_string(frame) + " is not in fragment " +
              std::to_string(fragment.index));
  }
  return static_cast<int>(it - f.begin());
}

FragmentRegistration RegisterFragment(const Fragment& fragment,
                                      const PriorBundle& bundle,
                                      const KeyframeAlignment& alignment,
                                      const RegistrationOptions& options) {
  const int node = alignment.NodeOf(fragment.keyframe());
  FragmentRegistration reg;
  reg.fragment = fragment;
  reg.poses.push_back(Pose::Identity());
  reg.scales.push_back(1.0);
  reg.inlier_ratios.push_back(1.0);
  reg.points.push_back(alignment.LocalPointmap(node));
  if (fragment.frame_indices.size() == 1) return reg;

  const std::vector<Vec3>& key_map = reg.points[0];
  const CorrespondenceSet matches = IntersectCorrespondences(fragment, bundle);
  std::vector<Vec3> key_points(matches.size());
  for (std::size_t n = 0; n < matches.size(); ++n) {
    key_points[n] = key_map[matches.key_pixels[n]];
  }

  for (std::size_t s = 0; s < matches.frames.size(); ++s) {
    const int frame = matches.frames[s];
    const PairwisePrior& pair = bundle.Pair(fragment.keyframe(), frame);

    std::vector<Vec3> frame_points(matches.size());
    for (std::size_t n = 0; n < matches.size(); ++n) {
      frame_points[n] = pair.PointA(matches.key_pixels[n]);
    }
    const double scale = EstimateScale(key_points, frame_points);

    RansacSpec spec = options.ransac;
    spec.seed += static_cast<std::uint64_t>(frame);
    const PnpResult pnp =
        EstimatePoseRansac(key_points, matches.targets[s], bundle.intrinsics(), spec);

    std::vector<Vec3> dense(pair.PixelCount());
    for (std::size_t p = 0; p < dense.size(); ++p) dense[p] = scale * pair.PointB(p);

    reg.poses.push_back(pnp.pose);
    reg.scales.push_back(scale);
    reg.inlier_ratios.push_back(pnp.inlier_ratio);
    reg.points.push_back(std::move(dense));
  }
  return reg;
}

}  // namespace fragsplat
