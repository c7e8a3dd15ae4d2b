#include <algorithm>

#include "fragsplat/core/error.h"
#include "fragsplat/render/rasterizer.h"
#include "splat_math.h"

namespace fragsplat {
namespace {

struct Hit {
  int gaussian;
  double alpha;
  bool clamped;
};

std::vector<internal::Splat> ProjectAll(const GaussianSet& set, const Pose& pose,
                                        const CameraIntrinsics& camera) {
  const Mat3 rotation = pose.RotationMatrix();
  std::vector<internal::Splat> splats;
  for (const Gaussian& g : set.gaussians) {
    splats.push_back(internal::ProjectSplat(g, rotation, pose.translation(), camera));
  }
  return splats;
}

std::vector<Hit> PixelHits(const GaussianSet& set,
                           const std::vector<internal::Splat>& splats, int x, int y) {
  std::vector<Hit> hits;
  for (int i = 0; i < static_cast<int>(splats.size()); ++i) {
    if (!splats[i].visible) continue;
    internal::AlphaSample sample;
    if (internal::SampleAlpha(splats[i], set.gaussians[i].opacity, x, y, &sample)) {
      hits.push_back({i, sample.alpha, sample.clamped});
    }
  }
  std::sort(hits.begin(), hits.end(), [&](const Hit& a, const Hit& b) {
    return internal::DrawsBefore(set, splats[a.gaussian], a.gaussian,
                                 splats[b.gaussian], b.gaussian);
  });
  return hits;
}

}  // namespace

RenderOutput RenderReference(const GaussianSet& set, const Pose& pose,
                             const CameraIntrinsics& camera) {
  const std::vector<internal::Splat> splats = ProjectAll(set, pose, camera);
  RenderOutput out;
  out.color = Image(camera.width, camera.height);
  out.depth.assign(camera.PixelCount(), 0.0);
  out.confidence.assign(camera.PixelCount(), 0.0);
  for (int y = 0; y < camera.height; ++y) {
    for (int x = 0; x < camera.width; ++x) {
      double transmittance = 1.0;
      double conf = 0.0;
      double depth = 0.0;
      Vec3 color = Vec3::Zero();
      for (const Hit& hit : PixelHits(set, splats, x, y)) {
        const double w = hit.alpha * transmittance;
        color += w * set.gaussians[hit.gaussian].color;
        conf += w;
        depth += w * splats[hit.gaussian].camera_point.z();
        transmittance *= 1.0 - hit.alpha;
      }
      const int p = y * camera.width + x;
      for (int c = 0; c < 3; ++c) out.color.at(x, y, c) = color[c];
      out.confidence[p] = conf;
      out.depth[p] = conf > 0.0 ? depth / conf : 0.0;
    }
  }
  return out;
}

RenderGradients RenderBackwardReference(const GaussianSet& set, const Pose& pose,
                                        const CameraIntrinsics& camera,
                                        const Image& color_grad) {
  if (color_grad.width() != camera.width || color_grad.height() != camera.height) {
    Throw(ErrorCode::kDimensionMismatch, "loss gradient size differs from the camera");
  }
  const std::vector<internal::Splat> splats = ProjectAll(set, pose, camera);
  const int n = static_cast<int>(set.size());
  std::vector<internal::SplatPartials> partials(n);
  for (int y = 0; y < camera.height; ++y) {
    for (int x = 0; x < camera.width; ++x) {
      const Vec3 g(color_grad.at(x, y, 0), color_grad.at(x, y, 1), color_grad.at(x, y, 2));
      const std::vector<Hit> hits = PixelHits(set, splats, x, y);
      // Transmittance in front of each hit, then colour accumulated behind.
      std::vector<double> before(hits.size());
      double t = 1.0;
      for (std::size_t k = 0; k < hits.size(); ++k) {
        before[k] = t;
        t *= 1.0 - hits[k].alpha;
      }
      for (std::size_t k = 0; k < hits.size(); ++k) {
        Vec3 behind = Vec3::Zero();
        for (std::size_t j = k + 1; j < hits.size(); ++j) {
          behind += set.gaussians[hits[j].gaussian].color * (hits[j].alpha * before[j]);
        }
        const Hit& hit = hits[k];
        const Vec3& c = set.gaussians[hit.gaussian].color;
        internal::SplatPartials& p = partials[hit.gaussian];
        p.color += g * (hit.alpha * before[k]);
        if (hit.clamped) continue;
        const double dl_dalpha = g.dot(c * before[k] - behind / (1.0 - hit.alpha));
        internal::AccumulateAlpha(splats[hit.gaussian], set.gaussians[hit.gaussian].opacity,
                                  x, y, hit.alpha, dl_dalpha, &p);
      }
    }
  }
  RenderGradients out;
  out.center.assign(n, Vec3::Zero());
  out.color.assign(n, Vec3::Zero());
  out.opacity.assign(n, 0.0);
  out.scale.assign(n, 0.0);
  const Mat3 rotation = pose.RotationMatrix();
  for (int i = 0; i < n; ++i) {
    if (!splats[i].visible) continue;
    out.color[i] = partials[i].color;
    out.opacity[i] = partials[i].opacity;
    Vec3 camera_grad;
    internal::ChainToWorld(splats[i], set.gaussians[i], rotation, camera, partials[i],
                           &out.center[i], &out.scale[i], &camera_grad);
    out.pose.head<3>() += camera_grad;
    out.pose.tail<3>() += splats[i].camera_point.cross(camera_grad);
  }
  return out;
}

}  // namespace fragsplat
