#pragma once

// Per-splat math shared by the tiled rasterizer and its brute-force
// reference, so the two only differ in traversal and reduction order.

#include <cmath>
#include <tuple>

#include "fragsplat/render/rasterizer.h"

namespace fragsplat::internal {

struct Splat {
  bool visible = false;
  Vec3 camera_point;
  Vec2 screen;
  double radius = 0.0;
};

inline Splat ProjectSplat(const Gaussian& g, const Mat3& rotation,
                          const Vec3& translation, const CameraIntrinsics& k) {
  Splat s;
  s.camera_point = rotation * g.center + translation;
  const double z = s.camera_point.z();
  if (!(z > kMinProjectionDepth) || !(g.scale > 0.0)) return s;
  s.screen = Vec2(k.fx * s.camera_point.x() / z + k.cx,
                  k.fy * s.camera_point.y() / z + k.cy);
  s.radius = g.scale * k.fx / z;
  const double reach = kFootprintSigmas * s.radius;
  s.visible = s.screen.x() + reach >= 0.0 && s.screen.x() - reach <= k.width - 1 &&
              s.screen.y() + reach >= 0.0 && s.screen.y() - reach <= k.height - 1 &&
              std::isfinite(reach);
  return s;
}

// Front-to-back order: depth, then provenance, then position in the set.
inline bool DrawsBefore(const GaussianSet& set, const Splat& sa, int a,
                        const Splat& sb, int b) {
  const double za = sa.camera_point.z();
  const double zb = sb.camera_point.z();
  if (za != zb) return za < zb;
  const GaussianSource& ga = set.gaussians[a].source;
  const GaussianSource& gb = set.gaussians[b].source;
  return std::tie(ga.fragment, ga.frame, ga.pixel, a) <
         std::tie(gb.fragment, gb.frame, gb.pixel, b);
}

struct Footprint {
  int x0 = 0, x1 = -1, y0 = 0, y1 = -1;  // inclusive pixel box
};

inline Footprint PixelBox(const Splat& s, const CameraIntrinsics& k) {
  const double reach = kFootprintSigmas * s.radius;
  Footprint f;
  f.x0 = std::max(0, static_cast<int>(std::ceil(s.screen.x() - reach)));
  f.x1 = std::min(k.width - 1, static_cast<int>(std::floor(s.screen.x() + reach)));
  f.y0 = std::max(0, static_cast<int>(std::ceil(s.screen.y() - reach)));
  f.y1 = std::min(k.height - 1, static_cast<int>(std::floor(s.screen.y() + reach)));
  return f;
}

struct AlphaSample {
  double alpha = 0.0;
  bool clamped = false;
};

// One axis of the falloff. The 2D weight is the product of both axes, so
// rasterizers can tabulate rows and columns; every caller goes through this
// helper to get bit-identical alphas.
inline double Falloff(double d, double r2) { return std::exp(-0.5 * d * d / r2); }

inline bool InFootprint(double dx, double dy, double r2) {
  return dx * dx + dy * dy <= kFootprintSigmas * kFootprintSigmas * r2;
}

inline void ClampAlpha(double alpha, AlphaSample* out) {
  out->clamped = alpha > kMaxAlpha;
  out->alpha = out->clamped ? kMaxAlpha : alpha;
}

// False when the pixel lies outside the 3r footprint.
inline bool SampleAlpha(const Splat& s, double opacity, int x, int y,
                        AlphaSample* out) {
  const double dx = x - s.screen.x();
  const double dy = y - s.screen.y();
  const double r2 = s.radius * s.radius;
  if (!InFootprint(dx, dy, r2)) return false;
  // Row factor first, matching the tabulated loops.
  ClampAlpha(opacity * Falloff(dy, r2) * Falloff(dx, r2), out);
  return true;
}

// Screen-space partials of one splat, summed over its pixels.
struct SplatPartials {
  Vec3 color = Vec3::Zero();
  double opacity = 0.0;
  double u = 0.0;
  double v = 0.0;
  double radius = 0.0;

  SplatPartials& operator+=(const SplatPartials& o) {
    color += o.color;
    opacity += o.opacity;
    u += o.u;
    v += o.v;
    radius += o.radius;
    return *this;
  }
};

inline void AccumulateAlpha(const Splat& s, double opacity, int x, int y,
                            double alpha, double dl_dalpha, SplatPartials* p) {
  const double dx = x - s.screen.x();
  const double dy = y - s.screen.y();
  const double r2 = s.radius * s.radius;
  const double g = dl_dalpha * alpha;
  p->opacity += g / opacity;
  p->u += g * dx / r2;
  p->v += g * dy / r2;
  p->radius += g * (dx * dx + dy * dy) / (r2 * s.radius);
}

// Chains screen-space partials to the center, the scale and the camera-frame
// point (whose gradient also drives the pose).
inline void ChainToWorld(const Splat& s, const Gaussian& gaussian,
                         const Mat3& rotation, const CameraIntrinsics& k,
                         const SplatPartials& p, Vec3* center, double* scale,
                         Vec3* camera_grad) {
  const Vec3& xc = s.camera_point;
  const double iz = 1.0 / xc.z();
  Vec3 g;
  g.x() = p.u * k.fx * iz;
  g.y() = p.v * k.fy * iz;
  g.z() = -(p.u * k.fx * xc.x() + p.v * k.fy * xc.y() + p.radius * gaussian.scale * k.fx) *
          iz * iz;
  *camera_grad = g;
  *center = rotation.transpose() * g;
  *scale = p.radius * k.fx * iz;
}

}  // namespace fragsplat::internal
