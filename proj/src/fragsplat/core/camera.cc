#include "fragsplat/core/camera.h"

#include <cmath>

#include "fragsplat/core/error.h"

namespace fragsplat {

bool CameraIntrinsics::IsValid() const {
  return fx > 0.0 && fy > 0.0 && width > 0 && height > 0 && cx >= 0.0 &&
         cx < width && cy >= 0.0 && cy < height;
}

Mat3 CameraIntrinsics::Matrix() const {
  Mat3 k;
  k << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
  return k;
}

Eigen::Quaterniond CanonicalQuaternion(const Eigen::Quaterniond& q) {
  Eigen::Quaterniond out = q.normalized();
  if (out.w() < 0.0) out.coeffs() = -out.coeffs();
  return out;
}

Eigen::Quaterniond QuaternionFromAngleAxis(const Vec3& omega) {
  const double angle = omega.norm();
  if (angle < 1e-12) {
    // First-order expansion keeps tiny rotations exact to rounding.
    return Eigen::Quaterniond(1.0, 0.5 * omega.x(), 0.5 * omega.y(),
                              0.5 * omega.z())
        .normalized();
  }
  return Eigen::Quaterniond(Eigen::AngleAxisd(angle, omega / angle));
}

Pose::Pose() : rotation_(Eigen::Quaterniond::Identity()), translation_(0, 0, 0) {}

Pose::Pose(const Eigen::Quaterniond& rotation, const Vec3& translation)
    : rotation_(rotation), translation_(translation) {
  Canonicalize();
}

Pose::Pose(const Mat3& rotation, const Vec3& translation)
    : rotation_(Eigen::Quaterniond(rotation)), translation_(translation) {
  Canonicalize();
}

void Pose::Canonicalize() { rotation_ = CanonicalQuaternion(rotation_); }

Pose Pose::Inverse() const {
  const Eigen::Quaterniond inv = rotation_.conjugate();
  return Pose(inv, -(inv * translation_));
}

Vec3 Pose::Center() const { return -(rotation_.conjugate() * translation_); }

Pose Pose::Retract(const Vec6& tangent) const {
  const Eigen::Quaterniond dq = QuaternionFromAngleAxis(tangent.tail<3>());
  return Pose(dq * rotation_, dq * translation_ + tangent.head<3>());
}

Pose Compose(const Pose& a, const Pose& b) {
  return Pose(a.rotation() * b.rotation(),
              a.rotation() * b.translation() + a.translation());
}

double RotationAngleBetween(const Pose& a, const Pose& b) {
  const Eigen::Quaterniond rel = a.rotation().conjugate() * b.rotation();
  const double vec = rel.vec().norm();
  return 2.0 * std::atan2(vec, std::abs(rel.w()));
}

SimTransform SimTransform::Inverse() const {
  const Eigen::Quaterniond inv = pose.rotation().conjugate();
  return {Pose(inv, -(inv * pose.translation()) / scale), 1.0 / scale};
}

SimTransform Compose(const SimTransform& a, const SimTransform& b) {
  return {Pose(a.pose.rotation() * b.pose.rotation(),
               a.scale * (a.pose.rotation() * b.pose.translation()) +
                   a.pose.translation()),
          a.scale * b.scale};
}

std::optional<Projection> TryProject(const Vec3& world_point, const Pose& pose,
                                     const CameraIntrinsics& camera) {
  const Vec3 p = pose * world_point;
  if (!(p.z() > kMinProjectionDepth)) return std::nullopt;
  return Projection{Vec2(camera.fx * p.x() / p.z() + camera.cx,
                         camera.fy * p.y() / p.z() + camera.cy),
                    p.z()};
}

Projection Project(const Vec3& world_point, const Pose& pose,
                   const CameraIntrinsics& camera) {
  auto projection = TryProject(world_point, pose, camera);
  if (!projection) {
    Throw(ErrorCode::kBehindCamera, "point has non-positive camera depth");
  }
  return *projection;
}

Vec3 Unproject(const Vec2& pixel, double depth, const Pose& pose,
               const CameraIntrinsics& camera) {
  if (!(depth > 0.0)) {
    Throw(ErrorCode::kNonPositiveDepth, "depth must be positive");
  }
  const Vec3 cam((pixel.x() - camera.cx) / camera.fx * depth,
                 (pixel.y() - camera.cy) / camera.fy * depth, depth);
  return pose.Inverse() * cam;
}

}  // namespace fragsplat
