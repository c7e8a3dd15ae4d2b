#pragma once

#include <optional>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace fragsplat {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
// Tangent of a pose: (translation rho, rotation omega).
using Vec6 = Eigen::Matrix<double, 6, 1>;

// Pinhole camera shared by every frame of a sequence.
struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;

  bool IsValid() const;
  Mat3 Matrix() const;
  int PixelCount() const { return width * height; }
};

// Rigid world-to-camera transform, x_cam = R * x_world + t.
// Camera convention: +Z forward, +X right, +Y down.
// The rotation is kept unit-norm with w >= 0 after every mutation.
class Pose {
 public:
  Pose();
  Pose(const Eigen::Quaterniond& rotation, const Vec3& translation);
  Pose(const Mat3& rotation, const Vec3& translation);

  static Pose Identity() { return Pose(); }

  const Eigen::Quaterniond& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }
  Mat3 RotationMatrix() const { return rotation_.toRotationMatrix(); }

  Vec3 operator*(const Vec3& point) const {
    return rotation_ * point + translation_;
  }

  Pose Inverse() const;

  // Camera center in world coordinates.
  Vec3 Center() const;

  // Left perturbation: x -> R(omega) * x + rho applied after this pose.
  Pose Retract(const Vec6& tangent) const;

 private:
  void Canonicalize();

  Eigen::Quaterniond rotation_;
  Vec3 translation_;
};

// a ∘ b: applies b, then a.
Pose Compose(const Pose& a, const Pose& b);

Eigen::Quaterniond QuaternionFromAngleAxis(const Vec3& omega);
Eigen::Quaterniond CanonicalQuaternion(const Eigen::Quaterniond& q);

// Angle of the relative rotation between two poses, in radians.
double RotationAngleBetween(const Pose& a, const Pose& b);

// Similarity x -> scale * R * x + t.
struct SimTransform {
  Pose pose;
  double scale = 1.0;

  static SimTransform Identity() { return {}; }

  Vec3 Apply(const Vec3& x) const {
    return scale * (pose.rotation() * x) + pose.translation();
  }
  SimTransform Inverse() const;
  bool IsValid() const { return scale > 0.0; }
};

// a ∘ b.
SimTransform Compose(const SimTransform& a, const SimTransform& b);

struct Projection {
  Vec2 pixel;
  double depth = 0.0;
};

// Pixel (x, y) has its center at integer coordinates (x, y).
std::optional<Projection> TryProject(const Vec3& world_point, const Pose& pose,
                                     const CameraIntrinsics& camera);

// Throws BehindCamera when the camera-frame depth is <= 1e-8.
Projection Project(const Vec3& world_point, const Pose& pose,
                   const CameraIntrinsics& camera);

// Throws NonPositiveDepth when depth <= 0.
Vec3 Unproject(const Vec2& pixel, double depth, const Pose& pose,
               const CameraIntrinsics& camera);

constexpr double kMinProjectionDepth = 1e-8;

}  // namespace fragsplat
