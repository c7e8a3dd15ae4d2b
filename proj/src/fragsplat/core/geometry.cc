#include "fragsplat/core/geometry.h"

#include <Eigen/SVD>

#include "fragsplat/core/error.h"

namespace fragsplat {

SimTransform EstimateSimilarity(std::span<const Vec3> src,
                                std::span<const Vec3> dst,
                                std::span<const double> weights,
                                bool estimate_scale) {
  if (src.size() != dst.size() || src.empty()) {
    Throw(ErrorCode::kInvalidArgument,
          "similarity estimation needs equal, non-empty point sets");
  }
  if (!weights.empty() && weights.size() != src.size()) {
    Throw(ErrorCode::kInvalidArgument, "weight count does not match points");
  }
  auto weight = [&](std::size_t i) { return weights.empty() ? 1.0 : weights[i]; };

  double total = 0.0;
  Vec3 mean_src = Vec3::Zero();
  Vec3 mean_dst = Vec3::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) {
    total += weight(i);
    mean_src += weight(i) * src[i];
    mean_dst += weight(i) * dst[i];
  }
  if (!(total > 0.0)) {
    Throw(ErrorCode::kInvalidArgument, "similarity weights sum to zero");
  }
  mean_src /= total;
  mean_dst /= total;

  Mat3 cov = Mat3::Zero();
  double var_src = 0.0;
  for (std::size_t i = 0; i < src.size(); ++i) {
    const Vec3 a = src[i] - mean_src;
    const Vec3 b = dst[i] - mean_dst;
    cov += weight(i) * b * a.transpose();
    var_src += weight(i) * a.squaredNorm();
  }
  cov /= total;
  var_src /= total;

  Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 s = Mat3::Identity();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0) {
    s(2, 2) = -1.0;
  }
  const Mat3 rotation = svd.matrixU() * s * svd.matrixV().transpose();
  double scale = 1.0;
  if (estimate_scale) {
    if (!(var_src > 0.0)) {
      Throw(ErrorCode::kInvalidArgument, "degenerate source point set");
    }
    scale = (svd.singularValues().asDiagonal() * s).trace() / var_src;
  }
  const Vec3 translation = mean_dst - scale * rotation * mean_src;
  return {Pose(rotation, translation), scale};
}

Mat3 Skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return m;
}

std::uint64_t HashBytes(const void* data, std::size_t size, std::uint64_t seed) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  std::uint64_t hash = seed;
  for (std::size_t i = 0; i < size; ++i) {
    hash ^= bytes[i];
    hash *= 1099511628211ull;
  }
  return hash;
}

std::uint64_t HashString(std::string_view bytes) {
  return HashBytes(bytes.data(), bytes.size());
}

}  // namespace fragsplat
