#include "fragsplat/registration/pnp.h"

#include <array>
#include <cmath>
#include <random>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "fragsplat/core/error.h"
#include "fragsplat/core/geometry.h"

namespace fragsplat {
namespace {

// Coefficients in increasing degree.
using Poly = std::vector<double>;

Poly Multiply(const Poly& a, const Poly& b) {
  Poly out(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  }
  return out;
}

Poly Add(Poly a, const Poly& b, double scale = 1.0) {
  if (a.size() < b.size()) a.resize(b.size(), 0.0);
  for (std::size_t i = 0; i < b.size(); ++i) a[i] += scale * b[i];
  return a;
}

double Evaluate(const Poly& p, double x) {
  double v = 0.0;
  for (std::size_t i = p.size(); i-- > 0;) v = v * x + p[i];
  return v;
}

std::vector<double> RealRoots(Poly p) {
  while (p.size() > 1 && std::abs(p.back()) < 1e-14 * (1.0 + std::abs(p.front()))) {
    p.pop_back();
  }
  const int degree = static_cast<int>(p.size()) - 1;
  std::vector<double> roots;
  if (degree < 1) return roots;
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(degree, degree);
  for (int i = 0; i < degree; ++i) companion(0, i) = -p[degree - 1 - i] / p[degree];
  for (int i = 1; i < degree; ++i) companion(i, i - 1) = 1.0;
  Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
  Poly derivative;
  for (int i = 1; i <= degree; ++i) derivative.push_back(i * p[i]);
  for (int i = 0; i < degree; ++i) {
    const std::complex<double> r = solver.eigenvalues()[i];
    if (std::abs(r.imag()) > 1e-6 * (1.0 + std::abs(r.real()))) continue;
    double x = r.real();
    for (int it = 0; it < 4; ++it) {
      const double d = Evaluate(derivative, x);
      if (std::abs(d) < 1e-300) break;
      x -= Evaluate(p, x) / d;
    }
    roots.push_back(x);
  }
  return roots;
}

Vec3 Bearing(const Vec2& pixel, const CameraIntrinsics& k) {
  return Vec3((pixel.x() - k.cx) / k.fx, (pixel.y() - k.cy) / k.fy, 1.0).normalized();
}

double ReprojectionError(const Vec3& point, const Vec2& pixel, const Pose& pose,
                         const CameraIntrinsics& k) {
  auto projection = TryProject(point, pose, k);
  if (!projection) return std::numeric_limits<double>::infinity();
  return (projection->pixel - pixel).norm();
}

}  // namespace

std::vector<Pose> SolveP3P(std::span<const Vec3, 3> world,
                           std::span<const Vec3, 3> bearings) {
  const double a2 = (world[1] - world[2]).squaredNorm();
  const double b2 = (world[0] - world[2]).squaredNorm();
  const double c2 = (world[0] - world[1]).squaredNorm();
  std::vector<Pose> poses;
  if (a2 < 1e-18 || b2 < 1e-18 || c2 < 1e-18) return poses;
  const double cos_a = bearings[1].dot(bearings[2]);
  const double cos_b = bearings[0].dot(bearings[2]);
  const double cos_g = bearings[0].dot(bearings[1]);

  // With s2 = u s1 and s3 = v s1, the three law-of-cosines constraints give
  //   b²(u² + v² - 2uv cosα) = a²(1 + v² - 2v cosβ)
  //   b²(1 + u² - 2u cosγ)   = c²(1 + v² - 2v cosβ).
  // Their difference is linear in u, so u = N(v) / D(v); substituting back
  // into the second constraint yields a quartic in v.
  const Poly q = {1.0, -2.0 * cos_b, 1.0};  // 1 + v² - 2v cosβ
  const Poly numerator =
      Add(Add(Poly{-b2, 0.0, b2}, q, c2 - a2), Poly{}, 0.0);
  const Poly denominator = {-2.0 * b2 * cos_g, 2.0 * b2 * cos_a};
  Poly quartic = Multiply(numerator, numerator);
  quartic = Add(quartic, Multiply(numerator, denominator), -2.0 * cos_g);
  for (double& c : quartic) c *= b2;
  const Poly tail = Add(Poly{b2}, q, -c2);
  quartic = Add(quartic, Multiply(tail, Multiply(denominator, denominator)));

  const std::array<Vec3, 3> src = {world[0], world[1], world[2]};
  for (double v : RealRoots(quartic)) {
    const double d = Evaluate(denominator, v);
    if (std::abs(d) < 1e-12) continue;
    const double u = Evaluate(numerator, v) / d;
    const double denom = Evaluate(q, v);
    if (!(denom > 0.0) || u <= 0.0 || v <= 0.0) continue;
    const double s1 = std::sqrt(b2 / denom);
    const std::array<Vec3, 3> cam = {s1 * bearings[0], u * s1 * bearings[1],
                                     v * s1 * bearings[2]};
    const SimTransform fit = EstimateSimilarity(src, cam, {}, false);
    poses.push_back(fit.pose);
  }
  return poses;
}

Pose RefinePose(std::span<const Vec3> points3d, std::span<const Vec2> pixels,
                const CameraIntrinsics& k, const Pose& initial,
                std::span<const int> rows, int iterations) {
  Pose pose = initial;
  auto cost = [&](const Pose& p) {
    double sum = 0.0;
    for (int r : rows) {
      const Vec3 x = p * points3d[r];
      if (x.z() <= kMinProjectionDepth) return std::numeric_limits<double>::infinity();
      const Vec2 e(k.fx * x.x() / x.z() + k.cx - pixels[r].x(),
                   k.fy * x.y() / x.z() + k.cy - pixels[r].y());
      sum += e.squaredNorm();
    }
    return sum;
  };
  double current = cost(pose);
  double lambda = 1e-4;
  for (int it = 0; it < iterations && std::isfinite(current); ++it) {
    Eigen::Matrix<double, 6, 6> h = Eigen::Matrix<double, 6, 6>::Zero();
    Vec6 g = Vec6::Zero();
    for (int r : rows) {
      const Vec3 x = pose * points3d[r];
      const double iz = 1.0 / x.z();
      const Vec2 e(k.fx * x.x() * iz + k.cx - pixels[r].x(),
                   k.fy * x.y() * iz + k.cy - pixels[r].y());
      Eigen::Matrix<double, 2, 3> dproj;
      dproj << k.fx * iz, 0.0, -k.fx * x.x() * iz * iz, 0.0, k.fy * iz,
          -k.fy * x.y() * iz * iz;
      Eigen::Matrix<double, 3, 6> dx;
      dx.leftCols<3>() = Mat3::Identity();
      dx.rightCols<3>() = -Skew(x);
      const Eigen::Matrix<double, 2, 6> j = dproj * dx;
      h += j.transpose() * j;
      g += j.transpose() * e;
    }
    bool improved = false;
    for (int attempt = 0; attempt < 10; ++attempt) {
      Eigen::Matrix<double, 6, 6> damped = h;
      damped.diagonal() *= 1.0 + lambda;
      const Vec6 step = -damped.ldlt().solve(g);
      const Pose candidate = pose.Retract(step);
      const double next = cost(candidate);
      if (next < current) {
        pose = candidate;
        const double gain = current - next;
        current = next;
        lambda = std::max(lambda * 0.3, 1e-12);
        improved = true;
        if (gain < 1e-14 * (1.0 + current) || step.norm() < 1e-13) {
          return pose;
        }
        break;
      }
      lambda *= 10.0;
    }
    if (!improved) break;
  }
  return pose;
}

PnpResult EstimatePoseRansac(std::span<const Vec3> points3d,
                             std::span<const Vec2> pixels,
                             const CameraIntrinsics& k, const RansacSpec& spec) {
  if (points3d.size() != pixels.size()) {
    Throw(ErrorCode::kInvalidArgument, "3D/2D correspondence counts differ");
  }
  const int n = static_cast<int>(points3d.size());
  if (n < kMinPnpCorrespondences) {
    Throw(ErrorCode::kInsufficientCorrespondences,
          std::to_string(n) + " correspondences, need " +
              std::to_string(kMinPnpCorrespondences));
  }
  std::vector<Vec3> bearings(n);
  for (int i = 0; i < n; ++i) bearings[i] = Bearing(pixels[i], k);

  std::mt19937_64 rng(spec.seed);
  std::uniform_int_distribution<int> pick(0, n - 1);
  const double threshold = spec.inlier_threshold_px;

  Pose best_pose;
  int best_count = -1;
  double best_error = std::numeric_limits<double>::infinity();
  for (int it = 0; it < spec.iterations; ++it) {
    int s[3];
    s[0] = pick(rng);
    do { s[1] = pick(rng); } while (s[1] == s[0]);
    do { s[2] = pick(rng); } while (s[2] == s[0] || s[2] == s[1]);
    const std::array<Vec3, 3> world = {points3d[s[0]], points3d[s[1]], points3d[s[2]]};
    const std::array<Vec3, 3> rays = {bearings[s[0]], bearings[s[1]], bearings[s[2]]};
    for (const Pose& hypothesis : SolveP3P(world, rays)) {
      int count = 0;
      double error = 0.0;
      for (int i = 0; i < n; ++i) {
        const double e = ReprojectionError(points3d[i], pixels[i], hypothesis, k);
        if (e < threshold) {
          ++count;
          error += e;
        }
      }
      if (count > best_count || (count == best_count && error < best_error)) {
        best_count = count;
        best_error = error;
        best_pose = hypothesis;
      }
    }
  }
  if (best_count < 3 || best_count < spec.min_inlier_ratio * n) {
    Throw(ErrorCode::kNoConsensus,
          "best consensus " + std::to_string(std::max(best_count, 0)) + " of " +
              std::to_string(n));
  }

  auto collect = [&](const Pose& pose) {
    std::vector<int> rows;
    for (int i = 0; i < n; ++i) {
      if (ReprojectionError(points3d[i], pixels[i], pose, k) < threshold) rows.push_back(i);
    }
    return rows;
  };
  PnpResult result;
  result.pose = best_pose;
  result.inliers = collect(best_pose);
  for (int round = 0; round < 3; ++round) {
    const Pose refined = RefinePose(points3d, pixels, k, result.pose, result.inliers,
                                    spec.refine_iterations);
    std::vector<int> rows = collect(refined);
    result.pose = refined;
    if (rows == result.inliers) break;
    if (static_cast<int>(rows.size()) < kMinPnpCorrespondences) break;
    result.inliers = std::move(rows);
  }
  result.inlier_ratio = static_cast<double>(result.inliers.size()) / n;
  if (result.inlier_ratio < spec.min_inlier_ratio) {
    Throw(ErrorCode::kNoConsensus, "refined consensus below the minimum ratio");
  }
  return result;
}

}  // namespace fragsplat
