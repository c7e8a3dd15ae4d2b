#include "fragsplat/prior/synthetic_scene.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "fragsplat/core/error.h"

namespace fragsplat {
namespace {

constexpr double kRoomMin[3] = {-5.0, -2.5, -4.0};
constexpr double kRoomMax[3] = {5.0, 2.5, 7.0};

struct Sphere {
  Vec3 center;
  double radius;
};

const Sphere kSpheres[] = {
    {Vec3(1.2, 1.0, 3.6), 1.0},
    {Vec3(-2.2, 0.6, 4.8), 0.8},
};

constexpr int kMinSurfelsPerFrame = 500;

Mat3 RotationY(double angle) {
  return Eigen::AngleAxisd(angle, Vec3::UnitY()).toRotationMatrix();
}

Mat3 RotationX(double angle) {
  return Eigen::AngleAxisd(angle, Vec3::UnitX()).toRotationMatrix();
}

Vec3 CameraRay(const CameraIntrinsics& k, const Vec2& pixel) {
  return Vec3((pixel.x() - k.cx) / k.fx, (pixel.y() - k.cy) / k.fy, 1.0);
}

}  // namespace

SyntheticScene::SyntheticScene(const SceneSpec& spec) : spec_(spec) {
  if (spec.frame_count < 2 || spec.width < 8 || spec.height < 8 ||
      spec.focal_factor <= 0.0 || spec.match_stride < 1 ||
      spec.noise.pointmap_sigma < 0.0 || spec.noise.scale_jitter_min <= 0.0 ||
      spec.noise.scale_jitter_max < spec.noise.scale_jitter_min ||
      spec.noise.outlier_fraction < 0.0 || spec.noise.outlier_fraction > 1.0) {
    Throw(ErrorCode::kBadSpec, "invalid synthetic scene spec");
  }
  intrinsics_.width = spec.width;
  intrinsics_.height = spec.height;
  intrinsics_.fx = spec.focal_factor * spec.width;
  intrinsics_.fy = spec.focal_factor * spec.width;
  intrinsics_.cx = 0.5 * (spec.width - 1);
  intrinsics_.cy = 0.5 * (spec.height - 1);

  const double deg = std::numbers::pi / 180.0;
  for (int i = 0; i < spec.frame_count; ++i) {
    const double s = static_cast<double>(i) / (spec.frame_count - 1);
    const Vec3 center(-0.5 * spec.path_length + spec.path_length * s,
                      0.15 * std::sin(2.0 * std::numbers::pi * s),
                      -1.0 + 0.6 * std::sin(std::numbers::pi * s));
    const double yaw = (-0.5 + s) * spec.yaw_span_deg * deg;
    const double pitch = 6.0 * deg * std::sin(2.0 * std::numbers::pi * s);
    const Mat3 cam_to_world = RotationY(yaw) * RotationX(pitch);
    const Mat3 rotation = cam_to_world.transpose();
    poses_.emplace_back(rotation, -(rotation * center));
    trajectory_.Append(i + 1, poses_.back());
  }

  const int stride = std::max(1, std::min(spec.width, spec.height) / 32);
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (int f = 1; f <= spec.frame_count; ++f) {
    int observed = 0;
    for (int y = stride / 2; y < spec.height; y += stride) {
      for (int x = stride / 2; x < spec.width; x += stride) {
        auto point = PointAt(f, Vec2(x, y));
        if (!point) continue;
        surfel_positions_.push_back(*point);
        surfel_colors_.push_back(ColorAt(*point));
        lo = lo.cwiseMin(*point);
        hi = hi.cwiseMax(*point);
        ++observed;
      }
    }
    surfels_per_frame_.push_back(observed);
    if (observed < kMinSurfelsPerFrame) {
      Throw(ErrorCode::kBadSpec, "frame " + std::to_string(f) + " observes only " +
                                     std::to_string(observed) + " surfels");
    }
  }
  diameter_ = (hi - lo).norm();
}

const Pose& SyntheticScene::FramePose(int frame) const {
  if (frame < 1 || frame > spec_.frame_count) {
    Throw(ErrorCode::kFrameOutOfRange, "frame " + std::to_string(frame));
  }
  return poses_[frame - 1];
}

std::optional<RayHit> SyntheticScene::CastRay(const Vec3& origin,
                                              const Vec3& direction) const {
  double best = std::numeric_limits<double>::infinity();
  for (int axis = 0; axis < 3; ++axis) {
    const double d = direction[axis];
    if (d > 0.0) {
      best = std::min(best, (kRoomMax[axis] - origin[axis]) / d);
    } else if (d < 0.0) {
      best = std::min(best, (kRoomMin[axis] - origin[axis]) / d);
    }
  }
  if (spec_.with_objects) {
    for (const Sphere& sphere : kSpheres) {
      const Vec3 oc = origin - sphere.center;
      const double a = direction.squaredNorm();
      const double b = 2.0 * oc.dot(direction);
      const double c = oc.squaredNorm() - sphere.radius * sphere.radius;
      const double disc = b * b - 4.0 * a * c;
      if (disc < 0.0) continue;
      const double root = std::sqrt(disc);
      for (double t : {(-b - root) / (2.0 * a), (-b + root) / (2.0 * a)}) {
        if (t > 1e-9) {
          best = std::min(best, t);
          break;
        }
      }
    }
  }
  if (!std::isfinite(best) || best <= 0.0) return std::nullopt;
  return RayHit{best, origin + best * direction};
}

std::optional<Vec3> SyntheticScene::PointAt(int frame, const Vec2& pixel) const {
  const Pose& pose = FramePose(frame);
  const Vec3 direction = pose.rotation().conjugate() * CameraRay(intrinsics_, pixel);
  auto hit = CastRay(pose.Center(), direction);
  if (!hit) return std::nullopt;
  return hit->point;
}

Vec3 SyntheticScene::ColorAt(const Vec3& p) const {
  const double two_pi = 2.0 * std::numbers::pi;
  auto wave = [&](const Vec3& dir, double wavelength, double phase) {
    return std::sin(two_pi * p.dot(dir.normalized()) / wavelength + phase);
  };
  Vec3 color;
  color.x() = 0.5 + 0.22 * wave(Vec3(1.0, 0.3, 0.5), 2.1, 0.3) +
              0.12 * wave(Vec3(-0.2, 1.0, 0.7), 1.4, 1.1);
  color.y() = 0.5 + 0.2 * wave(Vec3(0.4, -0.8, 1.0), 1.8, 2.0) +
              0.14 * wave(Vec3(1.0, 0.2, -0.6), 1.3, 0.4);
  color.z() = 0.5 + 0.2 * wave(Vec3(-0.7, 0.5, 0.4), 2.4, 4.0) +
              0.13 * wave(Vec3(0.3, 0.9, 0.2), 1.5, 2.7);
  return color.cwiseMax(0.0).cwiseMin(1.0);
}

Image SyntheticScene::RenderFrame(int frame) const {
  Image image(spec_.width, spec_.height);
  for (int y = 0; y < spec_.height; ++y) {
    for (int x = 0; x < spec_.width; ++x) {
      auto point = PointAt(frame, Vec2(x, y));
      if (!point) continue;
      const Vec3 c = ColorAt(*point);
      for (int ch = 0; ch < 3; ++ch) image.at(x, y, ch) = c[ch];
    }
  }
  return image;
}

std::vector<Frame> SyntheticScene::RenderFrames() const {
  std::vector<Frame> frames;
  for (int f = 1; f <= spec_.frame_count; ++f) frames.push_back({f, RenderFrame(f)});
  return frames;
}

std::vector<Vec3> SyntheticScene::FramePoints(int frame) const {
  std::vector<Vec3> points(static_cast<std::size_t>(spec_.width) * spec_.height,
                           Vec3::Zero());
  for (int y = 0; y < spec_.height; ++y) {
    for (int x = 0; x < spec_.width; ++x) {
      auto point = PointAt(frame, Vec2(x, y));
      if (point) points[static_cast<std::size_t>(y) * spec_.width + x] = *point;
    }
  }
  return points;
}

bool SyntheticScene::IsVisible(int frame, const Vec3& world_point) const {
  auto projection = TryProject(world_point, FramePose(frame), intrinsics_);
  if (!projection) return false;
  const Vec2& px = projection->pixel;
  if (px.x() < 0.0 || px.y() < 0.0 || px.x() > spec_.width - 1 ||
      px.y() > spec_.height - 1) {
    return false;
  }
  auto hit = PointAt(frame, px);
  if (!hit) return false;
  const double depth = (FramePose(frame) * *hit).z();
  return std::abs(depth - projection->depth) <= 1e-6 * std::max(1.0, depth);
}

SyntheticBundle GenerateSynthetic(const SyntheticScene& scene,
                                  const std::vector<PairKey>& pairs) {
  const SceneSpec& spec = scene.spec();
  const NoiseSpec& noise = spec.noise;
  const CameraIntrinsics& k = scene.intrinsics();
  SyntheticBundle out{PriorBundle(k), {}};

  std::map<int, std::vector<Vec3>> points_cache;
  auto frame_points = [&](int f) -> const std::vector<Vec3>& {
    auto it = points_cache.find(f);
    if (it == points_cache.end()) it = points_cache.emplace(f, scene.FramePoints(f)).first;
    return it->second;
  };

  for (const auto& [a, b] : pairs) {
    if (a < 1 || b < 1 || a > scene.frame_count() || b > scene.frame_count()) {
      Throw(ErrorCode::kFrameOutOfRange, "pair (" + std::to_string(a) + "," +
                                             std::to_string(b) + ")");
    }
    std::seed_seq seq{static_cast<std::uint64_t>(spec.seed),
                      static_cast<std::uint64_t>(a), static_cast<std::uint64_t>(b)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);

    SyntheticPairDebug debug;
    const double jitter_draw =
        noise.scale_jitter_min +
        (noise.scale_jitter_max - noise.scale_jitter_min) * uniform(rng);
    auto fixed = noise.fixed_view_scale.find(b);
    debug.scale_jitter = fixed != noise.fixed_view_scale.end() ? fixed->second
                                                                : jitter_draw;
    if (noise.pair_rotation_sigma > 0.0) {
      for (int c = 0; c < 3; ++c) debug.rotation_error[c] = noise.pair_rotation_sigma * gauss(rng);
    }
    const Mat3 rotation_error = QuaternionFromAngleAxis(debug.rotation_error).toRotationMatrix();

    const Pose& pose_a = scene.FramePose(a);
    const std::vector<Vec3>& world_a = frame_points(a);
    const std::vector<Vec3>& world_b = frame_points(b);

    PairwisePrior pair;
    pair.view_a = a;
    pair.view_b = b;
    pair.width = k.width;
    pair.height = k.height;
    const std::size_t n = pair.PixelCount();
    pair.pointmap_a.resize(3 * n);
    pair.pointmap_b.resize(3 * n);
    pair.confidence_a.resize(n);
    pair.confidence_b.resize(n);

    auto write_point = [&](std::vector<float>& dst, std::size_t i, const Vec3& world,
                           bool view_b) {
      Vec3 p = pose_a * world;
      if (view_b) p = rotation_error * p;
      if (noise.pointmap_sigma > 0.0) {
        for (int c = 0; c < 3; ++c) p[c] += noise.pointmap_sigma * gauss(rng);
      }
      p *= debug.scale_jitter;
      for (int c = 0; c < 3; ++c) dst[3 * i + c] = static_cast<float>(p[c]);
    };
    for (std::size_t i = 0; i < n; ++i) {
      write_point(pair.pointmap_a, i, world_a[i], false);
      write_point(pair.pointmap_b, i, world_b[i], true);
      pair.confidence_a[i] = scene.IsVisible(b, world_a[i]) ? 1.f : 0.01f;
      pair.confidence_b[i] = scene.IsVisible(a, world_b[i]) ? 1.f : 0.01f;
    }

    // Matches on a keyframe-side grid so that intersections across pairs
    // sharing view_a are non-trivial.
    const int stride = spec.match_stride;
    const Pose& pose_b = scene.FramePose(b);
    for (int y = stride / 2; y < k.height; y += stride) {
      for (int x = stride / 2; x < k.width; x += stride) {
        const Vec3& world = world_a[static_cast<std::size_t>(y) * k.width + x];
        if (!scene.IsVisible(b, world)) continue;
        const Vec2 px = Project(world, pose_b, k).pixel;
        const float xb = std::min(static_cast<float>(px.x()), static_cast<float>(k.width - 1));
        const float yb = std::min(static_cast<float>(px.y()), static_cast<float>(k.height - 1));
        pair.matches.push_back({static_cast<float>(x), static_cast<float>(y),
                                std::max(xb, 0.f), std::max(yb, 0.f)});
      }
    }
    if (spec.max_matches > 0 &&
        pair.matches.size() > static_cast<std::size_t>(spec.max_matches)) {
      std::vector<Match> kept;
      const std::size_t total = pair.matches.size();
      for (int i = 0; i < spec.max_matches; ++i) {
        kept.push_back(pair.matches[i * total / spec.max_matches]);
      }
      pair.matches = std::move(kept);
    }
    const int outliers = static_cast<int>(
        std::lround(noise.outlier_fraction * static_cast<double>(pair.matches.size())));
    std::vector<int> rows(pair.matches.size());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = static_cast<int>(i);
    std::shuffle(rows.begin(), rows.end(), rng);
    rows.resize(outliers);
    std::sort(rows.begin(), rows.end());
    for (int row : rows) {
      Match& m = pair.matches[row];
      m.xb = static_cast<float>(uniform(rng) * (k.width - 1));
      m.yb = static_cast<float>(uniform(rng) * (k.height - 1));
      const std::size_t key_pixel =
          static_cast<std::size_t>(std::lround(m.ya)) * k.width + std::lround(m.xa);
      pair.confidence_a[key_pixel] = 0.01f;
    }
    debug.outlier_rows = std::move(rows);

    out.bundle.AddPair(std::move(pair));
    out.debug.emplace(PairKey(a, b), std::move(debug));
  }
  return out;
}

}  // namespace fragsplat
