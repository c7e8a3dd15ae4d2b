#include <random>

#include <gtest/gtest.h>

#include "fragsplat/splat/gaussian_set.h"
#include "test_util.h"

namespace fragsplat {
namespace {

using testing::ExpectError;
using testing::RandomPose;
using testing::RandomVec;

CameraIntrinsics Camera() {
  CameraIntrinsics k;
  k.fx = k.fy = 500.0;
  k.cx = 1.5;
  k.cy = 1.0;
  k.width = 4;
  k.height = 3;
  return k;
}

// Two-frame fragment: the keyframe sees a plane at depth 2, the second
// frame is displaced and sees points at varying depth.
struct Fixture {
  CameraIntrinsics k = Camera();
  FragmentRegistration reg;
  std::vector<Frame> frames;

  Fixture() {
    reg.fragment.index = 3;
    reg.fragment.frame_indices = {9, 10};
    reg.poses = {Pose(), Pose(QuaternionFromAngleAxis(Vec3(0, 0.05, 0)), Vec3(0.1, 0, 0))};
    reg.scales = {1.0, 1.0};
    reg.inlier_ratios = {1.0, 1.0};
    reg.points.resize(2);
    for (int p = 0; p < k.PixelCount(); ++p) {
      const Vec2 px(p % k.width, p / k.width);
      reg.points[0].push_back(Unproject(px, 2.0, reg.poses[0], k));
      // Slightly off the ray: the center must still land on the ray.
      reg.points[1].push_back(Unproject(px + Vec2(0.3, -0.2), 1.0 + 0.5 * p, reg.poses[1], k));
    }
    for (int f : {9, 10}) {
      Frame frame{f, Image(k.width, k.height)};
      for (std::size_t i = 0; i < frame.pixels.data().size(); ++i) {
        frame.pixels.data()[i] = 0.01 * i + 0.1 * (f - 9) - 0.05;  // includes < 0
      }
      frames.push_back(frame);
    }
  }
};

TEST(InitTest, OneGaussianPerPixelOnItsRay) {
  const Fixture fx;
  const GaussianSet set = InitFromFragment(fx.reg, fx.frames, fx.k);
  ASSERT_EQ(set.size(), 24u);
  EXPECT_EQ(set.first_frame, 9);
  EXPECT_EQ(set.last_frame, 10);
  for (std::size_t i = 0; i < set.size(); ++i) {
    const Gaussian& g = set.gaussians[i];
    const int slot = static_cast<int>(i / 12);
    const int p = static_cast<int>(i % 12);
    EXPECT_EQ(g.source.fragment, 3);
    EXPECT_EQ(g.source.frame, 9 + slot);
    EXPECT_EQ(g.source.pixel, p);
    EXPECT_EQ(g.opacity, kInitialOpacity);
    const Projection proj = Project(g.center, fx.reg.poses[slot], fx.k);
    EXPECT_LT((proj.pixel - Vec2(p % 4, p / 4)).norm(), 1e-9);
    const double depth = (fx.reg.poses[slot] * fx.reg.points[slot][p]).z();
    EXPECT_NEAR(proj.depth, depth, 1e-12);
    EXPECT_NEAR(g.scale, depth / 500.0, 1e-15);
    const Vec3 color = fx.frames[slot].pixels.Pixel(p);
    EXPECT_EQ(g.color, color.cwiseMax(0.0).cwiseMin(1.0));
  }
  // Depth 2 at fx 500.
  EXPECT_DOUBLE_EQ(set.gaussians[0].scale, 0.004);
}

TEST(InitTest, SkipAndErrors) {
  Fixture fx;
  const GaussianSet set = InitFromFragment(fx.reg, fx.frames, fx.k, {10});
  EXPECT_EQ(set.size(), 12u);
  for (const Gaussian& g : set.gaussians) EXPECT_EQ(g.source.frame, 9);
  ExpectError(ErrorCode::kFrameOutOfRange,
              [&] { InitFromFragment(fx.reg, std::span(fx.frames).first(1), fx.k); });
  fx.reg.points[1].pop_back();
  ExpectError(ErrorCode::kMissingPointmap, [&] { InitFromFragment(fx.reg, fx.frames, fx.k); });
  fx.reg.points.pop_back();
  ExpectError(ErrorCode::kMissingPointmap, [&] { InitFromFragment(fx.reg, fx.frames, fx.k); });
}

GaussianSet RandomSet(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  GaussianSet set;
  set.first_frame = 1;
  set.last_frame = 4;
  for (int i = 0; i < n; ++i) {
    Gaussian g;
    g.center = RandomVec(rng, 3.0);
    g.color = Vec3(u(rng), u(rng), u(rng));
    g.opacity = u(rng);
    g.scale = 0.01 + u(rng);
    g.source = {1 + i % 2, 1 + i % 4, i * 37};
    set.gaussians.push_back(g);
  }
  return set;
}

TEST(TransformSetTest, MapsCentersAndScales) {
  std::mt19937_64 rng(1);
  const GaussianSet set = RandomSet(rng, 20);
  const SimTransform t{RandomPose(rng), 2.0};
  const GaussianSet out = TransformSet(set, t);
  for (std::size_t i = 0; i < set.size(); ++i) {
    EXPECT_LT((out.gaussians[i].center - t.Apply(set.gaussians[i].center)).norm(), 1e-12);
    EXPECT_EQ(out.gaussians[i].scale, 2.0 * set.gaussians[i].scale);
    EXPECT_EQ(out.gaussians[i].color, set.gaussians[i].color);
  }
  // The box diagonal is not rotation invariant; check it with a pure scaling.
  const SimTransform grow{Pose(Eigen::Quaterniond::Identity(), Vec3(1, 2, 3)), 2.0};
  EXPECT_NEAR(CenterExtent(TransformSet(set, grow)), 2.0 * CenterExtent(set), 1e-9);
  // Composition agrees with applying the transforms one after the other.
  const SimTransform u{RandomPose(rng), 0.7};
  const GaussianSet twice = TransformSet(TransformSet(set, u), t);
  const GaussianSet once = TransformSet(set, Compose(t, u));
  for (std::size_t i = 0; i < set.size(); ++i) {
    EXPECT_LT((twice.gaussians[i].center - once.gaussians[i].center).norm(), 1e-12);
    EXPECT_NEAR(twice.gaussians[i].scale, once.gaussians[i].scale, 1e-15);
  }
}

TEST(GaussianSetTest, ConcatAndExtent) {
  std::mt19937_64 rng(2);
  GaussianSet a = RandomSet(rng, 3), b = RandomSet(rng, 4);
  b.first_frame = 5;
  b.last_frame = 8;
  const GaussianSet c = Concat(a, b);
  EXPECT_EQ(c.size(), 7u);
  EXPECT_EQ(c.first_frame, 1);
  EXPECT_EQ(c.last_frame, 8);
  EXPECT_EQ(c.gaussians[3].center, b.gaussians[0].center);
  EXPECT_EQ(Concat(GaussianSet(), b).first_frame, 5);
  GaussianSet pair;
  pair.gaussians.resize(2);
  pair.gaussians[1].center = Vec3(1, 2, 2);
  EXPECT_DOUBLE_EQ(CenterExtent(pair), 3.0);
  pair.gaussians.pop_back();
  EXPECT_EQ(CenterExtent(pair), 0.0);
}

TEST(GaussianSetTest, FingerprintSeesEveryAttribute) {
  std::mt19937_64 rng(3);
  const GaussianSet set = RandomSet(rng, 5);
  const std::uint64_t base = Fingerprint(set);
  EXPECT_EQ(Fingerprint(GaussianSet(set)), base);
  for (int field = 0; field < 7; ++field) {
    GaussianSet changed = set;
    Gaussian& g = changed.gaussians[2];
    switch (field) {
      case 0: g.center.y() = std::nextafter(g.center.y(), 1e9); break;
      case 1: g.color.z() += 1e-15; break;
      case 2: g.opacity = std::nextafter(g.opacity, 0.0); break;
      case 3: g.scale *= 1.0 + 1e-15; break;
      case 4: g.source.pixel += 1; break;
      case 5: changed.last_frame += 1; break;
      case 6: std::swap(changed.gaussians[0], changed.gaussians[1]); break;
    }
    EXPECT_NE(Fingerprint(changed), base) << field;
  }
}

TEST(VlgsTest, RoundTrip) {
  std::mt19937_64 rng(4);
  const GaussianSet set = RandomSet(rng, 50);
  const std::string bytes = EncodeGaussians(set);
  EXPECT_EQ(bytes.size(), 12u + 50u * 44u);
  EXPECT_EQ(bytes.substr(0, 4), "VLGS");
  const GaussianSet back = DecodeGaussians(bytes);
  ASSERT_EQ(back.size(), set.size());
  for (std::size_t i = 0; i < set.size(); ++i) {
    EXPECT_LT((back.gaussians[i].center - set.gaussians[i].center).norm(), 1e-6);
    EXPECT_NEAR(back.gaussians[i].opacity, set.gaussians[i].opacity, 1e-7);
    EXPECT_EQ(back.gaussians[i].source.pixel, set.gaussians[i].source.pixel);
    EXPECT_EQ(back.gaussians[i].source.fragment, set.gaussians[i].source.fragment);
  }
  EXPECT_EQ(back.first_frame, 1);
  EXPECT_EQ(back.last_frame, 4);
  EXPECT_EQ(EncodeGaussians(back), bytes);
  const auto dir = testing::ScratchDir("vlgs");
  SaveGaussians(dir / "g.vlgs", set);
  EXPECT_EQ(EncodeGaussians(LoadGaussians(dir / "g.vlgs")), bytes);
  EXPECT_EQ(DecodeGaussians(EncodeGaussians(GaussianSet())).size(), 0u);
}

TEST(VlgsTest, Errors) {
  std::mt19937_64 rng(5);
  const std::string bytes = EncodeGaussians(RandomSet(rng, 3));
  std::string bad = bytes;
  bad[3] = 'X';
  ExpectError(ErrorCode::kBadMagic, [&] { DecodeGaussians(bad); });
  bad = bytes;
  bad[4] = 9;
  ExpectError(ErrorCode::kVersionMismatch, [&] { DecodeGaussians(bad); });
  ExpectError(ErrorCode::kTruncatedFile, [&] { DecodeGaussians(bytes.substr(0, 50)); });
  ExpectError(ErrorCode::kDimensionMismatch, [&] { DecodeGaussians(bytes + "x"); });
}

}  // namespace
}  // namespace fragsplat
