#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "fragsplat/core/binary_io.h"
#include "fragsplat/prior/prior_bundle.h"
#include "fragsplat/prior/synthetic_scene.h"
#include "fragsplat/registration/fragments.h"
#include "test_util.h"

namespace fragsplat {
namespace {

using testing::ExpectError;

const std::filesystem::path kData = FRAGSPLAT_TEST_DATA;

PairwisePrior RandomPair(std::mt19937_64& rng, int w, int h, int matches) {
  std::uniform_real_distribution<float> u(0.f, 1.f);
  PairwisePrior p;
  p.view_a = 1;
  p.view_b = 2;
  p.width = w;
  p.height = h;
  const std::size_t n = p.PixelCount();
  for (std::size_t i = 0; i < 3 * n; ++i) {
    p.pointmap_a.push_back(u(rng) * 4 - 2);
    p.pointmap_b.push_back(u(rng) * 4 - 2);
  }
  for (std::size_t i = 0; i < n; ++i) {
    p.confidence_a.push_back(u(rng));
    p.confidence_b.push_back(u(rng) * 3);
  }
  for (int i = 0; i < matches; ++i) {
    p.matches.push_back({u(rng) * (w - 1), u(rng) * (h - 1), u(rng) * (w - 1), u(rng) * (h - 1)});
  }
  return p;
}

void ExpectSamePair(const PairwisePrior& a, const PairwisePrior& b) {
  EXPECT_EQ(a.width, b.width);
  EXPECT_EQ(a.height, b.height);
  EXPECT_EQ(a.pointmap_a, b.pointmap_a);
  EXPECT_EQ(a.pointmap_b, b.pointmap_b);
  EXPECT_EQ(a.confidence_a, b.confidence_a);
  EXPECT_EQ(a.confidence_b, b.confidence_b);
  ASSERT_EQ(a.matches.size(), b.matches.size());
  for (std::size_t i = 0; i < a.matches.size(); ++i) {
    EXPECT_EQ(a.matches[i].xa, b.matches[i].xa);
    EXPECT_EQ(a.matches[i].yb, b.matches[i].yb);
  }
}

TEST(PairFileTest, RoundTrip) {
  std::mt19937_64 rng(1);
  const PairwisePrior p = RandomPair(rng, 7, 5, 11);
  const std::string bytes = EncodePairFile(p);
  EXPECT_EQ(bytes.size(), 20u + 4u * (8 * 35 + 44));
  EXPECT_EQ(bytes.substr(0, 4), "VLPR");
  ExpectSamePair(DecodePairFile(bytes, 1, 2), p);
  EXPECT_EQ(EncodePairFile(DecodePairFile(bytes, 1, 2)), bytes);
}

TEST(PairFileTest, HeaderErrors) {
  std::mt19937_64 rng(2);
  const std::string bytes = EncodePairFile(RandomPair(rng, 4, 3, 2));
  std::string bad = bytes;
  bad[0] = 'X';
  ExpectError(ErrorCode::kBadMagic, [&] { DecodePairFile(bad, 1, 2); });
  bad = bytes;
  bad[4] = 2;
  ExpectError(ErrorCode::kVersionMismatch, [&] { DecodePairFile(bad, 1, 2); });
  ExpectError(ErrorCode::kTruncatedFile, [&] { DecodePairFile(bytes.substr(0, 12), 1, 2); });
  ExpectError(ErrorCode::kTruncatedFile,
              [&] { DecodePairFile(bytes.substr(0, bytes.size() - 1), 1, 2); });
  ExpectError(ErrorCode::kDimensionMismatch, [&] { DecodePairFile(bytes + "abcd", 1, 2); });
}

TEST(PairFileTest, ValidationErrors) {
  std::mt19937_64 rng(3);
  PairwisePrior p = RandomPair(rng, 4, 3, 2);
  p.confidence_b[3] = -0.5f;
  ExpectError(ErrorCode::kInvalidValue, [&] { EncodePairFile(p); });
  p = RandomPair(rng, 4, 3, 2);
  p.matches[1].xb = 3.5f;
  ExpectError(ErrorCode::kInvalidValue, [&] { EncodePairFile(p); });
  p = RandomPair(rng, 4, 3, 2);
  p.pointmap_b.pop_back();
  ExpectError(ErrorCode::kDimensionMismatch, [&] { EncodePairFile(p); });
}

TEST(BundleTest, SaveLoadIsByteStable) {
  std::mt19937_64 rng(4);
  CameraIntrinsics k;
  k.fx = 5.123456789;
  k.fy = 5.0;
  k.cx = 2.5;
  k.cy = 1.75;
  k.width = 6;
  k.height = 4;
  PriorBundle bundle(k);
  for (int b : {2, 3, 5}) {
    PairwisePrior p = RandomPair(rng, 6, 4, b);
    p.view_b = b;
    bundle.AddPair(p);
  }
  const auto dir = testing::ScratchDir("bundle");
  SaveBundle(dir / "a", bundle);
  const PriorBundle back = LoadBundle(dir / "a");
  EXPECT_EQ(back.intrinsics().fx, k.fx);
  ASSERT_EQ(back.pairs().size(), 3u);
  ExpectSamePair(back.Pair(1, 5), bundle.Pair(1, 5));
  SaveBundle(dir / "b", back);
  for (const char* name : {"manifest.txt", "pair_1_2.bin", "pair_1_5.bin"}) {
    EXPECT_EQ(ReadFileBytes(dir / "a" / name), ReadFileBytes(dir / "b" / name)) << name;
  }
  ExpectError(ErrorCode::kMissingPair, [&] { back.Pair(2, 3); });
  ExpectError(ErrorCode::kInvalidArgument, [&] { bundle.AddPair(bundle.Pair(1, 2)); });
  ExpectError(ErrorCode::kBadBundlePath, [&] { LoadBundle(dir / "nothing"); });
}

TEST(BundleTest, ManifestErrors) {
  const auto dir = testing::ScratchDir("manifest");
  std::ofstream(dir / "manifest.txt") << "pair 1 2 pair_1_2.bin\n";
  ExpectError(ErrorCode::kInvalidValue, [&] { LoadBundle(dir); });
  std::ofstream(dir / "manifest.txt") << "intrinsics 4 4 1.5 1 4 3\npair 1 2 gone.bin\n";
  ExpectError(ErrorCode::kBadBundlePath, [&] { LoadBundle(dir); });
}

// Written by the Python exporter; both sides must agree byte for byte.
TEST(BundleTest, GoldenFixtureFromExporter) {
  const PriorBundle bundle = LoadBundle(kData / "golden_bundle");
  const CameraIntrinsics& k = bundle.intrinsics();
  EXPECT_EQ(k.fx, 4.0);
  EXPECT_EQ(k.cx, 1.5);
  EXPECT_EQ(k.cy, 1.0);
  EXPECT_EQ(k.width, 4);
  EXPECT_EQ(k.height, 3);
  ASSERT_EQ(bundle.pairs().size(), 2u);
  for (int b : {2, 3}) {
    const PairwisePrior& p = bundle.Pair(1, b);
    for (std::size_t i = 0; i < p.pointmap_a.size(); ++i) {
      EXPECT_EQ(p.pointmap_a[i], static_cast<float>(0.25 * i + 1));
      EXPECT_EQ(p.pointmap_b[i], static_cast<float>(-0.5 * i + b));
    }
    for (std::size_t i = 0; i < p.PixelCount(); ++i) {
      EXPECT_EQ(p.confidence_a[i], static_cast<float>(i / 8.0));
      EXPECT_EQ(p.confidence_b[i], static_cast<float>(0.01 * b));
    }
    ASSERT_EQ(p.matches.size(), static_cast<std::size_t>(b));
    EXPECT_EQ(p.matches[1].xa, 3.f);
    EXPECT_EQ(p.matches[1].xb, 2.75f);
    EXPECT_EQ(p.matches[0].yb, 0.25f);
  }
  const auto dir = testing::ScratchDir("golden");
  SaveBundle(dir, bundle);
  for (const char* name : {"manifest.txt", "pair_1_2.bin", "pair_1_3.bin"}) {
    EXPECT_EQ(ReadFileBytes(dir / name), ReadFileBytes(kData / "golden_bundle" / name)) << name;
  }
}

TEST(BundleTest, PairListMatchesExporter) {
  std::ifstream in(kData / "pairs_n16_k4.txt");
  std::vector<PairKey> expected;
  int a, b;
  while (in >> a >> b) expected.emplace_back(a, b);
  EXPECT_EQ(expected.size(), 17u);
  EXPECT_EQ(EnumerateBundlePairs(16, 4), expected);
}

SceneSpec SmallSpec() {
  SceneSpec spec;
  spec.frame_count = 4;
  spec.width = 48;
  spec.height = 40;
  spec.seed = 3;
  return spec;
}

TEST(SyntheticTest, NoiselessPointmapsAreGroundTruth) {
  const SyntheticScene scene(SmallSpec());
  const SyntheticBundle synth = GenerateSynthetic(scene, {{1, 3}});
  const PairwisePrior& p = synth.bundle.Pair(1, 3);
  const std::vector<Vec3> world_a = scene.FramePoints(1);
  const std::vector<Vec3> world_b = scene.FramePoints(3);
  const Pose& pose_a = scene.FramePose(1);
  for (std::size_t i = 0; i < p.PixelCount(); ++i) {
    const Vec3 a = pose_a * world_a[i];
    const Vec3 b = pose_a * world_b[i];
    EXPECT_LT((p.PointA(i) - a).norm(), 1e-5 * a.norm());
    EXPECT_LT((p.PointB(i) - b).norm(), 1e-5 * b.norm());
  }
  // Matches land where the keyframe pixel's surface projects.
  for (const Match& m : p.matches) {
    const Vec3 world = *scene.PointAt(1, Vec2(m.xa, m.ya));
    const Vec2 px = Project(world, scene.FramePose(3), scene.intrinsics()).pixel;
    EXPECT_NEAR(m.xb, std::clamp(px.x(), 0.0, 47.0), 1e-3);
    EXPECT_NEAR(m.yb, std::clamp(px.y(), 0.0, 39.0), 1e-3);
  }
  EXPECT_GT(p.matches.size(), 20u);
}

TEST(SyntheticTest, FixedJitterScalesBothPointmaps) {
  SceneSpec spec = SmallSpec();
  spec.noise.fixed_view_scale[2] = 0.5;
  const SyntheticScene scene(spec);
  const SyntheticBundle clean = GenerateSynthetic(SyntheticScene(SmallSpec()), {{1, 2}});
  const SyntheticBundle synth = GenerateSynthetic(scene, {{1, 2}});
  EXPECT_EQ(synth.debug.at({1, 2}).scale_jitter, 0.5);
  const PairwisePrior& p = synth.bundle.Pair(1, 2);
  const PairwisePrior& q = clean.bundle.Pair(1, 2);
  for (std::size_t i = 0; i < p.PixelCount(); ++i) {
    EXPECT_NEAR(p.PointA(i).norm() * 2.0, q.PointA(i).norm(), 1e-5);
    EXPECT_NEAR(p.PointB(i).norm() * 2.0, q.PointB(i).norm(), 1e-5);
  }
}

TEST(SyntheticTest, OutlierFractionIsExact) {
  SceneSpec spec = SmallSpec();
  spec.width = 128;
  spec.height = 96;
  spec.match_stride = 4;
  spec.max_matches = 200;
  spec.noise.outlier_fraction = 0.3;
  const SyntheticScene scene(spec);
  const SyntheticBundle synth = GenerateSynthetic(scene, {{1, 2}});
  const PairwisePrior& p = synth.bundle.Pair(1, 2);
  ASSERT_EQ(p.matches.size(), 200u);
  const auto& rows = synth.debug.at({1, 2}).outlier_rows;
  EXPECT_EQ(rows.size(), 60u);
  for (int row : rows) {
    const Match& m = p.matches[row];
    EXPECT_EQ(p.confidence_a[static_cast<std::size_t>(m.ya) * p.width + static_cast<std::size_t>(m.xa)],
              0.01f);
  }
}

TEST(SyntheticTest, DeterministicAndRangeChecked) {
  SceneSpec spec = SmallSpec();
  spec.noise.pointmap_sigma = 0.01;
  spec.noise.scale_jitter_min = 0.8;
  spec.noise.scale_jitter_max = 1.2;
  const SyntheticScene scene(spec);
  const auto a = GenerateSynthetic(scene, {{1, 2}, {1, 3}});
  const auto b = GenerateSynthetic(scene, {{1, 3}});
  // Per-pair streams: the same pair is identical regardless of the list.
  EXPECT_EQ(EncodePairFile(a.bundle.Pair(1, 3)), EncodePairFile(b.bundle.Pair(1, 3)));
  ExpectError(ErrorCode::kFrameOutOfRange, [&] { GenerateSynthetic(scene, {{1, 5}}); });
  ExpectError(ErrorCode::kFrameOutOfRange, [&] { scene.FramePose(0); });
}

}  // namespace
}  // namespace fragsplat
