#include <random>

#include <gtest/gtest.h>

#include "fragsplat/prior/synthetic_scene.h"
#include "fragsplat/registration/keyframe_alignment.h"
#include "test_util.h"

namespace fragsplat {
namespace {

using testing::ExpectError;
using testing::RandomVec;
using Vec7 = Eigen::Matrix<double, 7, 1>;

struct Case {
  std::unique_ptr<SyntheticScene> scene;
  PriorBundle bundle;
  KeyframeGraph graph;
};

// Keyframe-only scene: every frame is a keyframe of a 2-frame fragment, so
// frames 1, 3, 5, ... carry the alignment graph.
Case MakeCase(int keyframes, const NoiseSpec& noise, int width = 40, int height = 30) {
  SceneSpec spec;
  spec.frame_count = 2 * keyframes;
  spec.width = width;
  spec.height = height;
  spec.path_length = 1.5;
  spec.yaw_span_deg = 20.0;
  spec.noise = noise;
  spec.seed = 5;
  Case c;
  c.scene = std::make_unique<SyntheticScene>(spec);
  c.graph = BuildKeyframeGraph(Partition(spec.frame_count, 2));
  std::vector<PairKey> pairs;
  for (const auto& [i, j] : c.graph.edges) pairs.emplace_back(c.graph.keyframes[i], c.graph.keyframes[j]);
  c.bundle = GenerateSynthetic(*c.scene, pairs).bundle;
  return c;
}

NoiseSpec Noisy() {
  NoiseSpec noise;
  noise.pointmap_sigma = 0.01;
  noise.scale_jitter_min = 0.9;
  noise.scale_jitter_max = 1.1;
  return noise;
}

AlignmentState Perturbed(const Case& c, std::uint64_t seed) {
  AlignmentState state = InitializeAlignment(c.graph, c.bundle);
  std::mt19937_64 rng(seed);
  for (auto& points : state.world_points) {
    for (Vec3& x : points) x += RandomVec(rng, 0.02);
  }
  for (std::size_t e = 1; e < state.edge_transforms.size(); ++e) {
    SimTransform& t = state.edge_transforms[e];
    t.pose = Pose(QuaternionFromAngleAxis(RandomVec(rng, 0.02)) * t.pose.rotation(),
                  t.pose.translation() + RandomVec(rng, 0.02));
    t.scale *= 1.03;
  }
  return state;
}

TEST(AlignmentObjectiveTest, ParallelMatchesReference) {
  const Case c = MakeCase(5, Noisy());
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const AlignmentState state = Perturbed(c, seed);
    const double a = AlignmentObjective(c.graph, c.bundle, state);
    const double b = AlignmentObjectiveReference(c.graph, c.bundle, state);
    EXPECT_NEAR(a, b, 1e-10 * b);
    AlignmentGradient g;
    EXPECT_EQ(AlignmentObjectiveGradient(c.graph, c.bundle, state, &g), a);
  }
}

TEST(AlignmentObjectiveTest, GradientMatchesFiniteDifferences) {
  const Case c = MakeCase(4, Noisy(), 32, 24);
  const AlignmentState state = Perturbed(c, 9);
  AlignmentGradient g;
  AlignmentObjectiveGradient(c.graph, c.bundle, state, &g);
  auto objective = [&](const AlignmentState& s) {
    return AlignmentObjectiveReference(c.graph, c.bundle, s);
  };
  const double h = 1e-6;
  std::mt19937_64 rng(10);
  std::uniform_int_distribution<std::size_t> pixel(0, state.world_points[0].size() - 1);
  for (int v = 0; v < c.graph.node_count(); ++v) {
    for (int trial = 0; trial < 10; ++trial) {
      const std::size_t p = pixel(rng);
      for (int d = 0; d < 3; ++d) {
        AlignmentState plus = state, minus = state;
        plus.world_points[v][p][d] += h;
        minus.world_points[v][p][d] -= h;
        const double fd = (objective(plus) - objective(minus)) / (2 * h);
        EXPECT_NEAR(g.world_points[v][p][d], fd, 1e-5 + 1e-5 * std::abs(fd));
      }
    }
  }
  for (std::size_t e = 0; e < state.edge_transforms.size(); ++e) {
    for (int d = 0; d < 7; ++d) {
      auto shifted = [&](double delta) {
        AlignmentState s = state;
        SimTransform& t = s.edge_transforms[e];
        Vec7 step = Vec7::Zero();
        step[d] = delta;
        t.pose = Pose(QuaternionFromAngleAxis(step.head<3>()) * t.pose.rotation(),
                      t.pose.translation() + step.segment<3>(3));
        t.scale *= std::exp(step[6]);
        return objective(s);
      };
      const double fd = (shifted(h) - shifted(-h)) / (2 * h);
      EXPECT_NEAR(g.edges[e][d], fd, 1e-4 * std::max(1.0, std::abs(fd))) << e << " " << d;
    }
  }
}

TEST(AlignmentObjectiveTest, ZeroConfidenceTermsAreIgnored) {
  Case c = MakeCase(3, Noisy());
  const AlignmentState state = Perturbed(c, 2);
  PriorBundle edited(c.bundle.intrinsics());
  for (auto [key, pair] : c.bundle.pairs()) {
    for (std::size_t p = 0; p < pair.PixelCount(); p += 3) {
      pair.confidence_a[p] = 0.f;
      pair.confidence_b[p] = 0.f;
    }
    edited.AddPair(pair);
  }
  AlignmentState garbage = state;
  for (auto& points : garbage.world_points) {
    for (std::size_t p = 0; p < points.size(); p += 3) points[p] = Vec3(1e3, -1e3, 7);
  }
  EXPECT_NEAR(AlignmentObjective(c.graph, edited, garbage),
              AlignmentObjective(c.graph, edited, state), 1e-9);
  AlignmentGradient g;
  AlignmentObjectiveGradient(c.graph, edited, garbage, &g);
  EXPECT_EQ(g.world_points[1][3], Vec3::Zero());
}

void ExpectPosesMatchTruth(const Case& c, const KeyframeAlignment& a, double angle,
                           double shift) {
  const Pose& first = c.scene->FramePose(1);
  ASSERT_EQ(a.keyframe_poses.size(), c.graph.keyframes.size());
  for (int v = 0; v < c.graph.node_count(); ++v) {
    const Pose truth = Compose(c.scene->FramePose(c.graph.keyframes[v]), first.Inverse());
    EXPECT_LT(RotationAngleBetween(a.keyframe_poses[v], truth), angle) << v;
    EXPECT_LT(testing::TranslationGap(a.keyframe_poses[v], truth), shift) << v;
  }
}

TEST(GlobalAlignmentTest, NoiselessFiveKeyframes) {
  const Case c = MakeCase(5, NoiseSpec());
  AlignmentOptions options;
  options.iterations = 20;
  const KeyframeAlignment a = GlobalKeyframeAlignment(c.graph, c.bundle, options);
  EXPECT_EQ(a.objective_history.size(), 21u);
  EXPECT_LT(a.objective_history.front(), 1e-2);
  ExpectPosesMatchTruth(c, a, 1e-3, 1e-3);
  EXPECT_EQ(a.keyframe_poses[0].translation(), Vec3::Zero());
  ASSERT_EQ(a.adjacent_transforms.size(), 4u);
  // Pairwise-only transforms agree with the joint solution on clean data.
  const std::vector<SimTransform> pairwise = PairwiseAdjacentTransforms(a, c.bundle);
  ASSERT_EQ(pairwise.size(), 4u);
  for (int v = 0; v < 4; ++v) {
    EXPECT_NEAR(pairwise[v].scale, 1.0, 1e-3);
    EXPECT_LT(RotationAngleBetween(pairwise[v].pose, a.adjacent_transforms[v]), 1e-3);
    EXPECT_LT(testing::TranslationGap(pairwise[v].pose, a.adjacent_transforms[v]), 1e-3);
  }
  EXPECT_EQ(a.NodeOf(5), 2);
  ExpectError(ErrorCode::kFrameOutOfRange, [&] { a.NodeOf(2); });
  const std::vector<Vec3> local = a.LocalPointmap(2);
  const std::vector<Vec3> truth = c.scene->FramePoints(5);
  for (std::size_t p = 0; p < local.size(); p += 17) {
    const Vec3 expected = c.scene->FramePose(5) * truth[p];
    EXPECT_LT((local[p] - expected).norm(), 2e-3 * expected.norm());
  }
}

TEST(GlobalAlignmentTest, NoisyObjectiveNeverIncreases) {
  const Case c = MakeCase(5, Noisy());
  AlignmentOptions options;
  options.iterations = 40;
  const KeyframeAlignment a = GlobalKeyframeAlignment(c.graph, c.bundle, options);
  for (std::size_t i = 1; i < a.objective_history.size(); ++i) {
    EXPECT_LE(a.objective_history[i], a.objective_history[i - 1]);
  }
  EXPECT_LT(a.objective_history.back(), a.objective_history.front());
  // The gauge edge never moves.
  EXPECT_EQ(a.state.edge_transforms[0].scale, 1.0);
  EXPECT_EQ(a.state.edge_transforms[0].pose.translation(), Vec3::Zero());
  // World scale comes from the gauge pair, so compare directions only.
  const Pose& first = c.scene->FramePose(1);
  for (int v = 1; v < c.graph.node_count(); ++v) {
    const Pose truth = Compose(c.scene->FramePose(c.graph.keyframes[v]), first.Inverse());
    EXPECT_LT(RotationAngleBetween(a.keyframe_poses[v], truth), 0.02) << v;
  }
}

TEST(GlobalAlignmentTest, SingleEdge) {
  const Case c = MakeCase(2, NoiseSpec());
  ASSERT_EQ(c.graph.edges.size(), 1u);
  const KeyframeAlignment a = GlobalKeyframeAlignment(c.graph, c.bundle, AlignmentOptions());
  // Nothing is free except the pointmaps, which already agree.
  EXPECT_LT(a.objective_history.back(), 1e-2);
  ExpectPosesMatchTruth(c, a, 1e-3, 1e-3);
}

TEST(GlobalAlignmentTest, Errors) {
  const Case c = MakeCase(3, NoiseSpec());
  AlignmentOptions bad;
  bad.iterations = -1;
  ExpectError(ErrorCode::kInvalidArgument, [&] { GlobalKeyframeAlignment(c.graph, c.bundle, bad); });
  bad = AlignmentOptions();
  bad.step = 0.0;
  ExpectError(ErrorCode::kInvalidArgument, [&] { GlobalKeyframeAlignment(c.graph, c.bundle, bad); });
  PriorBundle missing(c.bundle.intrinsics());
  for (const auto& [key, pair] : c.bundle.pairs()) {
    if (key != PairKey(1, 5)) missing.AddPair(pair);
  }
  ExpectError(ErrorCode::kMissingPair,
              [&] { GlobalKeyframeAlignment(c.graph, missing, AlignmentOptions()); });
  KeyframeGraph split = c.graph;
  split.edges = {{0, 1}};
  ExpectError(ErrorCode::kDisconnectedGraph,
              [&] { GlobalKeyframeAlignment(split, c.bundle, AlignmentOptions()); });
  AlignmentState wrong = InitializeAlignment(c.graph, c.bundle);
  wrong.edge_transforms.pop_back();
  ExpectError(ErrorCode::kDimensionMismatch, [&] { AlignmentObjective(c.graph, c.bundle, wrong); });
}

}  // namespace
}  // namespace fragsplat
