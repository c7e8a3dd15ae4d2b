#include "fragsplat/hier/hierarchy.h"

#include <algorithm>
#include <cmath>

#include "fragsplat/core/error.h"
#include "fragsplat/render/photometric_loss.h"
#include "fragsplat/render/rasterizer.h"

namespace fragsplat {
namespace {

using Vec7 = Eigen::Matrix<double, 7, 1>;

std::vector<TrainingView> NodeViews(const HierNode& node, const ImageLookup& images) {
  std::vector<TrainingView> views;
  for (int frame : node.training_frames) {
    const auto it = images.find(frame);
    if (it == images.end()) {
      Throw(ErrorCode::kFrameOutOfRange, "no image for frame " + std::to_string(frame));
    }
    views.push_back({frame, it->second, node.poses.at(frame)});
  }
  return views;
}

void OptimizeNode(HierNode* node, const ImageLookup& images,
                  const CameraIntrinsics& camera, const OptimSpec& base,
                  std::uint64_t seed) {
  const std::vector<TrainingView> views = NodeViews(*node, images);
  if (views.empty()) return;
  OptimSpec spec = base;
  spec.seed = base.seed + seed;
  // The anchor camera defines the node's coordinates.
  spec.frozen_pose_frames.insert(node->anchor_frame);
  OptimizeResult result = JointOptimize(node->set, views, camera, spec);
  node->set = std::move(result.set);
  for (std::size_t i = 0; i < views.size(); ++i) node->poses[views[i].frame] = result.poses[i];
}

SimTransform RelativeTransform(const std::vector<Pose>& keyframe_poses, int ref_leaf,
                               int mov_leaf) {
  SimTransform t;
  t.pose = Compose(keyframe_poses.at(mov_leaf), keyframe_poses.at(ref_leaf).Inverse());
  return t;
}

Trajectory NodeTrajectory(const HierNode& node) {
  Trajectory trajectory;
  for (const auto& [frame, pose] : node.poses) trajectory.Append(frame, pose);
  return trajectory;
}

}  // namespace

MergeTree BuildMergeTree(int leaf_count) {
  if (leaf_count < 1) Throw(ErrorCode::kInvalidArgument, "merge tree needs a leaf");
  MergeTree tree;
  tree.leaf_count = leaf_count;
  std::vector<LeafRange> level;
  for (int i = 0; i < leaf_count; ++i) level.push_back({i, i});
  tree.levels.push_back(level);
  while (level.size() > 1) {
    std::vector<LeafRange> next;
    const int depth = static_cast<int>(tree.levels.size());
    for (std::size_t i = 0; i + 1 < level.size(); i += 2) {
      tree.merges.push_back({depth, level[i], level[i + 1]});
      next.push_back({level[i].first, level[i + 1].last});
    }
    if (level.size() % 2 == 1) next.push_back(level.back());
    tree.levels.push_back(next);
    level = std::move(next);
  }
  return tree;
}

ImageLookup IndexFrames(std::span<const Frame> frames) {
  ImageLookup lookup;
  for (const Frame& frame : frames) lookup[frame.index] = &frame.pixels;
  return lookup;
}

std::vector<char> VisibilityMask(const GaussianSet& ref, const Pose& pose,
                                 const CameraIntrinsics& camera, double beta) {
  if (!(beta > 0.0 && beta < 1.0)) {
    Throw(ErrorCode::kInvalidArgument, "visibility threshold must lie in (0, 1)");
  }
  const RenderOutput render = Render(ref, pose, camera);
  std::vector<char> mask(render.confidence.size());
  for (std::size_t p = 0; p < mask.size(); ++p) {
    mask[p] = render.confidence[p] > beta && render.depth[p] > 0.0;
  }
  return mask;
}

Pose PoseThroughTransform(const Pose& mov_pose, const SimTransform& ref_to_mov) {
  // x_f = R_f (σ R x + t) + t_f; dividing camera coordinates by σ leaves
  // every projection unchanged and keeps the pose rigid.
  const Mat3 rotation = mov_pose.RotationMatrix() * ref_to_mov.pose.RotationMatrix();
  const Vec3 translation =
      (mov_pose.rotation() * ref_to_mov.pose.translation() + mov_pose.translation()) /
      ref_to_mov.scale;
  return Pose(rotation, translation);
}

SimTransform AlignPair(const GaussianSet& ref, const SimTransform& initial,
                       const std::vector<const Image*>& images,
                       const std::vector<Pose>& mov_poses,
                       const CameraIntrinsics& camera, const OptimSpec& spec) {
  spec.Validate();
  if (images.empty() || images.size() != mov_poses.size()) {
    Throw(ErrorCode::kNoFrames, "transform refinement needs at least one mov frame");
  }
  SimTransform t = initial;
  Vec7 m = Vec7::Zero();
  Vec7 v = Vec7::Zero();
  ForwardState state;
  for (int it = 1; it <= spec.iterations; ++it) {
    // One frame per step, cycling through the alignment frames.
    const std::size_t f = (it - 1) % images.size();
    const Pose pose = PoseThroughTransform(mov_poses[f], t);
    const RenderOutput render = Render(ref, pose, camera, &state);
    const PhotometricLoss loss = ComputePhotometricLoss(render.color, *images[f]);
    const RenderGradients rg = RenderBackward(ref, pose, camera, state, loss.gradient);
    const Vec3 g_rho = rg.pose.head<3>();
    const Vec3 g_omega = rg.pose.tail<3>();
    const Mat3 rf_t = mov_poses[f].RotationMatrix().transpose();
    const Vec3& tf = mov_poses[f].translation();
    Vec7 g;
    g.head<3>() = rf_t * g_rho / t.scale;
    g.segment<3>(3) = rf_t * (g_omega - tf.cross(g_rho) / t.scale);
    g[6] = -g_rho.dot(pose.translation());
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g.cwiseProduct(g);
    const double c1 = 1.0 - std::pow(0.9, it);
    const double c2 = 1.0 - std::pow(0.999, it);
    const Vec7 step = -spec.pose_step * (m / c1).array() / ((v / c2).array().sqrt() + 1e-15);
    Vec6 tangent;
    tangent << step.head<3>(), step.segment<3>(3);
    t.pose = t.pose.Retract(tangent);
    t.scale *= std::exp(step[6]);
  }
  return t;
}

GaussianSet MergePair(const GaussianSet& ref, const GaussianSet& mov_aligned,
                      const std::map<int, std::vector<char>>& masks) {
  GaussianSet kept;
  kept.first_frame = mov_aligned.first_frame;
  kept.last_frame = mov_aligned.last_frame;
  for (const Gaussian& g : mov_aligned.gaussians) {
    const auto it = masks.find(g.source.frame);
    if (it != masks.end() && it->second.at(g.source.pixel)) continue;
    kept.gaussians.push_back(g);
  }
  return Concat(ref, kept);
}

HierNode MergeNodes(const HierNode& ref, const HierNode& mov, const SimTransform& initial,
                    const ImageLookup& images, const CameraIntrinsics& camera,
                    const HierarchySpec& spec, std::uint64_t seed, MergeRecord* record) {
  MergeRecord local;
  MergeRecord& rec = record ? *record : local;
  rec.ref_count = ref.set.size();
  rec.mov_count = mov.set.size();
  rec.ref_hash_before = Fingerprint(ref.set);
  rec.initial = initial;

  std::vector<const Image*> align_images;
  std::vector<Pose> align_poses;
  for (int frame : mov.training_frames) {
    if (static_cast<int>(align_images.size()) >= spec.align_frames) break;
    align_images.push_back(images.at(frame));
    align_poses.push_back(mov.poses.at(frame));
  }
  OptimSpec align = spec.align;
  align.seed += seed;
  align.FreezeGaussians();
  const SimTransform refined =
      align_images.empty()
          ? initial
          : AlignPair(ref.set, initial, align_images, align_poses, camera, align);
  rec.refined = refined;
  rec.ref_hash_after_align = Fingerprint(ref.set);

  HierNode node;
  node.leaves = {ref.leaves.first, mov.leaves.last};
  node.anchor_frame = ref.anchor_frame;
  node.poses = ref.poses;
  for (const auto& [frame, pose] : mov.poses) {
    node.poses[frame] = PoseThroughTransform(pose, refined);
  }
  std::map<int, std::vector<char>> masks;
  for (int frame : mov.training_frames) {
    masks[frame] = VisibilityMask(ref.set, node.poses.at(frame), camera, spec.beta);
  }
  const GaussianSet mov_aligned = TransformSet(mov.set, refined.Inverse());
  node.set = MergePair(ref.set, mov_aligned, masks);
  rec.merged_count = node.set.size();
  rec.kept_count = rec.merged_count - rec.ref_count;

  node.training_frames = ref.training_frames;
  node.training_frames.insert(node.training_frames.end(), mov.training_frames.begin(),
                              mov.training_frames.end());
  OptimizeNode(&node, images, camera, spec.merge, seed);
  return node;
}

HierarchyResult RunHierarchy(std::vector<HierNode> leaves,
                             const std::vector<Pose>& keyframe_poses,
                             std::span<const Frame> frames,
                             const CameraIntrinsics& camera, const HierarchySpec& spec,
                             const LevelCallback& on_level) {
  if (leaves.empty()) Throw(ErrorCode::kNoFrames, "hierarchy needs at least one leaf");
  if (keyframe_poses.size() != leaves.size()) {
    Throw(ErrorCode::kInvalidArgument, "one keyframe pose per leaf required");
  }
  const ImageLookup images = IndexFrames(frames);
  const MergeTree tree = BuildMergeTree(static_cast<int>(leaves.size()));
  HierarchyResult result;
  if (on_level) on_level(0, leaves);

  if (leaves.size() == 1) {
    OptimizeNode(&leaves[0], images, camera, spec.merge, 0);
    result.root = std::move(leaves[0]);
    result.trajectory = NodeTrajectory(result.root);
    return result;
  }

  std::vector<HierNode> level = std::move(leaves);
  std::size_t merge_index = 0;
  for (int depth = 1; depth <= tree.level_count(); ++depth) {
    std::vector<HierNode> next;
    for (std::size_t i = 0; i + 1 < level.size(); i += 2) {
      const MergeStep& step = tree.merges[merge_index++];
      MergeRecord record;
      record.step = step;
      const SimTransform initial =
          RelativeTransform(keyframe_poses, level[i].leaves.first, level[i + 1].leaves.first);
      next.push_back(MergeNodes(level[i], level[i + 1], initial, images, camera, spec,
                                merge_index, &record));
      result.merges.push_back(record);
    }
    if (level.size() % 2 == 1) next.push_back(std::move(level.back()));
    level = std::move(next);
    if (on_level) on_level(depth, level);
  }
  result.root = std::move(level[0]);
  result.trajectory = NodeTrajectory(result.root);
  return result;
}

HierarchyResult RunSequential(std::vector<HierNode> leaves,
                              const std::vector<SimTransform>& pairwise,
                              std::span<const Frame> frames,
                              const CameraIntrinsics& camera, const HierarchySpec& spec) {
  if (leaves.empty()) Throw(ErrorCode::kNoFrames, "sequential merge needs a leaf");
  if (pairwise.size() + 1 != leaves.size()) {
    Throw(ErrorCode::kInvalidArgument, "one pairwise transform per adjacent leaf pair required");
  }
  const ImageLookup images = IndexFrames(frames);
  HierarchyResult result;
  HierNode node = std::move(leaves[0]);
  if (leaves.size() == 1) OptimizeNode(&node, images, camera, spec.merge, 0);
  // Prefix coordinates -> coordinates of the leaf merged last.
  SimTransform last = SimTransform::Identity();
  for (std::size_t i = 1; i < leaves.size(); ++i) {
    MergeRecord record;
    record.step = {static_cast<int>(i), node.leaves, leaves[i].leaves};
    const SimTransform initial = Compose(pairwise[i - 1], last);
    node = MergeNodes(node, leaves[i], initial, images, camera, spec, i, &record);
    last = record.refined;
    result.merges.push_back(record);
  }
  result.root = std::move(node);
  result.trajectory = NodeTrajectory(result.root);
  return result;
}

}  // namespace fragsplat
