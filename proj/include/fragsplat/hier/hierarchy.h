#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <vector>

#include "fragsplat/core/camera.h"
#include "fragsplat/core/image.h"
#include "fragsplat/core/trajectory.h"
#include "fragsplat/optim/splat_optimizer.h"
#include "fragsplat/splat/gaussian_set.h"

namespace fragsplat {

// Contiguous run of leaves [first, last] (0-based).
struct LeafRange {
  int first = 0;
  int last = 0;
  bool operator==(const LeafRange&) const = default;
};

struct MergeStep {
  int level = 0;  // 1-based
  LeafRange ref;
  LeafRange mov;
};

// Left-to-right pairing per level; an odd leftover moves up unmerged.
struct MergeTree {
  int leaf_count = 0;
  std::vector<std::vector<LeafRange>> levels;  // levels[0] are the leaves
  std::vector<MergeStep> merges;               // bottom-up order

  int level_count() const { return static_cast<int>(levels.size()) - 1; }
};

MergeTree BuildMergeTree(int leaf_count);

// A set plus the poses of every frame it covers, all in the coordinates of
// the node's anchor keyframe.
struct HierNode {
  LeafRange leaves;
  int anchor_frame = 0;
  GaussianSet set;
  std::map<int, Pose> poses;         // anchor coords -> frame camera
  std::vector<int> training_frames;  // frames whose images train the set
};

struct HierarchySpec {
  double beta = 0.9;
  int align_frames = 2;
  OptimSpec align;  // step / iteration settings of the transform refinement
  OptimSpec merge;  // joint optimization after every merge
};

struct MergeRecord {
  MergeStep step;
  std::size_t ref_count = 0;
  std::size_t mov_count = 0;
  std::size_t kept_count = 0;
  std::size_t merged_count = 0;
  std::uint64_t ref_hash_before = 0;
  std::uint64_t ref_hash_after_align = 0;
  SimTransform initial;
  SimTransform refined;
};

struct HierarchyResult {
  HierNode root;
  Trajectory trajectory;
  std::vector<MergeRecord> merges;
};

// Invoked after each level with the nodes alive at that level.
using LevelCallback = std::function<void(int level, const std::vector<HierNode>&)>;

using ImageLookup = std::map<int, const Image*>;
ImageLookup IndexFrames(std::span<const Frame> frames);

// Boolean mask (conf > beta AND depth > 0) of `ref` seen from `pose`.
std::vector<char> VisibilityMask(const GaussianSet& ref, const Pose& pose,
                                 const CameraIntrinsics& camera, double beta);

// Mov pose of a frame expressed in ref coordinates, given the ref -> mov
// similarity.
Pose PoseThroughTransform(const Pose& mov_pose, const SimTransform& ref_to_mov);

// Refines the ref -> mov similarity with the ref set frozen, on mov images
// observed from `mov_poses` (mov coordinates).
SimTransform AlignPair(const GaussianSet& ref, const SimTransform& initial,
                       const std::vector<const Image*>& images,
                       const std::vector<Pose>& mov_poses,
                       const CameraIntrinsics& camera, const OptimSpec& spec);

// Keeps exactly the mov Gaussians whose source pixel is unmasked in its
// source frame (frames without a mask keep everything), appended to ref.
GaussianSet MergePair(const GaussianSet& ref, const GaussianSet& mov_aligned,
                      const std::map<int, std::vector<char>>& masks);

// One full merge: align, transform, mask, prune, concatenate, optimize.
HierNode MergeNodes(const HierNode& ref, const HierNode& mov,
                    const SimTransform& initial, const ImageLookup& images,
                    const CameraIntrinsics& camera, const HierarchySpec& spec,
                    std::uint64_t seed, MergeRecord* record);

// Bottom-up over the merge tree. keyframe_poses[i] maps the world to leaf
// i's anchor camera and supplies every initial inter-node transform.
HierarchyResult RunHierarchy(std::vector<HierNode> leaves,
                             const std::vector<Pose>& keyframe_poses,
                             std::span<const Frame> frames,
                             const CameraIntrinsics& camera, const HierarchySpec& spec,
                             const LevelCallback& on_level = {});

// Baseline: leaves merged one at a time into a growing prefix. Leaf i is
// placed by chaining pairwise[i - 1] (leaf i-1 coords -> leaf i coords) onto
// the transform refined for leaf i-1, the way incremental pipelines do.
HierarchyResult RunSequential(std::vector<HierNode> leaves,
                              const std::vector<SimTransform>& pairwise,
                              std::span<const Frame> frames,
                              const CameraIntrinsics& camera, const HierarchySpec& spec);

}  // namespace fragsplat
