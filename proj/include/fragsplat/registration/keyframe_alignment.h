#pragma once

#include <vector>

#include "fragsplat/core/camera.h"
#include "fragsplat/prior/prior_bundle.h"
#include "fragsplat/registration/fragments.h"
#include "fragsplat/registration/pnp.h"

namespace fragsplat {

struct AlignmentOptions {
  int iterations = 200;
  double step = 0.01;
  // Keyframe poses are read off the aligned pointmaps by PnP on every
  // `pose_pixel_stride`-th pixel in both directions.
  int pose_pixel_stride = 4;
  RansacSpec ransac;
};

// Free variables of the confidence-weighted pointmap objective: one world
// pointmap per keyframe and one similarity per edge. Edge 0 is the gauge
// edge and stays at identity.
struct AlignmentState {
  std::vector<std::vector<Vec3>> world_points;  // [node][pixel]
  std::vector<SimTransform> edge_transforms;    // [edge]
};

struct AlignmentGradient {
  std::vector<std::vector<Vec3>> world_points;
  // Per edge: (omega, t, log sigma) for x -> sigma * exp(omega) R x + t.
  std::vector<Eigen::Matrix<double, 7, 1>> edges;
};

struct KeyframeAlignment {
  KeyframeGraph graph;
  int width = 0;
  int height = 0;
  AlignmentState state;
  std::vector<Pose> keyframe_poses;         // world -> keyframe camera
  std::vector<Pose> adjacent_transforms;    // keyframe i camera -> i+1 camera
  std::vector<double> objective_history;    // one value per iteration, plus the start

  // Node ordinal of a keyframe frame index; throws FrameOutOfRange.
  int NodeOf(int keyframe) const;
  // The keyframe's aligned pointmap in its own camera frame.
  std::vector<Vec3> LocalPointmap(int node) const;
};

// Σ_e Σ_{v∈e} Σ_p O(p) ‖P̃_v(p) − σ_e T_e P_{v,e}(p)‖. Both evaluators
// visit terms in a fixed order; the parallel one reduces fixed-size blocks.
double AlignmentObjective(const KeyframeGraph& graph, const PriorBundle& bundle,
                          const AlignmentState& state);
double AlignmentObjectiveReference(const KeyframeGraph& graph,
                                   const PriorBundle& bundle,
                                   const AlignmentState& state);

// Gradient of the objective (residuals shorter than 1e-12 contribute 0).
// Returns the objective value.
double AlignmentObjectiveGradient(const KeyframeGraph& graph,
                                  const PriorBundle& bundle,
                                  const AlignmentState& state,
                                  AlignmentGradient* gradient);

// Closed-form start: pointmaps chained from keyframe 1 along the most
// confident spanning edges, then every edge fitted to the chained maps.
AlignmentState InitializeAlignment(const KeyframeGraph& graph,
                                   const PriorBundle& bundle);

// Throws MissingPair when an edge has no prior and DisconnectedGraph when
// some keyframe cannot be reached from keyframe 1.
KeyframeAlignment GlobalKeyframeAlignment(const KeyframeGraph& graph,
                                          const PriorBundle& bundle,
                                          const AlignmentOptions& options);

// Keyframe v camera -> keyframe v+1 camera measured from the (v, v+1) pair
// alone, in the scale of the aligned pointmaps. Incremental pipelines chain
// these; the sequential merge baseline starts from them.
std::vector<SimTransform> PairwiseAdjacentTransforms(const KeyframeAlignment& alignment,
                                                     const PriorBundle& bundle);

}  // namespace fragsplat
