#pragma once

#include <utility>
#include <vector>

#include "fragsplat/prior/prior_bundle.h"

namespace fragsplat {

// A window of consecutive frames anchored at its first frame.
struct Fragment {
  int index = 0;                   // 1-based
  std::vector<int> frame_indices;  // contiguous, 1-based
  int keyframe() const { return frame_indices.front(); }
  int first_frame() const { return frame_indices.front(); }
  int last_frame() const { return frame_indices.back(); }
};

// Disjoint windows of `fragment_size` frames covering 1..frame_count. A
// trailing window of >= 2 frames is kept as a short fragment; a single
// trailing frame joins the previous fragment. Throws TooFewFrames when
// frame_count < 2 and InvalidArgument when fragment_size < 2.
std::vector<Fragment> Partition(int frame_count, int fragment_size);

// Keyframe alignment graph. Nodes are fragment ordinals 0..m-1; an edge
// (i, j), i < j, exists iff j - i <= 2, so every node has at most two
// neighbors on each side. Edges are listed by distance, then by i.
struct KeyframeGraph {
  std::vector<int> keyframes;  // frame index of each node
  std::vector<std::pair<int, int>> edges;

  int node_count() const { return static_cast<int>(keyframes.size()); }
};

KeyframeGraph BuildKeyframeGraph(int keyframe_count);
KeyframeGraph BuildKeyframeGraph(const std::vector<Fragment>& fragments);

// Every image pair the engine will request for (frame_count, fragment_size):
// (keyframe, f) for each non-key frame of every fragment, then the keyframe
// graph pairs. Sorted, unique.
std::vector<PairKey> EnumerateBundlePairs(int frame_count, int fragment_size);

}  // namespace fragsplat
