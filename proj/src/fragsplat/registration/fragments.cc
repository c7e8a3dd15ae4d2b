#include "fragsplat/registration/fragments.h"

#include <algorithm>

#include "fragsplat/core/error.h"

namespace fragsplat {

std::vector<Fragment> Partition(int frame_count, int fragment_size) {
  if (frame_count < 2) {
    Throw(ErrorCode::kTooFewFrames, "need at least 2 frames, got " +
                                        std::to_string(frame_count));
  }
  if (fragment_size < 2) {
    Throw(ErrorCode::kInvalidArgument, "fragment size must be >= 2");
  }
  std::vector<Fragment> fragments;
  for (int start = 1; start <= frame_count; start += fragment_size) {
    const int end = std::min(frame_count, start + fragment_size - 1);
    if (end == start && !fragments.empty()) {
      fragments.back().frame_indices.push_back(start);
      break;
    }
    Fragment fragment;
    fragment.index = static_cast<int>(fragments.size()) + 1;
    for (int f = start; f <= end; ++f) fragment.frame_indices.push_back(f);
    fragments.push_back(std::move(fragment));
  }
  return fragments;
}

KeyframeGraph BuildKeyframeGraph(int keyframe_count) {
  if (keyframe_count < 1) {
    Throw(ErrorCode::kInvalidArgument, "keyframe graph needs at least one node");
  }
  KeyframeGraph graph;
  for (int i = 0; i < keyframe_count; ++i) graph.keyframes.push_back(i + 1);
  for (int distance = 1; distance <= 2; ++distance) {
    for (int i = 0; i + distance < keyframe_count; ++i) {
      graph.edges.emplace_back(i, i + distance);
    }
  }
  return graph;
}

KeyframeGraph BuildKeyframeGraph(const std::vector<Fragment>& fragments) {
  KeyframeGraph graph = BuildKeyframeGraph(static_cast<int>(fragments.size()));
  for (std::size_t i = 0; i < fragments.size(); ++i) {
    graph.keyframes[i] = fragments[i].keyframe();
  }
  return graph;
}

std::vector<PairKey> EnumerateBundlePairs(int frame_count, int fragment_size) {
  const std::vector<Fragment> fragments = Partition(frame_count, fragment_size);
  std::vector<PairKey> pairs;
  for (const Fragment& fragment : fragments) {
    for (std::size_t i = 1; i < fragment.frame_indices.size(); ++i) {
      pairs.emplace_back(fragment.keyframe(), fragment.frame_indices[i]);
    }
  }
  const KeyframeGraph graph = BuildKeyframeGraph(fragments);
  for (const auto& [i, j] : graph.edges) {
    pairs.emplace_back(graph.keyframes[i], graph.keyframes[j]);
  }
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  return pairs;
}

}  // namespace fragsplat
