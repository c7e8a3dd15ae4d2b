#include "fragsplat/registration/keyframe_alignment.h"

#include <algorithm>
#include <cmath>
#include <queue>

#include "fragsplat/core/error.h"
#include "fragsplat/core/geometry.h"

namespace fragsplat {
namespace {

using Vec7 = Eigen::Matrix<double, 7, 1>;

constexpr double kMinResidual = 1e-12;
constexpr int kMaxHalvings = 20;
constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEpsilon = 1e-8;

// One view of one edge, as seen from the node that owns the view.
struct Term {
  int edge = 0;
  const float* points = nullptr;
  const float* confidence = nullptr;
};

const PairwisePrior& EdgePair(const KeyframeGraph& graph,
                              const PriorBundle& bundle, int edge) {
  const auto [i, j] = graph.edges[edge];
  return bundle.Pair(graph.keyframes[i], graph.keyframes[j]);
}

std::vector<std::vector<Term>> NodeTerms(const KeyframeGraph& graph,
                                         const PriorBundle& bundle) {
  std::vector<std::vector<Term>> terms(graph.node_count());
  for (int e = 0; e < static_cast<int>(graph.edges.size()); ++e) {
    const PairwisePrior& pair = EdgePair(graph, bundle, e);
    const auto [i, j] = graph.edges[e];
    terms[i].push_back({e, pair.pointmap_a.data(), pair.confidence_a.data()});
    terms[j].push_back({e, pair.pointmap_b.data(), pair.confidence_b.data()});
  }
  return terms;
}

Vec3 LoadPoint(const float* points, std::size_t pixel) {
  return Vec3(points[3 * pixel], points[3 * pixel + 1], points[3 * pixel + 2]);
}

std::vector<Vec3> ViewPoints(const PairwisePrior& pair, bool view_a) {
  std::vector<Vec3> out(pair.PixelCount());
  for (std::size_t p = 0; p < out.size(); ++p) {
    out[p] = view_a ? pair.PointA(p) : pair.PointB(p);
  }
  return out;
}

std::vector<double> ViewConfidence(const PairwisePrior& pair, bool view_a) {
  const std::vector<float>& c = view_a ? pair.confidence_a : pair.confidence_b;
  return std::vector<double>(c.begin(), c.end());
}

double Evaluate(const KeyframeGraph& graph, const PriorBundle& bundle,
                const AlignmentState& state, AlignmentGradient* gradient) {
  const int m = graph.node_count();
  const int edge_count = static_cast<int>(graph.edges.size());
  if (static_cast<int>(state.world_points.size()) != m ||
      static_cast<int>(state.edge_transforms.size()) != edge_count) {
    Throw(ErrorCode::kDimensionMismatch, "alignment state does not match the graph");
  }
  if (m == 0) return 0.0;
  const std::size_t pixels = state.world_points[0].size();
  const std::vector<std::vector<Term>> terms = NodeTerms(graph, bundle);
  std::vector<Mat3> rotation(edge_count);
  for (int e = 0; e < edge_count; ++e) {
    rotation[e] = state.edge_transforms[e].scale *
                  state.edge_transforms[e].pose.RotationMatrix();
  }

  const std::size_t total = pixels * m;
  const std::size_t blocks = (total + kReductionBlock - 1) / kReductionBlock;
  std::vector<double> block_objective(blocks, 0.0);
  std::vector<Vec7> block_edges;
  if (gradient) {
    block_edges.assign(blocks * edge_count, Vec7::Zero());
    gradient->world_points.assign(m, std::vector<Vec3>(pixels, Vec3::Zero()));
  }

#pragma omp parallel for schedule(static)
  for (std::size_t b = 0; b < blocks; ++b) {
    const std::size_t begin = b * kReductionBlock;
    const std::size_t end = std::min(total, begin + kReductionBlock);
    double sum = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      const int v = static_cast<int>(i / pixels);
      const std::size_t p = i % pixels;
      const Vec3& world = state.world_points[v][p];
      for (const Term& term : terms[v]) {
        const double o = term.confidence[p];
        if (o == 0.0) continue;
        const Vec3 y = rotation[term.edge] * LoadPoint(term.points, p);
        const Vec3 r = world - y - state.edge_transforms[term.edge].pose.translation();
        const double norm = r.norm();
        sum += o * norm;
        if (!gradient || norm < kMinResidual) continue;
        const Vec3 u = (o / norm) * r;
        gradient->world_points[v][p] += u;
        Vec7& g = block_edges[b * edge_count + term.edge];
        g.head<3>() += u.cross(y);
        g.segment<3>(3) -= u;
        g[6] -= u.dot(y);
      }
    }
    block_objective[b] = sum;
  }

  double objective = 0.0;
  for (double v : block_objective) objective += v;
  if (gradient) {
    gradient->edges.assign(edge_count, Vec7::Zero());
    for (std::size_t b = 0; b < blocks; ++b) {
      for (int e = 0; e < edge_count; ++e) {
        gradient->edges[e] += block_edges[b * edge_count + e];
      }
    }
  }
  return objective;
}

void CheckConnected(const KeyframeGraph& graph) {
  const int m = graph.node_count();
  std::vector<std::vector<int>> adjacency(m);
  for (const auto& [i, j] : graph.edges) {
    if (i < 0 || j < 0 || i >= m || j >= m || i == j) {
      Throw(ErrorCode::kInvalidArgument, "edge references an unknown node");
    }
    adjacency[i].push_back(j);
    adjacency[j].push_back(i);
  }
  std::vector<bool> seen(m, false);
  std::queue<int> queue;
  seen[0] = true;
  queue.push(0);
  while (!queue.empty()) {
    const int v = queue.front();
    queue.pop();
    for (int w : adjacency[v]) {
      if (!seen[w]) {
        seen[w] = true;
        queue.push(w);
      }
    }
  }
  for (int v = 0; v < m; ++v) {
    if (!seen[v]) {
      Throw(ErrorCode::kDisconnectedGraph,
            "keyframe " + std::to_string(graph.keyframes[v]) +
                " is unreachable from the first keyframe");
    }
  }
}

double MeanConfidence(const PairwisePrior& pair) {
  double sum = 0.0;
  for (float c : pair.confidence_a) sum += c;
  for (float c : pair.confidence_b) sum += c;
  return sum / (2.0 * pair.PixelCount());
}

AlignmentState Apply(const AlignmentState& state,
                     const std::vector<std::vector<Vec3>>& point_step,
                     const std::vector<Vec7>& edge_step, double alpha) {
  AlignmentState out = state;
  for (std::size_t v = 0; v < out.world_points.size(); ++v) {
    for (std::size_t p = 0; p < out.world_points[v].size(); ++p) {
      out.world_points[v][p] += alpha * point_step[v][p];
    }
  }
  for (std::size_t e = 1; e < out.edge_transforms.size(); ++e) {
    SimTransform& t = out.edge_transforms[e];
    const Vec7 d = alpha * edge_step[e];
    t.pose = Pose(QuaternionFromAngleAxis(d.head<3>()) * t.pose.rotation(),
                  t.pose.translation() + d.segment<3>(3));
    t.scale *= std::exp(d[6]);
  }
  return out;
}

}  // namespace

int KeyframeAlignment::NodeOf(int keyframe) const {
  const auto it = std::find(graph.keyframes.begin(), graph.keyframes.end(), keyframe);
  if (it == graph.keyframes.end()) {
    Throw(ErrorCode::kFrameOutOfRange,
          "frame " + std::to_string(keyframe) + " is not a keyframe");
  }
  return static_cast<int>(it - graph.keyframes.begin());
}

std::vector<Vec3> KeyframeAlignment::LocalPointmap(int node) const {
  const Pose& pose = keyframe_poses.at(node);
  std::vector<Vec3> out = state.world_points.at(node);
  for (Vec3& x : out) x = pose * x;
  return out;
}

double AlignmentObjective(const KeyframeGraph& graph, const PriorBundle& bundle,
                          const AlignmentState& state) {
  return Evaluate(graph, bundle, state, nullptr);
}

double AlignmentObjectiveGradient(const KeyframeGraph& graph,
                                  const PriorBundle& bundle,
                                  const AlignmentState& state,
                                  AlignmentGradient* gradient) {
  return Evaluate(graph, bundle, state, gradient);
}

double AlignmentObjectiveReference(const KeyframeGraph& graph,
                                   const PriorBundle& bundle,
                                   const AlignmentState& state) {
  double objective = 0.0;
  for (std::size_t e = 0; e < graph.edges.size(); ++e) {
    const PairwisePrior& pair = EdgePair(graph, bundle, static_cast<int>(e));
    const SimTransform& t = state.edge_transforms[e];
    for (int view = 0; view < 2; ++view) {
      const int node = view == 0 ? graph.edges[e].first : graph.edges[e].second;
      for (std::size_t p = 0; p < pair.PixelCount(); ++p) {
        const double o = view == 0 ? pair.confidence_a[p] : pair.confidence_b[p];
        const Vec3 x = view == 0 ? pair.PointA(p) : pair.PointB(p);
        objective += o * (state.world_points[node][p] - t.Apply(x)).norm();
      }
    }
  }
  return objective;
}

AlignmentState InitializeAlignment(const KeyframeGraph& graph,
                                   const PriorBundle& bundle) {
  const int m = graph.node_count();
  const int edge_count = static_cast<int>(graph.edges.size());
  AlignmentState state;
  state.world_points.resize(m);
  state.edge_transforms.assign(edge_count, SimTransform::Identity());
  if (edge_count == 0) return state;

  std::vector<bool> known(m, false);
  std::vector<bool> fitted(edge_count, false);
  {
    const auto [i, j] = graph.edges[0];
    if (i != 0) {
      Throw(ErrorCode::kInvalidArgument, "the gauge edge must start at the first keyframe");
    }
    const PairwisePrior& pair = EdgePair(graph, bundle, 0);
    state.world_points[i] = ViewPoints(pair, true);
    state.world_points[j] = ViewPoints(pair, false);
    known[i] = known[j] = true;
    fitted[0] = true;
  }
  std::vector<double> edge_confidence(edge_count);
  for (int e = 0; e < edge_count; ++e) {
    edge_confidence[e] = MeanConfidence(EdgePair(graph, bundle, e));
  }

  // Grow the tree through the most confident edge that reaches a new node.
  while (true) {
    int best = -1;
    for (int e = 0; e < edge_count; ++e) {
      const auto [i, j] = graph.edges[e];
      if (fitted[e] || known[i] == known[j]) continue;
      if (best < 0 || edge_confidence[e] > edge_confidence[best]) best = e;
    }
    if (best < 0) break;
    const PairwisePrior& pair = EdgePair(graph, bundle, best);
    const auto [i, j] = graph.edges[best];
    const bool from_a = known[i];
    const int source = from_a ? i : j;
    const int target = from_a ? j : i;
    const std::vector<Vec3> src = ViewPoints(pair, from_a);
    const std::vector<double> weights = ViewConfidence(pair, from_a);
    const SimTransform t = EstimateSimilarity(src, state.world_points[source], weights);
    std::vector<Vec3> chained = ViewPoints(pair, !from_a);
    for (Vec3& x : chained) x = t.Apply(x);
    state.world_points[target] = std::move(chained);
    state.edge_transforms[best] = t;
    known[target] = true;
    fitted[best] = true;
  }

  for (int e = 0; e < edge_count; ++e) {
    if (fitted[e]) continue;
    const PairwisePrior& pair = EdgePair(graph, bundle, e);
    const auto [i, j] = graph.edges[e];
    std::vector<Vec3> src = ViewPoints(pair, true);
    std::vector<Vec3> b = ViewPoints(pair, false);
    src.insert(src.end(), b.begin(), b.end());
    std::vector<Vec3> dst = state.world_points[i];
    dst.insert(dst.end(), state.world_points[j].begin(), state.world_points[j].end());
    std::vector<double> weights = ViewConfidence(pair, true);
    const std::vector<double> wb = ViewConfidence(pair, false);
    weights.insert(weights.end(), wb.begin(), wb.end());
    state.edge_transforms[e] = EstimateSimilarity(src, dst, weights);
  }
  return state;
}

KeyframeAlignment GlobalKeyframeAlignment(const KeyframeGraph& graph,
                                          const PriorBundle& bundle,
                                          const AlignmentOptions& options) {
  const int m = graph.node_count();
  if (m < 1) Throw(ErrorCode::kInvalidArgument, "keyframe graph is empty");
  if (options.iterations < 0 || !(options.step > 0.0)) {
    Throw(ErrorCode::kInvalidArgument, "iterations must be >= 0 and step > 0");
  }
  for (std::size_t e = 0; e < graph.edges.size(); ++e) {
    EdgePair(graph, bundle, static_cast<int>(e));  // throws MissingPair
  }
  CheckConnected(graph);

  KeyframeAlignment result;
  result.graph = graph;
  result.width = bundle.intrinsics().width;
  result.height = bundle.intrinsics().height;

  if (graph.edges.empty()) {
    // A lone keyframe: take its pointmap from any pair it anchors.
    const int keyframe = graph.keyframes[0];
    const PairwisePrior* source = nullptr;
    for (const auto& [key, pair] : bundle.pairs()) {
      if (key.first == keyframe) {
        source = &pair;
        break;
      }
    }
    if (!source) {
      Throw(ErrorCode::kMissingPair,
            "no pair anchored at keyframe " + std::to_string(keyframe));
    }
    result.state.world_points.push_back(ViewPoints(*source, true));
    result.keyframe_poses.push_back(Pose::Identity());
    result.objective_history.push_back(0.0);
    return result;
  }

  AlignmentState state = InitializeAlignment(graph, bundle);
  const int edge_count = static_cast<int>(graph.edges.size());
  const std::size_t pixels = state.world_points[0].size();

  std::vector<std::vector<Vec3>> m1(m, std::vector<Vec3>(pixels, Vec3::Zero()));
  std::vector<std::vector<Vec3>> m2 = m1;
  std::vector<Vec7> e1(edge_count, Vec7::Zero());
  std::vector<Vec7> e2 = e1;
  std::vector<std::vector<Vec3>> point_step = m1;
  std::vector<Vec7> edge_step = e1;

  AlignmentGradient gradient;
  double current = AlignmentObjective(graph, bundle, state);
  result.objective_history.push_back(current);
  double alpha_hint = 1.0;
  for (int it = 1; it <= options.iterations; ++it) {
    AlignmentObjectiveGradient(graph, bundle, state, &gradient);
    const double c1 = 1.0 - std::pow(kAdamBeta1, it);
    const double c2 = 1.0 - std::pow(kAdamBeta2, it);
    for (int v = 0; v < m; ++v) {
      for (std::size_t p = 0; p < pixels; ++p) {
        const Vec3& g = gradient.world_points[v][p];
        m1[v][p] = kAdamBeta1 * m1[v][p] + (1.0 - kAdamBeta1) * g;
        m2[v][p] = kAdamBeta2 * m2[v][p] + (1.0 - kAdamBeta2) * g.cwiseProduct(g);
        point_step[v][p] = -options.step * (m1[v][p] / c1).array() /
                           ((m2[v][p] / c2).array().sqrt() + kAdamEpsilon);
      }
    }
    for (int e = 1; e < edge_count; ++e) {
      const Vec7& g = gradient.edges[e];
      e1[e] = kAdamBeta1 * e1[e] + (1.0 - kAdamBeta1) * g;
      e2[e] = kAdamBeta2 * e2[e] + (1.0 - kAdamBeta2) * g.cwiseProduct(g);
      edge_step[e] = -options.step * (e1[e] / c1).array() /
                     ((e2[e] / c2).array().sqrt() + kAdamEpsilon);
    }
    // Backtrack until the objective does not increase; a rejected step
    // leaves the state where it was.
    double alpha = std::min(1.0, 2.0 * alpha_hint);
    for (int attempt = 0; attempt < kMaxHalvings; ++attempt, alpha *= 0.5) {
      AlignmentState candidate = Apply(state, point_step, edge_step, alpha);
      const double value = AlignmentObjective(graph, bundle, candidate);
      if (value <= current) {
        state = std::move(candidate);
        current = value;
        break;
      }
    }
    alpha_hint = alpha;
    result.objective_history.push_back(current);
  }
  result.state = std::move(state);

  // Keyframe 1 defines the world frame; the others are located by PnP on
  // their aligned pointmaps.
  const CameraIntrinsics& camera = bundle.intrinsics();
  const int stride = std::max(1, options.pose_pixel_stride);
  result.keyframe_poses.assign(m, Pose::Identity());
  for (int v = 1; v < m; ++v) {
    std::vector<Vec3> points;
    std::vector<Vec2> pixels2d;
    for (int y = 0; y < camera.height; y += stride) {
      for (int x = 0; x < camera.width; x += stride) {
        points.push_back(result.state.world_points[v][y * camera.width + x]);
        pixels2d.emplace_back(x, y);
      }
    }
    RansacSpec spec = options.ransac;
    spec.seed += static_cast<std::uint64_t>(v);
    result.keyframe_poses[v] = EstimatePoseRansac(points, pixels2d, camera, spec).pose;
  }
  for (int v = 0; v + 1 < m; ++v) {
    result.adjacent_transforms.push_back(
        Compose(result.keyframe_poses[v + 1], result.keyframe_poses[v].Inverse()));
  }
  return result;
}

std::vector<SimTransform> PairwiseAdjacentTransforms(const KeyframeAlignment& alignment,
                                                     const PriorBundle& bundle) {
  const KeyframeGraph& graph = alignment.graph;
  std::vector<SimTransform> out;
  for (int v = 0; v + 1 < graph.node_count(); ++v) {
    const PairwisePrior& pair = bundle.Pair(graph.keyframes[v], graph.keyframes[v + 1]);
    // pair frame -> keyframe v, and keyframe v+1 -> pair frame.
    const std::vector<Vec3> local_a = alignment.LocalPointmap(v);
    const std::vector<Vec3> local_b = alignment.LocalPointmap(v + 1);
    const SimTransform to_a = EstimateSimilarity(ViewPoints(pair, true), local_a,
                                                 ViewConfidence(pair, true));
    const SimTransform from_b = EstimateSimilarity(local_b, ViewPoints(pair, false),
                                                   ViewConfidence(pair, false));
    out.push_back(Compose(to_a, from_b).Inverse());
  }
  return out;
}

}  // namespace fragsplat
