#include "fragsplat/optim/splat_optimizer.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "fragsplat/core/error.h"
#include "fragsplat/render/photometric_loss.h"
#include "fragsplat/render/rasterizer.h"

namespace fragsplat {
namespace {

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kEpsilon = 1e-15;
constexpr double kMaxLogit = 30.0;

// Dense Adam over a flat parameter block.
class Adam {
 public:
  Adam(std::size_t size, double step) : step_(step), m_(size, 0.0), v_(size, 0.0) {}

  // Returns the update for the gradient of this step.
  void Step(const std::vector<double>& grad, std::vector<double>* delta) {
    ++t_;
    const double c1 = 1.0 - std::pow(kBeta1, t_);
    const double c2 = 1.0 - std::pow(kBeta2, t_);
    delta->resize(grad.size());
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < grad.size(); ++i) {
      m_[i] = kBeta1 * m_[i] + (1.0 - kBeta1) * grad[i];
      v_[i] = kBeta2 * v_[i] + (1.0 - kBeta2) * grad[i] * grad[i];
      (*delta)[i] = -step_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + kEpsilon);
    }
  }

 private:
  double step_;
  int t_ = 0;
  std::vector<double> m_;
  std::vector<double> v_;
};

double Logit(double p) {
  return std::clamp(std::log(p / (1.0 - p)), -kMaxLogit, kMaxLogit);
}

double Sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

void OptimSpec::FreezeGaussians() {
  freeze_centers = freeze_colors = freeze_opacities = freeze_scales = true;
}

bool OptimSpec::GaussiansFrozen() const {
  return freeze_centers && freeze_colors && freeze_opacities && freeze_scales;
}

void OptimSpec::Validate() const {
  if (iterations < 0) Throw(ErrorCode::kInvalidArgument, "iterations must be >= 0");
  for (double step : {center_step, color_step, opacity_step, scale_step, pose_step}) {
    if (!(step > 0.0)) Throw(ErrorCode::kInvalidArgument, "optimizer steps must be > 0");
  }
}

OptimizeResult JointOptimize(const GaussianSet& set,
                             const std::vector<TrainingView>& views,
                             const CameraIntrinsics& camera, const OptimSpec& spec) {
  spec.Validate();
  if (views.empty()) Throw(ErrorCode::kNoFrames, "joint optimization needs a frame");
  for (const TrainingView& view : views) {
    if (!view.image) Throw(ErrorCode::kNoFrames, "view without an image");
  }
  OptimizeResult result;
  result.set = set;
  for (const TrainingView& view : views) result.poses.push_back(view.pose);
  if (spec.iterations == 0) return result;

  const std::size_t n = set.size();
  std::vector<Gaussian>& gs = result.set.gaussians;
  const double extent = std::max(CenterExtent(set), 1e-6);
  Adam centers(3 * n, spec.center_step * extent);
  Adam colors(3 * n, spec.color_step);
  Adam opacities(n, spec.opacity_step);
  Adam scales(n, spec.scale_step);
  std::vector<double> logits(n), log_scales(n);
  for (std::size_t i = 0; i < n; ++i) {
    logits[i] = Logit(gs[i].opacity);
    log_scales[i] = std::log(gs[i].scale);
  }
  struct PoseAdam {
    Eigen::Matrix<double, 6, 1> m = Eigen::Matrix<double, 6, 1>::Zero();
    Eigen::Matrix<double, 6, 1> v = Eigen::Matrix<double, 6, 1>::Zero();
    int t = 0;
  };
  std::vector<PoseAdam> pose_state(views.size());

  std::mt19937_64 rng(spec.seed);
  std::uniform_int_distribution<std::size_t> pick(0, views.size() - 1);
  std::vector<double> grad, delta;
  ForwardState state;
  for (int it = 0; it < spec.iterations; ++it) {
    const std::size_t k = pick(rng);
    const Pose& pose = result.poses[k];
    const RenderOutput render = Render(result.set, pose, camera, &state);
    const PhotometricLoss loss = ComputePhotometricLoss(render.color, *views[k].image);
    result.losses.push_back(loss.value);
    const RenderGradients g = RenderBackward(result.set, pose, camera, state, loss.gradient);

    if (!spec.freeze_centers) {
      grad.resize(3 * n);
      for (std::size_t i = 0; i < n; ++i) {
        for (int c = 0; c < 3; ++c) grad[3 * i + c] = g.center[i][c];
      }
      centers.Step(grad, &delta);
      for (std::size_t i = 0; i < n; ++i) {
        for (int c = 0; c < 3; ++c) gs[i].center[c] += delta[3 * i + c];
      }
    }
    if (!spec.freeze_colors) {
      grad.resize(3 * n);
      for (std::size_t i = 0; i < n; ++i) {
        for (int c = 0; c < 3; ++c) grad[3 * i + c] = g.color[i][c];
      }
      colors.Step(grad, &delta);
      for (std::size_t i = 0; i < n; ++i) {
        for (int c = 0; c < 3; ++c) {
          gs[i].color[c] = std::clamp(gs[i].color[c] + delta[3 * i + c], 0.0, 1.0);
        }
      }
    }
    if (!spec.freeze_opacities) {
      // d/dlogit = d/dopacity · o(1 − o)
      grad.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        grad[i] = g.opacity[i] * gs[i].opacity * (1.0 - gs[i].opacity);
      }
      opacities.Step(grad, &delta);
      for (std::size_t i = 0; i < n; ++i) {
        if (delta[i] == 0.0) continue;
        logits[i] = std::clamp(logits[i] + delta[i], -kMaxLogit, kMaxLogit);
        gs[i].opacity = Sigmoid(logits[i]);
      }
    }
    if (!spec.freeze_scales) {
      grad.resize(n);
      for (std::size_t i = 0; i < n; ++i) grad[i] = g.scale[i] * gs[i].scale;
      scales.Step(grad, &delta);
      for (std::size_t i = 0; i < n; ++i) {
        if (delta[i] == 0.0) continue;
        log_scales[i] += delta[i];
        gs[i].scale = std::exp(log_scales[i]);
      }
    }
    if (!spec.freeze_poses && !spec.frozen_pose_frames.count(views[k].frame)) {
      PoseAdam& a = pose_state[k];
      ++a.t;
      a.m = kBeta1 * a.m + (1.0 - kBeta1) * g.pose;
      a.v = kBeta2 * a.v + (1.0 - kBeta2) * g.pose.cwiseProduct(g.pose);
      const double c1 = 1.0 - std::pow(kBeta1, a.t);
      const double c2 = 1.0 - std::pow(kBeta2, a.t);
      const Vec6 step = -spec.pose_step * (a.m / c1).array() /
                        ((a.v / c2).array().sqrt() + kEpsilon);
      result.poses[k] = result.poses[k].Retract(step);
    }
  }
  return result;
}

Pose OptimizePoseOnly(const GaussianSet& frozen_set, const Image& frame,
                      const Pose& initial, const CameraIntrinsics& camera,
                      const OptimSpec& spec) {
  if (!spec.GaussiansFrozen()) {
    Throw(ErrorCode::kInvalidArgument, "pose-only refinement needs frozen Gaussians");
  }
  if (frame.PixelCount() == 0) Throw(ErrorCode::kNoFrames, "empty frame");
  OptimSpec pose_spec = spec;
  pose_spec.freeze_poses = false;
  pose_spec.frozen_pose_frames.clear();
  const std::vector<TrainingView> views = {{0, &frame, initial}};
  return JointOptimize(frozen_set, views, camera, pose_spec).poses[0];
}

double MeanPhotometricLoss(const GaussianSet& set,
                           const std::vector<TrainingView>& views,
                           const CameraIntrinsics& camera) {
  if (views.empty()) Throw(ErrorCode::kNoFrames, "no views to score");
  double sum = 0.0;
  for (const TrainingView& view : views) {
    const RenderOutput render = Render(set, view.pose, camera);
    sum += ComputePhotometricLoss(render.color, *view.image, false).value;
  }
  return sum / views.size();
}

}  // namespace fragsplat
