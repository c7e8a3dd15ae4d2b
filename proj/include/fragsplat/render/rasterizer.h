#pragma once

#include <cstdint>
#include <vector>

#include "fragsplat/core/camera.h"
#include "fragsplat/core/image.h"
#include "fragsplat/splat/gaussian_set.h"

namespace fragsplat {

constexpr double kMaxAlpha = 0.999;
constexpr double kFootprintSigmas = 3.0;

struct RenderOutput {
  Image color;
  std::vector<double> depth;       // alpha-weighted expected depth, 0 if uncovered
  std::vector<double> confidence;  // accumulated opacity
};

// One footprint sample; its pixel follows from the footprint walk.
struct FootprintSample {
  double alpha = 0.0;          // after the 0.999 cap
  double transmittance = 0.0;  // in front of the splat
};

// Everything the backward pass needs from a forward pass. The image is cut
// into fixed bands of rows; each band walks the splats front to back, which
// is also the per-pixel compositing order, and records every footprint
// sample in walk order.
struct ForwardState {
  std::uint64_t signature = 0;
  int width = 0;
  int height = 0;
  std::vector<int> order;            // visible Gaussians, front to back
  std::vector<Vec3> camera_points;   // per visible slot
  std::vector<Vec2> screen;          // projected centers
  std::vector<double> radius;        // screen-space standard deviation
  std::vector<std::vector<FootprintSample>> band_samples;
  // band_offsets[b][s]..band_offsets[b][s + 1]: samples of slot s in band b.
  std::vector<std::vector<std::size_t>> band_offsets;

  std::size_t SampleCount() const;
};

constexpr int kBandRows = 16;

struct RenderGradients {
  std::vector<Vec3> center;
  std::vector<Vec3> color;
  std::vector<double> opacity;
  std::vector<double> scale;
  Vec6 pose = Vec6::Zero();  // (rho, omega) for the left perturbation
};

// Identifies (set, pose, camera) so a stale state is detected.
std::uint64_t RenderSignature(const GaussianSet& set, const Pose& pose,
                              const CameraIntrinsics& camera);

// Isotropic splats, screen radius scale·fx/z, alpha = opacity·exp(-d²/2r²)
// capped at 0.999, footprint cut at 3r, front-to-back compositing ordered by
// (depth, source, position in the set).
RenderOutput Render(const GaussianSet& set, const Pose& pose,
                    const CameraIntrinsics& camera, ForwardState* state = nullptr);

// Gradients of Σ color_grad · color. Throws StaleForwardState if the state
// was produced for different inputs.
RenderGradients RenderBackward(const GaussianSet& set, const Pose& pose,
                               const CameraIntrinsics& camera,
                               const ForwardState& state, const Image& color_grad);

// Serial brute-force versions: every pixel tests every Gaussian.
RenderOutput RenderReference(const GaussianSet& set, const Pose& pose,
                             const CameraIntrinsics& camera);
RenderGradients RenderBackwardReference(const GaussianSet& set, const Pose& pose,
                                        const CameraIntrinsics& camera,
                                        const Image& color_grad);

}  // namespace fragsplat
