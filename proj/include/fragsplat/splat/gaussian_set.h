#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "fragsplat/core/camera.h"
#include "fragsplat/core/image.h"
#include "fragsplat/registration/fragment_registration.h"

namespace fragsplat {

struct GaussianSource {
  int fragment = 0;
  int frame = 0;
  int pixel = 0;  // row-major index in the source frame
};

// Isotropic splat. `scale` is the world-space standard deviation.
struct Gaussian {
  Vec3 center = Vec3::Zero();
  Vec3 color = Vec3::Zero();
  double opacity = 0.1;
  double scale = 1.0;
  GaussianSource source;
};

struct GaussianSet {
  std::vector<Gaussian> gaussians;
  int first_frame = 0;
  int last_frame = 0;

  std::size_t size() const { return gaussians.size(); }
  bool empty() const { return gaussians.empty(); }
};

constexpr double kInitialOpacity = 0.1;

// One Gaussian per pixel of every fragment frame not listed in `skip`,
// in fragment-local (keyframe camera) coordinates. Each center sits on its
// pixel's viewing ray at the registered point's depth; scale = depth / fx.
// Throws MissingPointmap when a frame has no registered points and
// FrameOutOfRange when an image is missing.
GaussianSet InitFromFragment(const FragmentRegistration& registration,
                             std::span<const Frame> frames,
                             const CameraIntrinsics& camera,
                             const std::set<int>& skip = {});

// Centers mapped by T, scales multiplied by T.scale.
GaussianSet TransformSet(const GaussianSet& set, const SimTransform& transform);

GaussianSet Concat(const GaussianSet& a, const GaussianSet& b);

// Bounding-box diagonal of the centers; 0 for fewer than two Gaussians.
double CenterExtent(const GaussianSet& set);

// Bit-exact fingerprint of every double-precision attribute.
std::uint64_t Fingerprint(const GaussianSet& set);

// Binary "VLGS" file: version u32, count u32, 11 little-endian f32 per
// Gaussian (center, color, opacity, scale, fragment, frame, pixel).
constexpr std::uint32_t kGaussianFileVersion = 1;
std::string EncodeGaussians(const GaussianSet& set);
GaussianSet DecodeGaussians(const std::string& bytes);
void SaveGaussians(const std::filesystem::path& path, const GaussianSet& set);
GaussianSet LoadGaussians(const std::filesystem::path& path);

}  // namespace fragsplat
