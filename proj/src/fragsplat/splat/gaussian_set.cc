#include "fragsplat/splat/gaussian_set.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "fragsplat/core/binary_io.h"
#include "fragsplat/core/error.h"
#include "fragsplat/core/geometry.h"

namespace fragsplat {
namespace {

constexpr char kMagic[4] = {'V', 'L', 'G', 'S'};
constexpr std::size_t kHeaderBytes = 12;
constexpr std::size_t kRecordBytes = 11 * 4;

const Image& FindImage(std::span<const Frame> frames, int index) {
  for (const Frame& frame : frames) {
    if (frame.index == index) return frame.pixels;
  }
  Throw(ErrorCode::kFrameOutOfRange, "no image for frame " + std::to_string(index));
}

}  // namespace

GaussianSet InitFromFragment(const FragmentRegistration& registration,
                             std::span<const Frame> frames,
                             const CameraIntrinsics& camera,
                             const std::set<int>& skip) {
  const Fragment& fragment = registration.fragment;
  if (registration.points.size() != fragment.frame_indices.size() ||
      registration.poses.size() != fragment.frame_indices.size()) {
    Throw(ErrorCode::kMissingPointmap,
          "fragment " + std::to_string(fragment.index) + " is not fully registered");
  }
  GaussianSet set;
  set.first_frame = fragment.first_frame();
  set.last_frame = fragment.last_frame();
  const std::size_t pixels = static_cast<std::size_t>(camera.PixelCount());
  for (std::size_t slot = 0; slot < fragment.frame_indices.size(); ++slot) {
    const int frame = fragment.frame_indices[slot];
    if (skip.count(frame)) continue;
    const std::vector<Vec3>& points = registration.points[slot];
    if (points.size() != pixels) {
      Throw(ErrorCode::kMissingPointmap,
            "frame " + std::to_string(frame) + " has no dense pointmap");
    }
    const Image& image = FindImage(frames, frame);
    if (image.width() != camera.width || image.height() != camera.height) {
      Throw(ErrorCode::kDimensionMismatch, "frame size differs from the camera");
    }
    const Pose& pose = registration.poses[slot];
    const Pose inverse = pose.Inverse();
    for (std::size_t p = 0; p < pixels; ++p) {
      Gaussian g;
      const Vec3 local = pose * points[p];
      const double depth = local.z();
      if (depth > kMinProjectionDepth) {
        const Vec2 pixel(static_cast<double>(p % camera.width),
                         static_cast<double>(p / camera.width));
        g.center = inverse * Vec3((pixel.x() - camera.cx) / camera.fx * depth,
                                  (pixel.y() - camera.cy) / camera.fy * depth, depth);
        g.scale = depth / camera.fx;
      } else {
        g.center = points[p];
        g.scale = std::max(local.norm(), 1e-6) / camera.fx;
      }
      g.color = image.Pixel(p).cwiseMax(0.0).cwiseMin(1.0);
      g.opacity = kInitialOpacity;
      g.source = {fragment.index, frame, static_cast<int>(p)};
      set.gaussians.push_back(g);
    }
  }
  return set;
}

GaussianSet TransformSet(const GaussianSet& set, const SimTransform& transform) {
  GaussianSet out = set;
  for (Gaussian& g : out.gaussians) {
    g.center = transform.Apply(g.center);
    g.scale *= transform.scale;
  }
  return out;
}

GaussianSet Concat(const GaussianSet& a, const GaussianSet& b) {
  if (a.empty() && a.first_frame == 0) return b;
  GaussianSet out = a;
  out.gaussians.insert(out.gaussians.end(), b.gaussians.begin(), b.gaussians.end());
  if (b.first_frame != 0 || !b.empty()) {
    out.first_frame = std::min(a.first_frame, b.first_frame);
    out.last_frame = std::max(a.last_frame, b.last_frame);
  }
  return out;
}

double CenterExtent(const GaussianSet& set) {
  if (set.size() < 2) return 0.0;
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (const Gaussian& g : set.gaussians) {
    lo = lo.cwiseMin(g.center);
    hi = hi.cwiseMax(g.center);
  }
  return (hi - lo).norm();
}

std::uint64_t Fingerprint(const GaussianSet& set) {
  std::uint64_t h = HashBytes(&set.first_frame, sizeof(int));
  h = HashBytes(&set.last_frame, sizeof(int), h);
  for (const Gaussian& g : set.gaussians) {
    const double values[8] = {g.center.x(), g.center.y(), g.center.z(), g.color.x(),
                              g.color.y(),  g.color.z(),  g.opacity,    g.scale};
    h = HashBytes(values, sizeof(values), h);
    const int source[3] = {g.source.fragment, g.source.frame, g.source.pixel};
    h = HashBytes(source, sizeof(source), h);
  }
  return h;
}

std::string EncodeGaussians(const GaussianSet& set) {
  std::string out(kMagic, 4);
  PutU32(out, kGaussianFileVersion);
  PutU32(out, static_cast<std::uint32_t>(set.size()));
  out.reserve(kHeaderBytes + set.size() * kRecordBytes);
  for (const Gaussian& g : set.gaussians) {
    for (int i = 0; i < 3; ++i) PutF32(out, static_cast<float>(g.center[i]));
    for (int i = 0; i < 3; ++i) PutF32(out, static_cast<float>(g.color[i]));
    PutF32(out, static_cast<float>(g.opacity));
    PutF32(out, static_cast<float>(g.scale));
    PutF32(out, static_cast<float>(g.source.fragment));
    PutF32(out, static_cast<float>(g.source.frame));
    PutF32(out, static_cast<float>(g.source.pixel));
  }
  return out;
}

GaussianSet DecodeGaussians(const std::string& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    Throw(ErrorCode::kBadMagic, "not a Gaussian set file");
  }
  if (bytes.size() < kHeaderBytes) Throw(ErrorCode::kTruncatedFile, "short header");
  const std::uint32_t version = GetU32(bytes, 4);
  if (version != kGaussianFileVersion) {
    Throw(ErrorCode::kVersionMismatch,
          "Gaussian file version " + std::to_string(version));
  }
  const std::size_t count = GetU32(bytes, 8);
  const std::size_t expected = kHeaderBytes + count * kRecordBytes;
  if (bytes.size() < expected) Throw(ErrorCode::kTruncatedFile, "short Gaussian payload");
  if (bytes.size() > expected) Throw(ErrorCode::kDimensionMismatch, "trailing bytes");
  GaussianSet set;
  set.gaussians.resize(count);
  std::size_t offset = kHeaderBytes;
  auto next = [&]() {
    const float v = GetF32(bytes, offset);
    offset += 4;
    return static_cast<double>(v);
  };
  for (Gaussian& g : set.gaussians) {
    for (int i = 0; i < 3; ++i) g.center[i] = next();
    for (int i = 0; i < 3; ++i) g.color[i] = next();
    g.opacity = next();
    g.scale = next();
    g.source.fragment = static_cast<int>(next());
    g.source.frame = static_cast<int>(next());
    g.source.pixel = static_cast<int>(next());
  }
  if (!set.empty()) {
    set.first_frame = set.last_frame = set.gaussians[0].source.frame;
    for (const Gaussian& g : set.gaussians) {
      set.first_frame = std::min(set.first_frame, g.source.frame);
      set.last_frame = std::max(set.last_frame, g.source.frame);
    }
  }
  return set;
}

void SaveGaussians(const std::filesystem::path& path, const GaussianSet& set) {
  WriteFileBytes(path, EncodeGaussians(set));
}

GaussianSet LoadGaussians(const std::filesystem::path& path) {
  return DecodeGaussians(ReadFileBytes(path));
}

}  // namespace fragsplat
