#include "fragsplat/render/rasterizer.h"

#include <algorithm>
#include <cstring>

#include "fragsplat/core/error.h"
#include "splat_math.h"

namespace fragsplat {
namespace {

using internal::Splat;

// Word-wise FNV variant; the per-byte version is too slow to run on every
// forward pass of a large set.
class WordHasher {
 public:
  void Add(double v) {
    std::uint64_t w;
    std::memcpy(&w, &v, sizeof(w));
    Mix(w);
  }
  void Add(int v) { Mix(static_cast<std::uint64_t>(static_cast<std::uint32_t>(v))); }
  std::uint64_t value() const { return h_; }

 private:
  void Mix(std::uint64_t w) {
    h_ ^= w;
    h_ *= 1099511628211ull;
    h_ ^= h_ >> 29;
  }
  std::uint64_t h_ = 1469598103934665603ull;
};

}  // namespace

std::size_t ForwardState::SampleCount() const {
  std::size_t n = 0;
  for (const auto& band : band_samples) n += band.size();
  return n;
}

std::uint64_t RenderSignature(const GaussianSet& set, const Pose& pose,
                              const CameraIntrinsics& camera) {
  WordHasher h;
  for (double v : {camera.fx, camera.fy, camera.cx, camera.cy}) h.Add(v);
  h.Add(camera.width);
  h.Add(camera.height);
  const auto& q = pose.rotation();
  for (double v : {q.w(), q.x(), q.y(), q.z()}) h.Add(v);
  for (int i = 0; i < 3; ++i) h.Add(pose.translation()[i]);
  h.Add(static_cast<int>(set.size()));
  for (const Gaussian& g : set.gaussians) {
    for (int i = 0; i < 3; ++i) h.Add(g.center[i]);
    for (int i = 0; i < 3; ++i) h.Add(g.color[i]);
    h.Add(g.opacity);
    h.Add(g.scale);
    h.Add(g.source.fragment);
    h.Add(g.source.frame);
    h.Add(g.source.pixel);
  }
  return h.value();
}

RenderOutput Render(const GaussianSet& set, const Pose& pose,
                    const CameraIntrinsics& camera, ForwardState* state_out) {
  const int width = camera.width;
  const int height = camera.height;
  const std::size_t pixels = static_cast<std::size_t>(width) * height;
  const Mat3 rotation = pose.RotationMatrix();
  const Vec3& translation = pose.translation();
  const int n = static_cast<int>(set.size());

  std::vector<Splat> splats(n);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    splats[i] = internal::ProjectSplat(set.gaussians[i], rotation, translation, camera);
  }

  ForwardState local;
  ForwardState& st = state_out ? *state_out : local;
  // Buffers keep their capacity across calls; the optimizer renders the same
  // set over and over.
  st.order.clear();
  st.signature = 0;
  st.width = width;
  st.height = height;
  if (state_out) st.signature = RenderSignature(set, pose, camera);
  for (int i = 0; i < n; ++i) {
    if (splats[i].visible) st.order.push_back(i);
  }
  std::sort(st.order.begin(), st.order.end(), [&](int a, int b) {
    return internal::DrawsBefore(set, splats[a], a, splats[b], b);
  });
  const int visible = static_cast<int>(st.order.size());
  st.camera_points.resize(visible);
  st.screen.resize(visible);
  st.radius.resize(visible);
  std::vector<internal::Footprint> boxes(visible);
  for (int s = 0; s < visible; ++s) {
    const Splat& sp = splats[st.order[s]];
    st.camera_points[s] = sp.camera_point;
    st.screen[s] = sp.screen;
    st.radius[s] = sp.radius;
    boxes[s] = internal::PixelBox(sp, camera);
  }

  RenderOutput out;
  out.color = Image(width, height);
  out.depth.assign(pixels, 0.0);
  out.confidence.assign(pixels, 0.0);
  double* color = out.color.data().data();
  std::vector<double> transmittance(pixels, 1.0);

  const int band_count = (height + kBandRows - 1) / kBandRows;
  const bool keep = state_out != nullptr;
  if (keep) {
    st.band_samples.resize(band_count);
    st.band_offsets.resize(band_count);
    for (auto& band : st.band_samples) band.clear();
  }
  // Bands own disjoint rows, so each composites its pixels without sharing.
#pragma omp parallel for schedule(dynamic, 1)
  for (int b = 0; b < band_count; ++b) {
    const int r0 = b * kBandRows;
    const int r1 = std::min(height, r0 + kBandRows);
    std::vector<FootprintSample>* entries = keep ? &st.band_samples[b] : nullptr;
    std::vector<std::size_t>* offsets = keep ? &st.band_offsets[b] : nullptr;
    if (keep) {
      offsets->assign(visible + 1, 0);
      // The disc covers about pi/4 of its box.
      std::size_t bound = 0;
      for (const internal::Footprint& box : boxes) {
        const int rows = std::min(box.y1, r1 - 1) - std::max(box.y0, r0) + 1;
        if (rows > 0) bound += static_cast<std::size_t>(rows) * (box.x1 - box.x0 + 1);
      }
      entries->reserve(bound * 4 / 5 + 64);
    }
    internal::AlphaSample sample;
    std::vector<double> column_falloff;
    for (int s = 0; s < visible; ++s) {
      if (keep) (*offsets)[s] = entries->size();
      const internal::Footprint& box = boxes[s];
      if (box.y1 < r0 || box.y0 >= r1) continue;
      const Splat& sp = splats[st.order[s]];
      const Gaussian& g = set.gaussians[st.order[s]];
      const double z = sp.camera_point.z();
      const double r2 = sp.radius * sp.radius;
      column_falloff.resize(box.x1 - box.x0 + 1);
      for (int x = box.x0; x <= box.x1; ++x) {
        column_falloff[x - box.x0] = internal::Falloff(x - sp.screen.x(), r2);
      }
      for (int y = std::max(box.y0, r0); y <= std::min(box.y1, r1 - 1); ++y) {
        const double dy = y - sp.screen.y();
        const double row_weight = g.opacity * internal::Falloff(dy, r2);
        for (int x = box.x0; x <= box.x1; ++x) {
          if (!internal::InFootprint(x - sp.screen.x(), dy, r2)) continue;
          internal::ClampAlpha(row_weight * column_falloff[x - box.x0], &sample);
          const int p = y * width + x;
          const double t = transmittance[p];
          const double w = sample.alpha * t;
          color[3 * p] += w * g.color.x();
          color[3 * p + 1] += w * g.color.y();
          color[3 * p + 2] += w * g.color.z();
          out.confidence[p] += w;
          out.depth[p] += w * z;
          transmittance[p] = t * (1.0 - sample.alpha);
          if (keep) entries->push_back({sample.alpha, t});
        }
      }
    }
    if (keep) (*offsets)[visible] = entries->size();
  }
  for (std::size_t p = 0; p < pixels; ++p) {
    if (out.confidence[p] > 0.0) out.depth[p] /= out.confidence[p];
  }
  return out;
}

RenderGradients RenderBackward(const GaussianSet& set, const Pose& pose,
                               const CameraIntrinsics& camera,
                               const ForwardState& st, const Image& color_grad) {
  if (st.signature != RenderSignature(set, pose, camera) || st.width != camera.width ||
      st.height != camera.height) {
    Throw(ErrorCode::kStaleForwardState, "forward state does not match the inputs");
  }
  if (color_grad.width() != camera.width || color_grad.height() != camera.height) {
    Throw(ErrorCode::kDimensionMismatch, "loss gradient size differs from the camera");
  }
  const std::size_t pixels = static_cast<std::size_t>(camera.width) * camera.height;
  const int visible = static_cast<int>(st.order.size());
  const int band_count = static_cast<int>(st.band_samples.size());
  const double* grad = color_grad.data().data();

  const int n = static_cast<int>(set.size());
  RenderGradients out;
  out.center.assign(n, Vec3::Zero());
  out.color.assign(n, Vec3::Zero());
  out.opacity.assign(n, 0.0);
  out.scale.assign(n, 0.0);
  std::vector<Vec3> camera_grad(visible, Vec3::Zero());
  const Mat3 rotation = pose.RotationMatrix();

  auto splat_of = [&](int s) {
    internal::Splat sp;
    sp.visible = true;
    sp.camera_point = st.camera_points[s];
    sp.screen = st.screen[s];
    sp.radius = st.radius[s];
    return sp;
  };

  // Back to front per pixel: dL/dalpha_i = G·(c_i T_i - S_i / (1 - alpha_i)),
  // S_i the color accumulated behind i. Each band yields partial sums for
  // the splats it touches.
  struct BandPartial {
    int slot;
    internal::SplatPartials partials;
  };
  std::vector<std::vector<BandPartial>> band_partials(band_count);
  std::vector<Vec3> behind(pixels, Vec3::Zero());
#pragma omp parallel for schedule(dynamic, 1)
  for (int b = 0; b < band_count; ++b) {
    const int r0 = b * kBandRows;
    const int r1 = std::min(camera.height, r0 + kBandRows);
    const std::vector<FootprintSample>& samples = st.band_samples[b];
    const std::vector<std::size_t>& offsets = st.band_offsets[b];
    for (int s = visible - 1; s >= 0; --s) {
      if (offsets[s] == offsets[s + 1]) continue;
      const Gaussian& gaussian = set.gaussians[st.order[s]];
      const Vec3& c = gaussian.color;
      const internal::Splat sp = splat_of(s);
      const internal::Footprint box = internal::PixelBox(sp, camera);
      const double r2 = sp.radius * sp.radius;
      internal::SplatPartials partials;
      // Same footprint walk as the forward pass, reversed.
      std::size_t e = offsets[s + 1];
      for (int y = std::min(box.y1, r1 - 1); y >= std::max(box.y0, r0); --y) {
        const double dy = y - sp.screen.y();
        for (int x = box.x1; x >= box.x0; --x) {
          if (!internal::InFootprint(x - sp.screen.x(), dy, r2)) continue;
          const FootprintSample& sample = samples[--e];
          const double alpha = sample.alpha;
          const double t = sample.transmittance;
          const int p = y * camera.width + x;
          const Vec3 g(grad[3 * p], grad[3 * p + 1], grad[3 * p + 2]);
          const double dl_dalpha = g.dot(c * t - behind[p] / (1.0 - alpha));
          behind[p] += c * (alpha * t);
          partials.color += g * (alpha * t);
          // Capped samples carry no alpha gradient.
          if (alpha >= kMaxAlpha) continue;
          internal::AccumulateAlpha(sp, gaussian.opacity, x, y, alpha, dl_dalpha, &partials);
        }
      }
      band_partials[b].push_back({s, partials});
    }
  }

  // Bands are summed in band order whatever the thread count.
  std::vector<internal::SplatPartials> totals(visible);
  for (const auto& band : band_partials) {
    for (const BandPartial& bp : band) totals[bp.slot] += bp.partials;
  }
#pragma omp parallel for schedule(static)
  for (int s = 0; s < visible; ++s) {
    const int i = st.order[s];
    out.color[i] = totals[s].color;
    out.opacity[i] = totals[s].opacity;
    internal::ChainToWorld(splat_of(s), set.gaussians[i], rotation, camera, totals[s],
                           &out.center[i], &out.scale[i], &camera_grad[s]);
  }
  for (int s = 0; s < visible; ++s) {
    out.pose.head<3>() += camera_grad[s];
    out.pose.tail<3>() += st.camera_points[s].cross(camera_grad[s]);
  }
  return out;
}

}  // namespace fragsplat
