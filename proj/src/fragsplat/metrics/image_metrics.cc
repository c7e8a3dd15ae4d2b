#include "fragsplat/metrics/image_metrics.h"

#include <array>
#include <cmath>
#include <limits>

#include "fragsplat/core/error.h"

namespace fragsplat {
namespace {

using Kernel = std::array<double, kSsimWindow>;

Kernel GaussianKernel() {
  Kernel k;
  double sum = 0.0;
  for (int i = 0; i < kSsimWindow; ++i) {
    const double d = i - kSsimWindow / 2;
    k[i] = std::exp(-0.5 * d * d / (kSsimSigma * kSsimSigma));
    sum += k[i];
  }
  for (double& v : k) v /= sum;
  return k;
}

// Plane of doubles, row-major.
struct Plane {
  int width = 0;
  int height = 0;
  std::vector<double> v;
  Plane(int w, int h) : width(w), height(h), v(static_cast<std::size_t>(w) * h, 0.0) {}
  double& at(int x, int y) { return v[static_cast<std::size_t>(y) * width + x]; }
  double at(int x, int y) const { return v[static_cast<std::size_t>(y) * width + x]; }
};

// Separable correlation keeping only windows fully inside the plane.
Plane FilterValid(const Plane& in, const Kernel& k) {
  const int w = in.width - kSsimWindow + 1;
  const int h = in.height - kSsimWindow + 1;
  Plane tmp(w, in.height);
  for (int y = 0; y < in.height; ++y) {
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (int i = 0; i < kSsimWindow; ++i) s += k[i] * in.at(x + i, y);
      tmp.at(x, y) = s;
    }
  }
  Plane out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (int j = 0; j < kSsimWindow; ++j) s += k[j] * tmp.at(x, y + j);
      out.at(x, y) = s;
    }
  }
  return out;
}

// Adjoint of FilterValid: scatters window values back onto the full plane.
Plane FilterAdjoint(const Plane& in, const Kernel& k, int width, int height) {
  Plane tmp(in.width, height);
  for (int y = 0; y < in.height; ++y) {
    for (int x = 0; x < in.width; ++x) {
      const double v = in.at(x, y);
      for (int j = 0; j < kSsimWindow; ++j) tmp.at(x, y + j) += k[j] * v;
    }
  }
  Plane out(width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < in.width; ++x) {
      const double v = tmp.at(x, y);
      for (int i = 0; i < kSsimWindow; ++i) out.at(x + i, y) += k[i] * v;
    }
  }
  return out;
}

Plane Channel(const Image& image, int c) {
  Plane p(image.width(), image.height());
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) p.at(x, y) = image.at(x, y, c);
  }
  return p;
}

Plane Product(const Plane& a, const Plane& b) {
  Plane out(a.width, a.height);
  for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] = a.v[i] * b.v[i];
  return out;
}

}  // namespace

double Psnr(const Image& a, const Image& b) {
  if (!a.SameShape(b)) Throw(ErrorCode::kDimensionMismatch, "PSNR inputs differ in size");
  if (a.data().empty()) Throw(ErrorCode::kInvalidArgument, "PSNR of an empty image");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    const double d = a.data()[i] - b.data()[i];
    sum += d * d;
  }
  const double mse = sum / a.data().size();
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return -10.0 * std::log10(mse);
}

double Ssim(const Image& a, const Image& b, Image* grad_a) {
  if (!a.SameShape(b)) Throw(ErrorCode::kDimensionMismatch, "SSIM inputs differ in size");
  if (a.width() < kSsimWindow || a.height() < kSsimWindow) {
    Throw(ErrorCode::kInvalidArgument, "SSIM needs images of at least 11×11 pixels");
  }
  static const Kernel kernel = GaussianKernel();
  const int vw = a.width() - kSsimWindow + 1;
  const int vh = a.height() - kSsimWindow + 1;
  const double positions = 3.0 * vw * vh;
  if (grad_a) *grad_a = Image(a.width(), a.height());

  double total = 0.0;
  for (int c = 0; c < 3; ++c) {
    const Plane x = Channel(a, c);
    const Plane y = Channel(b, c);
    const Plane mx = FilterValid(x, kernel);
    const Plane my = FilterValid(y, kernel);
    const Plane exx = FilterValid(Product(x, x), kernel);
    const Plane eyy = FilterValid(Product(y, y), kernel);
    const Plane exy = FilterValid(Product(x, y), kernel);
    Plane d_mu(vw, vh), d_exx(vw, vh), d_exy(vw, vh);
    for (std::size_t i = 0; i < mx.v.size(); ++i) {
      const double ux = mx.v[i];
      const double uy = my.v[i];
      const double a1 = 2.0 * ux * uy + kSsimC1;
      const double a2 = 2.0 * (exy.v[i] - ux * uy) + kSsimC2;
      const double b1 = ux * ux + uy * uy + kSsimC1;
      const double b2 = (exx.v[i] - ux * ux) + (eyy.v[i] - uy * uy) + kSsimC2;
      const double s = a1 * a2 / (b1 * b2);
      total += s;
      if (!grad_a) continue;
      d_mu.v[i] = (2.0 * uy * a2 - 2.0 * uy * a1) / (b1 * b2) -
                  s * (2.0 * ux / b1 - 2.0 * ux / b2);
      d_exx.v[i] = -s / b2;
      d_exy.v[i] = 2.0 * a1 / (b1 * b2);
    }
    if (!grad_a) continue;
    const Plane g_mu = FilterAdjoint(d_mu, kernel, a.width(), a.height());
    const Plane g_exx = FilterAdjoint(d_exx, kernel, a.width(), a.height());
    const Plane g_exy = FilterAdjoint(d_exy, kernel, a.width(), a.height());
    for (int py = 0; py < a.height(); ++py) {
      for (int px = 0; px < a.width(); ++px) {
        grad_a->at(px, py, c) = (g_mu.at(px, py) + 2.0 * x.at(px, py) * g_exx.at(px, py) +
                                 y.at(px, py) * g_exy.at(px, py)) /
                                positions;
      }
    }
  }
  return total / positions;
}

}  // namespace fragsplat
