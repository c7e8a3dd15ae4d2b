#include "fragsplat/render/photometric_loss.h"

#include <cmath>

#include "fragsplat/core/error.h"
#include "fragsplat/metrics/image_metrics.h"

namespace fragsplat {

PhotometricLoss ComputePhotometricLoss(const Image& rendered, const Image& target,
                                       bool with_gradient) {
  if (!rendered.SameShape(target)) {
    Throw(ErrorCode::kDimensionMismatch, "rendered and target images differ in size");
  }
  PhotometricLoss loss;
  const std::vector<double>& r = rendered.data();
  const std::vector<double>& t = target.data();
  const double count = static_cast<double>(r.size());
  double l1 = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) l1 += std::abs(r[i] - t[i]);
  loss.l1 = l1 / count;
  if (with_gradient) {
    loss.ssim = Ssim(rendered, target, &loss.gradient);
    std::vector<double>& g = loss.gradient.data();
    for (std::size_t i = 0; i < r.size(); ++i) {
      const double d = r[i] - t[i];
      const double sign = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
      g[i] = kL1Weight * sign / count - kDssimWeight * g[i];
    }
  } else {
    loss.ssim = Ssim(rendered, target);
  }
  loss.value = kL1Weight * loss.l1 + kDssimWeight * (1.0 - loss.ssim);
  return loss;
}

}  // namespace fragsplat
