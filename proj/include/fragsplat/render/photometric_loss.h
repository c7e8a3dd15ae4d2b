#pragma once

#include "fragsplat/core/image.h"

namespace fragsplat {

constexpr double kL1Weight = 0.8;
constexpr double kDssimWeight = 0.2;

struct PhotometricLoss {
  double value = 0.0;
  double l1 = 0.0;    // mean absolute error over pixels and channels
  double ssim = 0.0;
  Image gradient;     // d value / d rendered; empty unless requested
};

// 0.8·L1 + 0.2·(1 − SSIM). Throws DimensionMismatch.
PhotometricLoss ComputePhotometricLoss(const Image& rendered, const Image& target,
                                       bool with_gradient = true);

}  // namespace fragsplat
