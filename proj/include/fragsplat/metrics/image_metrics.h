#pragma once

#include "fragsplat/core/image.h"

namespace fragsplat {

constexpr int kSsimWindow = 11;
constexpr double kSsimSigma = 1.5;
constexpr double kSsimC1 = 0.01 * 0.01;
constexpr double kSsimC2 = 0.03 * 0.03;

// 10·log10(1 / MSE) over all channels; +infinity for identical images.
// Throws DimensionMismatch.
double Psnr(const Image& a, const Image& b);

// Mean local SSIM over every valid 11×11 window position and channel.
// When `grad_a` is given it receives dSSIM/da. Throws DimensionMismatch and
// InvalidArgument for images smaller than the window.
double Ssim(const Image& a, const Image& b, Image* grad_a = nullptr);

}  // namespace fragsplat
