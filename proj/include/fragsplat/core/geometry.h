#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "fragsplat/core/camera.h"

namespace fragsplat {

// Closed-form least-squares alignment dst ≈ T(src) (Umeyama). Weights are
// optional; empty means uniform. With estimate_scale = false the result
// has scale 1.
SimTransform EstimateSimilarity(std::span<const Vec3> src,
                                std::span<const Vec3> dst,
                                std::span<const double> weights = {},
                                bool estimate_scale = true);

Mat3 Skew(const Vec3& v);

// FNV-1a over raw bytes. Used for bit-exact equality fingerprints.
std::uint64_t HashBytes(const void* data, std::size_t size,
                        std::uint64_t seed = 1469598103934665603ull);
std::uint64_t HashString(std::string_view bytes);

// Fixed-size blocks reduced in block order, so floating-point sums do not
// depend on the number of threads.
constexpr std::size_t kReductionBlock = 4096;

}  // namespace fragsplat
