#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "fragsplat/core/camera.h"

namespace fragsplat {

struct Match {
  float xa = 0.f;
  float ya = 0.f;
  float xb = 0.f;
  float yb = 0.f;
};

// Two-view output of the learned prior. Both pointmaps are expressed in
// view_a's camera frame; arrays are row-major over the H×W pixel grid.
struct PairwisePrior {
  int view_a = 0;
  int view_b = 0;
  int width = 0;
  int height = 0;
  std::vector<float> pointmap_a;    // H·W·3
  std::vector<float> pointmap_b;    // H·W·3
  std::vector<float> confidence_a;  // H·W
  std::vector<float> confidence_b;  // H·W
  std::vector<Match> matches;

  std::size_t PixelCount() const {
    return static_cast<std::size_t>(width) * height;
  }
  Vec3 PointA(std::size_t pixel) const {
    return Vec3(pointmap_a[3 * pixel], pointmap_a[3 * pixel + 1],
                pointmap_a[3 * pixel + 2]);
  }
  Vec3 PointB(std::size_t pixel) const {
    return Vec3(pointmap_b[3 * pixel], pointmap_b[3 * pixel + 1],
                pointmap_b[3 * pixel + 2]);
  }

  // Throws DimensionMismatch / InvalidValue on any violated invariant.
  void Validate() const;
};

using PairKey = std::pair<int, int>;

class PriorBundle {
 public:
  PriorBundle() = default;
  explicit PriorBundle(const CameraIntrinsics& intrinsics)
      : intrinsics_(intrinsics) {}

  const CameraIntrinsics& intrinsics() const { return intrinsics_; }
  const std::map<PairKey, PairwisePrior>& pairs() const { return pairs_; }

  // Throws InvalidArgument on a duplicate key or a size mismatch with the
  // intrinsics.
  void AddPair(PairwisePrior pair);

  bool HasPair(int view_a, int view_b) const;
  // Throws MissingPair.
  const PairwisePrior& Pair(int view_a, int view_b) const;

 private:
  CameraIntrinsics intrinsics_;
  std::map<PairKey, PairwisePrior> pairs_;
};

constexpr std::uint32_t kPriorFileVersion = 1;

// Binary pair file: magic "VLPR", version, H, W, M as u32, then f32 arrays
// pointmap_a, pointmap_b, confidence_a, confidence_b, matches (M·4), all
// little-endian, row-major, unpadded.
std::string EncodePairFile(const PairwisePrior& pair);
PairwisePrior DecodePairFile(const std::string& bytes, int view_a, int view_b);

// Directory with manifest.txt (`intrinsics fx fy cx cy W H`, then
// `pair a b filename` per pair) plus one binary file per pair.
void SaveBundle(const std::filesystem::path& dir, const PriorBundle& bundle);
PriorBundle LoadBundle(const std::filesystem::path& dir);

std::string PairFileName(int view_a, int view_b);

}  // namespace fragsplat
