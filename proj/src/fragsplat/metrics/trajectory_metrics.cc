#include "fragsplat/metrics/trajectory_metrics.h"

#include <cmath>

#include "fragsplat/core/error.h"
#include "fragsplat/core/geometry.h"

namespace fragsplat {

TrajectoryAlignment AlignTrajectories(const Trajectory& estimated,
                                      const Trajectory& reference) {
  if (estimated.size() != reference.size()) {
    Throw(ErrorCode::kIndexMismatch, "trajectories have different lengths");
  }
  std::vector<Vec3> src, dst;
  for (std::size_t i = 0; i < estimated.size(); ++i) {
    const TrajectoryEntry& e = estimated.entries()[i];
    const TrajectoryEntry& r = reference.entries()[i];
    if (e.frame_index != r.frame_index) {
      Throw(ErrorCode::kIndexMismatch,
            "frame " + std::to_string(e.frame_index) + " vs " +
                std::to_string(r.frame_index));
    }
    src.push_back(e.pose.Center());
    dst.push_back(r.pose.Center());
  }
  if (src.size() < 3) {
    Throw(ErrorCode::kTooFewPoses, "ATE needs at least 3 poses");
  }
  TrajectoryAlignment out;
  out.transform = EstimateSimilarity(src, dst);
  double sum = 0.0;
  for (std::size_t i = 0; i < src.size(); ++i) {
    const double r = (out.transform.Apply(src[i]) - dst[i]).norm();
    out.residuals.push_back(r);
    sum += r * r;
  }
  out.rmse = std::sqrt(sum / src.size());
  return out;
}

double Ate(const Trajectory& estimated, const Trajectory& reference) {
  return AlignTrajectories(estimated, reference).rmse;
}

}  // namespace fragsplat
