#pragma once

#include <vector>

#include "fragsplat/core/camera.h"
#include "fragsplat/core/trajectory.h"

namespace fragsplat {

struct TrajectoryAlignment {
  SimTransform transform;         // estimated centers -> reference centers
  std::vector<double> residuals;  // per frame, after alignment
  double rmse = 0.0;
};

// Closed-form 7-DoF alignment of camera centers. Throws IndexMismatch when
// the frame indices differ and TooFewPoses for fewer than three poses.
TrajectoryAlignment AlignTrajectories(const Trajectory& estimated,
                                      const Trajectory& reference);

// Absolute trajectory error: RMSE of the aligned center residuals.
double Ate(const Trajectory& estimated, const Trajectory& reference);

}  // namespace fragsplat
