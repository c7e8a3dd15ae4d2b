#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fragsplat/core/error.h"
#include "fragsplat/core/image.h"
#include "fragsplat/core/trajectory.h"
#include "fragsplat/hier/hierarchy.h"
#include "fragsplat/pipeline/run_config.h"
#include "fragsplat/prior/prior_bundle.h"
#include "fragsplat/registration/fragment_registration.h"
#include "fragsplat/registration/keyframe_alignment.h"

namespace fragsplat {

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
};

struct Reconstruction {
  std::vector<Fragment> fragments;
  KeyframeAlignment alignment;
  std::vector<FragmentRegistration> registrations;
  std::vector<HierNode> leaves;  // after local refinement
  HierarchyResult hierarchy;
  std::vector<int> holdout;
  std::vector<StageTiming> timings;
};

HierarchySpec MakeHierarchySpec(const RunConfig& config);

// Registration and local construction only; the result has no hierarchy.
Reconstruction BuildLocalFragments(std::span<const Frame> frames, const PriorBundle& bundle,
                                   const RunConfig& config);

// Full pipeline: keyframe alignment, fragment registration, local Gaussians
// with local refinement, hierarchical merging.
Reconstruction Reconstruct(std::span<const Frame> frames, const PriorBundle& bundle,
                           const RunConfig& config, const LevelCallback& on_level = {});

struct EvalRow {
  int frame = 0;
  double psnr = 0.0;
  double ssim = 0.0;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
  std::optional<double> ate;
};

// Renders every listed frame from its trajectory pose and scores it.
EvalReport EvaluateViews(const GaussianSet& set, const Trajectory& trajectory,
                         std::span<const Frame> frames, const CameraIntrinsics& camera,
                         const std::vector<int>& eval_frames,
                         const Trajectory* reference);

std::string FormatReport(const EvalReport& report);
std::string FormatReportCsv(const EvalReport& report);

// Subcommands. Each reads its inputs from the config and throws Error.
void CommandReconstruct(const RunConfig& config);
EvalReport CommandEval(const RunConfig& config);
void CommandSynth(const RunConfig& config);
void CommandRender(const RunConfig& config);

// 2 configuration, 3 data, 4 numerical failure.
int ExitCodeFor(ErrorCode code);

// `fx fy cx cy width height`.
void WriteCamera(const std::filesystem::path& path, const CameraIntrinsics& camera);
CameraIntrinsics ReadCamera(const std::filesystem::path& path);

}  // namespace fragsplat
