#include "fragsplat/pipeline/pipeline.h"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

#include "fragsplat/core/binary_io.h"
#include "fragsplat/metrics/image_metrics.h"
#include "fragsplat/metrics/trajectory_metrics.h"
#include "fragsplat/prior/synthetic_scene.h"
#include "fragsplat/render/rasterizer.h"
#include "fragsplat/splat/gaussian_set.h"

namespace fs = std::filesystem;

namespace fragsplat {
namespace {

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double Seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

void WriteText(const fs::path& path, const std::string& text) {
  WriteFileBytes(path, text);
}

std::string NodeName(const HierNode& node) {
  std::ostringstream out;
  out << "node_" << std::setw(4) << std::setfill('0') << node.set.first_frame << "_"
      << std::setw(4) << std::setfill('0') << node.set.last_frame;
  return out.str();
}

Trajectory NodeTrajectory(const HierNode& node) {
  Trajectory trajectory;
  for (const auto& [frame, pose] : node.poses) trajectory.Append(frame, pose);
  return trajectory;
}

std::string FormatMerges(const std::vector<MergeRecord>& merges) {
  std::ostringstream out;
  out << "# level ref_first ref_last mov_first mov_last ref mov kept merged "
         "ref_hash_before ref_hash_after scale_initial scale_refined\n";
  for (const MergeRecord& m : merges) {
    out << m.step.level << " " << m.step.ref.first + 1 << " " << m.step.ref.last + 1 << " "
        << m.step.mov.first + 1 << " " << m.step.mov.last + 1 << " " << m.ref_count << " "
        << m.mov_count << " " << m.kept_count << " " << m.merged_count << " " << std::hex
        << m.ref_hash_before << " " << m.ref_hash_after_align << std::dec << " "
        << std::setprecision(9) << m.initial.scale << " " << m.refined.scale << "\n";
  }
  return out.str();
}

void CheckFrames(std::span<const Frame> frames, const CameraIntrinsics& camera) {
  for (const Frame& frame : frames) {
    if (frame.pixels.width() != camera.width || frame.pixels.height() != camera.height) {
      Throw(ErrorCode::kDimensionMismatch,
            "frame " + std::to_string(frame.index) + " does not match the bundle size");
    }
  }
}

}  // namespace

HierarchySpec MakeHierarchySpec(const RunConfig& config) {
  HierarchySpec spec;
  spec.beta = config.beta;
  spec.align_frames = config.align_frames;
  spec.align.iterations = config.align_iterations;
  spec.align.pose_step = config.pose_step;
  spec.align.seed = config.seed;
  spec.merge.iterations = config.merge_iterations;
  spec.merge.pose_step = config.pose_step;
  spec.merge.seed = config.seed + 1000;
  return spec;
}

Reconstruction BuildLocalFragments(std::span<const Frame> frames, const PriorBundle& bundle,
                                   const RunConfig& config) {
  config.Validate();
  const CameraIntrinsics& camera = bundle.intrinsics();
  CheckFrames(frames, camera);
  Reconstruction rec;
  const int n = static_cast<int>(frames.size());
  rec.fragments = Partition(n, config.fragment_size);
  rec.holdout = HoldoutFrames(n, config.holdout_every, config.holdout_offset);

  Stopwatch registration;
  AlignmentOptions alignment;
  alignment.iterations = config.keyframe_iterations;
  alignment.step = config.keyframe_step;
  alignment.ransac.inlier_threshold_px = config.ransac_threshold;
  alignment.ransac.iterations = config.ransac_iterations;
  alignment.ransac.seed = config.seed;
  rec.alignment =
      GlobalKeyframeAlignment(BuildKeyframeGraph(rec.fragments), bundle, alignment);
  RegistrationOptions reg_options;
  reg_options.ransac = alignment.ransac;
  for (const Fragment& fragment : rec.fragments) {
    rec.registrations.push_back(
        RegisterFragment(fragment, bundle, rec.alignment, reg_options));
  }
  rec.timings.push_back({"registration", registration.Seconds()});

  Stopwatch local;
  std::set<int> skip(rec.holdout.begin(), rec.holdout.end());
  int training_index = 0;
  for (int f = 1; f <= n; ++f) {
    if (skip.count(f)) continue;
    if (training_index++ % config.subsample != 0) skip.insert(f);
  }
  const ImageLookup images = IndexFrames(frames);
  for (std::size_t i = 0; i < rec.fragments.size(); ++i) {
    const FragmentRegistration& reg = rec.registrations[i];
    HierNode leaf;
    leaf.leaves = {static_cast<int>(i), static_cast<int>(i)};
    leaf.anchor_frame = reg.fragment.keyframe();
    leaf.set = InitFromFragment(reg, frames, camera, skip);
    std::vector<TrainingView> views;
    for (std::size_t s = 0; s < reg.fragment.frame_indices.size(); ++s) {
      const int frame = reg.fragment.frame_indices[s];
      leaf.poses[frame] = reg.poses[s];
      if (skip.count(frame)) continue;
      leaf.training_frames.push_back(frame);
      views.push_back({frame, images.at(frame), reg.poses[s]});
    }
    if (!views.empty() && config.local_iterations > 0) {
      OptimSpec spec;
      spec.iterations = config.local_iterations;
      spec.pose_step = config.pose_step;
      spec.seed = config.seed + 100 + i;
      spec.frozen_pose_frames.insert(leaf.anchor_frame);
      OptimizeResult result = JointOptimize(leaf.set, views, camera, spec);
      leaf.set = std::move(result.set);
      for (std::size_t v = 0; v < views.size(); ++v) leaf.poses[views[v].frame] = result.poses[v];
    }
    rec.leaves.push_back(std::move(leaf));
  }
  rec.timings.push_back({"local construction", local.Seconds()});
  return rec;
}

Reconstruction Reconstruct(std::span<const Frame> frames, const PriorBundle& bundle,
                           const RunConfig& config, const LevelCallback& on_level) {
  Reconstruction rec = BuildLocalFragments(frames, bundle, config);
  Stopwatch hierarchy;
  rec.hierarchy = RunHierarchy(rec.leaves, rec.alignment.keyframe_poses, frames,
                               bundle.intrinsics(), MakeHierarchySpec(config), on_level);
  rec.timings.push_back({"hierarchy", hierarchy.Seconds()});
  return rec;
}

EvalReport EvaluateViews(const GaussianSet& set, const Trajectory& trajectory,
                         std::span<const Frame> frames, const CameraIntrinsics& camera,
                         const std::vector<int>& eval_frames,
                         const Trajectory* reference) {
  const ImageLookup images = IndexFrames(frames);
  EvalReport report;
  for (int frame : eval_frames) {
    const Pose* pose = trajectory.Find(frame);
    const auto image = images.find(frame);
    if (!pose || image == images.end()) {
      Throw(ErrorCode::kFrameOutOfRange,
            "frame " + std::to_string(frame) + " has no pose or image");
    }
    const RenderOutput render = Render(set, *pose, camera);
    report.rows.push_back({frame, Psnr(render.color, *image->second),
                           Ssim(render.color, *image->second)});
  }
  for (const EvalRow& row : report.rows) {
    report.mean_psnr += row.psnr;
    report.mean_ssim += row.ssim;
  }
  if (!report.rows.empty()) {
    report.mean_psnr /= report.rows.size();
    report.mean_ssim /= report.rows.size();
  }
  if (reference) report.ate = Ate(trajectory, *reference);
  return report;
}

std::string FormatReport(const EvalReport& report) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(4);
  out << "frame psnr ssim\n";
  for (const EvalRow& row : report.rows) {
    out << row.frame << " " << row.psnr << " " << row.ssim << "\n";
  }
  out << "mean_psnr mean_ssim ate\n";
  out << report.mean_psnr << " " << report.mean_ssim << " ";
  if (report.ate) {
    out << std::setprecision(6) << *report.ate;
  } else {
    out << "-";
  }
  out << "\n";
  return out.str();
}

std::string FormatReportCsv(const EvalReport& report) {
  std::ostringstream out;
  out << std::setprecision(9);
  out << "frame,psnr,ssim\n";
  for (const EvalRow& row : report.rows) {
    out << row.frame << "," << row.psnr << "," << row.ssim << "\n";
  }
  out << "mean," << report.mean_psnr << "," << report.mean_ssim << "\n";
  if (report.ate) out << "ate," << *report.ate << ",\n";
  return out.str();
}

void WriteCamera(const fs::path& path, const CameraIntrinsics& camera) {
  std::ostringstream out;
  out << std::setprecision(17) << camera.fx << " " << camera.fy << " " << camera.cx << " "
      << camera.cy << " " << camera.width << " " << camera.height << "\n";
  WriteText(path, out.str());
}

CameraIntrinsics ReadCamera(const fs::path& path) {
  std::istringstream in(ReadFileBytes(path));
  CameraIntrinsics camera;
  in >> camera.fx >> camera.fy >> camera.cx >> camera.cy >> camera.width >> camera.height;
  if (in.fail() || !camera.IsValid()) {
    Throw(ErrorCode::kInvalidValue, "malformed camera file " + path.string());
  }
  return camera;
}

void CommandReconstruct(const RunConfig& config) {
  config.Validate();
  if (config.bundle.empty()) Throw(ErrorCode::kBadConfig, "missing bundle path");
  if (config.frames.empty()) Throw(ErrorCode::kBadConfig, "missing frames path");
  if (config.out.empty()) Throw(ErrorCode::kBadConfig, "missing output path");
  const PriorBundle bundle = LoadBundle(config.bundle);
  const std::vector<Frame> frames = LoadFrames(config.frames);
  const fs::path out = config.out;
  fs::create_directories(out / "checkpoints");

  auto checkpoint = [&](int level, const std::vector<HierNode>& nodes) {
    std::ostringstream name;
    name << "level_" << std::setw(2) << std::setfill('0') << level;
    const fs::path dir = out / "checkpoints" / name.str();
    fs::create_directories(dir);
    for (const HierNode& node : nodes) {
      SaveGaussians(dir / (NodeName(node) + ".vlgs"), node.set);
      WriteTrajectory(dir / (NodeName(node) + "_trajectory.txt"), NodeTrajectory(node));
    }
  };
  Reconstruction rec = Reconstruct(frames, bundle, config, checkpoint);

  SaveGaussians(out / "gaussians.vlgs", rec.hierarchy.root.set);
  WriteTrajectory(out / "trajectory.txt", rec.hierarchy.trajectory);
  WriteCamera(out / "camera.txt", bundle.intrinsics());
  WriteText(out / "merges.txt", FormatMerges(rec.hierarchy.merges));
  WriteText(out / "config.txt", FormatConfig(config));

  Stopwatch eval;
  std::optional<Trajectory> reference;
  if (!config.reference.empty()) reference = ReadTrajectory(config.reference);
  if (!rec.holdout.empty() || reference) {
    const EvalReport report =
        EvaluateViews(rec.hierarchy.root.set, rec.hierarchy.trajectory, frames,
                      bundle.intrinsics(), rec.holdout, reference ? &*reference : nullptr);
    WriteText(out / "eval.txt", FormatReport(report));
    WriteText(out / "eval.csv", FormatReportCsv(report));
  }
  rec.timings.push_back({"eval", eval.Seconds()});

  std::ostringstream timing;
  timing << std::fixed << std::setprecision(3);
  double total = 0.0;
  for (const StageTiming& t : rec.timings) {
    timing << t.stage << ": " << t.seconds << " s\n";
    total += t.seconds;
  }
  timing << "total: " << total << " s\n";
  WriteText(out / "timing.txt", timing.str());
  std::cout << timing.str();
}

EvalReport CommandEval(const RunConfig& config) {
  config.Validate();
  const fs::path run = config.out;
  for (const char* name : {"gaussians.vlgs", "trajectory.txt", "camera.txt"}) {
    if (!fs::is_regular_file(run / name)) {
      Throw(ErrorCode::kMissingReconstruction, "no " + std::string(name) + " in " +
                                                   run.string());
    }
  }
  const GaussianSet set = LoadGaussians(run / "gaussians.vlgs");
  const Trajectory trajectory = ReadTrajectory(run / "trajectory.txt");
  const CameraIntrinsics camera = ReadCamera(run / "camera.txt");
  if (config.frames.empty()) Throw(ErrorCode::kBadConfig, "missing frames path");
  const std::vector<Frame> frames = LoadFrames(config.frames);
  std::optional<Trajectory> reference;
  if (!config.reference.empty()) reference = ReadTrajectory(config.reference);
  const std::vector<int> holdout = HoldoutFrames(static_cast<int>(frames.size()),
                                                 config.holdout_every, config.holdout_offset);
  const EvalReport report = EvaluateViews(set, trajectory, frames, camera, holdout,
                                          reference ? &*reference : nullptr);
  WriteText(run / "eval.txt", FormatReport(report));
  WriteText(run / "eval.csv", FormatReportCsv(report));
  std::cout << FormatReport(report);
  return report;
}

void CommandSynth(const RunConfig& config) {
  config.Validate();
  if (config.out.empty()) Throw(ErrorCode::kBadConfig, "missing output path");
  SceneSpec spec = config.ToSceneSpec();
  const SyntheticScene probe(spec);
  spec.noise.pointmap_sigma = config.noise_sigma * probe.SceneDiameter();
  const SyntheticScene scene(spec);
  const fs::path out = config.out;
  fs::create_directories(out / "frames");
  for (int f = 1; f <= scene.frame_count(); ++f) {
    WritePpm(FramePath(out / "frames", f), scene.RenderFrame(f));
  }
  const SyntheticBundle synthetic =
      GenerateSynthetic(scene, EnumerateBundlePairs(spec.frame_count, config.fragment_size));
  SaveBundle(out / "bundle", synthetic.bundle);
  WriteTrajectory(out / "gt_trajectory.txt", scene.trajectory());
  std::ostringstream info;
  info << std::setprecision(17) << "scene_diameter " << scene.SceneDiameter() << "\n";
  WriteText(out / "scene.txt", info.str());
}

void CommandRender(const RunConfig& config) {
  if (config.gaussians.empty() || config.pose.empty() || config.image.empty()) {
    Throw(ErrorCode::kBadConfig, "render needs gaussians, pose and image");
  }
  CameraIntrinsics camera;
  if (!config.out.empty() && fs::is_regular_file(fs::path(config.out) / "camera.txt")) {
    camera = ReadCamera(fs::path(config.out) / "camera.txt");
  } else if (!config.bundle.empty()) {
    camera = LoadBundle(config.bundle).intrinsics();
  } else {
    Throw(ErrorCode::kBadConfig, "render needs a run directory or a bundle for intrinsics");
  }
  std::istringstream in(config.pose);
  double tx, ty, tz, qx, qy, qz, qw;
  in >> tx >> ty >> tz >> qx >> qy >> qz >> qw;
  if (in.fail()) Throw(ErrorCode::kBadConfig, "pose must be 'tx ty tz qx qy qz qw'");
  const Pose pose(Eigen::Quaterniond(qw, qx, qy, qz), Vec3(tx, ty, tz));
  const GaussianSet set = LoadGaussians(config.gaussians);
  const RenderOutput render = Render(set, pose, camera);
  WritePpm(config.image, render.color);
  fs::path depth = config.image;
  depth.replace_extension();
  WriteDepthPgm(depth.string() + "_depth.pgm", render.depth, camera.width, camera.height,
                1e-3);
}

int ExitCodeFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kBadConfig:
    case ErrorCode::kBadSpec:
    case ErrorCode::kInvalidArgument:
      return 2;
    case ErrorCode::kBehindCamera:
    case ErrorCode::kNonPositiveDepth:
    case ErrorCode::kDisconnectedGraph:
    case ErrorCode::kEmptyIntersection:
    case ErrorCode::kInsufficientCorrespondences:
    case ErrorCode::kNoConsensus:
    case ErrorCode::kZeroNormPoint:
    case ErrorCode::kMissingPointmap:
    case ErrorCode::kStaleForwardState:
    case ErrorCode::kNoFrames:
      return 4;
    default:
      return 3;
  }
}

}  // namespace fragsplat
