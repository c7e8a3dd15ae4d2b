#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fragsplat/core/camera.h"

namespace fragsplat {

struct TrajectoryEntry {
  int frame_index = 0;
  Pose pose;  // world -> camera
};

// Ordered by strictly increasing frame index.
class Trajectory {
 public:
  Trajectory() = default;

  // Throws InvalidArgument unless frame_index exceeds the last index.
  void Append(int frame_index, const Pose& pose);

  const std::vector<TrajectoryEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const Pose* Find(int frame_index) const;

 private:
  std::vector<TrajectoryEntry> entries_;
};

// One line per frame: `frame_index tx ty tz qx qy qz qw`, 9 significant digits.
std::string FormatTrajectory(const Trajectory& trajectory);
Trajectory ParseTrajectory(const std::string& text);

void WriteTrajectory(const std::filesystem::path& path,
                     const Trajectory& trajectory);
Trajectory ReadTrajectory(const std::filesystem::path& path);

}  // namespace fragsplat
