#include "fragsplat/core/trajectory.h"

#include <fstream>
#include <iomanip>
#include <sstream>

#include "fragsplat/core/error.h"

namespace fragsplat {

void Trajectory::Append(int frame_index, const Pose& pose) {
  if (!entries_.empty() && frame_index <= entries_.back().frame_index) {
    Throw(ErrorCode::kInvalidArgument,
          "trajectory frame indices must be strictly increasing");
  }
  entries_.push_back({frame_index, pose});
}

const Pose* Trajectory::Find(int frame_index) const {
  for (const auto& entry : entries_) {
    if (entry.frame_index == frame_index) return &entry.pose;
  }
  return nullptr;
}

std::string FormatTrajectory(const Trajectory& trajectory) {
  std::ostringstream out;
  out << std::setprecision(9);
  for (const auto& entry : trajectory.entries()) {
    const Vec3& t = entry.pose.translation();
    const Eigen::Quaterniond& q = entry.pose.rotation();
    out << entry.frame_index << ' ' << t.x() << ' ' << t.y() << ' ' << t.z()
        << ' ' << q.x() << ' ' << q.y() << ' ' << q.z() << ' ' << q.w() << '\n';
  }
  return out.str();
}

Trajectory ParseTrajectory(const std::string& text) {
  Trajectory trajectory;
  std::istringstream in(text);
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    int index = 0;
    double tx, ty, tz, qx, qy, qz, qw;
    if (!(fields >> index >> tx >> ty >> tz >> qx >> qy >> qz >> qw)) {
      Throw(ErrorCode::kIoError,
            "malformed trajectory line " + std::to_string(line_number));
    }
    trajectory.Append(index, Pose(Eigen::Quaterniond(qw, qx, qy, qz),
                                  Vec3(tx, ty, tz)));
  }
  return trajectory;
}

void WriteTrajectory(const std::filesystem::path& path,
                     const Trajectory& trajectory) {
  std::ofstream out(path);
  if (!out) Throw(ErrorCode::kIoError, "cannot write " + path.string());
  out << FormatTrajectory(trajectory);
}

Trajectory ReadTrajectory(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) Throw(ErrorCode::kIoError, "cannot read " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return ParseTrajectory(buffer.str());
}

}  // namespace fragsplat
