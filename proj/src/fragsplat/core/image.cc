#include "fragsplat/core/image.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <regex>
#include <sstream>

#include "fragsplat/core/error.h"

namespace fragsplat {
namespace {

unsigned char ToByte(double v) {
  const double clamped = std::clamp(v, 0.0, 1.0);
  return static_cast<unsigned char>(std::lround(clamped * 255.0));
}

// Reads the next whitespace-separated header token, skipping comments.
std::string NextToken(std::istream& in) {
  std::string token;
  while (in) {
    const int c = in.peek();
    if (c == '#') {
      std::string comment;
      std::getline(in, comment);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      break;
    }
  }
  in >> token;
  return token;
}

}  // namespace

void WritePpm(const std::filesystem::path& path, const Image& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) Throw(ErrorCode::kIoError, "cannot write " + path.string());
  out << "P6\n" << image.width() << " " << image.height() << "\n255\n";
  std::vector<unsigned char> bytes(image.data().size());
  std::transform(image.data().begin(), image.data().end(), bytes.begin(), ToByte);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

Image ReadPpm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Throw(ErrorCode::kIoError, "cannot read " + path.string());
  if (NextToken(in) != "P6") {
    Throw(ErrorCode::kIoError, path.string() + " is not a binary PPM");
  }
  const int width = std::stoi(NextToken(in));
  const int height = std::stoi(NextToken(in));
  const int maxval = std::stoi(NextToken(in));
  in.get();
  if (width <= 0 || height <= 0 || maxval != 255) {
    Throw(ErrorCode::kIoError, path.string() + ": unsupported PPM header");
  }
  Image image(width, height);
  std::vector<unsigned char> bytes(image.data().size());
  in.read(reinterpret_cast<char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(bytes.size())) {
    Throw(ErrorCode::kIoError, path.string() + ": truncated PPM");
  }
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    image.data()[i] = bytes[i] / 255.0;
  }
  return image;
}

void WriteDepthPgm(const std::filesystem::path& path,
                   const std::vector<double>& depth, int width, int height,
                   double depth_unit) {
  std::ofstream out(path, std::ios::binary);
  if (!out) Throw(ErrorCode::kIoError, "cannot write " + path.string());
  out << "P5\n" << width << " " << height << "\n65535\n";
  std::vector<unsigned char> bytes(depth.size() * 2);
  for (std::size_t i = 0; i < depth.size(); ++i) {
    const double q = std::clamp(std::round(depth[i] / depth_unit), 0.0, 65535.0);
    const auto v = static_cast<std::uint16_t>(q);
    bytes[2 * i] = static_cast<unsigned char>(v >> 8);
    bytes[2 * i + 1] = static_cast<unsigned char>(v & 0xff);
  }
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

std::filesystem::path FramePath(const std::filesystem::path& dir, int index) {
  char name[32];
  std::snprintf(name, sizeof(name), "frame_%04d.ppm", index);
  return dir / name;
}

std::vector<Frame> LoadFrames(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    Throw(ErrorCode::kIoError, "frame directory " + dir.string() + " not found");
  }
  const std::regex pattern(R"(frame_(\d+)\.ppm)");
  std::vector<Frame> frames;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    std::smatch match;
    const std::string name = entry.path().filename().string();
    if (std::regex_match(name, match, pattern)) {
      frames.push_back({std::stoi(match[1].str()), ReadPpm(entry.path())});
    }
  }
  std::sort(frames.begin(), frames.end(),
            [](const Frame& a, const Frame& b) { return a.index < b.index; });
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (frames[i].index != static_cast<int>(i) + 1) {
      Throw(ErrorCode::kIoError, "frame indices must be contiguous from 1");
    }
  }
  return frames;
}

}  // namespace fragsplat
