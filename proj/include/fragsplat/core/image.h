#pragma once

#include <filesystem>
#include <vector>

#include "fragsplat/core/camera.h"

namespace fragsplat {

// Row-major, interleaved RGB, values nominally in [0, 1].
class Image {
 public:
  Image() = default;
  Image(int width, int height, double fill = 0.0)
      : width_(width), height_(height),
        data_(static_cast<std::size_t>(width) * height * 3, fill) {}

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t PixelCount() const {
    return static_cast<std::size_t>(width_) * height_;
  }

  double& at(int x, int y, int c) {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * 3 + c];
  }
  double at(int x, int y, int c) const {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * 3 + c];
  }
  Vec3 Pixel(std::size_t index) const {
    return Vec3(data_[index * 3], data_[index * 3 + 1], data_[index * 3 + 2]);
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool SameShape(const Image& other) const {
    return width_ == other.width_ && height_ == other.height_;
  }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

// A video frame. Indices are 1-based.
struct Frame {
  int index = 0;
  Image pixels;
};

// 8-bit binary PPM (P6).
void WritePpm(const std::filesystem::path& path, const Image& image);
Image ReadPpm(const std::filesystem::path& path);

// 16-bit binary PGM (P5, big-endian samples). Depth is stored as
// round(depth / depth_unit), saturated to 65535.
void WriteDepthPgm(const std::filesystem::path& path,
                   const std::vector<double>& depth, int width, int height,
                   double depth_unit);

// Frames are stored as frame_0001.ppm, frame_0002.ppm, ...
std::filesystem::path FramePath(const std::filesystem::path& dir, int index);
std::vector<Frame> LoadFrames(const std::filesystem::path& dir);

}  // namespace fragsplat
