#include "fragsplat/prior/prior_bundle.h"

#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "fragsplat/core/binary_io.h"
#include "fragsplat/core/error.h"

namespace fragsplat {
namespace {

constexpr char kMagic[4] = {'V', 'L', 'P', 'R'};
constexpr std::size_t kHeaderBytes = 20;

std::string ReadBundleFile(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) {
    Throw(ErrorCode::kBadBundlePath, "cannot open " + path.string());
  }
  return ReadFileBytes(path);
}

void CheckFinite(const std::vector<float>& values, const char* what) {
  for (float v : values) {
    if (!std::isfinite(v)) {
      Throw(ErrorCode::kInvalidValue, std::string("non-finite value in ") + what);
    }
  }
}

}  // namespace

void PairwisePrior::Validate() const {
  const std::size_t n = PixelCount();
  if (width <= 0 || height <= 0 || pointmap_a.size() != 3 * n ||
      pointmap_b.size() != 3 * n || confidence_a.size() != n ||
      confidence_b.size() != n) {
    Throw(ErrorCode::kDimensionMismatch, "pair (" + std::to_string(view_a) +
                                             "," + std::to_string(view_b) +
                                             ") array sizes do not match H×W");
  }
  CheckFinite(pointmap_a, "pointmap_a");
  CheckFinite(pointmap_b, "pointmap_b");
  CheckFinite(confidence_a, "confidence_a");
  CheckFinite(confidence_b, "confidence_b");
  for (float c : confidence_a) {
    if (c < 0.f) Throw(ErrorCode::kInvalidValue, "negative confidence");
  }
  for (float c : confidence_b) {
    if (c < 0.f) Throw(ErrorCode::kInvalidValue, "negative confidence");
  }
  for (const Match& m : matches) {
    const bool finite = std::isfinite(m.xa) && std::isfinite(m.ya) &&
                        std::isfinite(m.xb) && std::isfinite(m.yb);
    if (!finite || m.xa < 0.f || m.ya < 0.f || m.xb < 0.f || m.yb < 0.f ||
        m.xa > width - 1 || m.xb > width - 1 || m.ya > height - 1 ||
        m.yb > height - 1) {
      Throw(ErrorCode::kInvalidValue, "match outside image bounds");
    }
  }
}

void PriorBundle::AddPair(PairwisePrior pair) {
  if (pair.width != intrinsics_.width || pair.height != intrinsics_.height) {
    Throw(ErrorCode::kDimensionMismatch, "pair size differs from intrinsics");
  }
  const PairKey key(pair.view_a, pair.view_b);
  if (pairs_.count(key)) {
    Throw(ErrorCode::kInvalidArgument, "duplicate pair key");
  }
  pairs_.emplace(key, std::move(pair));
}

bool PriorBundle::HasPair(int view_a, int view_b) const {
  return pairs_.count({view_a, view_b}) > 0;
}

const PairwisePrior& PriorBundle::Pair(int view_a, int view_b) const {
  auto it = pairs_.find({view_a, view_b});
  if (it == pairs_.end()) {
    Throw(ErrorCode::kMissingPair, "bundle has no pair (" +
                                       std::to_string(view_a) + "," +
                                       std::to_string(view_b) + ")");
  }
  return it->second;
}

std::string EncodePairFile(const PairwisePrior& pair) {
  pair.Validate();
  std::string out;
  out.reserve(kHeaderBytes + 4 * (pair.pointmap_a.size() * 2 +
                                  pair.confidence_a.size() * 2 +
                                  pair.matches.size() * 4));
  out.append(kMagic, 4);
  PutU32(out, kPriorFileVersion);
  PutU32(out, static_cast<std::uint32_t>(pair.height));
  PutU32(out, static_cast<std::uint32_t>(pair.width));
  PutU32(out, static_cast<std::uint32_t>(pair.matches.size()));
  for (float v : pair.pointmap_a) PutF32(out, v);
  for (float v : pair.pointmap_b) PutF32(out, v);
  for (float v : pair.confidence_a) PutF32(out, v);
  for (float v : pair.confidence_b) PutF32(out, v);
  for (const Match& m : pair.matches) {
    PutF32(out, m.xa);
    PutF32(out, m.ya);
    PutF32(out, m.xb);
    PutF32(out, m.yb);
  }
  return out;
}

PairwisePrior DecodePairFile(const std::string& bytes, int view_a, int view_b) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    Throw(ErrorCode::kBadMagic, "pair file does not start with VLPR");
  }
  if (bytes.size() < kHeaderBytes) {
    Throw(ErrorCode::kTruncatedFile, "pair file header is truncated");
  }
  const std::uint32_t version = GetU32(bytes, 4);
  if (version != kPriorFileVersion) {
    Throw(ErrorCode::kVersionMismatch,
          "pair file version " + std::to_string(version) + " is not supported");
  }
  PairwisePrior pair;
  pair.view_a = view_a;
  pair.view_b = view_b;
  pair.height = static_cast<int>(GetU32(bytes, 8));
  pair.width = static_cast<int>(GetU32(bytes, 12));
  const std::size_t match_count = GetU32(bytes, 16);
  const std::size_t n = pair.PixelCount();
  const std::size_t floats = 6 * n + 2 * n + 4 * match_count;
  const std::size_t expected = kHeaderBytes + 4 * floats;
  if (bytes.size() < expected) {
    Throw(ErrorCode::kTruncatedFile, "pair file holds " +
                                         std::to_string(bytes.size()) +
                                         " bytes, header implies " +
                                         std::to_string(expected));
  }
  if (bytes.size() > expected) {
    Throw(ErrorCode::kDimensionMismatch,
          "pair file is longer than its header implies");
  }
  std::size_t offset = kHeaderBytes;
  auto read_array = [&](std::vector<float>& dst, std::size_t count) {
    dst.resize(count);
    for (std::size_t i = 0; i < count; ++i, offset += 4) dst[i] = GetF32(bytes, offset);
  };
  read_array(pair.pointmap_a, 3 * n);
  read_array(pair.pointmap_b, 3 * n);
  read_array(pair.confidence_a, n);
  read_array(pair.confidence_b, n);
  pair.matches.resize(match_count);
  for (Match& m : pair.matches) {
    m.xa = GetF32(bytes, offset);
    m.ya = GetF32(bytes, offset + 4);
    m.xb = GetF32(bytes, offset + 8);
    m.yb = GetF32(bytes, offset + 12);
    offset += 16;
  }
  pair.Validate();
  return pair;
}

std::string PairFileName(int view_a, int view_b) {
  return "pair_" + std::to_string(view_a) + "_" + std::to_string(view_b) + ".bin";
}

void SaveBundle(const std::filesystem::path& dir, const PriorBundle& bundle) {
  std::filesystem::create_directories(dir);
  std::ostringstream manifest;
  const CameraIntrinsics& k = bundle.intrinsics();
  manifest << std::setprecision(17) << "intrinsics " << k.fx << ' ' << k.fy
           << ' ' << k.cx << ' ' << k.cy << ' ' << k.width << ' ' << k.height
           << '\n';
  for (const auto& [key, pair] : bundle.pairs()) {
    const std::string name = PairFileName(key.first, key.second);
    manifest << "pair " << key.first << ' ' << key.second << ' ' << name << '\n';
    const std::string bytes = EncodePairFile(pair);
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) Throw(ErrorCode::kIoError, "cannot write " + (dir / name).string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  std::ofstream out(dir / "manifest.txt");
  if (!out) Throw(ErrorCode::kIoError, "cannot write manifest");
  out << manifest.str();
}

PriorBundle LoadBundle(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.txt";
  if (!std::filesystem::is_regular_file(manifest_path)) {
    Throw(ErrorCode::kBadBundlePath, "no manifest.txt under " + dir.string());
  }
  std::istringstream manifest(ReadBundleFile(manifest_path));
  std::string line;
  bool have_intrinsics = false;
  PriorBundle bundle;
  int line_number = 0;
  while (std::getline(manifest, line)) {
    ++line_number;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::string keyword;
    fields >> keyword;
    if (keyword == "intrinsics") {
      if (have_intrinsics) {
        Throw(ErrorCode::kInvalidValue, "manifest declares intrinsics twice");
      }
      CameraIntrinsics k;
      if (!(fields >> k.fx >> k.fy >> k.cx >> k.cy >> k.width >> k.height) ||
          !k.IsValid()) {
        Throw(ErrorCode::kInvalidValue, "bad intrinsics line in manifest");
      }
      bundle = PriorBundle(k);
      have_intrinsics = true;
    } else if (keyword == "pair") {
      if (!have_intrinsics) {
        Throw(ErrorCode::kInvalidValue, "manifest pair before intrinsics");
      }
      int a = 0, b = 0;
      std::string name;
      if (!(fields >> a >> b >> name)) {
        Throw(ErrorCode::kInvalidValue,
              "bad pair line " + std::to_string(line_number));
      }
      PairwisePrior pair = DecodePairFile(ReadBundleFile(dir / name), a, b);
      if (pair.width != bundle.intrinsics().width ||
          pair.height != bundle.intrinsics().height) {
        Throw(ErrorCode::kDimensionMismatch,
              name + " size differs from manifest intrinsics");
      }
      bundle.AddPair(std::move(pair));
    } else {
      Throw(ErrorCode::kInvalidValue, "unknown manifest keyword " + keyword);
    }
  }
  if (!have_intrinsics) {
    Throw(ErrorCode::kInvalidValue, "manifest has no intrinsics line");
  }
  return bundle;
}

}  // namespace fragsplat
