#include "fragsplat/pipeline/run_config.h"

#include <charconv>
#include <fstream>
#include <sstream>
#include <variant>

#include "fragsplat/core/error.h"

namespace fragsplat {
namespace {

using Field = std::variant<std::string RunConfig::*, int RunConfig::*, double RunConfig::*,
                           std::uint64_t RunConfig::*, bool RunConfig::*>;

struct Entry {
  const char* key;
  Field field;
};

const std::vector<Entry>& Table() {
  static const std::vector<Entry> table = {
      {"frames", &RunConfig::frames},
      {"bundle", &RunConfig::bundle},
      {"out", &RunConfig::out},
      {"reference", &RunConfig::reference},
      {"fragment_size", &RunConfig::fragment_size},
      {"beta", &RunConfig::beta},
      {"keyframe_iterations", &RunConfig::keyframe_iterations},
      {"keyframe_step", &RunConfig::keyframe_step},
      {"local_iterations", &RunConfig::local_iterations},
      {"merge_iterations", &RunConfig::merge_iterations},
      {"align_iterations", &RunConfig::align_iterations},
      {"align_frames", &RunConfig::align_frames},
      {"pose_step", &RunConfig::pose_step},
      {"ransac_threshold", &RunConfig::ransac_threshold},
      {"ransac_iterations", &RunConfig::ransac_iterations},
      {"seed", &RunConfig::seed},
      {"holdout_every", &RunConfig::holdout_every},
      {"holdout_offset", &RunConfig::holdout_offset},
      {"subsample", &RunConfig::subsample},
      {"synth_frames", &RunConfig::synth_frames},
      {"synth_width", &RunConfig::synth_width},
      {"synth_height", &RunConfig::synth_height},
      {"noise_sigma", &RunConfig::noise_sigma},
      {"outlier_fraction", &RunConfig::outlier_fraction},
      {"pair_rotation_sigma", &RunConfig::pair_rotation_sigma},
      {"scale_jitter_min", &RunConfig::scale_jitter_min},
      {"scale_jitter_max", &RunConfig::scale_jitter_max},
      {"match_stride", &RunConfig::match_stride},
      {"max_matches", &RunConfig::max_matches},
      {"with_objects", &RunConfig::with_objects},
      {"gaussians", &RunConfig::gaussians},
      {"pose", &RunConfig::pose},
      {"image", &RunConfig::image},
  };
  return table;
}

const Entry& Find(const std::string& key) {
  for (const Entry& e : Table()) {
    if (key == e.key) return e;
  }
  Throw(ErrorCode::kBadConfig, "unknown key '" + key + "'");
}

template <typename T>
T ParseNumber(const std::string& key, const std::string& text) {
  T value{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    Throw(ErrorCode::kBadConfig, "bad value '" + text + "' for " + key);
  }
  return value;
}

double ParseDouble(const std::string& key, const std::string& text) {
  std::istringstream in(text);
  double value = 0.0;
  in >> value;
  if (in.fail() || !in.eof()) {
    Throw(ErrorCode::kBadConfig, "bad value '" + text + "' for " + key);
  }
  return value;
}

std::string Trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

const std::vector<std::string>& ConfigKeys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const Entry& e : Table()) out.emplace_back(e.key);
    return out;
  }();
  return keys;
}

void RunConfig::Set(const std::string& key, const std::string& raw) {
  const Entry& entry = Find(key);
  const std::string value = Trim(raw);
  std::visit(
      [&](auto member) {
        using T = std::remove_reference_t<decltype(this->*member)>;
        if constexpr (std::is_same_v<T, std::string>) {
          this->*member = value;
        } else if constexpr (std::is_same_v<T, bool>) {
          if (value == "true" || value == "1") {
            this->*member = true;
          } else if (value == "false" || value == "0") {
            this->*member = false;
          } else {
            Throw(ErrorCode::kBadConfig, "bad boolean '" + value + "' for " + key);
          }
        } else if constexpr (std::is_same_v<T, double>) {
          this->*member = ParseDouble(key, value);
        } else {
          this->*member = ParseNumber<T>(key, value);
        }
      },
      entry.field);
}

std::string RunConfig::Get(const std::string& key) const {
  const Entry& entry = Find(key);
  return std::visit(
      [&](auto member) -> std::string {
        using T = std::remove_cvref_t<decltype(this->*member)>;
        if constexpr (std::is_same_v<T, std::string>) {
          return this->*member;
        } else if constexpr (std::is_same_v<T, bool>) {
          return this->*member ? "true" : "false";
        } else if constexpr (std::is_same_v<T, double>) {
          std::ostringstream out;
          out.precision(17);
          out << this->*member;
          return out.str();
        } else {
          return std::to_string(this->*member);
        }
      },
      entry.field);
}

void RunConfig::Validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) Throw(ErrorCode::kBadConfig, what);
  };
  require(fragment_size >= 2, "fragment_size must be >= 2");
  require(beta > 0.0 && beta < 1.0, "beta must lie in (0, 1)");
  require(keyframe_iterations >= 0 && local_iterations >= 0 && merge_iterations >= 0 &&
              align_iterations >= 0,
          "iteration counts must be >= 0");
  require(keyframe_step > 0.0 && pose_step > 0.0, "steps must be > 0");
  require(align_frames >= 1, "align_frames must be >= 1");
  require(ransac_threshold > 0.0 && ransac_iterations >= 1, "bad RANSAC settings");
  require(holdout_every >= 0 && holdout_every != 1, "holdout_every must be 0 or >= 2");
  require(holdout_offset >= 0 && (holdout_every == 0 || holdout_offset < holdout_every),
          "holdout_offset must lie in [0, holdout_every)");
  require(subsample >= 1, "subsample must be >= 1");
  require(noise_sigma >= 0.0, "noise_sigma must be >= 0");
  require(pair_rotation_sigma >= 0.0, "pair_rotation_sigma must be >= 0");
  require(outlier_fraction >= 0.0 && outlier_fraction < 1.0,
          "outlier_fraction must lie in [0, 1)");
  require(scale_jitter_min > 0.0 && scale_jitter_min <= scale_jitter_max,
          "scale jitter range must be positive and ordered");
}

SceneSpec RunConfig::ToSceneSpec() const {
  SceneSpec spec;
  spec.frame_count = synth_frames;
  spec.width = synth_width;
  spec.height = synth_height;
  spec.with_objects = with_objects;
  spec.match_stride = match_stride;
  spec.max_matches = max_matches;
  spec.seed = seed;
  spec.noise.outlier_fraction = outlier_fraction;
  spec.noise.pair_rotation_sigma = pair_rotation_sigma;
  spec.noise.scale_jitter_min = scale_jitter_min;
  spec.noise.scale_jitter_max = scale_jitter_max;
  // noise_sigma is relative; the caller converts it once the scene exists.
  return spec;
}

void ApplyConfigText(const std::string& text, RunConfig* config) {
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string trimmed = Trim(line.substr(0, line.find('#')));
    if (trimmed.empty()) continue;
    const auto eq = trimmed.find('=');
    if (eq == std::string::npos) {
      Throw(ErrorCode::kBadConfig, "line " + std::to_string(number) + " lacks '='");
    }
    config->Set(Trim(trimmed.substr(0, eq)), trimmed.substr(eq + 1));
  }
}

void ApplyConfigFile(const std::filesystem::path& path, RunConfig* config) {
  std::ifstream in(path);
  if (!in) Throw(ErrorCode::kBadConfig, "cannot read config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  ApplyConfigText(text.str(), config);
}

std::string FormatConfig(const RunConfig& config) {
  std::ostringstream out;
  for (const std::string& key : ConfigKeys()) out << key << " = " << config.Get(key) << "\n";
  return out.str();
}

std::vector<int> HoldoutFrames(int frame_count, int every, int offset) {
  std::vector<int> out;
  if (every <= 0) return out;
  for (int f = 1; f <= frame_count; ++f) {
    if (f % every == offset) out.push_back(f);
  }
  return out;
}

}  // namespace fragsplat
