#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fragsplat {

enum class ErrorCode {
  // scene-core
  kBehindCamera,
  kNonPositiveDepth,
  // prior-provider
  kBadMagic,
  kVersionMismatch,
  kDimensionMismatch,
  kTruncatedFile,
  kInvalidValue,
  kFrameOutOfRange,
  // fragment-registration
  kTooFewFrames,
  kDisconnectedGraph,
  kMissingPair,
  kEmptyIntersection,
  kInsufficientCorrespondences,
  kNoConsensus,
  kZeroNormPoint,
  // splat-model / renderer / optimizer
  kMissingPointmap,
  kStaleForwardState,
  kNoFrames,
  // metrics
  kIndexMismatch,
  kTooFewPoses,
  // cli / pipeline
  kBadBundlePath,
  kMissingReconstruction,
  kBadSpec,
  kBadConfig,
  kIoError,
  kInvalidArgument,
};

// Stable name used in messages and the CLI error line, e.g. "BadMagic".
std::string_view ErrorCodeName(ErrorCode code);

// Module that owns the code, e.g. "prior-provider".
std::string_view ErrorModule(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void Throw(ErrorCode code, const std::string& message);

}  // namespace fragsplat
