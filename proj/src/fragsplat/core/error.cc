#include "fragsplat/core/error.h"

namespace fragsplat {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kBehindCamera: return "BehindCamera";
    case ErrorCode::kNonPositiveDepth: return "NonPositiveDepth";
    case ErrorCode::kBadMagic: return "BadMagic";
    case ErrorCode::kVersionMismatch: return "VersionMismatch";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kTruncatedFile: return "TruncatedFile";
    case ErrorCode::kInvalidValue: return "InvalidValue";
    case ErrorCode::kFrameOutOfRange: return "FrameOutOfRange";
    case ErrorCode::kTooFewFrames: return "TooFewFrames";
    case ErrorCode::kDisconnectedGraph: return "DisconnectedGraph";
    case ErrorCode::kMissingPair: return "MissingPair";
    case ErrorCode::kEmptyIntersection: return "EmptyIntersection";
    case ErrorCode::kInsufficientCorrespondences: return "InsufficientCorrespondences";
    case ErrorCode::kNoConsensus: return "NoConsensus";
    case ErrorCode::kZeroNormPoint: return "ZeroNormPoint";
    case ErrorCode::kMissingPointmap: return "MissingPointmap";
    case ErrorCode::kStaleForwardState: return "StaleForwardState";
    case ErrorCode::kNoFrames: return "NoFrames";
    case ErrorCode::kIndexMismatch: return "IndexMismatch";
    case ErrorCode::kTooFewPoses: return "TooFewPoses";
    case ErrorCode::kBadBundlePath: return "BadBundlePath";
    case ErrorCode::kMissingReconstruction: return "MissingReconstruction";
    case ErrorCode::kBadSpec: return "BadSpec";
    case ErrorCode::kBadConfig: return "BadConfig";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

std::string_view ErrorModule(ErrorCode code) {
  switch (code) {
    case ErrorCode::kBehindCamera:
    case ErrorCode::kNonPositiveDepth:
      return "scene-core";
    case ErrorCode::kBadMagic:
    case ErrorCode::kVersionMismatch:
    case ErrorCode::kDimensionMismatch:
    case ErrorCode::kTruncatedFile:
    case ErrorCode::kInvalidValue:
    case ErrorCode::kFrameOutOfRange:
      return "prior-provider";
    case ErrorCode::kTooFewFrames:
    case ErrorCode::kDisconnectedGraph:
    case ErrorCode::kMissingPair:
    case ErrorCode::kEmptyIntersection:
    case ErrorCode::kInsufficientCorrespondences:
    case ErrorCode::kNoConsensus:
    case ErrorCode::kZeroNormPoint:
      return "fragment-registration";
    case ErrorCode::kMissingPointmap:
      return "splat-model";
    case ErrorCode::kStaleForwardState:
      return "splat-renderer";
    case ErrorCode::kNoFrames:
      return "optimizer";
    case ErrorCode::kIndexMismatch:
    case ErrorCode::kTooFewPoses:
      return "metrics-eval";
    case ErrorCode::kBadBundlePath:
    case ErrorCode::kMissingReconstruction:
    case ErrorCode::kBadSpec:
    case ErrorCode::kBadConfig:
    case ErrorCode::kIoError:
    case ErrorCode::kInvalidArgument:
      return "cli";
  }
  return "unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(ErrorModule(code)) + "::" +
                         std::string(ErrorCodeName(code)) + ": " + message),
      code_(code) {}

void Throw(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace fragsplat
