#pragma once

#include <stdexcept>
#include <string>

namespace fsnas {

enum class ErrorCode {
  InvalidSpace,
  AlreadySplit,
  EnumerationTooLarge,
  SpaceMismatch,
  Parse,
  InvalidConfig,
  Shape,
  Divergence,
  OutOfRegion,
  RegionMismatch,
  InvalidBudget,
  UndefinedTau,
  InvalidLevel,
  MissingTruth,
  UntrainedSupernet,
  InsufficientCandidates,
  CapExceeded,
  CorruptCheckpoint,
  UnsupportedVersion,
  Io,
  Usage,
  NoEvaluator,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

}  // namespace fsnas
