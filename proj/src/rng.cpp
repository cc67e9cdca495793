#include "fsnas/rng.hpp"

#include <cmath>
#include <numbers>

#include "fsnas/error.hpp"

namespace fsnas {

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::uint64_t RngStream::below(std::uint64_t bound) {
  if (bound <= 1) return 0;
  // Largest multiple of bound representable; draws above it are rejected.
  const std::uint64_t limit = (~std::uint64_t{0} / bound) * bound;
  std::uint64_t x = engine_();
  while (x >= limit) x = engine_();
  return x % bound;
}

double RngStream::normal() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  cached_ = radius * std::sin(angle);
  has_cached_ = true;
  return radius * std::cos(angle);
}

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidSpace: return "invalid-space";
    case ErrorCode::AlreadySplit: return "already-split";
    case ErrorCode::EnumerationTooLarge: return "enumeration-too-large";
    case ErrorCode::SpaceMismatch: return "space-mismatch";
    case ErrorCode::Parse: return "parse";
    case ErrorCode::InvalidConfig: return "invalid-config";
    case ErrorCode::Shape: return "shape";
    case ErrorCode::Divergence: return "divergence";
    case ErrorCode::OutOfRegion: return "out-of-region";
    case ErrorCode::RegionMismatch: return "region-mismatch";
    case ErrorCode::InvalidBudget: return "invalid-budget";
    case ErrorCode::UndefinedTau: return "undefined-tau";
    case ErrorCode::InvalidLevel: return "invalid-level";
    case ErrorCode::MissingTruth: return "missing-truth";
    case ErrorCode::UntrainedSupernet: return "untrained-supernet";
    case ErrorCode::InsufficientCandidates: return "insufficient-candidates";
    case ErrorCode::CapExceeded: return "cap-exceeded";
    case ErrorCode::CorruptCheckpoint: return "corrupt-checkpoint";
    case ErrorCode::UnsupportedVersion: return "unsupported-version";
    case ErrorCode::Io: return "io";
    case ErrorCode::Usage: return "usage";
    case ErrorCode::NoEvaluator: return "no-evaluator";
  }
  return "unknown";
}

}  // namespace fsnas
