#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace fsnas {

/// 64-bit FNV-1a over the bytes of `text`.
std::uint64_t fnv1a64(std::string_view text);

/// Seed of the stream named `label` under `master`: fnv1a64(label) ^ master.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view label) {
  return fnv1a64(label) ^ master;
}

/// A labelled random stream. Distributions are written out here instead of
/// using <random>'s, whose output is implementation-defined; mt19937_64
/// itself is fully specified, so streams are portable across toolchains.
class RngStream {
public:
  RngStream(std::uint64_t master, std::string_view label)
      : engine_(derive_seed(master, label)) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, bound). Rejection sampling, no modulo bias.
  std::uint64_t below(std::uint64_t bound);

  /// Standard normal via Box-Muller; the second variate is cached.
  double normal();

private:
  std::mt19937_64 engine_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace fsnas
