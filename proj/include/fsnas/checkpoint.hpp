#pragma once

// Checkpoint container (".fsns"):
//
//   bytes 0..3   magic "FSNS"
//   bytes 4..7   version, u32 little-endian (= 1)
//   bytes 8..15  manifest length in bytes, u64 little-endian
//   manifest     UTF-8 JSON: space, region, tensor index, optimiser-state
//                index, trained_epochs, alpha, rng labels
//   payload      little-endian f32, tensors in index order, then state
//
// Each index entry is {name, shape, offset, count}; offsets are byte offsets
// into the payload and must be contiguous in index order.

#include <cstdint>
#include <filesystem>
#include <string>

#include "fsnas/supernet.hpp"
#include "fsnas/tree.hpp"

namespace fsnas {

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const Supernet& s, const std::filesystem::path& path);
Supernet load_checkpoint(const std::filesystem::path& path);

struct CheckpointSummary {
  std::uint32_t version = 0;
  std::size_t tensor_count = 0;
  std::size_t state_count = 0;
  std::uint64_t payload_bytes = 0;
  std::uint64_t region_size = 0;
  int trained_epochs = 0;
  bool has_alpha = false;
};

/// Checks every structural invariant without reading tensor values into a
/// supernet. Throws CorruptCheckpoint / UnsupportedVersion naming the violation.
CheckpointSummary validate_checkpoint(const std::filesystem::path& path);

/// Writes "tree-manifest.json" plus one "L<level>_N<index>.fsns" per supernet.
void save_tree(const SupernetTree& tree, const std::filesystem::path& dir);
SupernetTree load_tree(const std::filesystem::path& dir);

}  // namespace fsnas
