#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "fsnas/dataset.hpp"
#include "fsnas/optim.hpp"
#include "fsnas/space.hpp"
#include "fsnas/supernet.hpp"

namespace fsnas {

/// Training budget in epochs. A supernet trained for E epochs costs E.
struct BudgetConfig {
  /// Defaults to 2 * root_epochs. Use `unlimited` for no cap.
  std::optional<std::int64_t> total_epoch_budget;
  std::optional<double> wall_clock_cap_seconds;
  int root_epochs = 300;
  int child_epochs = 50;
  /// Explicit split order; when absent, edges are drawn uniformly among the
  /// still-compound ones from stream "split-edge".
  std::optional<std::vector<int>> split_edges;
  std::uint64_t seed = 0;

  static constexpr std::int64_t unlimited = INT64_MAX;

  std::int64_t total() const { return total_epoch_budget.value_or(2 * static_cast<std::int64_t>(root_epochs)); }
};

struct TreeConfig {
  BudgetConfig budget;
  /// Schedules for the root and for transferred children; their `epochs`
  /// are taken from the budget.
  TrainHyper root_hyper{300, 128, 0.025, 0.9, 1e-4};
  TrainHyper child_hyper{50, 128, 0.025, 0.9, 1e-4};
  TrainMode mode = TrainMode::SinglePath;
  AdamHyper alpha;
  int jobs = 1;
};

/// levels[id] holds the supernets obtained after `id` split rounds; children
/// of levels[id][p] are contiguous in levels[id + 1], ordered by parent then op.
struct SupernetTree {
  SpacePtr space;
  std::vector<std::vector<Supernet>> levels;
  std::vector<int> split_history;
  std::int64_t spent_epochs = 0;
  /// Epochs spent up to and including each level.
  std::vector<std::int64_t> level_cost;
  TrainMode mode = TrainMode::SinglePath;
  std::uint64_t seed = 0;

  int depth() const { return static_cast<int>(levels.size()) - 1; }
  const std::vector<Supernet>& leaves() const { return levels.back(); }
};

/// Trains the root, then repeatedly splits every leaf on one edge and
/// fine-tunes each child from its parent, stopping before a round whose
/// training would exceed the budget.
SupernetTree run_pipeline(const SpacePtr& space, const Dataset& data, const TreeConfig& config);

/// Seed of supernet `index` at `level` under the pipeline seed.
std::uint64_t tree_member_seed(std::uint64_t pipeline_seed, int level, int index);

/// Index within `level` (default: deepest) of the supernet containing `arch`.
std::size_t route_index(const SupernetTree& tree, const Architecture& arch, int level = -1);
const Supernet& route(const SupernetTree& tree, const Architecture& arch, int level = -1);

}  // namespace fsnas
