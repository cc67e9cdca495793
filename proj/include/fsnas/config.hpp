#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fsnas/dataset.hpp"
#include "fsnas/optim.hpp"
#include "fsnas/search.hpp"
#include "fsnas/space.hpp"
#include "fsnas/supernet.hpp"
#include "fsnas/tree.hpp"

namespace fsnas {

struct SpaceConfig {
  int nodes = 3;
  int hidden_width = 16;
  /// Op kinds in id order; names follow default_vocab's suffix rule.
  std::vector<OpKind> vocab{OpKind::Zero, OpKind::Identity, OpKind::LinearRelu, OpKind::LinearTanh,
                            OpKind::DiagScale};
};

struct TrainingConfig {
  TrainHyper oracle{150, 128, 0.025, 0.9, 3e-4};
  TrainHyper root{300, 128, 0.025, 0.9, 1e-4};
  TrainHyper child{50, 128, 0.025, 0.9, 1e-4};
  AdamHyper alpha;
  TrainMode mode = TrainMode::SinglePath;
  std::uint64_t oracle_cap = 1296;
};

struct SplitConfig {
  /// Absent means 2 x root epochs; BudgetConfig::unlimited for no cap.
  std::optional<std::int64_t> total_epoch_budget;
  std::optional<double> wall_clock_cap_seconds;
  std::optional<std::vector<int>> edges;
};

struct SearchSection {
  std::string algorithm = "rea";
  /// auto | oracle | one_shot | few_shot
  std::string evaluator = "auto";
  SearchConfig params;
};

struct OutputConfig {
  std::string directory = "out";
  std::vector<std::string> formats{"csv"};
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  int jobs = 1;
  DatasetConfig dataset;
  SpaceConfig space;
  TrainingConfig training;
  SplitConfig split;
  SearchSection search;
  OutputConfig output;

  SpacePtr build() const;
  TreeConfig tree_config() const;
};

/// Parses a JSON config; every field is optional and unknown keys are
/// rejected. Errors are InvalidConfig with the line or dotted field name.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace fsnas
