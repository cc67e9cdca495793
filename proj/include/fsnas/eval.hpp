#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fsnas/dataset.hpp"
#include "fsnas/optim.hpp"
#include "fsnas/space.hpp"
#include "fsnas/trace.hpp"
#include "fsnas/tree.hpp"

namespace fsnas {

struct OracleRecord {
  std::string encoding;
  double valid_acc = 0.0;
  double test_acc = 0.0;
  bool reachable = true;
  int train_epochs = 0;
};

/// Ground truth from training every architecture of a region from scratch.
struct OracleTable {
  std::vector<OracleRecord> records;
  std::uint64_t seed = 0;
  TrainHyper schedule;

  const OracleRecord* find(const std::string& encoding) const;
  /// Throws MissingTruth.
  const OracleRecord& at(const std::string& encoding) const;
  /// Highest valid_acc in the table.
  double best_valid() const;

  void reindex();

private:
  std::map<std::string, std::size_t> index_;
};

struct OracleOptions {
  std::uint64_t cap = 1296;
  int jobs = 1;
  /// Records reused instead of retrained (resume).
  const OracleTable* partial = nullptr;
  /// Called after each newly trained record, serialised.
  std::function<void(const OracleRecord&)> on_record;
};

/// Trains every architecture of `region` with seed stream "oracle/<encoding>"
/// under `seed`. Records are in enumeration order.
OracleTable train_oracle(const Region& region, const Dataset& data, const TrainHyper& hyper, std::uint64_t seed,
                         const OracleOptions& options = {});

struct TauResult {
  double tau = 0.0;
  std::int64_t concordant = 0;
  std::int64_t discordant = 0;
  /// Pairs tied in x only / in y only. Pairs tied in both are excluded.
  std::int64_t ties_x = 0;
  std::int64_t ties_y = 0;
};

/// Kendall's tau-b in O(n log n) (Knight's merge-sort counting).
/// Throws UndefinedTau if either side is constant, Shape on bad lengths.
TauResult kendall_tau(const std::vector<double>& xs, const std::vector<double>& ys);

struct CorrelationReport {
  int level = 0;
  int supernet_count = 0;
  std::vector<int> split_edges;
  std::uint64_t seed = 0;
  TauResult tau;
  std::int64_t cost_epochs = 0;
  std::vector<double> proxy;
  std::vector<double> truth;
};

/// Proxy = mask_eval on the valid split via the level's routed supernet,
/// truth = oracle valid_acc, over every oracle record.
CorrelationReport correlation_report(const SupernetTree& tree, const OracleTable& oracle, int level,
                                     const Dataset& data);

/// series[i] = best true valid_acc among the first i + 1 trace steps.
std::vector<double> best_so_far_trace(const SearchTrace& trace, const OracleTable& oracle);

}  // namespace fsnas
