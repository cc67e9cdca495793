#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fsnas/dataset.hpp"
#include "fsnas/eval.hpp"
#include "fsnas/rng.hpp"
#include "fsnas/tensor.hpp"
#include "fsnas/space.hpp"
#include "fsnas/trace.hpp"
#include "fsnas/tree.hpp"

namespace fsnas {

enum class EvaluatorKind { Oracle, OneShot, FewShot };

const char* to_string(EvaluatorKind kind);

/// Scores architectures by oracle lookup or by masked supernet accuracy on
/// the valid split. Scores are memoised, so repeated queries agree.
class Evaluator {
public:
  static Evaluator oracle(const OracleTable& table);
  /// Level 0 of the tree.
  static Evaluator one_shot(const SupernetTree& tree, const Dataset& data);
  /// `level` defaults to the deepest.
  static Evaluator few_shot(const SupernetTree& tree, const Dataset& data, int level = -1);

  double score(const Architecture& arch);

  EvaluatorKind kind() const { return kind_; }
  std::size_t cache_size() const { return cache_.size(); }

private:
  Evaluator(EvaluatorKind kind, const OracleTable* table, const SupernetTree* tree, const Dataset* data, int level)
      : kind_(kind), table_(table), tree_(tree), data_(data), level_(level) {}

  EvaluatorKind kind_;
  const OracleTable* table_;
  const SupernetTree* tree_;
  const Dataset* data_;
  int level_;
  std::map<std::vector<int>, double> cache_;
};

struct SearchConfig {
  int sample_budget = 50;
  int k = 5;
  int population = 20;
  int tournament = 5;
  double reinforce_lr = 0.05;
  double baseline_decay = 0.9;
  /// Random search only: draw without replacement.
  bool without_replacement = false;
  std::uint64_t seed = 0;
};

void validate(const SearchConfig& config);

/// Uniform sampling from stream "search/random".
SearchTrace random_search(const Region& space, Evaluator& evaluator, const SearchConfig& config);

/// Aging evolution: tournament of `tournament` drawn from the population,
/// single-edge mutation of the winner, oldest member evicted. The initial
/// population is drawn from stream "search/random" (the same draws as
/// random_search), the rest from "search/rea".
SearchTrace rea_search(const Region& space, Evaluator& evaluator, const SearchConfig& config);

/// Mutation used by REA: one compound edge, a different op, uniformly.
Architecture mutate(const Region& space, const Architecture& parent, RngStream& rng);

/// Independent categorical per edge over the region's allowed ops.
class ReinforcePolicy {
public:
  explicit ReinforcePolicy(const Region& space);

  Architecture sample(RngStream& rng) const;
  /// theta <- theta + lr * advantage * grad log pi(arch).
  void update(const Architecture& arch, double advantage, double lr);
  std::vector<Vector<double>> probabilities() const;
  const std::vector<Vector<double>>& logits() const { return theta_; }

private:
  Region region_;
  std::vector<Vector<double>> theta_;
};

/// REINFORCE with an EMA baseline, stream "search/reinforce".
SearchTrace reinforce_search(const Region& space, Evaluator& evaluator, const SearchConfig& config);

/// Leaf with the lowest mixture validation loss, ties to the lowest index.
std::size_t select_leaf(const SupernetTree& tree);

/// Per-edge argmax of the selected leaf's alpha (ties to the lowest op id).
Architecture gradient_select(const SupernetTree& tree);

struct RetrainRow {
  std::string encoding;
  double proxy_score = 0.0;
  double valid_acc = 0.0;
  double test_acc = 0.0;
};

struct RetrainResult {
  Architecture final_arch;
  std::vector<RetrainRow> rows;
};

/// Retrains the K distinct best-proxy architectures of a trace from scratch
/// with the oracle schedule and picks the lowest test error.
RetrainResult topk_retrain(const SpacePtr& space, const SearchTrace& trace, int k, const Dataset& data,
                           const TrainHyper& hyper, std::uint64_t oracle_seed, int jobs = 1);

}  // namespace fsnas
