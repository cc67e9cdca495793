#include "fsnas/tree.hpp"

#include <chrono>

#include "fsnas/error.hpp"
#include "fsnas/parallel.hpp"
#include "fsnas/rng.hpp"

namespace fsnas {

std::uint64_t tree_member_seed(std::uint64_t pipeline_seed, int level, int index) {
  if (level == 0) return derive_seed(pipeline_seed, "root");
  return derive_seed(pipeline_seed, "L" + std::to_string(level) + "/N" + std::to_string(index));
}

SupernetTree run_pipeline(const SpacePtr& space, const Dataset& data, const TreeConfig& config) {
  const BudgetConfig& budget = config.budget;
  if (budget.root_epochs < 0 || budget.child_epochs < 0)
    throw Error(ErrorCode::InvalidBudget, "epoch counts must be non-negative");
  if (budget.total() < budget.root_epochs)
    throw Error(ErrorCode::InvalidBudget, "total epoch budget " + std::to_string(budget.total()) +
                                              " is smaller than root_epochs " + std::to_string(budget.root_epochs));
  const auto started = std::chrono::steady_clock::now();
  const bool with_mixture = config.mode == TrainMode::Mixture;

  TrainHyper root_hyper = config.root_hyper;
  root_hyper.epochs = budget.root_epochs;
  TrainHyper child_hyper = config.child_hyper;
  child_hyper.epochs = budget.child_epochs;
  TrainOptions options;
  options.alpha = config.alpha;

  SupernetTree tree;
  tree.space = space;
  tree.mode = config.mode;
  tree.seed = budget.seed;

  Supernet root = init_supernet(root_region(space), data.input_dim(), data.num_classes(),
                                tree_member_seed(budget.seed, 0, 0), with_mixture);
  train_supernet(root, data, root_hyper, config.mode, options);
  tree.spent_epochs = budget.root_epochs;
  tree.levels.push_back({std::move(root)});
  tree.level_cost.push_back(tree.spent_epochs);

  RngStream edge_rng(budget.seed, "split-edge");
  std::size_t next_explicit = 0;
  while (true) {
    const std::vector<Supernet>& parents = tree.levels.back();
    const std::vector<int> open = compound_edges(parents.front().region);
    int edge = -1;
    if (budget.split_edges) {
      if (next_explicit >= budget.split_edges->size()) break;
      edge = (*budget.split_edges)[next_explicit];
    } else {
      if (open.empty()) break;
      edge = open[edge_rng.below(open.size())];
    }
    if (budget.wall_clock_cap_seconds) {
      const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - started;
      if (elapsed.count() >= *budget.wall_clock_cap_seconds) break;
    }

    std::vector<std::pair<std::size_t, Region>> plan;
    for (std::size_t p = 0; p < parents.size(); ++p)
      for (Region& r : split_region(parents[p].region, edge)) plan.emplace_back(p, std::move(r));
    const std::int64_t cost = static_cast<std::int64_t>(plan.size()) * budget.child_epochs;
    if (cost > budget.total() - tree.spent_epochs) break;
    ++next_explicit;

    const int level = tree.depth() + 1;
    std::vector<Supernet> children(plan.size());
    parallel_for(plan.size(), config.jobs, [&](std::size_t c) {
      Supernet child = transfer_from(parents[plan[c].first], plan[c].second,
                                     tree_member_seed(budget.seed, level, static_cast<int>(c)));
      train_supernet(child, data, child_hyper, config.mode, options);
      children[c] = std::move(child);
    });
    tree.spent_epochs += cost;
    tree.split_history.push_back(edge);
    tree.levels.push_back(std::move(children));
    tree.level_cost.push_back(tree.spent_epochs);
  }
  return tree;
}

std::size_t route_index(const SupernetTree& tree, const Architecture& arch, int level) {
  if (level < 0) level = tree.depth();
  if (level > tree.depth())
    throw Error(ErrorCode::InvalidLevel, "level " + std::to_string(level) + " is deeper than the tree");
  const auto& members = tree.levels[level];
  for (std::size_t i = 0; i < members.size(); ++i)
    if (contains(members[i].region, arch)) return i;
  throw Error(ErrorCode::OutOfRegion, "architecture " + encode(arch) + " is not covered by the tree");
}

const Supernet& route(const SupernetTree& tree, const Architecture& arch, int level) {
  if (level < 0) level = tree.depth();
  return tree.levels.at(level).at(route_index(tree, arch, level));
}

}  // namespace fsnas
