#include "fsnas/search.hpp"

#include <algorithm>
#include <deque>
#include <numeric>
#include <set>

#include "fsnas/error.hpp"
#include "fsnas/parallel.hpp"
#include "fsnas/rng.hpp"
#include "fsnas/supernet.hpp"

namespace fsnas {

const char* to_string(EvaluatorKind kind) {
  switch (kind) {
    case EvaluatorKind::Oracle: return "oracle";
    case EvaluatorKind::OneShot: return "one_shot";
    case EvaluatorKind::FewShot: return "few_shot";
  }
  return "?";
}

Evaluator Evaluator::oracle(const OracleTable& table) {
  return Evaluator(EvaluatorKind::Oracle, &table, nullptr, nullptr, 0);
}

Evaluator Evaluator::one_shot(const SupernetTree& tree, const Dataset& data) {
  return Evaluator(EvaluatorKind::OneShot, nullptr, &tree, &data, 0);
}

Evaluator Evaluator::few_shot(const SupernetTree& tree, const Dataset& data, int level) {
  if (level < 0) level = tree.depth();
  if (level > tree.depth()) throw Error(ErrorCode::InvalidLevel, "level deeper than tree");
  return Evaluator(EvaluatorKind::FewShot, nullptr, &tree, &data, level);
}

double Evaluator::score(const Architecture& arch) {
  const auto it = cache_.find(arch.choice);
  if (it != cache_.end()) return it->second;
  double s = 0.0;
  if (kind_ == EvaluatorKind::Oracle)
    s = table_->at(encode(arch)).valid_acc;
  else
    s = mask_eval(route(*tree_, arch, level_), arch, *data_, SplitName::Valid);
  cache_.emplace(arch.choice, s);
  return s;
}

void validate(const SearchConfig& c) {
  if (c.sample_budget < 1) throw Error(ErrorCode::InvalidConfig, "sample_budget must be >= 1");
  if (c.k < 1) throw Error(ErrorCode::InvalidConfig, "k must be >= 1");
  if (c.tournament < 1 || c.tournament > c.population)
    throw Error(ErrorCode::InvalidConfig, "need 1 <= tournament <= population");
}

namespace {

Architecture uniform_arch(const Region& region, RngStream& rng) {
  Architecture a{region.space, std::vector<int>(region.allowed.size())};
  for (std::size_t k = 0; k < region.allowed.size(); ++k)
    a.choice[k] = region.allowed[k][rng.below(region.allowed[k].size())];
  return a;
}

void record(SearchTrace& trace, const Architecture& arch, double score) {
  trace.steps.push_back({static_cast<int>(trace.steps.size()) + 1, encode(arch), score});
}

}  // namespace

SearchTrace random_search(const Region& space, Evaluator& evaluator, const SearchConfig& config) {
  validate(config);
  RngStream rng(config.seed, "search/random");
  SearchTrace trace{"random", config.seed, to_string(evaluator.kind()), {}};
  if (config.without_replacement) {
    std::vector<Architecture> all = enumerate_region(space);
    for (std::size_t i = all.size(); i > 1; --i) std::swap(all[i - 1], all[rng.below(i)]);
    const std::size_t n = std::min<std::size_t>(all.size(), config.sample_budget);
    for (std::size_t i = 0; i < n; ++i) record(trace, all[i], evaluator.score(all[i]));
    return trace;
  }
  for (int i = 0; i < config.sample_budget; ++i) {
    const Architecture a = uniform_arch(space, rng);
    record(trace, a, evaluator.score(a));
  }
  return trace;
}

Architecture mutate(const Region& space, const Architecture& parent, RngStream& rng) {
  const std::vector<int> open = compound_edges(space);
  if (open.empty()) return parent;
  Architecture child = parent;
  const int edge = open[rng.below(open.size())];
  std::vector<int> others;
  for (int op : space.allowed[edge])
    if (op != parent.choice[edge]) others.push_back(op);
  child.choice[edge] = others[rng.below(others.size())];
  return child;
}

SearchTrace rea_search(const Region& space, Evaluator& evaluator, const SearchConfig& config) {
  validate(config);
  if (config.sample_budget < config.population)
    throw Error(ErrorCode::InvalidConfig, "sample_budget must be >= population");
  // The initial population is exactly random search's first draws.
  RngStream init(config.seed, "search/random");
  RngStream rng(config.seed, "search/rea");
  SearchTrace trace{"rea", config.seed, to_string(evaluator.kind()), {}};

  struct Member {
    Architecture arch;
    double score;
  };
  std::deque<Member> population;
  for (int i = 0; i < config.population; ++i) {
    Architecture a = uniform_arch(space, init);
    const double s = evaluator.score(a);
    record(trace, a, s);
    population.push_back({std::move(a), s});
  }
  std::vector<std::size_t> slots(population.size());
  while (static_cast<int>(trace.steps.size()) < config.sample_budget) {
    std::iota(slots.begin(), slots.end(), 0);
    std::size_t best = population.size();
    for (int t = 0; t < config.tournament; ++t) {
      std::swap(slots[t], slots[t + rng.below(slots.size() - t)]);
      const std::size_t cand = slots[t];
      if (best == population.size() || population[cand].score > population[best].score ||
          (population[cand].score == population[best].score && cand < best))
        best = cand;
    }
    Architecture child = mutate(space, population[best].arch, rng);
    const double s = evaluator.score(child);
    record(trace, child, s);
    population.push_back({std::move(child), s});
    population.pop_front();
  }
  return trace;
}

ReinforcePolicy::ReinforcePolicy(const Region& space) : region_(space) {
  for (const auto& a : space.allowed) theta_.push_back(Vector<double>::Zero(a.size()));
}

std::vector<Vector<double>> ReinforcePolicy::probabilities() const {
  std::vector<Vector<double>> out;
  for (const auto& t : theta_) out.push_back(softmax<double>(t));
  return out;
}

Architecture ReinforcePolicy::sample(RngStream& rng) const {
  Architecture a{region_.space, std::vector<int>(theta_.size())};
  const auto probs = probabilities();
  for (std::size_t k = 0; k < theta_.size(); ++k) {
    const double u = rng.uniform();
    double cumulative = 0.0;
    Eigen::Index pick = probs[k].size() - 1;
    for (Eigen::Index i = 0; i < probs[k].size(); ++i) {
      cumulative += probs[k](i);
      if (u < cumulative) {
        pick = i;
        break;
      }
    }
    a.choice[k] = region_.allowed[k][pick];
  }
  return a;
}

void ReinforcePolicy::update(const Architecture& arch, double advantage, double lr) {
  const auto probs = probabilities();
  for (std::size_t k = 0; k < theta_.size(); ++k) {
    const auto& allowed = region_.allowed[k];
    const auto pos = std::lower_bound(allowed.begin(), allowed.end(), arch.choice[k]) - allowed.begin();
    Vector<double> grad = -probs[k];
    grad(pos) += 1.0;
    theta_[k] += lr * advantage * grad;
  }
}

SearchTrace reinforce_search(const Region& space, Evaluator& evaluator, const SearchConfig& config) {
  validate(config);
  RngStream rng(config.seed, "search/reinforce");
  SearchTrace trace{"reinforce", config.seed, to_string(evaluator.kind()), {}};
  ReinforcePolicy policy(space);
  double baseline = 0.0;
  for (int i = 0; i < config.sample_budget; ++i) {
    const Architecture a = policy.sample(rng);
    const double reward = evaluator.score(a);
    record(trace, a, reward);
    baseline = config.baseline_decay * baseline + (1.0 - config.baseline_decay) * reward;
    policy.update(a, reward - baseline, config.reinforce_lr);
  }
  return trace;
}

std::size_t select_leaf(const SupernetTree& tree) {
  const auto& leaves = tree.leaves();
  std::size_t best = 0;
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    if (!leaves[i].trained() || !leaves[i].mixture || std::isnan(leaves[i].val_loss))
      throw Error(ErrorCode::UntrainedSupernet, "leaf " + std::to_string(i) + " has no trained mixture");
    if (leaves[i].val_loss < leaves[best].val_loss) best = i;
  }
  return best;
}

Architecture gradient_select(const SupernetTree& tree) {
  const Supernet& leaf = tree.leaves()[select_leaf(tree)];
  Architecture a{tree.space, std::vector<int>(leaf.region.allowed.size())};
  for (std::size_t k = 0; k < leaf.region.allowed.size(); ++k) {
    const Vector<float>& alpha = leaf.mixture->alpha[k];
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < alpha.size(); ++i)
      if (alpha(i) > alpha(best)) best = i;
    a.choice[k] = leaf.region.allowed[k][best];
  }
  return a;
}

RetrainResult topk_retrain(const SpacePtr& space, const SearchTrace& trace, int k, const Dataset& data,
                           const TrainHyper& hyper, std::uint64_t oracle_seed, int jobs) {
  if (k < 1) throw Error(ErrorCode::InvalidConfig, "k must be >= 1");
  std::vector<const TraceStep*> ranked;
  for (const auto& s : trace.steps) ranked.push_back(&s);
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const TraceStep* a, const TraceStep* b) { return a->proxy_score > b->proxy_score; });
  std::vector<const TraceStep*> picked;
  std::set<std::string> seen;
  for (const TraceStep* s : ranked) {
    if (static_cast<int>(picked.size()) == k) break;
    if (seen.insert(s->encoding).second) picked.push_back(s);
  }
  if (static_cast<int>(picked.size()) < k)
    throw Error(ErrorCode::InsufficientCandidates, "trace has " + std::to_string(picked.size()) +
                                                       " distinct architectures, need " + std::to_string(k));

  RetrainResult result;
  result.rows.resize(picked.size());
  parallel_for(picked.size(), jobs, [&](std::size_t i) {
    const Architecture arch = decode(space, picked[i]->encoding);
    const Supernet s = train_standalone(arch, data, hyper, oracle_seed);
    result.rows[i] = {picked[i]->encoding, picked[i]->proxy_score, mask_eval(s, arch, data, SplitName::Valid),
                      mask_eval(s, arch, data, SplitName::Test)};
  });
  std::size_t best = 0;
  for (std::size_t i = 1; i < result.rows.size(); ++i)
    if (result.rows[i].test_acc > result.rows[best].test_acc) best = i;
  result.final_arch = decode(space, result.rows[best].encoding);
  return result;
}

}  // namespace fsnas
