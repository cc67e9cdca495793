#include "fsnas/eval.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>

#include "fsnas/error.hpp"
#include "fsnas/parallel.hpp"
#include "fsnas/supernet.hpp"

namespace fsnas {

const OracleRecord* OracleTable::find(const std::string& encoding) const {
  if (index_.size() != records.size()) {
    for (const auto& r : records)
      if (r.encoding == encoding) return &r;
    return nullptr;
  }
  const auto it = index_.find(encoding);
  return it == index_.end() ? nullptr : &records[it->second];
}

const OracleRecord& OracleTable::at(const std::string& encoding) const {
  const OracleRecord* r = find(encoding);
  if (!r) throw Error(ErrorCode::MissingTruth, "no oracle record for architecture " + encoding);
  return *r;
}

double OracleTable::best_valid() const {
  double best = 0.0;
  for (const auto& r : records) best = std::max(best, r.valid_acc);
  return best;
}

void OracleTable::reindex() {
  index_.clear();
  for (std::size_t i = 0; i < records.size(); ++i) index_[records[i].encoding] = i;
}

OracleTable train_oracle(const Region& region, const Dataset& data, const TrainHyper& hyper, std::uint64_t seed,
                         const OracleOptions& options) {
  const std::uint64_t size = region_size(region);
  if (size > options.cap)
    throw Error(ErrorCode::CapExceeded, "region has " + std::to_string(size) +
                                            " architectures; raise the oracle cap to at least " +
                                            std::to_string(size));
  const std::vector<Architecture> archs = enumerate_region(region, options.cap);
  OracleTable table;
  table.seed = seed;
  table.schedule = hyper;
  table.records.resize(archs.size());

  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < archs.size(); ++i) {
    const std::string enc = encode(archs[i]);
    const OracleRecord* done = options.partial ? options.partial->find(enc) : nullptr;
    if (done)
      table.records[i] = *done;
    else
      todo.push_back(i);
  }

  std::mutex emit;
  parallel_for(todo.size(), options.jobs, [&](std::size_t t) {
    const Architecture& arch = archs[todo[t]];
    const Supernet s = train_standalone(arch, data, hyper, seed);
    OracleRecord rec;
    rec.encoding = encode(arch);
    rec.valid_acc = mask_eval(s, arch, data, SplitName::Valid);
    rec.test_acc = mask_eval(s, arch, data, SplitName::Test);
    rec.reachable = is_reachable(arch);
    rec.train_epochs = s.trained_epochs;
    table.records[todo[t]] = rec;
    if (options.on_record) {
      std::lock_guard lock(emit);
      options.on_record(rec);
    }
  });
  table.reindex();
  return table;
}

namespace {

// Counts pairs (i < j) with y[i] > y[j] while stably sorting y.
std::int64_t merge_count(std::vector<double>& y, std::vector<double>& buffer, std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::int64_t swaps = merge_count(y, buffer, lo, mid) + merge_count(y, buffer, mid, hi);
  std::size_t a = lo, b = mid, out = lo;
  while (a < mid && b < hi) {
    if (y[a] <= y[b]) {
      buffer[out++] = y[a++];
    } else {
      swaps += static_cast<std::int64_t>(mid - a);
      buffer[out++] = y[b++];
    }
  }
  while (a < mid) buffer[out++] = y[a++];
  while (b < hi) buffer[out++] = y[b++];
  std::copy(buffer.begin() + lo, buffer.begin() + hi, y.begin() + lo);
  return swaps;
}

std::int64_t tied_pairs(const std::vector<double>& sorted) {
  std::int64_t total = 0;
  std::size_t run = 1;
  for (std::size_t i = 1; i <= sorted.size(); ++i) {
    if (i < sorted.size() && sorted[i] == sorted[i - 1]) {
      ++run;
    } else {
      total += static_cast<std::int64_t>(run * (run - 1) / 2);
      run = 1;
    }
  }
  return total;
}

}  // namespace

TauResult kendall_tau(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size()) throw Error(ErrorCode::Shape, "kendall_tau: score vectors differ in length");
  if (xs.size() < 2) throw Error(ErrorCode::Shape, "kendall_tau: need at least 2 scores");
  const std::size_t n = xs.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return xs[a] < xs[b] || (xs[a] == xs[b] && ys[a] < ys[b]);
  });

  std::int64_t tie_x = 0, tie_xy = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && xs[order[j]] == xs[order[i]]) ++j;
    tie_x += static_cast<std::int64_t>((j - i) * (j - i - 1) / 2);
    for (std::size_t a = i; a < j;) {
      std::size_t b = a;
      while (b < j && ys[order[b]] == ys[order[a]]) ++b;
      tie_xy += static_cast<std::int64_t>((b - a) * (b - a - 1) / 2);
      a = b;
    }
    i = j;
  }

  std::vector<double> y(n), buffer(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = ys[order[i]];
  const std::int64_t swaps = merge_count(y, buffer, 0, n);
  const std::int64_t tie_y = tied_pairs(y);

  const std::int64_t pairs = static_cast<std::int64_t>(n * (n - 1) / 2);
  if (tie_x == pairs || tie_y == pairs)
    throw Error(ErrorCode::UndefinedTau, "kendall_tau: all values tied on one side");

  TauResult r;
  r.discordant = swaps;
  r.concordant = pairs - tie_x - tie_y + tie_xy - swaps;
  r.ties_x = tie_x - tie_xy;
  r.ties_y = tie_y - tie_xy;
  const double num = static_cast<double>(r.concordant - r.discordant);
  const double left = static_cast<double>(r.concordant + r.discordant + r.ties_x);
  const double right = static_cast<double>(r.concordant + r.discordant + r.ties_y);
  r.tau = num / std::sqrt(left * right);
  return r;
}

CorrelationReport correlation_report(const SupernetTree& tree, const OracleTable& oracle, int level,
                                     const Dataset& data) {
  if (level < 0 || level > tree.depth())
    throw Error(ErrorCode::InvalidLevel, "level " + std::to_string(level) + " not in tree of depth " +
                                             std::to_string(tree.depth()));
  CorrelationReport report;
  report.level = level;
  report.supernet_count = static_cast<int>(tree.levels[level].size());
  report.split_edges.assign(tree.split_history.begin(), tree.split_history.begin() + level);
  report.seed = tree.seed;
  report.cost_epochs = tree.level_cost.at(level);
  for (const auto& rec : oracle.records) {
    const Architecture arch = decode(tree.space, rec.encoding);
    report.proxy.push_back(mask_eval(route(tree, arch, level), arch, data, SplitName::Valid));
    report.truth.push_back(rec.valid_acc);
  }
  report.tau = kendall_tau(report.proxy, report.truth);
  return report;
}

std::vector<double> best_so_far_trace(const SearchTrace& trace, const OracleTable& oracle) {
  std::vector<double> series;
  double best = -1.0;
  for (const auto& step : trace.steps) {
    best = std::max(best, oracle.at(step.encoding).valid_acc);
    series.push_back(best);
  }
  return series;
}

}  // namespace fsnas
