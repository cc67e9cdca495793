#include "fsnas/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "fsnas/rng.hpp"
#include "fsnas/supernet.hpp"

namespace fsnas {

namespace {

constexpr double kStep = 1e-3;

struct Coordinate {
  // Tensor name, or empty for a mixture logit on `edge`.
  std::string tensor;
  int edge = -1;
  Eigen::Index index = 0;
};

// On/off state of every linear_relu unit.
std::vector<bool> relu_pattern(const BasicNetworkDef<double>& def, const ForwardCache<double>& cache) {
  std::vector<bool> out;
  for (std::size_t k = 0; k < def.edges.size(); ++k)
    for (std::size_t s = 0; s < def.edges[k].ops.size(); ++s) {
      if (def.space->vocab.at(def.edges[k].ops[s]).kind != OpKind::LinearRelu) continue;
      const auto& y = cache.op_out[k][s];
      for (Eigen::Index i = 0; i < y.size(); ++i) out.push_back(y(i) > 0.0);
    }
  return out;
}

}  // namespace

GradCheckResult grad_check(const NetworkDef& def, const WeightStore& weights, const MatrixRM<float>& x,
                           const std::vector<int>& labels, std::uint64_t seed, int samples) {
  BasicNetworkDef<double> ddef = def.cast<double>();
  BasicWeightStore<double> w;
  for (const auto& name : active_tensors(def)) w.emplace(name, weights.at(name).cast<double>());
  const MatrixRM<double> xd = x.cast<double>();

  const LossGrad<double> analytic = loss_and_grad(ddef, w, xd, labels);

  std::vector<Coordinate> pool;
  for (const auto& [name, t] : w)
    for (Eigen::Index i = 0; i < t.value.size(); ++i) pool.push_back({name, -1, i});
  for (std::size_t k = 0; k < ddef.edges.size(); ++k)
    for (Eigen::Index i = 0; i < ddef.edges[k].logits.size(); ++i) pool.push_back({"", static_cast<int>(k), i});

  ForwardCache<double> cache;
  forward(ddef, w, xd, &cache);
  const std::vector<bool> base_pattern = relu_pattern(ddef, cache);

  RngStream rng(seed, "gradcheck/coords");
  GradCheckResult result;
  std::size_t drawn = 0;
  while (result.coordinates < samples && drawn < pool.size()) {
    // Partial Fisher-Yates: drawn coordinates are a uniform sample without replacement.
    const auto pick = drawn + rng.below(pool.size() - drawn);
    std::swap(pool[drawn], pool[pick]);
    const Coordinate& c = pool[drawn++];

    double* slot = c.tensor.empty() ? &ddef.edges[c.edge].logits(c.index) : &w.at(c.tensor).value(c.index);
    const double a = c.tensor.empty() ? analytic.alpha_grads[c.edge](c.index)
                                      : analytic.grads.at(c.tensor).value(c.index);
    const double saved = *slot;
    bool kink = false;
    auto loss_at = [&](double value) {
      *slot = value;
      const double loss = cross_entropy(forward(ddef, w, xd, &cache), labels);
      kink = kink || relu_pattern(ddef, cache) != base_pattern;
      return loss;
    };
    auto central = [&](double step) { return (loss_at(saved + step) - loss_at(saved - step)) / (2.0 * step); };
    // Richardson step cancels the O(h^2) truncation term.
    const double numeric = (4.0 * central(kStep / 2) - central(kStep)) / 3.0;
    *slot = saved;
    if (kink) {
      ++result.skipped_kinks;
      continue;
    }
    const double denom = std::max({std::abs(a), std::abs(numeric), 1e-6});
    result.max_rel_error = std::max(result.max_rel_error, std::abs(a - numeric) / denom);
    ++result.coordinates;
  }
  return result;
}

GradCheckResult grad_check(const NetworkDef& def, std::uint64_t seed, int samples) {
  Region region{def.space, {}};
  for (const auto& e : def.edges) region.allowed.push_back(e.ops);
  Supernet s = init_supernet(region, def.input_dim, def.num_classes, seed);
  RngStream jitter(seed, "gradcheck/perturb");
  for (auto& [name, t] : s.weights)
    for (Eigen::Index i = 0; i < t.value.size(); ++i)
      t.value(i) += static_cast<float>(0.1 * jitter.normal());

  constexpr int kBatch = 8;
  RngStream data(seed, "gradcheck/data");
  MatrixRM<float> x(kBatch, def.input_dim);
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = static_cast<float>(data.normal());
  std::vector<int> labels(kBatch);
  for (int& l : labels) l = static_cast<int>(data.below(def.num_classes));
  return grad_check(def, s.weights, x, labels, seed, samples);
}

}  // namespace fsnas
