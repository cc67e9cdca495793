#include "fsnas/optim.hpp"

#include <cmath>
#include <numbers>

#include "fsnas/error.hpp"

namespace fsnas {

void validate(const TrainHyper& hyper, int train_size) {
  if (hyper.epochs < 0) throw Error(ErrorCode::InvalidConfig, "epochs must be >= 0");
  if (hyper.batch_size < 1 || hyper.batch_size > train_size)
    throw Error(ErrorCode::InvalidConfig, "batch_size must be in [1, train split size]");
  if (!(hyper.lr0 > 0.0)) throw Error(ErrorCode::InvalidConfig, "lr0 must be positive");
  if (hyper.momentum < 0.0 || hyper.weight_decay < 0.0)
    throw Error(ErrorCode::InvalidConfig, "momentum and weight_decay must be non-negative");
}

double cosine_lr(double lr0, std::int64_t step, std::int64_t total_steps) {
  if (total_steps <= 0) return lr0;
  const double progress = static_cast<double>(step) / static_cast<double>(total_steps);
  return lr0 * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

Eigen::Index decayed_rows(const std::string& name, const Tensor& t) {
  if (t.shape.size() == 1) return 0;
  if (name == "stem" || name == "head") return t.value.rows() - 1;
  return t.value.rows();
}

void sgd_step(WeightStore& weights, SgdState& state, const WeightStore& grads, const TrainHyper& hyper,
              std::int64_t step, std::int64_t total_steps) {
  const float lr = static_cast<float>(cosine_lr(hyper.lr0, step, total_steps));
  const float mu = static_cast<float>(hyper.momentum);
  const float wd = static_cast<float>(hyper.weight_decay);
  for (const auto& [name, g] : grads) {
    Tensor& w = weights.at(name);
    auto [it, fresh] = state.try_emplace(name);
    MatrixRM<float>& v = it->second;
    if (fresh) v = MatrixRM<float>::Zero(w.value.rows(), w.value.cols());
    v = mu * v + g.value;
    const Eigen::Index rows = decayed_rows(name, w);
    if (rows > 0 && wd != 0.0f) v.topRows(rows) += wd * w.value.topRows(rows);
    w.value -= lr * v;
  }
}

void adam_step(std::vector<Vector<float>>& params, AdamState& state, const std::vector<Vector<float>>& grads,
               const AdamHyper& hyper) {
  if (state.m.size() != params.size()) {
    state.m.clear();
    state.v.clear();
    for (const auto& p : params) {
      state.m.push_back(Vector<float>::Zero(p.size()));
      state.v.push_back(Vector<float>::Zero(p.size()));
    }
  }
  ++state.step;
  const float b1 = static_cast<float>(hyper.beta1);
  const float b2 = static_cast<float>(hyper.beta2);
  const float lr = static_cast<float>(hyper.lr);
  const float wd = static_cast<float>(hyper.weight_decay);
  const float eps = static_cast<float>(hyper.eps);
  const float c1 = 1.0f - static_cast<float>(std::pow(hyper.beta1, static_cast<double>(state.step)));
  const float c2 = 1.0f - static_cast<float>(std::pow(hyper.beta2, static_cast<double>(state.step)));
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (grads[k].size() == 0) continue;
    const Vector<float> g = grads[k] + wd * params[k];
    state.m[k] = b1 * state.m[k] + (1.0f - b1) * g;
    state.v[k] = b2 * state.v[k] + (1.0f - b2) * g.cwiseProduct(g);
    const auto mhat = state.m[k].array() / c1;
    const auto vhat = state.v[k].array() / c2;
    params[k].array() -= lr * mhat / (vhat.sqrt() + eps);
  }
}

}  // namespace fsnas
