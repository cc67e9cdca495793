#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fsnas/tensor.hpp"

namespace fsnas {

struct TrainHyper {
  int epochs = 150;
  int batch_size = 128;
  double lr0 = 0.025;
  double momentum = 0.9;
  double weight_decay = 3e-4;
};

/// Validates ranges; `train_size` bounds the batch.
void validate(const TrainHyper& hyper, int train_size);

/// lr0 * 0.5 * (1 + cos(pi * step / total_steps)).
double cosine_lr(double lr0, std::int64_t step, std::int64_t total_steps);

/// Momentum buffers keyed by tensor name, created lazily on first update.
using SgdState = std::map<std::string, MatrixRM<float>>;

/// Rows of `name` that receive weight decay: none for rank-1 tensors, all
/// but the trailing bias row for stem/head, all rows otherwise.
Eigen::Index decayed_rows(const std::string& name, const Tensor& t);

/// Updates exactly the tensors present in `grads`:
///   v <- momentum * v + g + wd * w;  w <- w - lr(step) * v
void sgd_step(WeightStore& weights, SgdState& state, const WeightStore& grads, const TrainHyper& hyper,
              std::int64_t step, std::int64_t total_steps);

struct AdamHyper {
  double lr = 3e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double weight_decay = 1e-3;
  double eps = 1e-8;
};

/// Adam over a list of vectors (one per edge); the L2 term is added to the gradient.
struct AdamState {
  std::vector<Vector<float>> m;
  std::vector<Vector<float>> v;
  std::int64_t step = 0;
};

void adam_step(std::vector<Vector<float>>& params, AdamState& state, const std::vector<Vector<float>>& grads,
               const AdamHyper& hyper);

}  // namespace fsnas
