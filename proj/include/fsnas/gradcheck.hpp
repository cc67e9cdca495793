#pragma once

#include <cstdint>

#include "fsnas/network.hpp"
#include "fsnas/tensor.hpp"

namespace fsnas {

struct GradCheckResult {
  double max_rel_error = 0.0;
  int coordinates = 0;
  /// Coordinates redrawn because a probe flipped a linear_relu unit.
  int skipped_kinks = 0;
};

/// Compares loss_and_grad against central differences (steps 1e-3 and 5e-4
/// combined by one Richardson step, double precision) on `samples`
/// coordinates drawn from stream "gradcheck/coords"; mixture logits are part
/// of the coordinate pool. A coordinate whose probes change the on/off
/// pattern of any linear_relu unit is not differentiable over the probe
/// interval and is replaced by the next draw. Relative error is
/// |a - n| / max(|a|, |n|, 1e-6).
GradCheckResult grad_check(const NetworkDef& def, const WeightStore& weights, const MatrixRM<float>& x,
                           const std::vector<int>& labels, std::uint64_t seed, int samples = 50);

/// Same, with weights initialised per the supernet policy, jittered by
/// N(0, 0.1) so that biases and scales are away from their init values, and
/// a random batch of 8.
GradCheckResult grad_check(const NetworkDef& def, std::uint64_t seed, int samples = 50);

}  // namespace fsnas
