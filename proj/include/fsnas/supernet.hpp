#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "fsnas/dataset.hpp"
#include "fsnas/network.hpp"
#include "fsnas/optim.hpp"
#include "fsnas/space.hpp"

namespace fsnas {

enum class TrainMode { SinglePath, Mixture };

const char* to_string(TrainMode mode);
TrainMode train_mode_from_string(const std::string& name);

/// Architecture distribution parameters: one logit vector per edge, sized
/// like the edge's allowed set.
struct MixtureParams {
  std::vector<Vector<float>> alpha;
  AdamState optimizer;

  /// softmax(alpha[k]) per edge.
  std::vector<Vector<float>> coefficients() const;
};

/// A weight-sharing network over a region.
struct Supernet {
  Region region;
  WeightStore weights;
  SgdState momentum;
  std::optional<MixtureParams> mixture;
  int trained_epochs = 0;
  double val_loss = std::numeric_limits<double>::quiet_NaN();
  /// Master seed of every stream this supernet draws from.
  std::uint64_t seed = 0;
  int input_dim = 8;
  int num_classes = 4;

  bool trained() const { return trained_epochs > 0; }
};

/// Base labels of the streams a supernet consumes (epoch-suffixed where noted).
std::vector<std::string> rng_labels();

/// Tensors: "stem", "head", and "edge{k}/op{o}" for each parameterised
/// allowed op. Dense weights ~ N(0, 1/fan_in) from stream "init/<name>",
/// diag_scale = 1, biases = 0. Mixture logits start at zero.
Supernet init_supernet(const Region& region, int input_dim, int num_classes, std::uint64_t seed,
                       bool with_mixture = false);

/// Network realised by masking the supernet to `arch`.
NetworkDef masked_network(const Supernet& s, const Architecture& arch);

/// Accuracy of `arch` under the supernet's weights. Throws OutOfRegion.
double mask_eval(const Supernet& s, const Architecture& arch, const Dataset& data,
                 SplitName which = SplitName::Valid);
double mask_loss(const Supernet& s, const Architecture& arch, const Dataset& data,
                 SplitName which = SplitName::Valid);

/// Cross-entropy of the softmax-weighted mixture network on a split.
double mixture_loss(const Supernet& s, const Dataset& data, SplitName which = SplitName::Valid);

struct TrainOptions {
  /// Epoch range [first_epoch, last_epoch) of the `hyper.epochs` schedule.
  int first_epoch = 0;
  std::optional<int> last_epoch;
  AdamHyper alpha;
  int val_paths = 64;
};

/// Single path: each minibatch trains one uniformly sampled architecture
/// (stream "path/e<epoch>"). Mixture: a weight step through the mixture
/// network on a training batch, then an alpha step on a validation batch.
/// Throws Divergence on a non-finite loss.
void train_supernet(Supernet& s, const Dataset& data, const TrainHyper& hyper, TrainMode mode,
                    const TrainOptions& options = {});

/// Child initialised from the parent's shared tensors and surviving alpha
/// entries; optimiser state and epoch count start fresh.
Supernet transfer_from(const Supernet& parent, const Region& child_region, std::uint64_t seed);

/// Seed used to train `arch` from scratch under `master`: stream "oracle/<encoding>".
std::uint64_t standalone_seed(const Architecture& arch, std::uint64_t master);

/// Trains `arch` from scratch as a singleton supernet.
Supernet train_standalone(const Architecture& arch, const Dataset& data, const TrainHyper& hyper,
                          std::uint64_t master_seed);

}  // namespace fsnas
