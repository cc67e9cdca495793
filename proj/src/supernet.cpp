#include "fsnas/supernet.hpp"

#include <cmath>
#include <numeric>

#include "fsnas/error.hpp"
#include "fsnas/rng.hpp"

namespace fsnas {

const char* to_string(TrainMode mode) {
  return mode == TrainMode::SinglePath ? "single_path" : "mixture";
}

TrainMode train_mode_from_string(const std::string& name) {
  if (name == "single_path") return TrainMode::SinglePath;
  if (name == "mixture") return TrainMode::Mixture;
  throw Error(ErrorCode::InvalidConfig, "unknown training mode '" + name + "'");
}

std::vector<Vector<float>> MixtureParams::coefficients() const {
  std::vector<Vector<float>> out;
  for (const auto& a : alpha) out.push_back(softmax<float>(a));
  return out;
}

std::vector<std::string> rng_labels() {
  return {"init/<tensor>", "shuffle/e<epoch>", "path/e<epoch>", "valbatch/e<epoch>", "valpaths"};
}

namespace {

Tensor dense_init(const std::string& name, std::uint64_t seed, Eigen::Index fan_in, Eigen::Index fan_out,
                  bool with_bias) {
  RngStream rng(seed, "init/" + name);
  const Eigen::Index rows = fan_in + (with_bias ? 1 : 0);
  Tensor t{{rows, fan_out}, MatrixRM<float>::Zero(rows, fan_out)};
  const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (Eigen::Index r = 0; r < fan_in; ++r)
    for (Eigen::Index c = 0; c < fan_out; ++c) t.value(r, c) = static_cast<float>(rng.normal() * scale);
  return t;
}

MatrixRM<float> gather(const MatrixRM<float>& x, const std::vector<int>& rows) {
  MatrixRM<float> out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(rows[i]);
  return out;
}

std::vector<int> permutation(int n, RngStream& rng) {
  std::vector<int> p(n);
  std::iota(p.begin(), p.end(), 0);
  for (int i = n - 1; i > 0; --i) std::swap(p[i], p[rng.below(static_cast<std::uint64_t>(i) + 1)]);
  return p;
}

Architecture sample_path(const Region& region, RngStream& rng) {
  Architecture a{region.space, std::vector<int>(region.allowed.size())};
  for (std::size_t k = 0; k < region.allowed.size(); ++k)
    a.choice[k] = region.allowed[k][rng.below(region.allowed[k].size())];
  return a;
}

std::string epoch_label(const char* base, int epoch) { return std::string(base) + "/e" + std::to_string(epoch); }

void check_finite(float loss, int epoch, int step) {
  if (!std::isfinite(loss))
    throw Error(ErrorCode::Divergence,
                "non-finite loss at epoch " + std::to_string(epoch) + " step " + std::to_string(step));
}

}  // namespace

Supernet init_supernet(const Region& region, int input_dim, int num_classes, std::uint64_t seed,
                       bool with_mixture) {
  validate_region(region);
  const SearchSpace& space = *region.space;
  const int h = space.hidden_width;
  Supernet s;
  s.region = region;
  s.seed = seed;
  s.input_dim = input_dim;
  s.num_classes = num_classes;
  s.weights.emplace("stem", dense_init("stem", seed, input_dim, h, true));
  s.weights.emplace("head", dense_init("head", seed, h, num_classes, true));
  for (int k = 0; k < space.num_edges(); ++k) {
    for (int o : region.allowed[k]) {
      const OpDesc& op = space.vocab[o];
      if (!op.has_params()) continue;
      const std::string name = edge_tensor_name(k, o);
      if (op.kind == OpKind::DiagScale)
        s.weights.emplace(name, Tensor{op.param_shape, MatrixRM<float>::Ones(1, h)});
      else
        s.weights.emplace(name, dense_init(name, seed, h, h, false));
    }
  }
  if (with_mixture) {
    MixtureParams mix;
    for (const auto& a : region.allowed) mix.alpha.push_back(Vector<float>::Zero(a.size()));
    s.mixture = std::move(mix);
  }
  return s;
}

NetworkDef masked_network(const Supernet& s, const Architecture& arch) {
  if (!contains(s.region, arch))
    throw Error(ErrorCode::OutOfRegion, "architecture " + encode(arch) + " is outside the supernet's region");
  return network_for<float>(arch, s.input_dim, s.num_classes);
}

double mask_eval(const Supernet& s, const Architecture& arch, const Dataset& data, SplitName which) {
  const Split& sp = split(data, which);
  return accuracy(forward(masked_network(s, arch), s.weights, sp.inputs), sp.labels);
}

double mask_loss(const Supernet& s, const Architecture& arch, const Dataset& data, SplitName which) {
  const Split& sp = split(data, which);
  return cross_entropy(forward(masked_network(s, arch), s.weights, sp.inputs), sp.labels);
}

double mixture_loss(const Supernet& s, const Dataset& data, SplitName which) {
  if (!s.mixture) throw Error(ErrorCode::UntrainedSupernet, "supernet has no mixture parameters");
  const Split& sp = split(data, which);
  const NetworkDef def = mixture_network<float>(s.region, s.mixture->alpha, s.input_dim, s.num_classes);
  return cross_entropy(forward(def, s.weights, sp.inputs), sp.labels);
}

void train_supernet(Supernet& s, const Dataset& data, const TrainHyper& hyper, TrainMode mode,
                    const TrainOptions& options) {
  validate(hyper, data.train.size());
  const int last = options.last_epoch.value_or(hyper.epochs);
  if (options.first_epoch < 0 || last < options.first_epoch || last > hyper.epochs)
    throw Error(ErrorCode::InvalidConfig, "epoch range must lie within the schedule");
  if (mode == TrainMode::Mixture && !s.mixture) {
    MixtureParams mix;
    for (const auto& a : s.region.allowed) mix.alpha.push_back(Vector<float>::Zero(a.size()));
    s.mixture = std::move(mix);
  }

  const int batch = hyper.batch_size;
  const int steps_per_epoch = data.train.size() / batch;
  const std::int64_t total_steps = static_cast<std::int64_t>(hyper.epochs) * steps_per_epoch;
  const int valid_n = data.valid.size();

  for (int epoch = options.first_epoch; epoch < last; ++epoch) {
    RngStream shuffle_rng(s.seed, epoch_label("shuffle", epoch));
    RngStream path_rng(s.seed, epoch_label("path", epoch));
    const std::vector<int> order = permutation(data.train.size(), shuffle_rng);
    std::vector<int> val_order;
    if (mode == TrainMode::Mixture) {
      RngStream val_rng(s.seed, epoch_label("valbatch", epoch));
      val_order = permutation(valid_n, val_rng);
    }
    for (int step = 0; step < steps_per_epoch; ++step) {
      const std::vector<int> rows(order.begin() + step * batch, order.begin() + (step + 1) * batch);
      const MatrixRM<float> x = gather(data.train.inputs, rows);
      std::vector<int> y(rows.size());
      for (std::size_t i = 0; i < rows.size(); ++i) y[i] = data.train.labels[rows[i]];
      const std::int64_t global = static_cast<std::int64_t>(epoch) * steps_per_epoch + step;

      if (mode == TrainMode::SinglePath) {
        const NetworkDef def = network_for<float>(sample_path(s.region, path_rng), s.input_dim, s.num_classes);
        const LossGrad<float> lg = loss_and_grad(def, s.weights, x, y);
        check_finite(lg.loss, epoch, step);
        sgd_step(s.weights, s.momentum, lg.grads, hyper, global, total_steps);
      } else {
        NetworkDef def = mixture_network<float>(s.region, s.mixture->alpha, s.input_dim, s.num_classes);
        const LossGrad<float> lg = loss_and_grad(def, s.weights, x, y);
        check_finite(lg.loss, epoch, step);
        sgd_step(s.weights, s.momentum, lg.grads, hyper, global, total_steps);

        std::vector<int> vrows(batch);
        for (int i = 0; i < batch; ++i) vrows[i] = val_order[(static_cast<std::int64_t>(step) * batch + i) % valid_n];
        std::vector<int> vy(vrows.size());
        for (std::size_t i = 0; i < vrows.size(); ++i) vy[i] = data.valid.labels[vrows[i]];
        const LossGrad<float> la = loss_and_grad(def, s.weights, gather(data.valid.inputs, vrows), vy);
        check_finite(la.loss, epoch, step);
        adam_step(s.mixture->alpha, s.mixture->optimizer, la.alpha_grads, options.alpha);
      }
    }
  }
  s.trained_epochs += last - options.first_epoch;

  if (mode == TrainMode::Mixture) {
    s.val_loss = mixture_loss(s, data);
  } else {
    RngStream val_paths(s.seed, "valpaths");
    double total = 0.0;
    for (int p = 0; p < options.val_paths; ++p) total += mask_loss(s, sample_path(s.region, val_paths), data);
    s.val_loss = total / options.val_paths;
  }
}

Supernet transfer_from(const Supernet& parent, const Region& child_region, std::uint64_t seed) {
  validate_region(child_region);
  if (!is_subregion(child_region, parent.region))
    throw Error(ErrorCode::RegionMismatch, "child region is not contained in the parent region");
  Supernet child;
  child.region = child_region;
  child.seed = seed;
  child.input_dim = parent.input_dim;
  child.num_classes = parent.num_classes;
  const SearchSpace& space = *child_region.space;
  child.weights.emplace("stem", parent.weights.at("stem"));
  child.weights.emplace("head", parent.weights.at("head"));
  for (int k = 0; k < space.num_edges(); ++k) {
    for (int o : child_region.allowed[k]) {
      if (!space.vocab[o].has_params()) continue;
      const std::string name = edge_tensor_name(k, o);
      child.weights.emplace(name, parent.weights.at(name));
    }
  }
  if (parent.mixture) {
    MixtureParams mix;
    for (int k = 0; k < space.num_edges(); ++k) {
      const auto& kept = child_region.allowed[k];
      Vector<float> a = Vector<float>::Zero(kept.size());
      // A fixed edge has no distribution left to carry over.
      if (kept.size() >= 2) {
        const auto& from = parent.region.allowed[k];
        for (std::size_t i = 0; i < kept.size(); ++i) {
          const auto pos = std::lower_bound(from.begin(), from.end(), kept[i]) - from.begin();
          a(static_cast<Eigen::Index>(i)) = parent.mixture->alpha[k](pos);
        }
      }
      mix.alpha.push_back(std::move(a));
    }
    child.mixture = std::move(mix);
  }
  return child;
}

std::uint64_t standalone_seed(const Architecture& arch, std::uint64_t master) {
  return derive_seed(master, "oracle/" + encode(arch));
}

Supernet train_standalone(const Architecture& arch, const Dataset& data, const TrainHyper& hyper,
                          std::uint64_t master_seed) {
  Supernet s = init_supernet(region_of(arch), data.input_dim(), data.num_classes(),
                             standalone_seed(arch, master_seed));
  train_supernet(s, data, hyper, TrainMode::SinglePath);
  return s;
}

}  // namespace fsnas
