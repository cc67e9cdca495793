#include "fsnas/dataset.hpp"

#include <cmath>
#include <set>

#include "fsnas/error.hpp"
#include "fsnas/rng.hpp"

namespace fsnas {

std::string edge_tensor_name(int edge, int op) {
  return "edge" + std::to_string(edge) + "/op" + std::to_string(op);
}

const Split& split(const Dataset& data, SplitName which) {
  switch (which) {
    case SplitName::Train: return data.train;
    case SplitName::Valid: return data.valid;
    case SplitName::Test: return data.test;
  }
  return data.valid;
}

namespace {

constexpr int kTeacherWidth = 32;

MatrixRM<double> normal_matrix(RngStream& rng, int rows, int cols, double scale) {
  MatrixRM<double> m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = rng.normal() * scale;
  return m;
}

}  // namespace

Dataset gen_dataset(const DatasetConfig& config) {
  if (config.train_size <= 0 || config.valid_size <= 0 || config.test_size <= 0)
    throw Error(ErrorCode::InvalidConfig, "dataset split sizes must be positive");
  if (config.input_dim <= 0 || config.num_classes < 2)
    throw Error(ErrorCode::InvalidConfig, "dataset needs input_dim >= 1 and at least 2 classes");
  if (!(config.label_noise >= 0.0 && config.label_noise <= 1.0))
    throw Error(ErrorCode::InvalidConfig, "label_noise must be in [0, 1]");

  RngStream teacher_rng(config.seed, "teacher");
  const MatrixRM<double> w1 =
      normal_matrix(teacher_rng, config.input_dim, kTeacherWidth, config.teacher_gain / std::sqrt(config.input_dim));
  const MatrixRM<double> w2 =
      normal_matrix(teacher_rng, kTeacherWidth, config.num_classes, 1.0 / std::sqrt(kTeacherWidth));

  RngStream data_rng(config.seed, "data");
  RngStream noise_rng(config.seed, "label-noise");

  auto make = [&](int count, const char* name) {
    Split s;
    const MatrixRM<double> x = normal_matrix(data_rng, count, config.input_dim, 1.0);
    const MatrixRM<double> scores = (x * w1).array().tanh().matrix() * w2;
    s.inputs = x.cast<float>();
    s.labels.resize(count);
    std::set<int> seen;
    for (int r = 0; r < count; ++r) {
      Eigen::Index best = 0;
      scores.row(r).maxCoeff(&best);
      int label = static_cast<int>(best);
      if (noise_rng.uniform() < config.label_noise)
        label = static_cast<int>(noise_rng.below(config.num_classes));
      s.labels[r] = label;
      seen.insert(label);
    }
    if (seen.size() < 2)
      throw Error(ErrorCode::InvalidConfig,
                  std::string("dataset split '") + name + "' has fewer than 2 classes");
    return s;
  };

  Dataset d;
  d.config = config;
  d.train = make(config.train_size, "train");
  d.valid = make(config.valid_size, "valid");
  d.test = make(config.test_size, "test");
  return d;
}

std::vector<double> class_frequencies(const Split& s, int num_classes) {
  std::vector<double> freq(num_classes, 0.0);
  for (int label : s.labels) freq[label] += 1.0;
  for (double& f : freq) f /= static_cast<double>(s.size());
  return freq;
}

}  // namespace fsnas
