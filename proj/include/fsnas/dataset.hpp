#pragma once

#include <cstdint>
#include <vector>

#include "fsnas/tensor.hpp"

namespace fsnas {

struct Split {
  MatrixRM<float> inputs;
  std::vector<int> labels;

  int size() const { return static_cast<int>(labels.size()); }
};

struct DatasetConfig {
  std::uint64_t seed = 0;
  int train_size = 2048;
  int valid_size = 512;
  int test_size = 512;
  int input_dim = 8;
  int num_classes = 4;
  double label_noise = 0.05;
  /// Multiplies the teacher's first-layer weights; larger values saturate
  /// the tanh and make the labelling less linear.
  double teacher_gain = 2.0;
};

/// Synthetic classification task labelled by a random tanh teacher MLP.
struct Dataset {
  DatasetConfig config;
  Split train;
  Split valid;
  Split test;

  int input_dim() const { return config.input_dim; }
  int num_classes() const { return config.num_classes; }
};

enum class SplitName { Train, Valid, Test };

const Split& split(const Dataset& data, SplitName which);

/// Inputs from stream "data"; labels are the argmax of a d_in->32->C tanh
/// teacher drawn from stream "teacher"; a `label_noise` fraction is then
/// resampled uniformly from stream "label-noise".
Dataset gen_dataset(const DatasetConfig& config);

/// Per-class label frequencies of a split.
std::vector<double> class_frequencies(const Split& s, int num_classes);

}  // namespace fsnas
