#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace fsnas {

template <typename Scalar>
using MatrixRM = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// A named parameter. Rank-1 tensors are held as a single row.
template <typename Scalar>
struct BasicTensor {
  std::vector<std::int64_t> shape;
  MatrixRM<Scalar> value;

  std::int64_t size() const { return value.size(); }

  template <typename Other>
  BasicTensor<Other> cast() const {
    return {shape, value.template cast<Other>()};
  }
};

template <typename Scalar>
using BasicWeightStore = std::map<std::string, BasicTensor<Scalar>>;

using Tensor = BasicTensor<float>;
using WeightStore = BasicWeightStore<float>;

template <typename Other, typename Scalar>
BasicWeightStore<Other> cast_store(const BasicWeightStore<Scalar>& store) {
  BasicWeightStore<Other> out;
  for (const auto& [name, t] : store) out.emplace(name, t.template cast<Other>());
  return out;
}

/// Zero tensor of the given shape.
template <typename Scalar>
BasicTensor<Scalar> zeros_like(const BasicTensor<Scalar>& t) {
  return {t.shape, MatrixRM<Scalar>::Zero(t.value.rows(), t.value.cols())};
}

inline MatrixRM<float> shaped_zeros(const std::vector<std::int64_t>& shape) {
  if (shape.size() == 1) return MatrixRM<float>::Zero(1, shape[0]);
  return MatrixRM<float>::Zero(shape.at(0), shape.at(1));
}

/// Name of the parameter tensor for op `op` on edge `edge`.
std::string edge_tensor_name(int edge, int op);

}  // namespace fsnas
