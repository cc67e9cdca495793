#pragma once

// Cell network evaluation with a hand-written reverse pass.
//
// Node 1 holds stem(x); node j > 1 is the sum over incoming edges (i, j) of
// the edge's op(s) applied to node i; logits are head(node n). Stem and head
// are dense layers whose last row is the bias. An edge carries either one op
// (architecture or fixed edge) or a softmax-weighted mixture of ops.
//
// Everything is templated on the scalar so training runs in float while
// gradient checks run the identical code in double.

#include <cmath>
#include <string>
#include <vector>

#include "fsnas/error.hpp"
#include "fsnas/space.hpp"
#include "fsnas/tensor.hpp"

namespace fsnas {

template <typename Scalar>
struct EdgeSlot {
  std::vector<int> ops;
  /// Mixture logits over `ops`; empty when the edge carries a single op.
  Vector<Scalar> logits;

  bool is_mixture() const { return logits.size() > 0; }
};

template <typename Scalar>
struct BasicNetworkDef {
  SpacePtr space;
  std::vector<EdgeSlot<Scalar>> edges;
  int input_dim = 0;
  int num_classes = 0;

  template <typename Other>
  BasicNetworkDef<Other> cast() const {
    BasicNetworkDef<Other> out{space, {}, input_dim, num_classes};
    for (const auto& e : edges) out.edges.push_back({e.ops, e.logits.template cast<Other>()});
    return out;
  }
};

using NetworkDef = BasicNetworkDef<float>;

/// Standalone network for one architecture.
template <typename Scalar = float>
BasicNetworkDef<Scalar> network_for(const Architecture& arch, int input_dim, int num_classes) {
  BasicNetworkDef<Scalar> def{arch.space, {}, input_dim, num_classes};
  for (int op : arch.choice) def.edges.push_back({{op}, {}});
  return def;
}

/// Mixture network over a region; edges with one allowed op are plain.
template <typename Scalar = float>
BasicNetworkDef<Scalar> mixture_network(const Region& region, const std::vector<Vector<Scalar>>& alpha,
                                        int input_dim, int num_classes) {
  BasicNetworkDef<Scalar> def{region.space, {}, input_dim, num_classes};
  for (std::size_t k = 0; k < region.allowed.size(); ++k) {
    if (region.allowed[k].size() == 1) {
      def.edges.push_back({region.allowed[k], {}});
    } else {
      if (alpha.at(k).size() != static_cast<Eigen::Index>(region.allowed[k].size()))
        throw Error(ErrorCode::Shape, "alpha for edge " + std::to_string(k) + " has wrong length");
      def.edges.push_back({region.allowed[k], alpha[k]});
    }
  }
  return def;
}

template <typename Scalar>
Vector<Scalar> softmax(const Vector<Scalar>& logits) {
  const Scalar top = logits.maxCoeff();
  Vector<Scalar> e = (logits.array() - top).exp().matrix();
  return e / e.sum();
}

/// Names of the tensors a network reads.
template <typename Scalar>
std::vector<std::string> active_tensors(const BasicNetworkDef<Scalar>& def) {
  std::vector<std::string> names{"stem", "head"};
  for (std::size_t k = 0; k < def.edges.size(); ++k)
    for (int op : def.edges[k].ops)
      if (def.space->vocab[op].has_params()) names.push_back(edge_tensor_name(static_cast<int>(k), op));
  return names;
}

template <typename Scalar>
struct ForwardCache {
  /// Node values, index 1..n (0 unused).
  std::vector<MatrixRM<Scalar>> nodes;
  /// Per edge, per slot op: op output (before mixture weighting). Empty for
  /// zero and identity ops.
  std::vector<std::vector<MatrixRM<Scalar>>> op_out;
  std::vector<Vector<Scalar>> coeffs;
};

namespace detail {

template <typename Scalar>
const MatrixRM<Scalar>& require(const BasicWeightStore<Scalar>& w, const std::string& name,
                                Eigen::Index rows, Eigen::Index cols) {
  const auto it = w.find(name);
  if (it == w.end()) throw Error(ErrorCode::Shape, "missing tensor '" + name + "'");
  const auto& m = it->second.value;
  if (m.rows() != rows || m.cols() != cols)
    throw Error(ErrorCode::Shape, "tensor '" + name + "' has shape " + std::to_string(m.rows()) + "x" +
                                      std::to_string(m.cols()) + ", expected " + std::to_string(rows) +
                                      "x" + std::to_string(cols));
  return m;
}

template <typename Scalar>
MatrixRM<Scalar> apply_op(const OpDesc& op, const MatrixRM<Scalar>& in, const MatrixRM<Scalar>* param) {
  switch (op.kind) {
    case OpKind::LinearRelu: return (in * *param).cwiseMax(Scalar(0));
    case OpKind::LinearTanh: return (in * *param).array().tanh().matrix();
    case OpKind::DiagScale: return (in.array().rowwise() * param->row(0).array()).matrix();
    case OpKind::Zero:
    case OpKind::Identity: break;
  }
  return in;
}

}  // namespace detail

/// Logits [batch x classes]. Nodes ascending, edges canonical, ops ascending.
template <typename Scalar>
MatrixRM<Scalar> forward(const BasicNetworkDef<Scalar>& def, const BasicWeightStore<Scalar>& weights,
                         const MatrixRM<Scalar>& x, ForwardCache<Scalar>* cache = nullptr) {
  const SearchSpace& space = *def.space;
  const int h = space.hidden_width;
  const Eigen::Index d = def.input_dim;
  if (x.rows() == 0) throw Error(ErrorCode::Shape, "empty batch");
  if (x.cols() != d)
    throw Error(ErrorCode::Shape, "input has " + std::to_string(x.cols()) + " columns, expected " +
                                      std::to_string(d));
  if (static_cast<int>(def.edges.size()) != space.num_edges())
    throw Error(ErrorCode::Shape, "network edge count does not match space");

  const auto& stem = detail::require(weights, "stem", d + 1, h);
  const auto& head = detail::require(weights, "head", h + 1, def.num_classes);

  ForwardCache<Scalar> local;
  ForwardCache<Scalar>& c = cache ? *cache : local;
  c.nodes.assign(space.nodes + 1, MatrixRM<Scalar>());
  c.op_out.assign(def.edges.size(), {});
  c.coeffs.assign(def.edges.size(), Vector<Scalar>());

  c.nodes[1] = (x * stem.topRows(d)).rowwise() + stem.row(d);
  for (int j = 2; j <= space.nodes; ++j) {
    MatrixRM<Scalar> acc = MatrixRM<Scalar>::Zero(x.rows(), h);
    for (int i = 1; i < j; ++i) {
      const int k = space.edge_index(i, j);
      const EdgeSlot<Scalar>& slot = def.edges[k];
      const MatrixRM<Scalar>& in = c.nodes[i];
      if (slot.is_mixture()) c.coeffs[k] = softmax<Scalar>(slot.logits);
      c.op_out[k].resize(slot.ops.size());
      for (std::size_t s = 0; s < slot.ops.size(); ++s) {
        const OpDesc& op = space.vocab.at(slot.ops[s]);
        if (op.kind == OpKind::Zero) continue;
        const MatrixRM<Scalar>* param = nullptr;
        if (op.has_params()) {
          const auto rows = op.param_shape.size() == 1 ? 1 : op.param_shape[0];
          const auto cols = op.param_shape.back();
          param = &detail::require(weights, edge_tensor_name(k, op.id), rows, cols);
        }
        const bool keep = op.kind != OpKind::Identity;
        if (keep) c.op_out[k][s] = detail::apply_op(op, in, param);
        const MatrixRM<Scalar>& out = keep ? c.op_out[k][s] : in;
        if (slot.is_mixture())
          acc += c.coeffs[k](static_cast<Eigen::Index>(s)) * out;
        else
          acc += out;
      }
    }
    c.nodes[j] = std::move(acc);
  }
  return (c.nodes[space.nodes] * head.topRows(h)).rowwise() + head.row(h);
}

/// Mean softmax cross-entropy (natural log).
template <typename Scalar>
Scalar cross_entropy(const MatrixRM<Scalar>& logits, const std::vector<int>& labels) {
  Scalar total(0);
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const Scalar top = logits.row(r).maxCoeff();
    const Scalar lse = top + std::log((logits.row(r).array() - top).exp().sum());
    total += lse - logits(r, labels[r]);
  }
  return total / static_cast<Scalar>(logits.rows());
}

/// Row-wise argmax, ties to the lowest class.
template <typename Scalar>
std::vector<int> predict(const MatrixRM<Scalar>& logits) {
  std::vector<int> out(logits.rows());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < logits.cols(); ++c)
      if (logits(r, c) > logits(r, best)) best = c;
    out[r] = static_cast<int>(best);
  }
  return out;
}

template <typename Scalar>
double accuracy(const MatrixRM<Scalar>& logits, const std::vector<int>& labels) {
  const auto pred = predict(logits);
  std::size_t hit = 0;
  for (std::size_t r = 0; r < pred.size(); ++r) hit += pred[r] == labels[r];
  return static_cast<double>(hit) / static_cast<double>(pred.size());
}

template <typename Scalar>
struct LossGrad {
  Scalar loss = 0;
  /// Gradients for exactly the tensors the network reads.
  BasicWeightStore<Scalar> grads;
  /// Gradient w.r.t. mixture logits; empty vector for plain edges.
  std::vector<Vector<Scalar>> alpha_grads;
};

template <typename Scalar>
LossGrad<Scalar> loss_and_grad(const BasicNetworkDef<Scalar>& def, const BasicWeightStore<Scalar>& weights,
                               const MatrixRM<Scalar>& x, const std::vector<int>& labels) {
  if (static_cast<Eigen::Index>(labels.size()) != x.rows())
    throw Error(ErrorCode::Shape, "label count does not match batch");
  ForwardCache<Scalar> c;
  const MatrixRM<Scalar> logits = forward(def, weights, x, &c);
  const SearchSpace& space = *def.space;
  const int h = space.hidden_width;
  const Eigen::Index d = def.input_dim;
  const Eigen::Index batch = x.rows();

  LossGrad<Scalar> out;
  out.loss = cross_entropy(logits, labels);
  out.alpha_grads.assign(def.edges.size(), Vector<Scalar>());

  // dL/dlogits = (softmax - onehot) / B
  MatrixRM<Scalar> dlogits(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < batch; ++r) {
    const Scalar top = logits.row(r).maxCoeff();
    RowVector<Scalar> e = (logits.row(r).array() - top).exp().matrix();
    dlogits.row(r) = e / e.sum();
    dlogits(r, labels[r]) -= Scalar(1);
  }
  dlogits /= static_cast<Scalar>(batch);

  const auto& head = weights.at("head").value;
  MatrixRM<Scalar> dhead(h + 1, def.num_classes);
  dhead.topRows(h) = c.nodes[space.nodes].transpose() * dlogits;
  dhead.row(h) = dlogits.colwise().sum();
  out.grads.emplace("head", BasicTensor<Scalar>{weights.at("head").shape, std::move(dhead)});

  std::vector<MatrixRM<Scalar>> dnode(space.nodes + 1, MatrixRM<Scalar>::Zero(batch, h));
  dnode[space.nodes] = dlogits * head.topRows(h).transpose();

  for (int j = space.nodes; j >= 2; --j) {
    const MatrixRM<Scalar>& dv = dnode[j];
    for (int i = 1; i < j; ++i) {
      const int k = space.edge_index(i, j);
      const EdgeSlot<Scalar>& slot = def.edges[k];
      const MatrixRM<Scalar>& in = c.nodes[i];
      Vector<Scalar> dcoeff;
      if (slot.is_mixture()) dcoeff = Vector<Scalar>::Zero(slot.ops.size());
      for (std::size_t s = 0; s < slot.ops.size(); ++s) {
        const OpDesc& op = space.vocab[slot.ops[s]];
        const std::string name = edge_tensor_name(k, op.id);
        if (op.kind == OpKind::Zero) continue;
        const MatrixRM<Scalar>& y = op.kind == OpKind::Identity ? in : c.op_out[k][s];
        MatrixRM<Scalar> dy;
        if (slot.is_mixture()) {
          dcoeff(s) = (dv.array() * y.array()).sum();
          dy = c.coeffs[k](static_cast<Eigen::Index>(s)) * dv;
        } else {
          dy = dv;
        }
        switch (op.kind) {
          case OpKind::Identity:
            dnode[i] += dy;
            break;
          case OpKind::LinearRelu:
          case OpKind::LinearTanh: {
            const auto& w = weights.at(name).value;
            MatrixRM<Scalar> dpre;
            if (op.kind == OpKind::LinearRelu)
              dpre = (y.array() > Scalar(0)).select(dy.array(), Scalar(0)).matrix();
            else
              dpre = (dy.array() * (Scalar(1) - y.array().square())).matrix();
            out.grads.emplace(name, BasicTensor<Scalar>{op.param_shape, in.transpose() * dpre});
            dnode[i] += dpre * w.transpose();
            break;
          }
          case OpKind::DiagScale: {
            const auto& w = weights.at(name).value;
            MatrixRM<Scalar> g = (dy.array() * in.array()).colwise().sum().matrix();
            out.grads.emplace(name, BasicTensor<Scalar>{op.param_shape, std::move(g)});
            dnode[i] += (dy.array().rowwise() * w.row(0).array()).matrix();
            break;
          }
          case OpKind::Zero: break;
        }
      }
      if (slot.is_mixture()) {
        const Vector<Scalar>& p = c.coeffs[k];
        const Scalar mean = p.dot(dcoeff);
        out.alpha_grads[k] = (p.array() * (dcoeff.array() - mean)).matrix();
      }
    }
  }
  // Parameterised ops whose output never reached the loss still get a (zero) entry.
  for (const auto& name : active_tensors(def)) {
    if (!out.grads.count(name)) out.grads.emplace(name, zeros_like(weights.at(name)));
  }

  MatrixRM<Scalar> dstem(d + 1, h);
  dstem.topRows(d) = x.transpose() * dnode[1];
  dstem.row(d) = dnode[1].colwise().sum();
  out.grads["stem"] = BasicTensor<Scalar>{weights.at("stem").shape, std::move(dstem)};
  return out;
}

}  // namespace fsnas
