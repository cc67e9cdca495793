#include <cmath>

#include "doctest.h"
#include "fsnas/dataset.hpp"
#include "fsnas/error.hpp"
#include "fsnas/gradcheck.hpp"
#include "fsnas/network.hpp"
#include "fsnas/optim.hpp"
#include "fsnas/rng.hpp"
#include "fsnas/supernet.hpp"

using namespace fsnas;

namespace {

SpacePtr small_space(int n = 3, int h = 4) { return build_space(n, default_vocab(5, h), h); }

MatrixRM<float> random_batch(int rows, int cols, std::uint64_t seed) {
  RngStream rng(seed, "test/batch");
  MatrixRM<float> x(rows, cols);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = static_cast<float>(rng.normal());
  return x;
}

Architecture random_arch(const SpacePtr& s, RngStream& rng) {
  Architecture a{s, std::vector<int>(s->num_edges())};
  for (int& c : a.choice) c = static_cast<int>(rng.below(s->vocab.size()));
  return a;
}

}  // namespace

TEST_CASE("rng streams are reproducible and label-separated") {
  RngStream a(5, "x"), b(5, "x"), c(5, "y"), d(6, "x");
  bool differs_label = false, differs_seed = false;
  for (int i = 0; i < 16; ++i) {
    const auto va = a.next_u64();
    CHECK(va == b.next_u64());
    differs_label |= va != c.next_u64();
    differs_seed |= va != d.next_u64();
  }
  CHECK(differs_label);
  CHECK(differs_seed);
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(derive_seed(3, "a") == (fnv1a64("a") ^ 3ULL));

  RngStream u(1, "u");
  for (int i = 0; i < 1000; ++i) {
    const double x = u.uniform();
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
    CHECK(u.below(7) < 7);
  }
}

TEST_CASE("dataset is deterministic and well formed") {
  DatasetConfig cfg;
  const Dataset a = gen_dataset(cfg);
  const Dataset b = gen_dataset(cfg);
  CHECK(a.train.inputs == b.train.inputs);
  CHECK(a.train.labels == b.train.labels);
  CHECK(a.valid.labels == b.valid.labels);
  CHECK(a.test.inputs == b.test.inputs);
  CHECK(a.train.size() == 2048);
  CHECK(a.valid.size() == 512);
  CHECK(a.test.size() == 512);
  CHECK(a.train.inputs.cols() == 8);

  cfg.seed = 1;
  CHECK(gen_dataset(cfg).train.labels != a.train.labels);

  DatasetConfig bad;
  bad.valid_size = 0;
  CHECK_THROWS_AS(gen_dataset(bad), Error);
}

TEST_CASE("label noise only perturbs labels") {
  DatasetConfig clean;
  clean.label_noise = 0.0;
  DatasetConfig noisy;
  const Dataset c = gen_dataset(clean);
  const Dataset n = gen_dataset(noisy);
  CHECK(c.train.inputs == n.train.inputs);
  int changed = 0;
  for (int i = 0; i < c.train.size(); ++i) changed += c.train.labels[i] != n.train.labels[i];
  // 5% resampled, of which 3/4 land on a different class: about 77 of 2048.
  CHECK(changed > 40);
  CHECK(changed < 120);
}

TEST_CASE("class frequencies of the default valid split") {
  const Dataset data = gen_dataset({});
  std::vector<int> counts(4, 0);
  for (int y : data.valid.labels) ++counts.at(y);
  const auto freq = class_frequencies(data.valid, 4);
  double total = 0;
  for (int c = 0; c < 4; ++c) {
    CHECK(freq[c] == doctest::Approx(counts[c] / 512.0));
    total += freq[c];
  }
  CHECK(total == doctest::Approx(1.0));
  CHECK(counts == std::vector<int>{148, 107, 127, 130});
}

TEST_CASE("uniform logits give ln C") {
  const auto s = small_space();
  const auto def = network_for(Architecture{s, {2, 3, 4}}, 8, 4);
  Supernet sn = init_supernet(region_of(Architecture{s, {2, 3, 4}}), 8, 4, 0);
  for (auto& [name, t] : sn.weights) t.value.setZero();
  const auto x = random_batch(5, 8, 1);
  const auto lg = loss_and_grad(def, sn.weights, x, {0, 1, 2, 3, 0});
  CHECK(lg.loss == doctest::Approx(std::log(4.0)).epsilon(1e-6));
}

TEST_CASE("forward special cases") {
  const auto s = small_space();
  const Supernet sn = init_supernet(root_region(s), 8, 4, 3);
  WeightStore w = sn.weights;
  w["head"].value.row(4) << 0.5f, -1.0f, 2.0f, 0.25f;
  const auto x = random_batch(6, 8, 2);

  const auto zero = forward(network_for(Architecture{s, {0, 0, 0}}, 8, 4), w, x);
  for (Eigen::Index r = 0; r < zero.rows(); ++r) CHECK(zero.row(r) == w["head"].value.row(4));

  ForwardCache<float> cache;
  forward(network_for(Architecture{s, {1, 1, 1}}, 8, 4), w, x, &cache);
  CHECK(cache.nodes[3].isApprox(2.0f * cache.nodes[1]));

  const auto logits = forward(network_for(Architecture{s, {2, 4, 3}}, 8, 4), w, MatrixRM<float>(x.topRows(4)));
  CHECK(logits.rows() == 4);
  CHECK(logits.cols() == 4);
  CHECK(logits.allFinite());
}

TEST_CASE("forward reports shape errors by tensor name") {
  const auto s = small_space();
  Supernet sn = init_supernet(root_region(s), 8, 4, 0);
  sn.weights["edge1/op2"].value.resize(3, 3);
  try {
    forward(network_for(Architecture{s, {0, 2, 0}}, 8, 4), sn.weights, random_batch(2, 8, 0));
    FAIL("expected a shape error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Shape);
    CHECK(std::string(e.what()).find("edge1/op2") != std::string::npos);
  }
  CHECK_THROWS_AS(forward(network_for(Architecture{s, {1, 1, 1}}, 8, 4), sn.weights, random_batch(2, 7, 0)),
                  Error);
}

TEST_CASE("gradients match an independent finite-difference oracle on a 2-node net") {
  const auto s = build_space(2, default_vocab(5, 3), 3);
  RngStream rng(11, "test/fd");
  const auto x = random_batch(6, 8, 4).cast<double>().eval();
  const std::vector<int> labels{0, 3, 1, 2, 2, 1};
  for (int op = 0; op < 5; ++op) {
    const Architecture arch{s, {op}};
    const auto def = network_for<double>(arch, 8, 4);
    auto w = cast_store<double>(init_supernet(region_of(arch), 8, 4, 9).weights);
    for (auto& [name, t] : w)
      for (Eigen::Index i = 0; i < t.value.size(); ++i) t.value.data()[i] += 0.1 * rng.normal();
    const auto lg = loss_and_grad(def, w, MatrixRM<double>(x), labels);
    CHECK(lg.grads.size() == active_tensors(def).size());
    for (auto& [name, t] : w) {
      for (Eigen::Index i = 0; i < t.value.size(); ++i) {
        const double keep = t.value.data()[i];
        t.value.data()[i] = keep + 1e-3;
        const double up = cross_entropy(forward(def, w, MatrixRM<double>(x)), labels);
        t.value.data()[i] = keep - 1e-3;
        const double down = cross_entropy(forward(def, w, MatrixRM<double>(x)), labels);
        t.value.data()[i] = keep;
        const double numeric = (up - down) / 2e-3;
        const double analytic = lg.grads.at(name).value.data()[i];
        CHECK(std::abs(analytic - numeric) <= 1e-4 * std::max({std::abs(analytic), std::abs(numeric), 1e-6}) + 1e-9);
      }
    }
  }
}

TEST_CASE("zero ops own no parameters and get no gradient entry") {
  const auto s = small_space();
  const Architecture arch{s, {0, 1, 0}};
  const auto def = network_for(arch, 8, 4);
  const Supernet sn = init_supernet(region_of(arch), 8, 4, 0);
  const auto lg = loss_and_grad(def, sn.weights, random_batch(4, 8, 0), {0, 1, 2, 3});
  CHECK(lg.grads.size() == 2);
  CHECK(lg.grads.count("stem"));
  CHECK(lg.grads.count("head"));
}

TEST_CASE("grad_check on leaves, mixtures and identity nets") {
  const auto s = build_space(3, default_vocab(5, 16), 16);
  RngStream rng(0, "test/gradcheck");
  for (int i = 0; i < 5; ++i) {
    const auto def = network_for(random_arch(s, rng), 8, 4);
    const auto g = grad_check(def, 100 + i);
    CHECK(g.coordinates == 50);
    CHECK(g.max_rel_error <= 1e-4);
  }
  const Region root = root_region(s);
  std::vector<Vector<float>> alpha(3, Vector<float>::Zero(5));
  CHECK(grad_check(mixture_network(root, alpha, 8, 4), 7).max_rel_error <= 1e-4);
  CHECK(grad_check(network_for(Architecture{s, {1, 1, 1}}, 8, 4), 3).max_rel_error <= 1e-6);
}

TEST_CASE("grad_check redraws coordinates whose probes cross a relu kink") {
  const auto s = build_space(3, default_vocab(5, 16), 16);
  const auto def = network_for(Architecture{s, {2, 2, 2}}, 8, 4);
  Supernet sn = init_supernet(region_of(Architecture{s, {2, 2, 2}}), 8, 4, 0);
  sn.weights.at("stem").value.row(8).setZero();
  // Zero input and zero stem bias put every relu pre-activation at 0; only
  // the 16 stem bias entries move them off it.
  const MatrixRM<float> x = MatrixRM<float>::Zero(4, 8);
  const auto g = grad_check(def, sn.weights, x, {0, 1, 2, 3}, 0, 100000);
  CHECK(g.skipped_kinks == 16);
  CHECK(g.coordinates == 9 * 16 + 3 * 16 * 16 + 17 * 4 - 16);
  CHECK(g.max_rel_error <= 1e-6);
}

TEST_CASE("aggregation linearity: a silenced edge equals a zero edge") {
  const auto s = small_space(4);
  RngStream rng(21, "test/linearity");
  const Supernet sn = init_supernet(root_region(s), 8, 4, 5);
  const auto x = random_batch(7, 8, 6);
  int tested = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const Architecture arch = random_arch(s, rng);
    for (int k = 0; k < s->num_edges(); ++k) {
      const int op = arch.choice[k];
      if (!s->vocab[op].has_params()) continue;
      WeightStore w = sn.weights;
      w[edge_tensor_name(k, op)].value.setZero();
      Architecture dropped = arch;
      dropped.choice[k] = 0;
      CHECK(forward(network_for(arch, 8, 4), w, x) == forward(network_for(dropped, 8, 4), sn.weights, x));
      ++tested;
    }
  }
  CHECK(tested > 50);
}

TEST_CASE("cosine schedule endpoints") {
  CHECK(cosine_lr(0.025, 0, 100) == 0.025);
  CHECK(cosine_lr(0.025, 50, 100) == doctest::Approx(0.0125));
  CHECK(cosine_lr(0.025, 99, 100) == doctest::Approx(0.025 * 0.5 * (1 + std::cos(M_PI * 99 / 100))));
  CHECK(cosine_lr(0.025, 9999, 10000) < 1e-8);
}

TEST_CASE("sgd: closed-form momentum steps on a 1-D quadratic") {
  // loss = 0.5 * w^2, so g = w.
  const TrainHyper hyper{1, 1, 0.1, 0.9, 0.01};
  WeightStore w{{"edge0/op2", Tensor{{1, 1}, MatrixRM<float>::Constant(1, 1, 2.0f)}}};
  SgdState state;
  double wv = 2.0, v = 0.0;
  for (int t = 0; t < 3; ++t) {
    WeightStore g{{"edge0/op2", Tensor{{1, 1}, w["edge0/op2"].value}}};
    sgd_step(w, state, g, hyper, t, 4);
    v = 0.9 * v + wv + 0.01 * wv;
    wv -= 0.1 * 0.5 * (1 + std::cos(M_PI * t / 4)) * v;
    CHECK(w["edge0/op2"].value(0, 0) == doctest::Approx(wv).epsilon(1e-6));
  }
}

TEST_CASE("sgd: zero gradient without decay leaves weights unchanged; decay skips biases and scales") {
  const auto s = small_space();
  Supernet sn = init_supernet(root_region(s), 8, 4, 0);
  WeightStore before = sn.weights;
  WeightStore grads;
  for (const auto& [name, t] : sn.weights) grads.emplace(name, zeros_like(t));
  sgd_step(sn.weights, sn.momentum, grads, TrainHyper{1, 1, 0.1, 0.9, 0.0}, 0, 10);
  for (const auto& [name, t] : sn.weights) CHECK(t.value == before[name].value);

  for (auto& [name, t] : sn.weights) t.value.setConstant(1.0f);
  SgdState fresh;
  sgd_step(sn.weights, fresh, grads, TrainHyper{1, 1, 0.1, 0.0, 0.5}, 0, 10);
  CHECK(sn.weights["edge0/op4"].value.isConstant(1.0f));
  CHECK(sn.weights["stem"].value.row(8).isConstant(1.0f));
  CHECK(sn.weights["stem"].value.topRows(8).isConstant(0.95f));
  CHECK(sn.weights["head"].value.row(4).isConstant(1.0f));
  CHECK(sn.weights["edge2/op3"].value.isConstant(0.95f));
}

TEST_CASE("sgd touches only tensors with gradients") {
  const auto s = small_space();
  Supernet sn = init_supernet(root_region(s), 8, 4, 0);
  const WeightStore before = sn.weights;
  WeightStore grads{{"head", Tensor{before.at("head").shape, MatrixRM<float>::Ones(5, 4)}}};
  sgd_step(sn.weights, sn.momentum, grads, TrainHyper{}, 0, 10);
  CHECK(sn.weights["head"].value != before.at("head").value);
  for (const auto& [name, t] : sn.weights)
    if (name != "head") CHECK(t.value == before.at(name).value);
  CHECK(sn.momentum.size() == 1);
}

TEST_CASE("adam step moves against the gradient") {
  std::vector<Vector<float>> params{Vector<float>::Zero(3)};
  AdamState state;
  Vector<float> g(3);
  g << 1.0f, -1.0f, 0.0f;
  adam_step(params, state, {g}, AdamHyper{});
  CHECK(params[0](0) == doctest::Approx(-3e-4).epsilon(1e-3));
  CHECK(params[0](1) == doctest::Approx(3e-4).epsilon(1e-3));
  CHECK(params[0](2) == 0.0f);
  CHECK(state.step == 1);
}
