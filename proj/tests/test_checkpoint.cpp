#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "fsnas/checkpoint.hpp"
#include "fsnas/error.hpp"

using namespace fsnas;
namespace fs = std::filesystem;

namespace {

SpacePtr default_space() { return build_space(3, default_vocab(5, 16), 16); }

const Dataset& data() {
  static const Dataset d = gen_dataset({});
  return d;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("fsnas-test-checkpoint-" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void spit(const fs::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << bytes;
}

ErrorCode load_error(const fs::path& p) {
  try {
    load_checkpoint(p);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Usage;
}

void check_equal(const Supernet& a, const Supernet& b) {
  CHECK(a.region.allowed == b.region.allowed);
  CHECK(a.trained_epochs == b.trained_epochs);
  CHECK(a.seed == b.seed);
  CHECK((a.val_loss == b.val_loss || (std::isnan(a.val_loss) && std::isnan(b.val_loss))));
  REQUIRE(a.weights.size() == b.weights.size());
  for (const auto& [name, t] : a.weights) {
    CHECK(t.shape == b.weights.at(name).shape);
    CHECK(t.value == b.weights.at(name).value);
  }
  REQUIRE(a.momentum.size() == b.momentum.size());
  for (const auto& [name, v] : a.momentum) CHECK(v == b.momentum.at(name));
  REQUIRE(a.mixture.has_value() == b.mixture.has_value());
  if (a.mixture) {
    for (std::size_t k = 0; k < a.mixture->alpha.size(); ++k) {
      CHECK(a.mixture->alpha[k] == b.mixture->alpha[k]);
      CHECK(a.mixture->optimizer.m[k] == b.mixture->optimizer.m[k]);
      CHECK(a.mixture->optimizer.v[k] == b.mixture->optimizer.v[k]);
    }
    CHECK(a.mixture->optimizer.step == b.mixture->optimizer.step);
  }
}

}  // namespace

TEST_CASE("round trip is bit exact") {
  const auto s = default_space();
  for (TrainMode mode : {TrainMode::SinglePath, TrainMode::Mixture}) {
    Supernet sn = init_supernet(split_region(root_region(s), 2)[3], 8, 4, 7, mode == TrainMode::Mixture);
    train_supernet(sn, data(), TrainHyper{3, 128, 0.025, 0.9, 1e-4}, mode);
    const fs::path p = scratch(std::string("rt-") + to_string(mode) + ".fsns");
    save_checkpoint(sn, p);
    check_equal(sn, load_checkpoint(p));
    const CheckpointSummary summary = validate_checkpoint(p);
    CHECK(summary.version == 1);
    CHECK(summary.tensor_count == sn.weights.size());
    CHECK(summary.trained_epochs == 3);
    CHECK(summary.region_size == 25);
    CHECK(summary.has_alpha == (mode == TrainMode::Mixture));
  }
}

TEST_CASE("header layout") {
  const Supernet sn = init_supernet(root_region(default_space()), 8, 4, 0);
  const fs::path p = scratch("header.fsns");
  save_checkpoint(sn, p);
  const std::string bytes = slurp(p);
  REQUIRE(bytes.size() > 16);
  CHECK(bytes.substr(0, 4) == "FSNS");
  CHECK(static_cast<unsigned char>(bytes[4]) == 1);
  CHECK(bytes[5] == 0);
  std::uint64_t manifest = 0;
  for (int i = 0; i < 8; ++i) manifest |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[8 + i])) << (8 * i);
  CHECK(bytes[16] == '{');
  CHECK(bytes[16 + manifest - 1] == '}');
  std::uint64_t floats = 0;
  for (const auto& [name, t] : sn.weights) floats += t.value.size();
  CHECK(bytes.size() == 16 + manifest + 4 * floats);
}

TEST_CASE("corrupt and unsupported checkpoints are rejected") {
  Supernet sn = init_supernet(root_region(default_space()), 8, 4, 0);
  train_supernet(sn, data(), TrainHyper{1, 128, 0.025, 0.9, 1e-4}, TrainMode::SinglePath);
  const fs::path good = scratch("good.fsns");
  save_checkpoint(sn, good);
  const std::string bytes = slurp(good);

  const fs::path bad = scratch("bad.fsns");
  spit(bad, bytes.substr(0, bytes.size() - 5));
  CHECK(load_error(bad) == ErrorCode::CorruptCheckpoint);
  CHECK_THROWS_AS(validate_checkpoint(bad), Error);

  spit(bad, bytes.substr(0, 10));
  CHECK(load_error(bad) == ErrorCode::CorruptCheckpoint);

  std::string wrong_magic = bytes;
  wrong_magic[0] = 'X';
  spit(bad, wrong_magic);
  CHECK(load_error(bad) == ErrorCode::CorruptCheckpoint);

  std::string v2 = bytes;
  v2[4] = 2;
  spit(bad, v2);
  CHECK(load_error(bad) == ErrorCode::UnsupportedVersion);

  std::string mangled = bytes;
  mangled[17] = '#';
  spit(bad, mangled);
  CHECK(load_error(bad) == ErrorCode::CorruptCheckpoint);

  spit(bad, bytes + "extra");
  CHECK(load_error(bad) == ErrorCode::CorruptCheckpoint);

  CHECK(load_error(scratch("missing.fsns")) == ErrorCode::Io);
}

TEST_CASE("resume at epoch 150 equals an uninterrupted 300-epoch run") {
  const auto s = default_space();
  const TrainHyper hyper{300, 128, 0.025, 0.9, 1e-4};
  for (TrainMode mode : {TrainMode::SinglePath, TrainMode::Mixture}) {
    const bool mix = mode == TrainMode::Mixture;
    Supernet full = init_supernet(root_region(s), 8, 4, 11, mix);
    train_supernet(full, data(), hyper, mode);

    Supernet half = init_supernet(root_region(s), 8, 4, 11, mix);
    TrainOptions first;
    first.last_epoch = 150;
    train_supernet(half, data(), hyper, mode, first);
    const fs::path p = scratch(std::string("half-") + to_string(mode) + ".fsns");
    save_checkpoint(half, p);
    Supernet resumed = load_checkpoint(p);
    CHECK(resumed.trained_epochs == 150);
    TrainOptions rest;
    rest.first_epoch = resumed.trained_epochs;
    train_supernet(resumed, data(), hyper, mode, rest);
    check_equal(full, resumed);
  }
}

TEST_CASE("tree round trip") {
  TreeConfig cfg;
  cfg.budget.root_epochs = 4;
  cfg.budget.child_epochs = 2;
  cfg.budget.total_epoch_budget = BudgetConfig::unlimited;
  cfg.budget.split_edges = std::vector<int>{1, 0};
  const SupernetTree tree = run_pipeline(default_space(), data(), cfg);
  const fs::path dir = scratch("tree");
  save_tree(tree, dir);
  CHECK(fs::exists(dir / "tree-manifest.json"));
  CHECK(fs::exists(dir / "L0_N0.fsns"));
  CHECK(fs::exists(dir / "L2_N24.fsns"));
  const SupernetTree back = load_tree(dir);
  CHECK(back.split_history == tree.split_history);
  CHECK(back.spent_epochs == tree.spent_epochs);
  CHECK(back.level_cost == tree.level_cost);
  CHECK(back.seed == tree.seed);
  REQUIRE(back.levels.size() == 3);
  for (std::size_t l = 0; l < 3; ++l) {
    REQUIRE(back.levels[l].size() == tree.levels[l].size());
    for (std::size_t i = 0; i < tree.levels[l].size(); ++i) check_equal(tree.levels[l][i], back.levels[l][i]);
  }
  CHECK(encode(Architecture{back.space, {1, 2, 3}}) == "1|2|3");
  CHECK(back.space->vocab.size() == 5);
}

TEST_CASE("cleanup") { fs::remove_all(scratch("x").parent_path()); }
