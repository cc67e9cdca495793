#include "fsnas/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "fsnas/error.hpp"
#include "json.hpp"

namespace fsnas {

using json = nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& field, const std::string& what) {
  throw Error(ErrorCode::InvalidConfig, "config field '" + field + "': " + what);
}

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> known) {
  if (!j.is_object()) bad(where.empty() ? "<root>" : where, "expected an object");
  for (const auto& [key, value] : j.items()) {
    if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; }))
      bad(where.empty() ? key : where + "." + key, "unknown key");
  }
}

std::string join(const std::string& where, const char* key) { return where.empty() ? key : where + "." + key; }

template <typename T>
void read(const json& j, const std::string& where, const char* key, T& out) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw std::invalid_argument("expected a boolean");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw std::invalid_argument("expected an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (v.is_number_integer() && !v.is_number_unsigned()) throw std::invalid_argument("expected a non-negative integer");
      }
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw std::invalid_argument("expected a number");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw std::invalid_argument("expected a string");
    }
    out = v.get<T>();
  } catch (const std::exception& ex) {
    bad(join(where, key), ex.what());
  }
}

void read_hyper(const json& j, const std::string& where, TrainHyper& h) {
  check_keys(j, where, {"epochs", "batch_size", "lr0", "momentum", "weight_decay"});
  read(j, where, "epochs", h.epochs);
  read(j, where, "batch_size", h.batch_size);
  read(j, where, "lr0", h.lr0);
  read(j, where, "momentum", h.momentum);
  read(j, where, "weight_decay", h.weight_decay);
  if (h.epochs < 0) bad(where + ".epochs", "must be >= 0");
  if (h.batch_size < 1) bad(where + ".batch_size", "must be >= 1");
  if (!(h.lr0 > 0)) bad(where + ".lr0", "must be positive");
}

std::size_t line_of(const std::string& text, std::size_t byte) {
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + std::min(byte, text.size()), '\n'));
}

}  // namespace

SpacePtr ExperimentConfig::build() const {
  std::vector<std::pair<std::string, OpKind>> ops;
  std::map<OpKind, int> seen;
  for (OpKind k : space.vocab) {
    const int n = ++seen[k];
    ops.emplace_back(n == 1 ? std::string(to_string(k)) : std::string(to_string(k)) + "_" + std::to_string(n), k);
  }
  return build_space(space.nodes, make_vocab(ops, space.hidden_width), space.hidden_width);
}

TreeConfig ExperimentConfig::tree_config() const {
  TreeConfig t;
  t.budget.total_epoch_budget = split.total_epoch_budget;
  t.budget.wall_clock_cap_seconds = split.wall_clock_cap_seconds;
  t.budget.root_epochs = training.root.epochs;
  t.budget.child_epochs = training.child.epochs;
  t.budget.split_edges = split.edges;
  t.budget.seed = seed;
  t.root_hyper = training.root;
  t.child_hyper = training.child;
  t.mode = training.mode;
  t.alpha = training.alpha;
  t.jobs = jobs;
  return t;
}

ExperimentConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& ex) {
    throw Error(ErrorCode::InvalidConfig, "config parse error at line " + std::to_string(line_of(text, ex.byte)) +
                                              ": " + ex.what());
  }
  ExperimentConfig c;
  check_keys(root, "", {"seed", "jobs", "dataset", "space", "training", "split", "search", "output"});
  read(root, "", "seed", c.seed);
  read(root, "", "jobs", c.jobs);

  if (root.contains("dataset")) {
    const json& d = root["dataset"];
    check_keys(d, "dataset", {"seed", "sizes", "label_noise", "teacher_gain"});
    read(d, "dataset", "seed", c.dataset.seed);
    read(d, "dataset", "label_noise", c.dataset.label_noise);
    read(d, "dataset", "teacher_gain", c.dataset.teacher_gain);
    if (d.contains("sizes")) {
      const json& s = d["sizes"];
      if (!s.is_array() || s.size() != 3 || !std::all_of(s.begin(), s.end(), [](const json& v) { return v.is_number_integer(); }))
        bad("dataset.sizes", "expected [train, valid, test] integers");
      c.dataset.train_size = s[0].get<int>();
      c.dataset.valid_size = s[1].get<int>();
      c.dataset.test_size = s[2].get<int>();
      if (c.dataset.train_size <= 0 || c.dataset.valid_size <= 0 || c.dataset.test_size <= 0)
        bad("dataset.sizes", "sizes must be positive");
    }
    if (c.dataset.label_noise < 0 || c.dataset.label_noise > 1) bad("dataset.label_noise", "must be in [0, 1]");
    if (!(c.dataset.teacher_gain > 0)) bad("dataset.teacher_gain", "must be positive");
  }

  if (root.contains("space")) {
    const json& s = root["space"];
    check_keys(s, "space", {"n", "m", "h", "vocab"});
    read(s, "space", "n", c.space.nodes);
    read(s, "space", "h", c.space.hidden_width);
    if (s.contains("vocab")) {
      if (!s["vocab"].is_array() || s["vocab"].empty()) bad("space.vocab", "expected a non-empty list of op kinds");
      c.space.vocab.clear();
      for (const auto& v : s["vocab"]) {
        if (!v.is_string()) bad("space.vocab", "expected op kind strings");
        try {
          c.space.vocab.push_back(op_kind_from_string(v.get<std::string>()));
        } catch (const Error& ex) {
          bad("space.vocab", ex.what());
        }
      }
    }
    if (s.contains("m")) {
      int m = 0;
      read(s, "space", "m", m);
      if (m < 1) bad("space.m", "must be >= 1");
      if (s.contains("vocab")) {
        if (static_cast<int>(c.space.vocab.size()) != m) bad("space.m", "does not match the vocab length");
      } else {
        c.space.vocab.clear();
        for (const auto& op : default_vocab(m, 1)) c.space.vocab.push_back(op.kind);
      }
    }
    if (c.space.nodes < 2) bad("space.n", "must be >= 2");
    if (c.space.hidden_width < 1) bad("space.h", "must be >= 1");
  }

  if (root.contains("training")) {
    const json& t = root["training"];
    check_keys(t, "training", {"oracle", "root", "child", "alpha", "mode", "oracle_cap"});
    if (t.contains("oracle")) read_hyper(t["oracle"], "training.oracle", c.training.oracle);
    if (t.contains("root")) read_hyper(t["root"], "training.root", c.training.root);
    if (t.contains("child")) read_hyper(t["child"], "training.child", c.training.child);
    if (t.contains("alpha")) {
      const json& a = t["alpha"];
      check_keys(a, "training.alpha", {"lr", "beta1", "beta2", "weight_decay"});
      read(a, "training.alpha", "lr", c.training.alpha.lr);
      read(a, "training.alpha", "beta1", c.training.alpha.beta1);
      read(a, "training.alpha", "beta2", c.training.alpha.beta2);
      read(a, "training.alpha", "weight_decay", c.training.alpha.weight_decay);
    }
    if (t.contains("mode")) {
      std::string mode;
      read(t, "training", "mode", mode);
      try {
        c.training.mode = train_mode_from_string(mode);
      } catch (const Error& ex) {
        bad("training.mode", ex.what());
      }
    }
    read(t, "training", "oracle_cap", c.training.oracle_cap);
  }

  if (root.contains("split")) {
    const json& s = root["split"];
    check_keys(s, "split", {"total_epoch_budget", "wall_clock_cap_seconds", "edges"});
    if (s.contains("total_epoch_budget")) {
      const json& b = s["total_epoch_budget"];
      if (b.is_string() && b.get<std::string>() == "unlimited")
        c.split.total_epoch_budget = BudgetConfig::unlimited;
      else if (b.is_number_integer() && b.get<std::int64_t>() >= 0)
        c.split.total_epoch_budget = b.get<std::int64_t>();
      else if (!b.is_null())
        bad("split.total_epoch_budget", "expected a non-negative integer, \"unlimited\" or null");
    }
    if (s.contains("wall_clock_cap_seconds") && !s["wall_clock_cap_seconds"].is_null()) {
      double cap = 0;
      read(s, "split", "wall_clock_cap_seconds", cap);
      c.split.wall_clock_cap_seconds = cap;
    }
    if (s.contains("edges") && !s["edges"].is_null()) {
      if (!s["edges"].is_array()) bad("split.edges", "expected a list of edge indices");
      std::vector<int> edges;
      for (const auto& e : s["edges"]) {
        if (!e.is_number_integer()) bad("split.edges", "expected integer edge indices");
        edges.push_back(e.get<int>());
      }
      c.split.edges = edges;
    }
  }

  if (root.contains("search")) {
    const json& s = root["search"];
    check_keys(s, "search", {"algorithm", "evaluator", "sample_budget", "k", "population", "tournament",
                             "reinforce_lr", "baseline_decay", "without_replacement"});
    read(s, "search", "algorithm", c.search.algorithm);
    read(s, "search", "evaluator", c.search.evaluator);
    read(s, "search", "sample_budget", c.search.params.sample_budget);
    read(s, "search", "k", c.search.params.k);
    read(s, "search", "population", c.search.params.population);
    read(s, "search", "tournament", c.search.params.tournament);
    read(s, "search", "reinforce_lr", c.search.params.reinforce_lr);
    read(s, "search", "baseline_decay", c.search.params.baseline_decay);
    read(s, "search", "without_replacement", c.search.params.without_replacement);
    static const std::set<std::string> algos{"random", "rea", "reinforce", "gradient"};
    static const std::set<std::string> evals{"auto", "oracle", "one_shot", "few_shot"};
    if (!algos.count(c.search.algorithm)) bad("search.algorithm", "unknown algorithm '" + c.search.algorithm + "'");
    if (!evals.count(c.search.evaluator)) bad("search.evaluator", "unknown evaluator '" + c.search.evaluator + "'");
    try {
      validate(c.search.params);
    } catch (const Error& ex) {
      bad("search", ex.what());
    }
  }

  if (root.contains("output")) {
    const json& o = root["output"];
    check_keys(o, "output", {"directory", "formats"});
    read(o, "output", "directory", c.output.directory);
    if (o.contains("formats")) {
      if (!o["formats"].is_array()) bad("output.formats", "expected a list");
      c.output.formats.clear();
      for (const auto& f : o["formats"]) {
        if (!f.is_string() || f.get<std::string>() != "csv") bad("output.formats", "only \"csv\" is supported");
        c.output.formats.push_back(f.get<std::string>());
      }
    }
  }
  if (c.jobs < 1) bad("jobs", "must be >= 1");
  c.search.params.seed = c.seed;
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::InvalidConfig, "cannot read config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

}  // namespace fsnas
