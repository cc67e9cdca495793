#include "fsnas/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <map>
#include <ostream>

#include "CLI11.hpp"
#include "fsnas/checkpoint.hpp"
#include "fsnas/config.hpp"
#include "fsnas/csv.hpp"
#include "fsnas/error.hpp"
#include "fsnas/search.hpp"

namespace fsnas {

namespace fs = std::filesystem;

void write_oracle_csv(const fs::path& path, const OracleTable& table) {
  csv::Table t{{"encoding", "valid_acc", "test_acc", "reachable", "train_epochs"}, {}};
  for (const auto& r : table.records)
    t.rows.push_back({r.encoding, csv::number(r.valid_acc), csv::number(r.test_acc), r.reachable ? "1" : "0",
                      std::to_string(r.train_epochs)});
  csv::write(path, t);
}

OracleTable read_oracle_csv(const fs::path& path) {
  const csv::Table t = csv::read(path);
  const auto enc = t.column("encoding"), va = t.column("valid_acc"), te = t.column("test_acc"),
             re = t.column("reachable"), ep = t.column("train_epochs");
  OracleTable table;
  try {
    for (const auto& row : t.rows)
      table.records.push_back({row[enc], std::stod(row[va]), std::stod(row[te]), row[re] == "1", std::stoi(row[ep])});
  } catch (const std::logic_error&) {
    throw Error(ErrorCode::Parse, "oracle csv " + path.string() + " has a malformed number");
  }
  table.reindex();
  return table;
}

void write_trace_csv(const fs::path& path, const SearchTrace& trace, const OracleTable* oracle) {
  csv::Table t{{"step", "encoding", "proxy_score", "true_score", "best_true_so_far"}, {}};
  std::vector<double> best;
  if (oracle) best = best_so_far_trace(trace, *oracle);
  for (std::size_t i = 0; i < trace.steps.size(); ++i) {
    const TraceStep& s = trace.steps[i];
    csv::Row row{std::to_string(s.index), s.encoding, csv::number(s.proxy_score), "", ""};
    if (oracle) {
      row[3] = csv::number(oracle->at(s.encoding).valid_acc);
      row[4] = csv::number(best[i]);
    }
    t.rows.push_back(std::move(row));
  }
  csv::write(path, t);
}

SearchTrace read_trace_csv(const fs::path& path) {
  const csv::Table t = csv::read(path);
  const auto st = t.column("step"), enc = t.column("encoding"), px = t.column("proxy_score");
  SearchTrace trace;
  try {
    for (const auto& row : t.rows) trace.steps.push_back({std::stoi(row[st]), row[enc], std::stod(row[px])});
  } catch (const std::logic_error&) {
    throw Error(ErrorCode::Parse, "trace csv " + path.string() + " has a malformed number");
  }
  return trace;
}

std::vector<std::string> correlation_header() {
  return {"level", "supernet_count", "split_edges", "seed", "tau", "concordant", "discordant", "ties_x", "ties_y",
          "cost_epochs"};
}

std::vector<std::string> correlation_row(const CorrelationReport& r) {
  std::string edges;
  for (std::size_t i = 0; i < r.split_edges.size(); ++i) edges += (i ? "|" : "") + std::to_string(r.split_edges[i]);
  return {std::to_string(r.level),        std::to_string(r.supernet_count), edges,
          std::to_string(r.seed),         csv::number(r.tau.tau),           std::to_string(r.tau.concordant),
          std::to_string(r.tau.discordant), std::to_string(r.tau.ties_x),   std::to_string(r.tau.ties_y),
          std::to_string(r.cost_epochs)};
}

namespace {

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::optional<int> jobs;
};

struct Context {
  ExperimentConfig config;
  fs::path out;

  fs::path tree_dir() const { return out / "tree"; }
  fs::path oracle_csv() const { return out / "oracle.csv"; }
  bool has_tree() const { return fs::exists(tree_dir() / "tree-manifest.json"); }
  bool has_oracle() const { return fs::exists(oracle_csv()); }
};

Context make_context(const Globals& g) {
  Context ctx;
  if (!g.config_path.empty()) ctx.config = load_config(g.config_path);
  if (g.seed) {
    ctx.config.seed = *g.seed;
    ctx.config.search.params.seed = *g.seed;
  }
  if (g.jobs) ctx.config.jobs = std::max(1, *g.jobs);
  if (!g.out_dir.empty())
    ctx.out = g.out_dir;
  else if (const char* env = std::getenv("FSNAS_OUT"); env && *env)
    ctx.out = env;
  else
    ctx.out = ctx.config.output.directory;
  fs::create_directories(ctx.out);
  return ctx;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

int cmd_gen_space(const Context& ctx, std::ostream& out) {
  const SpacePtr space = ctx.config.build();
  out << "edges=" << space->num_edges() << " architectures=" << region_size(root_region(space)) << '\n';
  return 0;
}

int cmd_train_oracle(const Context& ctx, std::ostream& out) {
  const ExperimentConfig& c = ctx.config;
  const SpacePtr space = c.build();
  const Dataset data = gen_dataset(c.dataset);
  std::optional<OracleTable> partial;
  if (ctx.has_oracle()) partial = read_oracle_csv(ctx.oracle_csv());
  if (!partial) csv::write(ctx.oracle_csv(), {{"encoding", "valid_acc", "test_acc", "reachable", "train_epochs"}, {}});

  OracleOptions options;
  options.cap = c.training.oracle_cap;
  options.jobs = c.jobs;
  options.partial = partial ? &*partial : nullptr;
  options.on_record = [&](const OracleRecord& r) {
    csv::append_row(ctx.oracle_csv(), {r.encoding, csv::number(r.valid_acc), csv::number(r.test_acc),
                                       r.reachable ? "1" : "0", std::to_string(r.train_epochs)});
  };
  const OracleTable table = train_oracle(root_region(space), data, c.training.oracle, c.dataset.seed, options);
  write_oracle_csv(ctx.oracle_csv(), table);
  out << "oracle records=" << table.records.size() << " best_valid=" << csv::number(table.best_valid()) << '\n';
  return 0;
}

int cmd_train_tree(const Context& ctx, const std::string& mode, std::ostream& out) {
  const ExperimentConfig& c = ctx.config;
  TreeConfig tc = c.tree_config();
  if (!mode.empty()) tc.mode = train_mode_from_string(mode);
  const SupernetTree tree = run_pipeline(c.build(), gen_dataset(c.dataset), tc);
  save_tree(tree, ctx.tree_dir());
  std::size_t total = 0;
  for (const auto& level : tree.levels) total += level.size();
  out << "levels=" << tree.levels.size() << " supernets=" << total << " leaves=" << tree.leaves().size()
      << " spent_epochs=" << tree.spent_epochs << '\n';
  return 0;
}

SupernetTree require_tree(const Context& ctx) {
  if (!ctx.has_tree()) throw Error(ErrorCode::Io, "no supernet tree at " + ctx.tree_dir().string());
  return load_tree(ctx.tree_dir());
}

OracleTable require_oracle(const Context& ctx) {
  if (!ctx.has_oracle()) throw Error(ErrorCode::Io, "no oracle table at " + ctx.oracle_csv().string());
  return read_oracle_csv(ctx.oracle_csv());
}

int cmd_eval_corr(const Context& ctx, bool append, std::ostream& out) {
  const SupernetTree tree = require_tree(ctx);
  const OracleTable oracle = require_oracle(ctx);
  const Dataset data = gen_dataset(ctx.config.dataset);
  const fs::path path = ctx.out / "correlation.csv";
  csv::Table table{correlation_header(), {}};
  if (append && fs::exists(path)) table = csv::read(path);
  for (int level = 0; level <= tree.depth(); ++level) {
    const CorrelationReport r = correlation_report(tree, oracle, level, data);
    table.rows.push_back(correlation_row(r));
    out << "level=" << level << " supernets=" << r.supernet_count << " tau=" << csv::number(r.tau.tau)
        << " cost_epochs=" << r.cost_epochs << '\n';
  }
  csv::write(path, table);
  return 0;
}

int cmd_search(const Context& ctx, std::string algo, std::string evaluator_name, int budget, int level,
               std::ostream& out) {
  const ExperimentConfig& c = ctx.config;
  if (algo.empty()) algo = c.search.algorithm;
  if (evaluator_name.empty()) evaluator_name = c.search.evaluator;
  SearchConfig params = c.search.params;
  if (budget > 0) params.sample_budget = budget;

  std::optional<OracleTable> oracle;
  if (ctx.has_oracle()) oracle = read_oracle_csv(ctx.oracle_csv());
  std::optional<SupernetTree> tree;
  const bool wants_tree = algo == "gradient" || evaluator_name == "one_shot" || evaluator_name == "few_shot" ||
                          (evaluator_name == "auto" && ctx.has_tree());
  if (wants_tree && ctx.has_tree()) tree = load_tree(ctx.tree_dir());
  if (!tree && !oracle) throw Error(ErrorCode::NoEvaluator, "no evaluator available");

  const Dataset data = gen_dataset(c.dataset);
  const SpacePtr space = tree ? tree->space : c.build();
  SearchTrace trace;
  if (algo == "gradient") {
    if (!tree) throw Error(ErrorCode::NoEvaluator, "no evaluator available: gradient selection needs a tree");
    const Architecture arch = gradient_select(*tree);
    const std::size_t leaf = select_leaf(*tree);
    trace = {"gradient", params.seed, "few_shot", {{1, encode(arch), mask_eval(tree->leaves()[leaf], arch, data)}}};
    out << "selected=" << encode(arch) << " leaf=" << leaf << '\n';
  } else {
    std::optional<Evaluator> ev;
    if (evaluator_name == "auto") evaluator_name = tree ? "few_shot" : "oracle";
    if (evaluator_name == "oracle") {
      if (!oracle) throw Error(ErrorCode::NoEvaluator, "no evaluator available: oracle table missing");
      ev = Evaluator::oracle(*oracle);
    } else {
      if (!tree) throw Error(ErrorCode::NoEvaluator, "no evaluator available: supernet tree missing");
      ev = evaluator_name == "one_shot" ? Evaluator::one_shot(*tree, data) : Evaluator::few_shot(*tree, data, level);
    }
    const Region region = root_region(space);
    if (algo == "random")
      trace = random_search(region, *ev, params);
    else if (algo == "rea")
      trace = rea_search(region, *ev, params);
    else if (algo == "reinforce")
      trace = reinforce_search(region, *ev, params);
    else
      throw Error(ErrorCode::Usage, "unknown search algorithm '" + algo + "'");
  }
  write_trace_csv(ctx.out / "trace.csv", trace, oracle ? &*oracle : nullptr);
  const auto best = std::max_element(trace.steps.begin(), trace.steps.end(),
                                     [](const TraceStep& a, const TraceStep& b) { return a.proxy_score < b.proxy_score; });
  out << "algorithm=" << trace.algorithm << " evaluator=" << trace.evaluator << " steps=" << trace.steps.size()
      << " best_proxy=" << best->encoding << '\n';
  return 0;
}

int cmd_retrain(const Context& ctx, int k, std::ostream& out) {
  const ExperimentConfig& c = ctx.config;
  const fs::path trace_path = ctx.out / "trace.csv";
  if (!fs::exists(trace_path)) throw Error(ErrorCode::Io, "no search trace at " + trace_path.string());
  const SearchTrace trace = read_trace_csv(trace_path);
  if (k <= 0) k = c.search.params.k;
  const RetrainResult result =
      topk_retrain(c.build(), trace, k, gen_dataset(c.dataset), c.training.oracle, c.dataset.seed, c.jobs);
  csv::Table table{{"encoding", "proxy_score", "valid_acc", "test_acc", "final"}, {}};
  const std::string final_enc = encode(result.final_arch);
  for (const auto& r : result.rows)
    table.rows.push_back({r.encoding, csv::number(r.proxy_score), csv::number(r.valid_acc), csv::number(r.test_acc),
                          r.encoding == final_enc ? "1" : "0"});
  csv::write(ctx.out / "retrain.csv", table);
  out << "final=" << final_enc << '\n';
  return 0;
}

int cmd_report(const Context& ctx, std::ostream& out) {
  bool any = false;
  const fs::path corr = ctx.out / "correlation.csv";
  if (fs::exists(corr)) {
    any = true;
    const csv::Table t = csv::read(corr);
    const auto lv = t.column("level"), sc = t.column("supernet_count"), ta = t.column("tau"), co = t.column("cost_epochs");
    std::map<int, std::vector<const csv::Row*>> by_level;
    for (const auto& row : t.rows) by_level[std::stoi(row[lv])].push_back(&row);
    csv::Table summary{{"level", "supernet_count", "runs", "median_tau", "min_tau", "max_tau", "median_cost_epochs"}, {}};
    for (const auto& [level, rows] : by_level) {
      std::vector<double> taus, costs;
      for (const auto* r : rows) {
        taus.push_back(std::stod((*r)[ta]));
        costs.push_back(std::stod((*r)[co]));
      }
      const double med = median(taus);
      summary.rows.push_back({std::to_string(level), (*rows.front())[sc], std::to_string(rows.size()), csv::number(med),
                              csv::number(*std::min_element(taus.begin(), taus.end())),
                              csv::number(*std::max_element(taus.begin(), taus.end())), csv::number(median(costs))});
      out << "level=" << level << " runs=" << rows.size() << " median_tau=" << csv::number(med) << '\n';
    }
    csv::write(ctx.out / "summary.csv", summary);
  }
  const fs::path trace = ctx.out / "trace.csv";
  if (fs::exists(trace)) {
    const csv::Table t = csv::read(trace);
    const auto best = t.column("best_true_so_far");
    if (!t.rows.empty() && !t.rows.back()[best].empty()) {
      any = true;
      out << "search steps=" << t.rows.size() << " best_true=" << t.rows.back()[best] << '\n';
    }
  }
  if (!any) throw Error(ErrorCode::Io, "nothing to report in " + ctx.out.string());
  return 0;
}

int cmd_validate(const std::string& path, std::ostream& out) {
  const CheckpointSummary s = validate_checkpoint(path);
  out << "ok version=" << s.version << " tensors=" << s.tensor_count << " state=" << s.state_count
      << " payload_bytes=" << s.payload_bytes << " region_size=" << s.region_size
      << " trained_epochs=" << s.trained_epochs << " alpha=" << (s.has_alpha ? 1 : 0) << '\n';
  return 0;
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Few-shot neural architecture search on a desk-scale cell space", "fsnas"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config_path, "JSON experiment config");
  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "Experiment seed (overrides config)");
  app.add_option("--out", g.out_dir, "Output directory (overrides FSNAS_OUT and config)");
  int jobs = 0;
  auto* jobs_opt = app.add_option("--jobs", jobs, "Parallel trainings")->check(CLI::PositiveNumber);

  auto* gen = app.add_subcommand("gen-space", "Print space statistics");
  auto* oracle = app.add_subcommand("train-oracle", "Train every architecture from scratch (oracle.csv)");
  auto* tree = app.add_subcommand("train-tree", "Run the split-and-transfer pipeline (tree/)");
  std::string mode;
  tree->add_option("--mode", mode, "single_path | mixture")->check(CLI::IsMember({"single_path", "mixture"}));
  auto* corr = app.add_subcommand("eval-corr", "Kendall tau per tree level (correlation.csv)");
  bool append = false;
  corr->add_flag("--append", append, "Append to an existing correlation.csv");
  auto* search = app.add_subcommand("search", "Run a search driver (trace.csv)");
  std::string algo, evaluator;
  int budget = 0, level = -1;
  search->add_option("--algo", algo, "random | rea | reinforce | gradient")
      ->check(CLI::IsMember({"random", "rea", "reinforce", "gradient"}));
  search->add_option("--evaluator", evaluator, "auto | oracle | one_shot | few_shot")
      ->check(CLI::IsMember({"auto", "oracle", "one_shot", "few_shot"}));
  search->add_option("--budget", budget, "Sample budget")->check(CLI::PositiveNumber);
  search->add_option("--level", level, "Tree level for the few-shot evaluator (default: deepest)");
  auto* retrain = app.add_subcommand("retrain", "Retrain the top-K traced architectures (retrain.csv)");
  int k = 0;
  retrain->add_option("--k", k, "Number of candidates")->check(CLI::PositiveNumber);
  auto* report = app.add_subcommand("report", "Aggregate CSV outputs (summary.csv)");
  auto* validate_cmd = app.add_subcommand("validate", "Check a .fsns checkpoint's structure");
  std::string checkpoint;
  validate_cmd->add_option("path", checkpoint, "Checkpoint file")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (*seed_opt) g.seed = seed;
    if (*jobs_opt) g.jobs = jobs;
    if (*validate_cmd) return cmd_validate(checkpoint, out);
    const Context ctx = make_context(g);
    if (*gen) return cmd_gen_space(ctx, out);
    if (*oracle) return cmd_train_oracle(ctx, out);
    if (*tree) return cmd_train_tree(ctx, mode, out);
    if (*corr) return cmd_eval_corr(ctx, append, out);
    if (*search) return cmd_search(ctx, algo, evaluator, budget, level, out);
    if (*retrain) return cmd_retrain(ctx, k, out);
    if (*report) return cmd_report(ctx, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::Usage ? 2 : 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace fsnas
