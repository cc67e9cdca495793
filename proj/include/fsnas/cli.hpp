#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "fsnas/eval.hpp"
#include "fsnas/trace.hpp"

namespace fsnas {

/// Entry point of the `fsnas` tool; `args` excludes the program name.
/// Returns 0 on success, 1 on runtime errors, 2 on usage errors.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// File schemas shared by the subcommands.

/// oracle.csv: encoding, valid_acc, test_acc, reachable, train_epochs
void write_oracle_csv(const std::filesystem::path& path, const OracleTable& table);
OracleTable read_oracle_csv(const std::filesystem::path& path);

/// trace.csv: step, encoding, proxy_score, true_score, best_true_so_far.
/// The last two columns are empty when `oracle` is null.
void write_trace_csv(const std::filesystem::path& path, const SearchTrace& trace, const OracleTable* oracle);
SearchTrace read_trace_csv(const std::filesystem::path& path);

/// correlation.csv: level, supernet_count, split_edges, seed, tau, concordant,
/// discordant, ties_x, ties_y, cost_epochs. Split edges are joined with '|'.
std::vector<std::string> correlation_header();
std::vector<std::string> correlation_row(const CorrelationReport& report);

}  // namespace fsnas
