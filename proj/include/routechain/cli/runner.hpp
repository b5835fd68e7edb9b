#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "routechain/cli/config.hpp"

namespace routechain::cli {

/// Exit statuses of the runner.
enum ExitCode : int { kOk = 0, kFailure = 1, kInvalidConfig = 2, kIoFailure = 3, kNonConvergence = 4 };

using Cell = std::variant<std::monostate, long long, double, std::string>;

struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
};

struct RunResult {
    std::vector<Table> tables;
    std::vector<std::filesystem::path> files;
};

/// Column sets for every table an experiment can emit, keyed by table name
/// ("histogram", "moments", ...).
const std::vector<std::string>& table_columns(const std::string& table_kind);

/// Executes one experiment, writes its result files and prints a summary.
/// Throws ConfigError, IoError, NonConvergence.
RunResult run(const ExperimentConfig& config, std::ostream& summary);

/// Full command-line entry point: `routechain <subcommand> [flags]`.
int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Formats a double with 9 significant digits; throws NonConvergence if not finite.
std::string format_cell(double value, const std::string& column);

}  // namespace routechain::cli
