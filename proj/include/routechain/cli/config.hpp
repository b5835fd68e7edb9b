#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "routechain/netsim.hpp"
#include "routechain/pathmodel.hpp"

namespace routechain::cli {

enum class Experiment { Sample, Density, Moments, Fig3, RecoverXi, GraphScaling, Capacity };
enum class OutputFormat { Csv, Json };

std::string to_string(Experiment e);
Experiment parse_experiment(const std::string& text);

/// Raw key -> value pairs from a config file and/or command-line flags.
using KeyValues = std::map<std::string, std::string>;

struct KeySpec {
    const char* name;
    const char* default_value;  // "" = unset
    const char* help;
};

/// Every accepted key, in output order.
const std::vector<KeySpec>& config_keys();

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<std::string> errors);
    const std::vector<std::string>& errors() const noexcept { return errors_; }

private:
    std::vector<std::string> errors_;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Flat `key = value` lines; '#' starts a comment. Throws IoError / ConfigError.
KeyValues read_config_file(const std::filesystem::path& path);

struct ExperimentConfig {
    Experiment experiment = Experiment::Sample;
    StrategyParams strategy;
    std::size_t n_hops = 1000;
    std::size_t samples = 10000;
    std::uint64_t seed = 1;
    std::filesystem::path out = "routechain_out.csv";
    OutputFormat format = OutputFormat::Csv;
    unsigned threads = 1;
    std::size_t bins = 50;
    std::vector<int> orders{0, 1, 2};
    std::size_t bootstrap = 1000;
    std::vector<double> xi_over_length;
    double mean_r2 = 0.0;  // recover-xi: invert this value instead of sampling
    double length = 0.0;
    std::vector<std::size_t> node_counts;
    RoutingOptions routing;
    DomainConvention convention = DomainConvention::UnitDomain;
    double radius_factor = 1.5;
    double node_density = 1.0;
    std::size_t pairs_per_n = 200;
    double rate_w = 1.0;
    std::size_t repetitions = 1;

    [[nodiscard]] double contour_length() const noexcept {
        return strategy.step_length * static_cast<double>(n_hops);
    }
};

struct Diagnostics {
    std::vector<std::string> errors;
    std::vector<std::string> warnings;
    [[nodiscard]] bool ok() const noexcept { return errors.empty(); }
};

/// Lists every problem without running anything.
Diagnostics validate(const KeyValues& values);

/// Resolves defaults and parses values; throws ConfigError listing all errors.
ExperimentConfig resolve(const KeyValues& values);

/// The fully resolved configuration as ordered key/value strings, suitable for
/// embedding in outputs and feeding back through resolve().
std::vector<std::pair<std::string, std::string>> resolved_key_values(const ExperimentConfig& config);

}  // namespace routechain::cli
