#include "routechain/cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <type_traits>

namespace routechain::cli {
namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string join_errors(const std::vector<std::string>& errors) {
    std::string out;
    for (const auto& e : errors) {
        if (!out.empty()) out += "; ";
        out += e;
    }
    return out;
}

// Shortest text that reads back to the same double.
std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

template <typename T>
std::string join(const std::vector<T>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ',';
        if constexpr (std::is_floating_point_v<T>) out += format_double(values[i]);
        else out += std::to_string(values[i]);
    }
    return out;
}

// Collects parse errors instead of throwing so validate() can report them all.
class Reader {
public:
    Reader(const KeyValues& values, Diagnostics& diag) : values_(values), diag_(diag) {
        for (const auto& spec : config_keys())
            if (*spec.default_value != '\0') defaults_[spec.name] = spec.default_value;
    }

    [[nodiscard]] bool has(const std::string& key) const {
        const auto it = values_.find(key);
        return it != values_.end() && !trim(it->second).empty();
    }

    std::string text(const std::string& key) const {
        if (has(key)) return trim(values_.at(key));
        const auto it = defaults_.find(key);
        return it == defaults_.end() ? "" : it->second;
    }

    double real(const std::string& key) {
        const std::string t = text(key);
        double v = 0.0;
        const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
        if (ec != std::errc{} || p != t.data() + t.size() || !std::isfinite(v)) {
            diag_.errors.push_back(key + ": expected a finite number, got '" + t + "'");
            return 0.0;
        }
        return v;
    }

    std::uint64_t integer(const std::string& key) {
        const std::string t = text(key);
        std::uint64_t v = 0;
        const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
        if (ec != std::errc{} || p != t.data() + t.size()) {
            diag_.errors.push_back(key + ": expected a nonnegative integer, got '" + t + "'");
            return 0;
        }
        return v;
    }

    template <typename T, typename Parse>
    std::vector<T> list(const std::string& key, Parse parse) {
        std::vector<T> out;
        std::istringstream in(text(key));
        std::string item;
        while (std::getline(in, item, ',')) {
            item = trim(item);
            if (item.empty()) continue;
            T v{};
            if (!parse(item, v)) {
                diag_.errors.push_back(key + ": cannot parse list element '" + item + "'");
                continue;
            }
            out.push_back(v);
        }
        return out;
    }

    void error(const std::string& msg) { diag_.errors.push_back(msg); }
    void warning(const std::string& msg) { diag_.warnings.push_back(msg); }

private:
    const KeyValues& values_;
    Diagnostics& diag_;
    std::map<std::string, std::string> defaults_;
};

template <typename T>
bool parse_number(const std::string& s, T& v) {
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    return ec == std::errc{} && p == s.data() + s.size();
}

ExperimentConfig parse(const KeyValues& values, Diagnostics& diag) {
    std::set<std::string> known;
    for (const auto& spec : config_keys()) known.insert(spec.name);
    for (const auto& [key, value] : values)
        if (!known.count(key)) diag.errors.push_back(key + ": unknown configuration key");

    Reader r(values, diag);
    ExperimentConfig c;

    if (!r.has("experiment")) {
        r.error("experiment: missing (one of sample, density, moments, fig3, recover-xi, graph-scaling, capacity)");
    } else {
        try {
            c.experiment = parse_experiment(r.text("experiment"));
        } catch (const std::exception& e) {
            r.error(std::string("experiment: ") + e.what());
        }
    }
    try {
        c.strategy.kind = parse_strategy(r.text("strategy"));
    } catch (const std::exception& e) {
        r.error(std::string("strategy: ") + e.what());
    }
    c.strategy.dimension = static_cast<int>(r.integer("dimension"));
    if (c.strategy.dimension != 2 && c.strategy.dimension != 3) r.error("dimension: must be 2 or 3");
    c.strategy.step_length = r.real("step_length");
    if (!(c.strategy.step_length > 0.0)) r.error("step_length: must be positive");
    c.strategy.persistence_radius = r.real("xi");
    if (c.strategy.persistence_radius < 0.0) r.error("xi: persistence radius must be nonnegative");
    const std::string kernel = r.text("kernel");
    if (kernel == "matched") {
        c.strategy.kernel = DrsKernel::CorrelationMatched;
    } else if (kernel == "literal") {
        c.strategy.kernel = DrsKernel::Literal;
    } else {
        r.error("kernel: expected 'matched' or 'literal', got '" + kernel + "'");
    }

    c.n_hops = r.integer("n_hops");
    if (c.n_hops < 1) r.error("n_hops: must be >= 1");
    c.samples = r.integer("samples");
    if (c.samples < 1) r.error("samples: must be >= 1");
    c.seed = r.integer("seed");
    c.out = r.text("out");
    if (c.out.empty()) r.error("out: output path is empty");
    const std::string fmt = r.text("format");
    if (fmt == "csv") {
        c.format = OutputFormat::Csv;
    } else if (fmt == "json") {
        c.format = OutputFormat::Json;
    } else {
        r.error("format: expected 'csv' or 'json', got '" + fmt + "'");
    }
    c.threads = r.has("threads") ? static_cast<unsigned>(r.integer("threads")) : default_thread_count();
    if (c.threads < 1) r.error("threads: must be >= 1");
    c.bins = r.integer("bins");
    if (c.bins < 2) r.error("bins: must be >= 2");
    c.orders = r.list<int>("orders", parse_number<int>);
    for (const int l : c.orders)
        if (l < 0 || l > 4) r.error("orders: each order must lie in [0, 4], got " + std::to_string(l));
    c.bootstrap = r.integer("bootstrap");
    if (c.bootstrap < 2) r.error("bootstrap: must be >= 2");
    c.xi_over_length = r.list<double>("xi_over_L", parse_number<double>);
    for (const double v : c.xi_over_length)
        if (!(v >= 0.0) || !std::isfinite(v)) r.error("xi_over_L: values must be nonnegative");

    if (r.has("mean_r2")) c.mean_r2 = r.real("mean_r2");
    if (r.has("length")) c.length = r.real("length");

    c.node_counts = r.list<std::size_t>("n_list", parse_number<std::size_t>);
    try {
        c.routing.rule = parse_routing_rule(r.text("route"));
    } catch (const std::exception& e) {
        r.error(std::string("route: ") + e.what());
    }
    try {
        c.convention = parse_domain_convention(r.text("density_rule"));
    } catch (const std::exception& e) {
        r.error(std::string("density_rule: ") + e.what());
    }
    c.radius_factor = r.real("radius_factor");
    if (!(c.radius_factor > 0.0)) r.error("radius_factor: must be positive");
    c.node_density = r.real("node_density");
    if (!(c.node_density > 0.0)) r.error("node_density: must be positive");
    c.pairs_per_n = r.integer("pairs_per_n");
    c.routing.knowledge_factor = r.real("knowledge_factor");
    if (c.routing.knowledge_factor < 1.0) r.error("knowledge_factor: must be >= 1 (knowledge range >= radio radius)");
    c.routing.max_hops_per_node = r.real("max_hops_factor");
    if (!(c.routing.max_hops_per_node > 0.0)) r.error("max_hops_factor: must be positive");
    c.rate_w = r.real("rate_w");
    if (!(c.rate_w > 0.0)) r.error("rate_w: must be positive");
    c.repetitions = r.integer("repetitions");
    if (c.repetitions < 1) r.error("repetitions: must be >= 1");

    // Experiment-specific requirements.
    const double length = c.contour_length();
    const bool directed = c.strategy.kind == Strategy::Directed;
    switch (c.experiment) {
        case Experiment::Moments:
            if (c.samples < 100) r.error("samples: moments need at least 100 samples");
            if (c.orders.empty()) r.error("orders: empty");
            break;
        case Experiment::Density:
            if (directed && c.strategy.persistence_radius > 0.0) {
                const double ratio = c.strategy.persistence_radius / length;
                if (ratio < 0.01) {
                    r.warning("xi/L = " + format_double(ratio) +
                              " is below 0.01: the angular propagator is isotropic to within exp(-L/xi), so its "
                              "table carries no information; the continuum reference also needs step_length <= xi/10");
                }
                if (ratio > 100.0) {
                    r.warning("L/xi = " + format_double(1.0 / ratio) +
                              " is below 0.01: angular propagator evaluation is refused (spectral sum does not "
                              "converge); the propagator table will be skipped");
                }
            }
            break;
        case Experiment::Fig3:
            if (c.xi_over_length.empty()) r.error("xi_over_L: empty");
            break;
        case Experiment::RecoverXi:
            if (r.has("mean_r2")) {
                if (!(c.length > 0.0)) r.error("length: must be positive when mean_r2 is given");
                if (!(c.mean_r2 > 0.0)) r.error("mean_r2: must be positive");
                if (c.length > 0.0 && c.mean_r2 >= c.length * c.length)
                    r.error("mean_r2: must be below length^2 (ballistic saturation)");
            } else if (!directed) {
                r.error("strategy: recover-xi samples a drs ensemble (or set mean_r2 and length)");
            }
            break;
        case Experiment::GraphScaling:
            if (c.node_counts.empty()) {
                r.error("n_list: empty (graph-scaling needs at least 4 node counts)");
            } else {
                std::set<std::size_t> distinct(c.node_counts.begin(), c.node_counts.end());
                if (distinct.size() != c.node_counts.size()) r.error("n_list: node counts must be distinct");
                if (c.node_counts.size() < 4) r.error("n_list: need at least 4 node counts");
                if (*distinct.rbegin() < 10 * *distinct.begin()) r.error("n_list: must span at least one decade");
                if (*distinct.begin() < 2) r.error("n_list: node counts must be >= 2");
            }
            if (c.pairs_per_n < 2) r.error("pairs_per_n: must be >= 2");
            break;
        case Experiment::Capacity:
            if (c.node_counts.size() < 3) r.error("n_list: capacity needs at least 3 node counts");
            for (const auto n : c.node_counts)
                if (n < 2) r.error("n_list: node counts must be >= 2");
            break;
        case Experiment::Sample:
            break;
    }
    if (directed && c.strategy.persistence_radius > 0.0 && c.strategy.step_length > c.strategy.persistence_radius / 10.0 &&
        (c.experiment == Experiment::Moments || c.experiment == Experiment::RecoverXi)) {
        r.warning("step_length exceeds xi/10; the continuum <R^2> formula carries O((a/xi)^2) discretisation error");
    }
    return c;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> errors)
    : std::runtime_error("invalid configuration: " + join_errors(errors)), errors_(std::move(errors)) {}

std::string to_string(Experiment e) {
    switch (e) {
        case Experiment::Sample: return "sample";
        case Experiment::Density: return "density";
        case Experiment::Moments: return "moments";
        case Experiment::Fig3: return "fig3";
        case Experiment::RecoverXi: return "recover-xi";
        case Experiment::GraphScaling: return "graph-scaling";
        case Experiment::Capacity: return "capacity";
    }
    return "?";
}

Experiment parse_experiment(const std::string& text) {
    for (const auto e : {Experiment::Sample, Experiment::Density, Experiment::Moments, Experiment::Fig3,
                         Experiment::RecoverXi, Experiment::GraphScaling, Experiment::Capacity})
        if (to_string(e) == text) return e;
    throw std::invalid_argument("unknown experiment '" + text + "'");
}

const std::vector<KeySpec>& config_keys() {
    static const std::vector<KeySpec> keys{
        {"experiment", "", "sample | density | moments | fig3 | recover-xi | graph-scaling | capacity"},
        {"strategy", "rrs", "routing strategy: rrs | drs | ors"},
        {"dimension", "3", "2 or 3"},
        {"step_length", "1", "hop length a"},
        {"xi", "0", "persistence radius (drs)"},
        {"kernel", "matched", "drs concentration: matched (tangent correlation exp(-a/xi)) | literal (xi/a)"},
        {"n_hops", "1000", "hops per chain"},
        {"samples", "10000", "chains per ensemble"},
        {"seed", "1", "64-bit seed"},
        {"out", "routechain_out.csv", "output file (multi-file experiments use it as a stem)"},
        {"format", "csv", "csv | json"},
        {"threads", "", "worker threads (default: $ROUTECHAIN_THREADS or hardware)"},
        {"bins", "50", "histogram bins over R/L"},
        {"orders", "0,1,2", "moment orders l for <R^{2l}>, within [0, 4]"},
        {"bootstrap", "1000", "bootstrap replicates"},
        {"xi_over_L", "0.001,0.1,0.2,0.5,3,8", "fig3 persistence sweep"},
        {"mean_r2", "", "recover-xi: invert this <R^2> instead of sampling"},
        {"length", "", "recover-xi: contour length paired with mean_r2"},
        {"n_list", "", "node counts for graph-scaling / capacity"},
        {"route", "shortest", "graph routing: random-walk | greedy | shortest"},
        {"density_rule", "unit", "unit (shrinking radius) | fixed-density (growing domain)"},
        {"radius_factor", "1.5", "radio radius = factor * (log N / N)^{1/d} (unit domain)"},
        {"node_density", "1", "nodes per unit area/volume (fixed-density)"},
        {"pairs_per_n", "200", "source-destination pairs per N"},
        {"knowledge_factor", "1", "greedy knowledge range in radio radii"},
        {"max_hops_factor", "50", "walk budget per route in multiples of N"},
        {"rate_w", "1", "per-node transmission rate W (bit/s)"},
        {"repetitions", "1", "deployments averaged per N (capacity)"},
    };
    return keys;
}

KeyValues read_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file " + path.string());
    KeyValues values;
    std::vector<std::string> errors;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            errors.push_back(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
            continue;
        }
        const std::string key = trim(line.substr(0, eq));
        if (values.count(key)) errors.push_back(key + ": given twice in " + path.string());
        values[key] = trim(line.substr(eq + 1));
    }
    if (!errors.empty()) throw ConfigError(std::move(errors));
    return values;
}

Diagnostics validate(const KeyValues& values) {
    Diagnostics diag;
    parse(values, diag);
    return diag;
}

ExperimentConfig resolve(const KeyValues& values) {
    Diagnostics diag;
    ExperimentConfig c = parse(values, diag);
    if (!diag.ok()) throw ConfigError(diag.errors);
    return c;
}

std::vector<std::pair<std::string, std::string>> resolved_key_values(const ExperimentConfig& c) {
    // `out` and `threads` only steer execution and are left out so that reruns
    // into other paths or with other worker counts stay byte-identical.
    std::vector<std::pair<std::string, std::string>> kv{
        {"experiment", to_string(c.experiment)},
        {"strategy", std::string(to_string(c.strategy.kind))},
        {"dimension", std::to_string(c.strategy.dimension)},
        {"step_length", format_double(c.strategy.step_length)},
        {"xi", format_double(c.strategy.persistence_radius)},
        {"kernel", c.strategy.kernel == DrsKernel::Literal ? "literal" : "matched"},
        {"n_hops", std::to_string(c.n_hops)},
        {"samples", std::to_string(c.samples)},
        {"seed", std::to_string(c.seed)},
        {"format", c.format == OutputFormat::Json ? "json" : "csv"},
        {"bins", std::to_string(c.bins)},
        {"orders", join(c.orders)},
        {"bootstrap", std::to_string(c.bootstrap)},
        {"xi_over_L", join(c.xi_over_length)},
    };
    if (c.experiment == Experiment::RecoverXi && c.length > 0.0) {
        kv.emplace_back("mean_r2", format_double(c.mean_r2));
        kv.emplace_back("length", format_double(c.length));
    }
    kv.emplace_back("n_list", join(c.node_counts));
    kv.emplace_back("route", std::string(to_string(c.routing.rule)));
    kv.emplace_back("density_rule", std::string(to_string(c.convention)));
    kv.emplace_back("radius_factor", format_double(c.radius_factor));
    kv.emplace_back("node_density", format_double(c.node_density));
    kv.emplace_back("pairs_per_n", std::to_string(c.pairs_per_n));
    kv.emplace_back("knowledge_factor", format_double(c.routing.knowledge_factor));
    kv.emplace_back("max_hops_factor", format_double(c.routing.max_hops_per_node));
    kv.emplace_back("rate_w", format_double(c.rate_w));
    kv.emplace_back("repetitions", std::to_string(c.repetitions));
    return kv;
}

}  // namespace routechain::cli
