#include "routechain/cli/runner.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <ostream>
#include <sstream>

#include "routechain/analytics.hpp"
#include "routechain/errors.hpp"
#include "routechain/estimation.hpp"
#include "routechain/netsim.hpp"
#include "routechain/pathmodel.hpp"

namespace routechain::cli {
namespace {

using ordered_json = nlohmann::ordered_json;

std::string fmt_plain(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

std::string cell_text(const Cell& cell, const std::string& column) {
    if (std::holds_alternative<std::monostate>(cell)) return "";
    if (const auto* i = std::get_if<long long>(&cell)) return std::to_string(*i);
    if (const auto* d = std::get_if<double>(&cell)) return format_cell(*d, column);
    return std::get<std::string>(cell);
}

ordered_json cell_json(const Cell& cell, const std::string& column) {
    if (std::holds_alternative<std::monostate>(cell)) return nullptr;
    if (const auto* i = std::get_if<long long>(&cell)) return *i;
    if (const auto* d = std::get_if<double>(&cell)) return std::stod(format_cell(*d, column));
    return std::get<std::string>(cell);
}

Cell opt_cell(const std::optional<double>& v) { return v ? Cell{*v} : Cell{}; }

std::filesystem::path sibling(const std::filesystem::path& out, const std::string& suffix, const char* ext) {
    auto p = out;
    const std::string stem = out.stem().string();
    p.replace_filename(stem + "_" + suffix + ext);
    return p;
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open output file " + path.string());
    return f;
}

void write_csv(const Table& table, const ExperimentConfig& config, const std::filesystem::path& path) {
    // Format everything first so a non-finite value aborts before any file is touched.
    std::ostringstream body;
    body << "# routechain " << to_string(config.experiment) << ' ' << table.name << '\n';
    for (const auto& [k, v] : resolved_key_values(config)) body << "# " << k << '=' << v << '\n';
    for (std::size_t c = 0; c < table.columns.size(); ++c) body << (c ? "," : "") << table.columns[c];
    body << '\n';
    for (const auto& row : table.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) body << (c ? "," : "") << cell_text(row[c], table.columns[c]);
        body << '\n';
    }
    auto f = open_output(path);
    f << body.str();
    if (!f) throw IoError("failed writing " + path.string());
}

void write_json(const std::vector<Table>& tables, const ExperimentConfig& config, const std::filesystem::path& path) {
    ordered_json doc;
    doc["experiment"] = to_string(config.experiment);
    ordered_json cfg = ordered_json::object();
    for (const auto& [k, v] : resolved_key_values(config)) cfg[k] = v;
    doc["config"] = cfg;
    ordered_json tjson = ordered_json::object();
    for (const auto& t : tables) {
        ordered_json rows = ordered_json::array();
        for (const auto& row : t.rows) {
            ordered_json r = ordered_json::array();
            for (std::size_t c = 0; c < row.size(); ++c) r.push_back(cell_json(row[c], t.columns[c]));
            rows.push_back(std::move(r));
        }
        tjson[t.name] = {{"columns", t.columns}, {"rows", std::move(rows)}};
    }
    doc["tables"] = std::move(tjson);
    const std::string text = doc.dump(2) + "\n";
    auto f = open_output(path);
    f << text;
    if (!f) throw IoError("failed writing " + path.string());
}

Table make_table(const std::string& name, const std::string& kind) {
    return Table{name, table_columns(kind), {}};
}

// Probability mass of `d` between radii lo and hi.
double bin_mass(const RadialDensity& d, double lo, double hi) {
    switch (d.kind) {
        case DensityKind::DeltaShell:
        case DensityKind::FullSpaceGaussian:
            return d.cdf(hi) - d.cdf(lo);
        case DensityKind::CompactExact: {
            const double top = std::min(hi, d.support_max);
            if (top <= lo) return 0.0;
            const int steps = 64;  // composite Simpson; the density is smooth inside a bin
            const double h = (top - lo) / steps;
            double s = d.radial_pdf(lo) + d.radial_pdf(top);
            for (int i = 1; i < steps; ++i) s += d.radial_pdf(lo + i * h) * (i % 2 ? 4.0 : 2.0);
            return s * h / 3.0;
        }
    }
    return 0.0;
}

RadialDensity reference_density(const ExperimentConfig& c) {
    const auto& p = c.strategy;
    const double length = c.contour_length();
    const bool random_like = p.kind == Strategy::Random || (p.kind == Strategy::Directed && p.persistence_radius == 0.0);
    if (p.kind == Strategy::Optimal) {
        auto d = ors_density_and_moments(length, 0).density;
        d.dimension = p.dimension;
        return d;
    }
    if (random_like) {
        if (p.dimension == 3) return make_exact_rrs_density(c.n_hops, p.step_length);
        return make_gaussian_rrs_density(length, p.step_length, 2);
    }
    // Directed: Gaussian carrying the continuum second moment.
    return make_gaussian_rrs_density(drs_second_moment(length, p.persistence_radius), 1.0, p.dimension);
}

std::string ratio_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

RunResult run_sample(const ExperimentConfig& c, std::ostream& os) {
    const auto ens = sample_ensemble(c.strategy, c.n_hops, c.samples, c.seed, c.threads);
    Table t = make_table("sample", "sample");
    double sum_r2 = 0.0, sum_r4 = 0.0;
    for (std::size_t i = 0; i < ens.end_to_end_distances.size(); ++i) {
        const double r = ens.end_to_end_distances[i];
        t.rows.push_back({static_cast<long long>(i), r});
        sum_r2 += r * r;
        sum_r4 += r * r * r * r;
    }
    const double n = static_cast<double>(c.samples);
    const double m2 = sum_r2 / n;
    const double se = n > 1 ? std::sqrt(std::max(0.0, sum_r4 / n - m2 * m2) / (n - 1)) : 0.0;
    os << "sample: " << to_string(c.strategy.kind) << " d=" << c.strategy.dimension << " N=" << c.n_hops
       << " samples=" << c.samples << "\n  <R^2> = " << fmt_plain(m2) << " +/- " << fmt_plain(se);
    if (const auto a = analytic_moment(c.strategy, c.n_hops, 1)) os << "  (analytic " << fmt_plain(*a) << ")";
    os << '\n';
    return {{std::move(t)}, {}};
}

RunResult run_density(const ExperimentConfig& c, std::ostream& os) {
    const auto ens = sample_ensemble(c.strategy, c.n_hops, c.samples, c.seed, c.threads);
    const double length = c.contour_length();
    const auto hist = build_histogram(ens.end_to_end_distances, length, c.bins);
    const auto ref = reference_density(c);
    Table t = make_table("histogram", "density");
    for (std::size_t i = 0; i < hist.bins(); ++i) {
        const double lo = hist.bin_edges[i], hi = hist.bin_edges[i + 1];
        const double analytic = bin_mass(ref, lo * length, hi * length) / (hi - lo);
        t.rows.push_back({lo, hi, hist.density[i], hist.std_error[i], analytic});
    }
    RunResult result{{std::move(t)}, {}};

    const auto& p = c.strategy;
    if (p.kind == Strategy::Directed && p.dimension == 3 && p.persistence_radius > 0.0) {
        try {
            Table prop = make_table("propagator", "propagator");
            for (int i = 0; i <= 100; ++i) {
                const double cosv = -1.0 + 2.0 * i / 100.0;
                prop.rows.push_back({cosv, angular_propagator(cosv, length, p.persistence_radius)});
            }
            result.tables.push_back(std::move(prop));
        } catch (const NonConvergence& e) {
            warn(std::string("density: propagator table skipped: ") + e.what());
        }
    }
    os << "density: " << to_string(p.kind) << " N=" << c.n_hops << " L=" << fmt_plain(length)
       << " mode R/L = " << fmt_plain(hist.mode()) << '\n';
    return result;
}

RunResult run_moments(const ExperimentConfig& c, std::ostream& os) {
    const auto ens = sample_ensemble(c.strategy, c.n_hops, c.samples, c.seed, c.threads);
    auto m = estimate_moments(ens.end_to_end_distances, c.orders, c.bootstrap, c.seed, c.threads);
    attach_analytic(m, c.strategy, c.n_hops);
    Table t = make_table("moments", "moments");
    os << "moments: " << to_string(c.strategy.kind) << " N=" << c.n_hops << " samples=" << c.samples << '\n';
    for (std::size_t i = 0; i < m.orders.size(); ++i) {
        t.rows.push_back({static_cast<long long>(m.orders[i]), m.empirical[i], m.ci_low[i], m.ci_high[i],
                          opt_cell(m.analytic[i])});
        os << "  <R^" << 2 * m.orders[i] << "> = " << fmt_plain(m.empirical[i]) << "  95% CI [" << fmt_plain(m.ci_low[i])
           << ", " << fmt_plain(m.ci_high[i]) << "]";
        if (m.analytic[i]) os << "  analytic " << fmt_plain(*m.analytic[i]);
        os << '\n';
    }
    return {{std::move(t)}, {}};
}

RunResult run_fig3(const ExperimentConfig& c, std::ostream& os) {
    const auto curves =
        persistence_sweep(c.xi_over_length, c.n_hops, c.strategy.step_length, c.samples, c.seed, c.threads, c.bins);
    RunResult result;
    Table summary = make_table("summary", "fig3_summary");
    os << "fig3: L=" << fmt_plain(c.contour_length()) << " N=" << c.n_hops << " samples=" << c.samples << '\n';
    for (const auto& curve : curves) {
        summary.rows.push_back({curve.xi_over_length, curve.mean_r_over_length, curve.histogram.mode()});
        os << "  xi/L=" << ratio_label(curve.xi_over_length) << "  mean R/L=" << fmt_plain(curve.mean_r_over_length)
           << "  mode R/L=" << fmt_plain(curve.histogram.mode()) << '\n';
    }
    result.tables.push_back(std::move(summary));
    for (const auto& curve : curves) {
        Table t = make_table("xiL_" + ratio_label(curve.xi_over_length), "histogram");
        const auto& h = curve.histogram;
        for (std::size_t i = 0; i < h.bins(); ++i)
            t.rows.push_back({h.bin_edges[i], h.bin_edges[i + 1], h.density[i], h.std_error[i]});
        result.tables.push_back(std::move(t));
    }
    return result;
}

RunResult run_recover(const ExperimentConfig& c, std::ostream& os) {
    Table t = make_table("recover", "recover");
    auto xi_at = [](double m2, double length) -> Cell {
        if (m2 >= length * length) return Cell{1e3 * length};
        if (m2 <= 0.0) return Cell{0.0};
        return Cell{recover_persistence_radius(m2, length).xi};
    };
    if (c.length > 0.0) {
        const auto est = recover_persistence_radius(c.mean_r2, c.length);
        t.rows.push_back({c.length, c.mean_r2, Cell{}, Cell{}, est.xi, Cell{}, Cell{}, est.effective_radius,
                          static_cast<long long>(est.saturated)});
        os << "recover-xi: L=" << fmt_plain(c.length) << " <R^2>=" << fmt_plain(c.mean_r2) << " -> xi="
           << fmt_plain(est.xi) << " a_eff=" << fmt_plain(est.effective_radius) << '\n';
        return {{std::move(t)}, {}};
    }
    const auto ens = sample_ensemble(c.strategy, c.n_hops, c.samples, c.seed, c.threads);
    const std::vector<int> order{1};
    const auto m = estimate_moments(ens.end_to_end_distances, order, c.bootstrap, c.seed, c.threads);
    const double length = c.contour_length();
    const auto est = recover_persistence_radius(m, length);
    t.rows.push_back({length, m.empirical[0], m.ci_low[0], m.ci_high[0], est.xi, xi_at(m.ci_low[0], length),
                      xi_at(m.ci_high[0], length), est.effective_radius, static_cast<long long>(est.saturated)});
    os << "recover-xi: sampled xi=" << fmt_plain(c.strategy.persistence_radius) << " L=" << fmt_plain(length)
       << " -> xi_hat=" << fmt_plain(est.xi) << " a_eff_hat=" << fmt_plain(est.effective_radius) << '\n';
    return {{std::move(t)}, {}};
}

Table fit_table(double exponent, double se, double r2, long long excluded) {
    Table t = make_table("fit", "fit");
    t.rows.push_back({exponent, se, exponent - 1.96 * se, exponent + 1.96 * se, r2, excluded});
    return t;
}

RunResult run_graph_scaling(const ExperimentConfig& c, std::ostream& os) {
    ScalingConfig sc;
    sc.routing = c.routing;
    sc.node_counts = c.node_counts;
    sc.dimension = c.strategy.dimension;
    sc.convention = c.convention;
    sc.radius_factor = c.radius_factor;
    sc.density = c.node_density;
    sc.pairs_per_n = c.pairs_per_n;
    sc.seed = c.seed;
    sc.threads = c.threads;
    const auto res = scaling_experiment(sc);
    Table t = make_table("scaling", "scaling");
    long long excluded = 0;
    for (const auto& pt : res.points) {
        t.rows.push_back({static_cast<long long>(pt.n_nodes), pt.mean_length, pt.std_error});
        excluded += static_cast<long long>(pt.excluded);
    }
    os << "graph-scaling: route=" << to_string(c.routing.rule) << " d=" << sc.dimension
       << " domain=" << to_string(c.convention) << (c.routing.rule == RoutingRule::GreedyKnowledge ? " (greedy = directed-strategy proxy)" : "")
       << "\n  exponent = " << fmt_plain(res.fitted_exponent) << " +/- " << fmt_plain(res.std_error)
       << " (95% CI [" << fmt_plain(res.fitted_exponent - 1.96 * res.std_error) << ", "
       << fmt_plain(res.fitted_exponent + 1.96 * res.std_error) << "]), excluded pairs " << excluded << '\n';
    return {{std::move(t), fit_table(res.fitted_exponent, res.std_error, res.r_squared, excluded)}, {}};
}

RunResult run_capacity(const ExperimentConfig& c, std::ostream& os) {
    const auto res = capacity_scaling(c.node_counts, c.routing, c.radius_factor, c.rate_w, c.repetitions, c.seed, c.threads);
    Table t = make_table("capacity", "capacity");
    for (const auto& pt : res.points)
        t.rows.push_back({static_cast<long long>(pt.n_nodes), pt.per_node_throughput, pt.transport_capacity});
    os << "capacity: route=" << to_string(c.routing.rule) << "  exponent = " << fmt_plain(res.fitted_exponent)
       << " +/- " << fmt_plain(res.std_error) << '\n';
    return {{std::move(t), fit_table(res.fitted_exponent, res.std_error, res.r_squared, 0)}, {}};
}

std::string kind_of(const Table& t, Experiment e) {
    if (e == Experiment::Fig3) return t.name == "summary" ? "fig3_summary" : "histogram";
    if (t.name == "histogram") return "density";
    return t.name;
}

}  // namespace

std::string format_cell(double value, const std::string& column) {
    if (!std::isfinite(value)) throw NonConvergence("non-finite value in column '" + column + "'");
    return fmt_plain(value);
}

const std::vector<std::string>& table_columns(const std::string& kind) {
    static const std::map<std::string, std::vector<std::string>> schemas{
        {"sample", {"index", "distance"}},
        {"histogram", {"bin_lo", "bin_hi", "density", "stderr"}},
        {"density", {"bin_lo", "bin_hi", "density", "stderr", "analytic"}},
        {"propagator", {"cos_angle", "propagator"}},
        {"moments", {"order", "empirical", "ci_low", "ci_high", "analytic"}},
        {"fig3_summary", {"xi_over_L", "mean_r_over_L", "mode_r_over_L"}},
        {"recover", {"length", "mean_r2", "ci_low", "ci_high", "xi_hat", "xi_ci_low", "xi_ci_high", "a_eff_hat", "saturated"}},
        {"scaling", {"N", "mean_length_meters", "stderr"}},
        {"capacity", {"N", "per_node_throughput", "capacity_bit_meters"}},
        {"fit", {"exponent", "stderr", "ci_low", "ci_high", "r_squared", "excluded"}},
    };
    const auto it = schemas.find(kind);
    if (it == schemas.end()) throw std::out_of_range("unknown table kind " + kind);
    return it->second;
}

RunResult run(const ExperimentConfig& config, std::ostream& summary) {
    RunResult result;
    switch (config.experiment) {
        case Experiment::Sample: result = run_sample(config, summary); break;
        case Experiment::Density: result = run_density(config, summary); break;
        case Experiment::Moments: result = run_moments(config, summary); break;
        case Experiment::Fig3: result = run_fig3(config, summary); break;
        case Experiment::RecoverXi: result = run_recover(config, summary); break;
        case Experiment::GraphScaling: result = run_graph_scaling(config, summary); break;
        case Experiment::Capacity: result = run_capacity(config, summary); break;
    }
    for (const auto& t : result.tables)
        if (t.columns != table_columns(kind_of(t, config.experiment)))
            throw std::logic_error("table " + t.name + " does not match its schema");

    if (config.format == OutputFormat::Json) {
        write_json(result.tables, config, config.out);
        result.files.push_back(config.out);
    } else {
        for (std::size_t i = 0; i < result.tables.size(); ++i) {
            const auto path = i == 0 ? config.out : sibling(config.out, result.tables[i].name, ".csv");
            write_csv(result.tables[i], config, path);
            result.files.push_back(path);
        }
    }
    for (const auto& f : result.files) summary << "  wrote " << f.string() << '\n';
    return result;
}

int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"routechain: routing-chain sampler, analytics and network scaling experiments"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    app.add_option("--config", config_path, "flat key = value configuration file");
    std::map<std::string, std::string> flags;
    for (const auto& spec : config_keys()) {
        std::string names = std::string("--") + spec.name;
        std::string dashed = spec.name;
        std::replace(dashed.begin(), dashed.end(), '_', '-');
        if (dashed != spec.name) names += ",--" + dashed;
        app.add_option(names, flags[spec.name], spec.help);
    }

    const std::vector<std::string> experiments{"sample", "density", "moments", "fig3", "recover-xi", "graph-scaling", "capacity"};
    for (const auto& name : experiments) app.add_subcommand(name, "run the " + name + " experiment");
    app.add_subcommand("validate", "check a configuration and list every problem without running");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kInvalidConfig;
    }

    const std::string sub = app.get_subcommands().front()->get_name();
    try {
        KeyValues values;
        if (!config_path.empty()) values = read_config_file(config_path);
        for (const auto& [k, v] : flags)
            if (app.count(std::string("--") + k) > 0) values[k] = v;
        if (sub != "validate") values["experiment"] = sub;

        const Diagnostics diag = validate(values);
        for (const auto& w : diag.warnings) err << "warning: " << w << '\n';
        for (const auto& e : diag.errors) err << "error: " << e << '\n';
        if (sub == "validate") {
            out << (diag.ok() ? "configuration is valid\n" : "configuration has errors\n");
            return diag.ok() ? kOk : kInvalidConfig;
        }
        if (!diag.ok()) return kInvalidConfig;
        run(resolve(values), out);
        return kOk;
    } catch (const ConfigError& e) {
        for (const auto& m : e.errors()) err << "error: " << m << '\n';
        return kInvalidConfig;
    } catch (const InvalidArgument& e) {
        err << "error: " << e.what() << '\n';
        return kInvalidConfig;
    } catch (const IoError& e) {
        err << "error: " << e.what() << '\n';
        return kIoFailure;
    } catch (const std::ios_base::failure& e) {
        err << "error: " << e.what() << '\n';
        return kIoFailure;
    } catch (const NonConvergence& e) {
        err << "error: numerical non-convergence: " << e.what() << '\n';
        return kNonConvergence;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kFailure;
    }
}

}  // namespace routechain::cli
