#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "routechain/analytics.hpp"
#include "routechain/cli/runner.hpp"
#include "routechain/errors.hpp"
#include "routechain/estimation.hpp"
#include "routechain/netsim.hpp"
#include "routechain/pathmodel.hpp"

namespace py = pybind11;
using namespace routechain;

namespace {

py::array_t<double> to_array(const std::vector<double>& v) {
    py::array_t<double> out(static_cast<py::ssize_t>(v.size()));
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

py::array_t<double> steps_array(const RoutePath& p) {
    py::array_t<double> out({static_cast<py::ssize_t>(p.hops()), py::ssize_t{3}});
    auto m = out.mutable_unchecked<2>();
    for (std::size_t i = 0; i < p.hops(); ++i) {
        m(i, 0) = p.steps[i].x;
        m(i, 1) = p.steps[i].y;
        m(i, 2) = p.steps[i].z;
    }
    return out;
}

std::vector<double> as_vector(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    return {a.data(), a.data() + a.size()};
}

Vec3 as_point(const std::vector<double>& p) {
    detail::require(p.size() == 2 || p.size() == 3, "points need 2 or 3 coordinates");
    return {p[0], p[1], p.size() == 3 ? p[2] : 0.0};
}

StrategyParams make_params(const std::string& strategy, int dimension, double step_length, double xi,
                           const std::string& kernel) {
    StrategyParams p;
    p.kind = parse_strategy(strategy);
    p.dimension = dimension;
    p.step_length = step_length;
    p.persistence_radius = xi;
    if (kernel == "matched") p.kernel = DrsKernel::CorrelationMatched;
    else if (kernel == "literal") p.kernel = DrsKernel::Literal;
    else throw InvalidArgument("kernel must be 'matched' or 'literal'");
    p.validate();
    return p;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Routing-path chain models, analytic densities and network routing experiments.";

    static py::exception<NonConvergence> non_convergence(m, "NonConvergenceError", PyExc_RuntimeError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const InvalidArgument& e) {
            PyErr_SetString(PyExc_ValueError, e.what());
        } catch (const NonConvergence& e) {
            py::set_error(non_convergence, e.what());
        }
    });

    py::class_<StrategyParams>(m, "StrategyParams")
        .def(py::init(&make_params), py::arg("strategy") = "rrs", py::arg("dimension") = 3,
             py::arg("step_length") = 1.0, py::arg("xi") = 0.0, py::arg("kernel") = "matched")
        .def_property_readonly("strategy", [](const StrategyParams& p) { return std::string(to_string(p.kind)); })
        .def_readonly("dimension", &StrategyParams::dimension)
        .def_readonly("step_length", &StrategyParams::step_length)
        .def_readonly("xi", &StrategyParams::persistence_radius)
        .def("__repr__", [](const StrategyParams& p) {
            std::ostringstream os;
            os << "StrategyParams(strategy='" << to_string(p.kind) << "', dimension=" << p.dimension
               << ", step_length=" << p.step_length << ", xi=" << p.persistence_radius << ")";
            return os.str();
        });

    m.def("drs_concentration", [](double a, double xi, int d, const std::string& kernel) {
        return drs_concentration(a, xi, d, make_params("drs", d, a, xi, kernel).kernel);
    }, py::arg("step_length"), py::arg("xi"), py::arg("dimension") = 3, py::arg("kernel") = "matched");

    m.def("sample_distances", [](const StrategyParams& p, std::size_t n_hops, std::size_t samples, std::uint64_t seed,
                                 unsigned threads) {
        std::vector<double> r;
        {
            py::gil_scoped_release release;
            r = sample_ensemble(p, n_hops, samples, seed, threads ? threads : default_thread_count()).end_to_end_distances;
        }
        return to_array(r);
    }, py::arg("params"), py::arg("n_hops"), py::arg("samples"), py::arg("seed") = 0, py::arg("threads") = 0,
          "End-to-end distances of an ensemble; sample i depends only on (seed, i).");

    m.def("sample_path", [](const StrategyParams& p, std::size_t n_hops, std::uint64_t seed, std::uint64_t stream) {
        Rng rng(seed, stream);
        return steps_array(sample_path(p, n_hops, rng));
    }, py::arg("params"), py::arg("n_hops"), py::arg("seed") = 0, py::arg("stream") = 0,
          "Hop vectors of one chain as an (n_hops, 3) array.");

    m.def("ors_path", [](const std::vector<double>& s, const std::vector<double>& d, double a) {
        return steps_array(ors_path(as_point(s), as_point(d), a));
    }, py::arg("source"), py::arg("destination"), py::arg("step_length"));

    m.def("exact_rrs_density", &exact_rrs_density, py::arg("r"), py::arg("n_hops"), py::arg("step_length") = 1.0);
    m.def("gaussian_rrs_density", &gaussian_rrs_density, py::arg("r"), py::arg("contour_length"),
          py::arg("step_length") = 1.0, py::arg("dimension") = 3);
    m.def("exact_rrs_cdf", [](double r, std::size_t n, double a) { return make_exact_rrs_density(n, a).cdf(r); },
          py::arg("r"), py::arg("n_hops"), py::arg("step_length") = 1.0);
    m.def("rrs_moment_exact", &rrs_moment_exact, py::arg("l"), py::arg("n_hops"), py::arg("step_length") = 1.0);
    m.def("rrs_moment_limit", &rrs_moment_limit, py::arg("l"), py::arg("contour_length"), py::arg("step_length") = 1.0);
    m.def("drs_second_moment", &drs_second_moment, py::arg("contour_length"), py::arg("xi"));
    m.def("drs_fourth_moment_asymptotic", &drs_fourth_moment_asymptotic, py::arg("contour_length"), py::arg("xi"));
    m.def("angular_propagator", &angular_propagator, py::arg("cos_angle"), py::arg("contour_length"), py::arg("xi"),
          py::arg("l_max") = py::none());
    m.def("effective_radius", &effective_radius, py::arg("xi"));
    m.def("analytic_moment", &analytic_moment, py::arg("params"), py::arg("n_hops"), py::arg("l"));

    m.def("histogram", [](const py::array_t<double, py::array::c_style | py::array::forcecast>& r, double L,
                          std::size_t bins) {
        const auto h = build_histogram(as_vector(r), L, bins);
        py::dict out;
        out["bin_edges"] = to_array(h.bin_edges);
        out["density"] = to_array(h.density);
        out["stderr"] = to_array(h.std_error);
        out["mode"] = h.mode();
        return out;
    }, py::arg("distances"), py::arg("contour_length"), py::arg("bins") = 50,
          "Histogram of R/L normalized to unit area.");

    m.def("estimate_moments", [](const py::array_t<double, py::array::c_style | py::array::forcecast>& r,
                                 const std::vector<int>& orders, std::size_t n_bootstrap, std::uint64_t seed) {
        const auto ms = estimate_moments(as_vector(r), orders, n_bootstrap, seed, 1);
        py::list rows;
        for (std::size_t i = 0; i < ms.orders.size(); ++i) {
            py::dict row;
            row["order"] = ms.orders[i];
            row["empirical"] = ms.empirical[i];
            row["ci_low"] = ms.ci_low[i];
            row["ci_high"] = ms.ci_high[i];
            row["stderr"] = ms.std_error[i];
            rows.append(row);
        }
        return rows;
    }, py::arg("distances"), py::arg("orders") = std::vector<int>{0, 1, 2}, py::arg("n_bootstrap") = 1000,
          py::arg("seed") = 0, "Sample <R^{2l}> with percentile-bootstrap 95% intervals.");

    m.def("recover_persistence_radius", [](double m2, double L) {
        const auto e = recover_persistence_radius(m2, L);
        return py::make_tuple(e.xi, e.effective_radius, e.saturated);
    }, py::arg("mean_r2"), py::arg("contour_length"), "Returns (xi, a_eff, saturated).");

    m.def("fit_power_law", [](const std::vector<double>& x, const std::vector<double>& y) {
        const auto f = fit_power_law(x, y);
        return py::make_tuple(f.exponent, f.std_error, f.r_squared);
    }, py::arg("x"), py::arg("y"), "Returns (exponent, stderr, r_squared).");

    m.def("fit_critical_exponent", [](const std::vector<std::pair<double, double>>& pts) {
        const auto f = fit_critical_exponent(pts);
        return py::make_tuple(f.nu, f.std_error, f.in_expected_range);
    }, py::arg("length_mean_r2"), "Returns (nu, stderr, in_expected_range).");

    m.def("ks_distance", [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a,
                            const py::array_t<double, py::array::c_style | py::array::forcecast>& b) {
        const auto r = ks_distance(as_vector(a), as_vector(b));
        return py::make_tuple(r.statistic, r.p_value);
    }, py::arg("a"), py::arg("b"), "Two-sample KS statistic and asymptotic p-value.");

    py::class_<Deployment>(m, "Deployment")
        .def_property_readonly("size", &Deployment::size)
        .def_property_readonly("radio_radius", &Deployment::radio_radius)
        .def_property_readonly("dimension", &Deployment::dimension)
        .def_property_readonly("edge_count", &Deployment::edge_count)
        .def_property_readonly("largest_component_size", &Deployment::largest_component_size)
        .def("positions", [](const Deployment& d) {
            py::array_t<double> out({static_cast<py::ssize_t>(d.size()), py::ssize_t{d.dimension()}});
            auto v = out.mutable_unchecked<2>();
            for (std::size_t i = 0; i < d.size(); ++i) {
                const auto& p = d.positions()[i];
                v(i, 0) = p.x;
                v(i, 1) = p.y;
                if (d.dimension() == 3) v(i, 2) = p.z;
            }
            return out;
        })
        .def("neighbors", [](const Deployment& d, NodeId i) {
            const auto nb = d.neighbors(i);
            return std::vector<NodeId>(nb.begin(), nb.end());
        })
        .def("edges", &Deployment::edges)
        .def("component", &Deployment::component);

    m.def("generate_deployment", [](std::size_t n, double r, int d, std::uint64_t seed, double side) {
        return generate_deployment(n, r, d, seed, DeploymentOptions{side, 0.0});
    }, py::arg("n_nodes"), py::arg("radio_radius"), py::arg("dimension") = 2, py::arg("seed") = 0,
          py::arg("side") = 1.0);

    m.def("route", [](const Deployment& d, NodeId s, NodeId t, const std::string& rule, double knowledge_factor,
                      double max_hops_per_node, std::uint64_t seed) {
        RoutingOptions o{parse_routing_rule(rule), knowledge_factor, max_hops_per_node};
        Rng rng(seed, 0);
        const auto r = route(d, s, t, o, rng, true);
        py::dict out;
        out["hop_count"] = r.hop_count;
        out["displacement"] = r.displacement;
        out["reached"] = r.reached;
        out["visited"] = r.visited;
        return out;
    }, py::arg("deployment"), py::arg("source"), py::arg("destination"), py::arg("rule") = "shortest",
          py::arg("knowledge_factor") = 1.0, py::arg("max_hops_per_node") = 50.0, py::arg("seed") = 0);

    m.def("scaling_experiment", [](const std::vector<std::size_t>& ns, const std::string& rule, int d,
                                   const std::string& density_rule, std::size_t pairs, std::uint64_t seed) {
        ScalingConfig c;
        c.routing.rule = parse_routing_rule(rule);
        c.node_counts = ns;
        c.dimension = d;
        c.convention = parse_domain_convention(density_rule);
        c.pairs_per_n = pairs;
        c.seed = seed;
        c.threads = default_thread_count();
        ScalingResult res;
        {
            py::gil_scoped_release release;
            res = scaling_experiment(c);
        }
        py::dict out;
        py::list pts;
        for (const auto& p : res.points) pts.append(py::make_tuple(p.n_nodes, p.mean_length, p.std_error));
        out["points"] = pts;
        out["exponent"] = res.fitted_exponent;
        out["stderr"] = res.std_error;
        out["r_squared"] = res.r_squared;
        return out;
    }, py::arg("node_counts"), py::arg("rule") = "shortest", py::arg("dimension") = 2, py::arg("density_rule") = "unit",
          py::arg("pairs_per_n") = 200, py::arg("seed") = 0);

    m.def("capacity_scaling", [](const std::vector<std::size_t>& ns, double radius_factor, std::size_t repetitions,
                                 std::uint64_t seed) {
        CapacityScaling res;
        {
            py::gil_scoped_release release;
            res = capacity_scaling(ns, RoutingOptions{}, radius_factor, 1.0, repetitions, seed, default_thread_count());
        }
        py::dict out;
        py::list pts;
        for (const auto& p : res.points) pts.append(py::make_tuple(p.n_nodes, p.per_node_throughput, p.transport_capacity));
        out["points"] = pts;
        out["exponent"] = res.fitted_exponent;
        out["stderr"] = res.std_error;
        return out;
    }, py::arg("node_counts"), py::arg("radius_factor") = 1.5, py::arg("repetitions") = 1, py::arg("seed") = 0,
          "Shortest-path transport capacity on 2D unit-domain graphs.");

    m.def("run_cli", [](const std::vector<std::string>& args) {
        std::vector<std::string> full{"routechain"};
        full.insert(full.end(), args.begin(), args.end());
        std::vector<const char*> argv;
        for (const auto& a : full) argv.push_back(a.c_str());
        std::ostringstream out, err;
        const int code = cli::main_entry(static_cast<int>(argv.size()), argv.data(), out, err);
        return py::make_tuple(code, out.str(), err.str());
    }, py::arg("args"), "Run the command-line runner in-process; returns (exit_code, stdout, stderr).");
}
