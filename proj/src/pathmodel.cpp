#include "routechain/pathmodel.hpp"

#include <algorithm>
#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/tools/roots.hpp>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <thread>

#include "routechain/errors.hpp"
#include "routechain/parallel.hpp"

namespace routechain {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// 1 - <cos> for the transition kernel, evaluated without cancellation at
// large concentration.
double one_minus_mean_cosine(double kappa, int dimension) {
    if (dimension == 3) {
        if (kappa < 1e-3) return 1.0 - kappa / 3.0 + kappa * kappa * kappa / 45.0;
        return 1.0 / kappa - 2.0 / std::expm1(2.0 * kappa);
    }
    if (kappa < 1e-3) return 1.0 - kappa / 2.0 + kappa * kappa * kappa / 16.0;
    if (kappa <= 500.0) {
        return 1.0 - boost::math::cyl_bessel_i(1, kappa) / boost::math::cyl_bessel_i(0, kappa);
    }
    // Hankel expansion of I1/I0.
    const double r = 1.0 / kappa;
    return r * (0.5 + r * (0.125 + r * (0.125 + r * (25.0 / 128.0 + r * (13.0 / 32.0)))));
}

// (cos phi, sin phi) for phi uniform on the circle, by rejection in the unit disk.
std::pair<double, double> uniform_rotation(Rng& rng) {
    for (;;) {
        const double x = 2.0 * rng.uniform() - 1.0;
        const double y = 2.0 * rng.uniform() - 1.0;
        const double r2 = x * x + y * y;
        if (r2 > 0.0 && r2 <= 1.0) return {(x * x - y * y) / r2, 2.0 * x * y / r2};
    }
}

Vec3 uniform_direction(int dimension, Rng& rng) {
    if (dimension == 2) {
        const auto [c, s] = uniform_rotation(rng);
        return {c, s, 0.0};
    }
    // Marsaglia (1972).
    for (;;) {
        const double x = 2.0 * rng.uniform() - 1.0;
        const double y = 2.0 * rng.uniform() - 1.0;
        const double r2 = x * x + y * y;
        if (r2 >= 1.0) continue;
        const double f = 2.0 * std::sqrt(1.0 - r2);
        return {x * f, y * f, 1.0 - 2.0 * r2};
    }
}

// Exact inverse CDF of density ∝ exp(kappa * w) on w in [-1, 1]; returns 1 - w.
// `em` is expm1(-2 kappa).
double sample_one_minus_cos(double kappa, double em, Rng& rng) {
    const double u = rng.uniform();
    if (kappa < 1e-12) return 2.0 * (1.0 - u);
    const double omw = -std::log1p((1.0 - u) * em) / kappa;
    return std::clamp(omw, 0.0, 2.0);
}

// Von Mises turn with zero mean as (cos, sin) (Best-Fisher rejection; wrapped
// normal for very large concentration where the envelope degenerates).
std::pair<double, double> sample_von_mises(double kappa, Rng& rng) {
    if (kappa < 1e-8) return uniform_rotation(rng);
    if (kappa > 1e6) {
        const double angle = rng.normal() / std::sqrt(kappa);
        return {std::cos(angle), std::sin(angle)};
    }
    double s;
    if (kappa < 1e-5) {
        s = 1.0 / kappa + kappa;
    } else {
        const double r = 1.0 + std::sqrt(1.0 + 4.0 * kappa * kappa);
        const double rho = (r - std::sqrt(2.0 * r)) / (2.0 * kappa);
        s = (1.0 + rho * rho) / (2.0 * rho);
    }
    double w;
    for (;;) {
        const double z = std::cos(std::numbers::pi * rng.uniform());
        w = (1.0 + s * z) / (s + z);
        const double y = kappa * (s - w);
        const double v = rng.uniform();
        if (y * (2.0 - y) - v >= 0.0 || std::log(y / v) + 1.0 - y >= 0.0) break;
    }
    w = std::clamp(w, -1.0, 1.0);
    const double sine = std::sqrt(std::max(0.0, (1.0 - w) * (1.0 + w)));
    return {w, rng.uniform() < 0.5 ? -sine : sine};
}

// Rotates the polar draw (1 - cos, azimuth given as cos c and sin sn) about `axis` (unit vector).
Vec3 deflect(const Vec3& axis, double one_minus_cos, double c, double sn) {
    const double w = 1.0 - one_minus_cos;
    const double s = std::sqrt(std::max(0.0, one_minus_cos * (2.0 - one_minus_cos)));
    // Branchless orthonormal basis (Duff et al. 2017).
    const double sign = std::copysign(1.0, axis.z);
    const double a = -1.0 / (sign + axis.z);
    const double b = axis.x * axis.y * a;
    const Vec3 e1{1.0 + sign * axis.x * axis.x * a, sign * b, -sign * axis.x};
    const Vec3 e2{b, sign + axis.y * axis.y * a, -axis.y};
    Vec3 out = w * axis + (s * c) * e1 + (s * sn) * e2;
    out *= 1.0 / norm(out);
    return out;
}

void check_chain_args(std::size_t n_hops, double step_length, int dimension) {
    detail::require(n_hops >= 1, "n_hops must be >= 1");
    detail::require(std::isfinite(step_length) && step_length > 0.0, "step_length must be positive");
    detail::require(dimension == 2 || dimension == 3, "dimension must be 2 or 3");
}

// Calls visit(unit_direction) once per hop.
template <typename Visit>
void walk_chain(const StrategyParams& p, std::size_t n_hops, Rng& rng, Visit&& visit) {
    switch (p.kind) {
        case Strategy::Random:
            for (std::size_t n = 0; n < n_hops; ++n) visit(uniform_direction(p.dimension, rng));
            return;
        case Strategy::Optimal:
            for (std::size_t n = 0; n < n_hops; ++n) visit(Vec3{1.0, 0.0, 0.0});
            return;
        case Strategy::Directed:
            break;
    }
    const double kappa = drs_concentration(p.step_length, p.persistence_radius, p.dimension, p.kernel);
    if (p.dimension == 2) {
        Vec3 u = uniform_direction(2, rng);
        visit(u);
        for (std::size_t n = 1; n < n_hops; ++n) {
            const auto [c, sn] = sample_von_mises(kappa, rng);
            u = Vec3{c * u.x - sn * u.y, sn * u.x + c * u.y, 0.0};
            u *= 1.0 / std::hypot(u.x, u.y);
            visit(u);
        }
        return;
    }
    const double em = std::expm1(-2.0 * kappa);
    Vec3 u = uniform_direction(3, rng);
    visit(u);
    for (std::size_t n = 1; n < n_hops; ++n) {
        const double omc = sample_one_minus_cos(kappa, em, rng);
        const auto [c, sn] = uniform_rotation(rng);
        u = deflect(u, omc, c, sn);
        visit(u);
    }
}

}  // namespace

std::string_view to_string(Strategy s) noexcept {
    switch (s) {
        case Strategy::Random: return "rrs";
        case Strategy::Directed: return "drs";
        case Strategy::Optimal: return "ors";
    }
    return "?";
}

Strategy parse_strategy(std::string_view text) {
    std::string lower(text);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    if (lower == "rrs" || lower == "random") return Strategy::Random;
    if (lower == "drs" || lower == "directed") return Strategy::Directed;
    if (lower == "ors" || lower == "optimal") return Strategy::Optimal;
    throw InvalidArgument("unknown strategy '" + std::string(text) + "' (expected rrs, drs or ors)");
}

void StrategyParams::validate() const {
    detail::require(dimension == 2 || dimension == 3, "dimension: must be 2 or 3");
    detail::require(std::isfinite(step_length) && step_length > 0.0, "step_length: must be positive");
    detail::require(std::isfinite(persistence_radius) && persistence_radius >= 0.0,
                    "xi: persistence radius must be nonnegative");
}

Vec3 RoutePath::end_to_end() const noexcept {
    Vec3 r;
    for (const auto& s : steps) r += s;
    return r;
}

double mean_cosine(double kappa, int dimension) {
    detail::require(kappa >= 0.0, "concentration must be nonnegative");
    detail::require(dimension == 2 || dimension == 3, "dimension must be 2 or 3");
    return 1.0 - one_minus_mean_cosine(kappa, dimension);
}

double drs_concentration(double step_length, double xi, int dimension, DrsKernel kernel) {
    detail::require(step_length > 0.0, "step_length must be positive");
    detail::require(xi >= 0.0, "xi must be nonnegative");
    detail::require(dimension == 2 || dimension == 3, "dimension must be 2 or 3");
    if (xi == 0.0) return 0.0;
    if (kernel == DrsKernel::Literal) return xi / step_length;

    const double target = -std::expm1(-step_length / xi);  // 1 - exp(-a/xi)
    if (target >= 1.0) return 0.0;
    // 1 - <cos> is strictly decreasing in kappa, ~1/kappa (3D) or 1/(2 kappa) (2D).
    double hi = 2.0 / target + 10.0;
    auto f = [&](double k) { return one_minus_mean_cosine(k, dimension) - target; };
    if (f(hi) > 0.0) hi *= 4.0;
    boost::math::tools::eps_tolerance<double> tol(50);
    std::uintmax_t iters = 200;
    const auto [lo_k, hi_k] = boost::math::tools::toms748_solve(f, 0.0, hi, tol, iters);
    return 0.5 * (lo_k + hi_k);
}

RoutePath sample_rrs_path(std::size_t n_hops, double step_length, int dimension, Rng& rng) {
    check_chain_args(n_hops, step_length, dimension);
    return sample_path({Strategy::Random, dimension, step_length, 0.0}, n_hops, rng);
}

RoutePath sample_drs_path(std::size_t n_hops, double step_length, double xi, int dimension, Rng& rng,
                          DrsKernel kernel) {
    check_chain_args(n_hops, step_length, dimension);
    detail::require(std::isfinite(xi) && xi >= 0.0, "xi must be nonnegative");
    return sample_path({Strategy::Directed, dimension, step_length, xi, kernel}, n_hops, rng);
}

RoutePath ors_path(const Vec3& source, const Vec3& destination, double step_length) {
    detail::require(std::isfinite(step_length) && step_length > 0.0, "step_length must be positive");
    const Vec3 d = destination - source;
    const double dist = norm(d);
    detail::require(dist > 0.0, "ors_path: source and destination coincide");
    const double q = dist / step_length;
    const double nearest = std::round(q);
    const double n = std::abs(q - nearest) <= 1e-12 * q ? nearest : std::ceil(q);
    const Vec3 hop = d * (step_length / dist);
    RoutePath path;
    path.step_length = step_length;
    path.dimension = (source.z == 0.0 && destination.z == 0.0) ? 2 : 3;
    path.steps.assign(static_cast<std::size_t>(std::max(1.0, n)), hop);
    return path;
}

Vec3 sample_end_to_end(const StrategyParams& params, std::size_t n_hops, Rng& rng) {
    params.validate();
    check_chain_args(n_hops, params.step_length, params.dimension);
    Vec3 r;
    const double a = params.step_length;
    walk_chain(params, n_hops, rng, [&](const Vec3& u) { r += a * u; });
    return r;
}

RoutePath sample_path(const StrategyParams& params, std::size_t n_hops, Rng& rng) {
    params.validate();
    check_chain_args(n_hops, params.step_length, params.dimension);
    RoutePath path;
    path.step_length = params.step_length;
    path.dimension = params.dimension;
    path.steps.reserve(n_hops);
    const double a = params.step_length;
    walk_chain(params, n_hops, rng, [&](const Vec3& u) { path.steps.push_back(a * u); });
    return path;
}

SampleEnsemble sample_ensemble(const StrategyParams& params, std::size_t n_hops, std::size_t samples,
                               std::uint64_t seed, unsigned threads, bool retain_paths) {
    params.validate();
    check_chain_args(n_hops, params.step_length, params.dimension);
    detail::require(samples >= 1, "samples must be >= 1");

    SampleEnsemble out;
    out.params = params;
    out.n_hops = n_hops;
    out.seed = seed;
    out.end_to_end_distances.resize(samples);
    if (retain_paths) out.paths_retained.emplace(samples);

    parallel_chunks(samples, threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            Rng rng(seed, i);
            if (retain_paths) {
                auto path = sample_path(params, n_hops, rng);
                out.end_to_end_distances[i] = path.distance();
                (*out.paths_retained)[i] = std::move(path);
            } else {
                out.end_to_end_distances[i] = norm(sample_end_to_end(params, n_hops, rng));
            }
        }
    });
    return out;
}

unsigned default_thread_count() noexcept {
    if (const char* env = std::getenv("ROUTECHAIN_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && v > 0 && v < 1024) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace routechain
