#include "routechain/estimation.hpp"

#include <algorithm>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <numbers>
#include <numeric>
#include <set>
#include <string>

#include "routechain/analytics.hpp"
#include "routechain/errors.hpp"
#include "routechain/parallel.hpp"

namespace routechain {
namespace {

constexpr std::uint64_t kBootstrapKey = 0xB0075742A9E11CE5ULL;

double quantile_sorted(const std::vector<double>& sorted, double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

// Sum of r2^l for l = 0..4 accumulated into out[0..4].
inline void accumulate_powers(double r2, double* out) {
    double p = 1.0;
    for (int l = 0; l <= 4; ++l) {
        out[l] += p;
        p *= r2;
    }
}

}  // namespace

double RadialHistogram::mode() const {
    if (density.empty()) return 0.0;
    const auto it = std::max_element(density.begin(), density.end());
    const auto i = static_cast<std::size_t>(it - density.begin());
    return 0.5 * (bin_edges[i] + bin_edges[i + 1]);
}

RadialHistogram build_histogram(std::span<const double> distances, double contour_length, std::size_t n_bins) {
    detail::require(!distances.empty(), "build_histogram: no distances");
    detail::require(n_bins >= 2, "build_histogram: n_bins must be >= 2");
    detail::require(std::isfinite(contour_length) && contour_length > 0.0, "build_histogram: L must be positive");

    RadialHistogram h;
    h.sample_count = distances.size();
    h.bin_edges.resize(n_bins + 1);
    for (std::size_t i = 0; i <= n_bins; ++i) h.bin_edges[i] = static_cast<double>(i) / static_cast<double>(n_bins);

    std::vector<std::size_t> counts(n_bins, 0);
    const double limit = contour_length * (1.0 + 1e-9);
    for (const double r : distances) {
        if (!(r >= 0.0 && r <= limit)) {
            throw InvalidArgument("build_histogram: distance " + std::to_string(r) + " outside [0, L]");
        }
        const double x = std::min(r / contour_length, 1.0);
        auto bin = static_cast<std::size_t>(x * static_cast<double>(n_bins));
        counts[std::min(bin, n_bins - 1)]++;
    }

    const double n = static_cast<double>(distances.size());
    const double width = 1.0 / static_cast<double>(n_bins);
    h.density.resize(n_bins);
    h.std_error.resize(n_bins);
    for (std::size_t i = 0; i < n_bins; ++i) {
        const double p = static_cast<double>(counts[i]) / n;
        h.density[i] = p / width;
        h.std_error[i] = std::sqrt(p * (1.0 - p) / n) / width;
    }
    return h;
}

std::optional<std::size_t> MomentSet::find(int l) const {
    for (std::size_t i = 0; i < orders.size(); ++i)
        if (orders[i] == l) return i;
    return std::nullopt;
}

MomentSet estimate_moments(std::span<const double> distances, std::span<const int> orders, std::size_t n_bootstrap,
                           std::uint64_t seed, unsigned threads) {
    detail::require(!distances.empty(), "estimate_moments: no distances");
    detail::require(distances.size() >= 100, "estimate_moments: at least 100 samples required");
    detail::require(!orders.empty(), "estimate_moments: no orders requested");
    for (const int l : orders) detail::require(l >= 0 && l <= 4, "estimate_moments: orders must lie in [0, 4]");
    detail::require(n_bootstrap >= 2, "estimate_moments: n_bootstrap must be >= 2");

    const std::size_t n = distances.size();
    std::vector<double> r2(n);
    for (std::size_t i = 0; i < n; ++i) {
        detail::require(std::isfinite(distances[i]) && distances[i] >= 0.0, "estimate_moments: invalid distance");
        r2[i] = distances[i] * distances[i];
    }

    double sums[5] = {0, 0, 0, 0, 0};
    double sq_sums[5] = {0, 0, 0, 0, 0};
    for (const double v : r2) {
        accumulate_powers(v, sums);
        double p = 1.0;
        for (int l = 0; l <= 4; ++l) {
            sq_sums[l] += p * p;
            p *= v;
        }
    }

    // replicate[b * 5 + l]
    std::vector<double> replicate(n_bootstrap * 5, 0.0);
    parallel_chunks(n_bootstrap, threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t b = begin; b < end; ++b) {
            Rng rng(seed ^ kBootstrapKey, b);
            double acc[5] = {0, 0, 0, 0, 0};
            for (std::size_t i = 0; i < n; ++i) accumulate_powers(r2[rng.below(n)], acc);
            for (int l = 0; l <= 4; ++l) replicate[b * 5 + static_cast<std::size_t>(l)] = acc[l] / static_cast<double>(n);
        }
    });

    MomentSet m;
    const double nd = static_cast<double>(n);
    for (const int l : orders) {
        m.orders.push_back(l);
        m.analytic.emplace_back(std::nullopt);
        if (l == 0) {
            m.empirical.push_back(1.0);
            m.ci_low.push_back(1.0);
            m.ci_high.push_back(1.0);
            m.std_error.push_back(0.0);
            continue;
        }
        const double mean = sums[l] / nd;
        const double var = std::max(0.0, sq_sums[l] / nd - mean * mean) * nd / (nd - 1.0);
        std::vector<double> column(n_bootstrap);
        for (std::size_t b = 0; b < n_bootstrap; ++b) column[b] = replicate[b * 5 + static_cast<std::size_t>(l)];
        std::sort(column.begin(), column.end());
        m.empirical.push_back(mean);
        m.ci_low.push_back(quantile_sorted(column, 0.025));
        m.ci_high.push_back(quantile_sorted(column, 0.975));
        m.std_error.push_back(std::sqrt(var / nd));
    }
    return m;
}

void attach_analytic(MomentSet& moments, const StrategyParams& params, std::size_t n_hops) {
    moments.analytic.resize(moments.orders.size());
    for (std::size_t i = 0; i < moments.orders.size(); ++i)
        moments.analytic[i] = analytic_moment(params, n_hops, moments.orders[i]);
}

PersistenceEstimate recover_persistence_radius(double mean_square, double contour_length) {
    detail::require(std::isfinite(contour_length) && contour_length > 0.0, "recover_persistence_radius: L must be positive");
    detail::require(std::isfinite(mean_square) && mean_square > 0.0, "recover_persistence_radius: <R^2> must be positive");
    const double l2 = contour_length * contour_length;
    if (mean_square >= l2) {
        throw InvalidArgument("recover_persistence_radius: <R^2> >= L^2 (ballistic saturation, no solution)");
    }
    const double hi = 1e3 * contour_length;
    auto f = [&](double xi) { return drs_second_moment(contour_length, xi) - mean_square; };
    PersistenceEstimate est;
    if (f(hi) <= 0.0) {
        warn("recover_persistence_radius: <R^2>/L^2 = " + std::to_string(mean_square / l2) +
             " saturates the bracket; xi reported at 1e3 L");
        est.xi = hi;
        est.saturated = true;
    } else {
        // Relative tolerance ~1e-11.
        boost::math::tools::eps_tolerance<double> tol(37);
        std::uintmax_t iters = 500;
        const double lo = std::min(hi, mean_square / (2.0 * contour_length)) * 0.5;
        const auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, tol, iters);
        if (iters >= 500) throw NonConvergence("recover_persistence_radius: root finder did not converge");
        est.xi = 0.5 * (a + b);
    }
    est.effective_radius = effective_radius(est.xi);
    return est;
}

PersistenceEstimate recover_persistence_radius(const MomentSet& moments, double contour_length) {
    const auto idx = moments.find(1);
    detail::require(idx.has_value(), "recover_persistence_radius: moment order 1 missing");
    return recover_persistence_radius(moments.empirical[*idx], contour_length);
}

PowerLawFit fit_power_law(std::span<const double> x, std::span<const double> y) {
    detail::require(x.size() == y.size(), "fit_power_law: x and y differ in length");
    detail::require(x.size() >= 3, "fit_power_law: need at least 3 points");
    const std::size_t n = x.size();
    std::vector<double> lx(n), ly(n);
    for (std::size_t i = 0; i < n; ++i) {
        detail::require(x[i] > 0.0 && std::isfinite(x[i]), "fit_power_law: x must be positive");
        detail::require(y[i] > 0.0 && std::isfinite(y[i]), "fit_power_law: y must be positive");
        lx[i] = std::log(x[i]);
        ly[i] = std::log(y[i]);
    }
    const double nd = static_cast<double>(n);
    const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / nd;
    const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / nd;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
        syy += (ly[i] - my) * (ly[i] - my);
    }
    detail::require(sxx > 0.0, "fit_power_law: x values are all equal");
    PowerLawFit fit;
    fit.exponent = sxy / sxx;
    fit.intercept = my - fit.exponent * mx;
    double ssr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = ly[i] - (fit.intercept + fit.exponent * lx[i]);
        ssr += e * e;
    }
    fit.std_error = std::sqrt(ssr / (nd - 2.0) / sxx);
    fit.r_squared = syy > 0.0 ? 1.0 - ssr / syy : 1.0;
    return fit;
}

ExponentFit fit_critical_exponent(std::span<const std::pair<double, double>> per_length_mean_square) {
    std::vector<double> lengths, moments;
    std::set<double> distinct;
    for (const auto& [length, m2] : per_length_mean_square) {
        detail::require(length > 0.0 && std::isfinite(length), "fit_critical_exponent: lengths must be positive");
        detail::require(m2 > 0.0 && std::isfinite(m2), "fit_critical_exponent: moments must be positive");
        lengths.push_back(length);
        moments.push_back(m2);
        distinct.insert(length);
    }
    detail::require(distinct.size() >= 4, "fit_critical_exponent: need at least 4 distinct L values");
    const double lo = *distinct.begin();
    const double hi = *distinct.rbegin();
    detail::require(hi / lo >= 10.0 * (1.0 - 1e-12), "fit_critical_exponent: L range spans less than one decade");

    const PowerLawFit fit = fit_power_law(lengths, moments);
    ExponentFit out;
    out.nu = fit.exponent / 2.0;
    out.std_error = fit.std_error / 2.0;
    out.r_squared = fit.r_squared;
    out.fit_range = {lo, hi};
    out.in_expected_range = out.nu >= 0.4 && out.nu <= 1.1;
    if (!out.in_expected_range) warn("fit_critical_exponent: nu = " + std::to_string(out.nu) + " outside [0.4, 1.1]");
    return out;
}

double kolmogorov_survival(double lambda) {
    if (lambda <= 0.0) return 1.0;
    if (lambda < 1.18) {
        // Jacobi-transformed series, fast for small lambda.
        const double pi2 = std::numbers::pi * std::numbers::pi;
        double sum = 0.0;
        for (int j = 1; j <= 20; ++j) {
            const double k = 2.0 * j - 1.0;
            sum += std::exp(-k * k * pi2 / (8.0 * lambda * lambda));
        }
        return std::clamp(1.0 - std::sqrt(2.0 * std::numbers::pi) / lambda * sum, 0.0, 1.0);
    }
    double sum = 0.0;
    for (int j = 1; j <= 100; ++j) {
        const double term = std::exp(-2.0 * j * j * lambda * lambda);
        sum += (j % 2 == 1) ? term : -term;
        if (term < 1e-18) break;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_distance(std::span<const double> sample_a, std::span<const double> sample_b) {
    detail::require(!sample_a.empty() && !sample_b.empty(), "ks_distance: empty sample");
    std::vector<double> a(sample_a.begin(), sample_a.end());
    std::vector<double> b(sample_b.begin(), sample_b.end());
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double v = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == v) ++i;
        while (j < b.size() && b[j] == v) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    KsResult out;
    out.statistic = d;
    const double ne = std::sqrt(na * nb / (na + nb));
    out.p_value = kolmogorov_survival((ne + 0.12 + 0.11 / ne) * d);
    return out;
}

std::vector<double> tangent_correlation(std::span<const RoutePath> paths, std::size_t max_lag) {
    std::vector<double> sum(max_lag + 1, 0.0);
    std::vector<double> count(max_lag + 1, 0.0);
    for (const auto& path : paths) {
        const double inv_a2 = 1.0 / (path.step_length * path.step_length);
        const std::size_t n = path.steps.size();
        for (std::size_t k = 0; k <= max_lag && k < n; ++k) {
            for (std::size_t i = 0; i + k < n; ++i) sum[k] += dot(path.steps[i], path.steps[i + k]) * inv_a2;
            count[k] += static_cast<double>(n - k);
        }
    }
    for (std::size_t k = 0; k <= max_lag; ++k) sum[k] = count[k] > 0.0 ? sum[k] / count[k] : 0.0;
    return sum;
}

std::vector<Fig3Curve> persistence_sweep(std::span<const double> xi_over_length, std::size_t n_hops,
                                         double step_length, std::size_t samples, std::uint64_t seed,
                                         unsigned threads, std::size_t n_bins) {
    detail::require(!xi_over_length.empty(), "persistence_sweep: no xi/L values");
    const double length = static_cast<double>(n_hops) * step_length;
    std::vector<Fig3Curve> curves;
    for (std::size_t c = 0; c < xi_over_length.size(); ++c) {
        const double ratio = xi_over_length[c];
        detail::require(ratio >= 0.0 && std::isfinite(ratio), "persistence_sweep: xi/L must be nonnegative");
        const StrategyParams params{Strategy::Directed, 3, step_length, ratio * length};
        const std::uint64_t curve_seed = Rng(seed, c)();
        const auto ensemble = sample_ensemble(params, n_hops, samples, curve_seed, threads);
        Fig3Curve curve;
        curve.xi_over_length = ratio;
        curve.histogram = build_histogram(ensemble.end_to_end_distances, length, n_bins);
        double sum = 0.0;
        for (const double r : ensemble.end_to_end_distances) sum += r;
        curve.mean_r_over_length = sum / static_cast<double>(samples) / length;
        curves.push_back(std::move(curve));
    }
    return curves;
}

}  // namespace routechain
