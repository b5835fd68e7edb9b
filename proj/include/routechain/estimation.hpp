#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "routechain/pathmodel.hpp"

namespace routechain {

/// Empirical P(R) over the normalised axis R/L in [0, 1].
struct RadialHistogram {
    std::vector<double> bin_edges;  // n_bins + 1 ascending values of R/L
    std::vector<double> density;    // integrates to 1 over R/L
    std::vector<double> std_error;    // per-bin binomial standard error
    std::size_t sample_count = 0;

    [[nodiscard]] std::size_t bins() const noexcept { return density.size(); }
    /// Centre of the fullest bin.
    [[nodiscard]] double mode() const;
};

/// Distances may exceed L by a relative 1e-9 (accumulated rounding); anything
/// further out, or negative, is rejected.
RadialHistogram build_histogram(std::span<const double> distances, double contour_length,
                                std::size_t n_bins = 50);

struct MomentSet {
    std::vector<int> orders;  // l, estimating <R^{2l}>
    std::vector<double> empirical;
    std::vector<double> ci_low;
    std::vector<double> ci_high;
    std::vector<double> std_error;
    std::vector<std::optional<double>> analytic;

    /// Index of order l, or nullopt.
    [[nodiscard]] std::optional<std::size_t> find(int l) const;
};

/// Plug-in <R^{2l}> with 95% percentile-bootstrap intervals. Needs >= 100
/// samples and orders within [0, 4]. Bootstrap replicate b draws from
/// Rng(seed, b), so results are reproducible for any thread count.
MomentSet estimate_moments(std::span<const double> distances, std::span<const int> orders,
                           std::size_t n_bootstrap = 1000, std::uint64_t seed = 0, unsigned threads = 1);

/// Fills MomentSet::analytic from the closed forms for the given strategy.
void attach_analytic(MomentSet& moments, const StrategyParams& params, std::size_t n_hops);

struct PersistenceEstimate {
    double xi = 0.0;
    double effective_radius = 0.0;
    bool saturated = false;  // hit the 1e3 L bracket: chain is effectively ballistic
};

/// Inverts <R^2> = 2[xi L - xi^2 (1 - e^{-L/xi})] for xi on (0, 1e3 L].
PersistenceEstimate recover_persistence_radius(double mean_square, double contour_length);
PersistenceEstimate recover_persistence_radius(const MomentSet& moments, double contour_length);

struct PowerLawFit {
    double exponent = 0.0;  // slope of log y against log x
    double std_error = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

/// Ordinary least squares on (log x, log y). Requires >= 3 points, x and y positive.
PowerLawFit fit_power_law(std::span<const double> x, std::span<const double> y);

struct ExponentFit {
    double nu = 0.0;
    double std_error = 0.0;
    double r_squared = 0.0;
    std::pair<double, double> fit_range{0.0, 0.0};
    /// False when nu falls outside [0.4, 1.1]; reported, not fatal.
    bool in_expected_range = true;
};

/// Fits log<R^2> = c + 2 nu log L. Needs >= 4 distinct L spanning a decade.
ExponentFit fit_critical_exponent(std::span<const std::pair<double, double>> per_length_mean_square);

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
};

/// Two-sample Kolmogorov-Smirnov statistic with the asymptotic p-value.
KsResult ks_distance(std::span<const double> sample_a, std::span<const double> sample_b);

/// Survival function of the Kolmogorov distribution, Q(lambda) = P(K > lambda).
double kolmogorov_survival(double lambda);

/// Mean of u_0 . u_k over paths for lags 0..max_lag (unit tangents).
std::vector<double> tangent_correlation(std::span<const RoutePath> paths, std::size_t max_lag);

struct Fig3Curve {
    double xi_over_length = 0.0;
    RadialHistogram histogram;
    double mean_r_over_length = 0.0;
};

/// Persistence-radius sweep at fixed contour length L = n_hops * a.
std::vector<Fig3Curve> persistence_sweep(std::span<const double> xi_over_length, std::size_t n_hops,
                                         double step_length, std::size_t samples, std::uint64_t seed,
                                         unsigned threads = 1, std::size_t n_bins = 50);

}  // namespace routechain
