#pragma once

#include <cstddef>
#include <functional>
#include <optional>

#include "routechain/pathmodel.hpp"

namespace routechain {

enum class DensityKind { FullSpaceGaussian, CompactExact, DeltaShell };

/// Radially symmetric end-to-end density P(R), per unit volume (3D) or area (2D).
///
/// For DeltaShell the density is a distribution; `evaluate` returns 0 and the
/// shell is described by `shell_radius` and `cdf`.
struct RadialDensity {
    std::function<double(double)> density;
    double support_max = 0.0;  // +inf for the Gaussian kernel
    int dimension = 3;
    DensityKind kind = DensityKind::FullSpaceGaussian;
    double shell_radius = 0.0;
    double mean_square = 0.0;  // <R^2>, Gaussian kernel only

    [[nodiscard]] double evaluate(double r) const;
    /// S_d(R) * P(R): 4 pi R^2 P in 3D, 2 pi R P in 2D.
    [[nodiscard]] double radial_pdf(double r) const;
    /// P(|R| <= r). Closed form for the shell and the Gaussian, quadrature otherwise.
    [[nodiscard]] double cdf(double r) const;
};

/// Normalised diffusion kernel with <R^2> = L a:
/// 3D (3/(2 pi L a))^{3/2} exp(-3R^2/(2La)), 2D (1/(pi L a)) exp(-R^2/(La)).
double gaussian_rrs_density(double r, double contour_length, double step_length, int dimension);
RadialDensity make_gaussian_rrs_density(double contour_length, double step_length, int dimension);

/// Exact 3D random-flight density for n_hops steps of length a.
///
/// n_hops <= 30 uses the closed piecewise polynomial (Rayleigh/Treloar sum,
/// evaluated in extended precision); larger n_hops integrate the Fourier
/// representation over the Gaussian-damped window of (sin t / t)^N.
/// For n_hops == 1 the density is a shell, so the radial CDF (a unit step at
/// R = a) is returned instead.
double exact_rrs_density(double r, std::size_t n_hops, double step_length);
RadialDensity make_exact_rrs_density(std::size_t n_hops, double step_length);

/// <R^{2l}> for a 3D random chain via the Bernoulli-number partition sum.
/// Valid for 0 <= l <= 8.
double rrs_moment_exact(int l, std::size_t n_hops, double step_length);

/// Large-N limit (2l+1)!!/3^l (a L)^l.
double rrs_moment_limit(int l, double contour_length, double step_length);

/// Continuum persistent-chain <R^2> = 2[xi L - xi^2 (1 - e^{-L/xi})]. Returns 0 at xi = 0.
double drs_second_moment(double contour_length, double xi);

/// Asymptotic <R^4> = (20/3) xi^2 L^2 (1 - (52/15) xi/L); warns when L/xi < 10.
double drs_fourth_moment_asymptotic(double contour_length, double xi);

/// Tangent propagator on the sphere for arc length L:
/// sum_l (2l+1)/(4 pi) exp(-l(l+1) L/(2 xi)) P_l(cos).
///
/// With an explicit l_max the truncated sum is returned as is. Without one the
/// order starts at 64 and doubles until the neglected tail is below 1e-8;
/// L/xi < 0.01 is refused with NonConvergence.
double angular_propagator(double cos_angle, double contour_length, double xi,
                          std::optional<int> l_max = std::nullopt);

struct OrsDensityMoments {
    RadialDensity density;  // shell at R = L
    double moment = 0.0;    // <R^n> = L^n
};
OrsDensityMoments ors_density_and_moments(double contour_length, int order);

/// a_eff = 2 xi.
double effective_radius(double xi);

/// Closed-form <R^{2l}> for the strategy, where one exists; nullopt otherwise.
/// Random: exact partition sum (3D, l <= 8) or the 2D closed forms (l <= 2).
/// Directed: l = 1 from the continuum formula (random-chain value at xi = 0),
/// l = 2 from the asymptotic form when L/xi >= 10. Optimal: L^{2l}.
std::optional<double> analytic_moment(const StrategyParams& params, std::size_t n_hops, int l);

}  // namespace routechain
