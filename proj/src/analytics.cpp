#include "routechain/analytics.hpp"

#include <array>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/bernoulli.hpp>
#include <boost/math/special_functions/binomial.hpp>
#include <boost/math/special_functions/factorials.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "routechain/errors.hpp"

namespace routechain {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr std::size_t kMaxPolynomialHops = 30;

double integrate(const std::function<double(double)>& f, double lo, double hi) {
    if (!(hi > lo)) return 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, lo, hi, 15, 1e-12);
}

// Treloar's piecewise polynomial, per unit volume, for 2 <= n <= 30.
double treloar_density(double r, std::size_t n, double a) {
    using real = long double;
    const real x = static_cast<real>(r) / static_cast<real>(a);
    const auto nl = static_cast<real>(n);
    const real norm = std::pow(2.0L, nl + 1) * std::numbers::pi_v<real> *
                      static_cast<real>(boost::math::factorial<double>(static_cast<unsigned>(n - 2))) *
                      std::pow(static_cast<real>(a), 3);
    real sum = 0;
    if (x < 1e-6L) {
        // R -> 0: S(x)/x -> S'(0) = -(N-2) sum_{2k<N} (-1)^k C(N,k) (N-2k)^{N-3}.
        if (n == 2) return static_cast<double>(1.0L / (norm * x));
        for (std::size_t k = 0; 2 * k < n; ++k) {
            const real term = static_cast<real>(boost::math::binomial_coefficient<double>(
                                  static_cast<unsigned>(n), static_cast<unsigned>(k))) *
                              std::pow(nl - 2 * static_cast<real>(k), static_cast<int>(n - 3));
            sum += (k % 2 == 0) ? term : -term;
        }
        const double limit = static_cast<double>(-(nl - 2) * sum / norm);
        return limit > 0.0 ? limit : 0.0;
    }
    const auto kmax = static_cast<std::size_t>(std::floor((nl - x) / 2));
    for (std::size_t k = 0; k <= kmax; ++k) {
        const real base = nl - 2 * static_cast<real>(k) - x;
        const real term = static_cast<real>(boost::math::binomial_coefficient<double>(
                              static_cast<unsigned>(n), static_cast<unsigned>(k))) *
                          (n == 2 ? 1.0L : std::pow(base, static_cast<int>(n - 2)));
        sum += (k % 2 == 0) ? term : -term;
    }
    const double value = static_cast<double>(sum / (norm * x));
    return value > 0.0 ? value : 0.0;
}

// Fourier route: (1/(2 pi^2 R a^2)) int_0^inf t sin(t x) (sin t / t)^N dt with x = R/a.
double fourier_density(double r, std::size_t n, double a) {
    const double x = r / a;
    const double nd = static_cast<double>(n);
    // ln(sin t / t) <= -t^2/6 on (0, pi); beyond t_cut the factor is below e^-40,
    // and for t > pi it never exceeds pi^-N.
    const double t_cut = std::min(kPi, std::sqrt(240.0 / nd));
    auto integrand = [&](double t) {
        if (t == 0.0) return 0.0;
        const double sinc = std::sin(t) / t;
        return (x < 1e-8 ? t * t : t * std::sin(t * x) / x) * std::pow(sinc, nd);
    };
    // Split the window into pieces no longer than half a period of sin(t x).
    const double period = x > 0.0 ? 2.0 * kPi / x : t_cut;
    const auto pieces = static_cast<std::size_t>(std::ceil(t_cut / std::min(t_cut, 2.0 * period)));
    double sum = 0.0;
    for (std::size_t i = 0; i < pieces; ++i) {
        const double lo = t_cut * static_cast<double>(i) / static_cast<double>(pieces);
        const double hi = t_cut * static_cast<double>(i + 1) / static_cast<double>(pieces);
        sum += integrate(integrand, lo, hi);
    }
    const double value = sum / (2.0 * kPi * kPi * a * a * a);
    return value > 0.0 ? value : 0.0;
}

double double_factorial_odd(int l) {  // (2l+1)!!
    double v = 1.0;
    for (int k = 3; k <= 2 * l + 1; k += 2) v *= k;
    return v;
}

// Sum over multiplicities m_i with sum_i i*m_i = l of prod c_i^{m_i} / m_i!.
double partition_sum(int remaining, int part, const std::vector<double>& c) {
    if (remaining == 0) return 1.0;
    if (part > remaining) return 0.0;
    double total = 0.0;
    double weight = 1.0;  // c^m / m!
    for (int m = 0; m * part <= remaining; ++m) {
        if (m > 0) weight *= c[static_cast<std::size_t>(part)] / m;
        total += weight * partition_sum(remaining - m * part, part + 1, c);
    }
    return total;
}

}  // namespace

double RadialDensity::evaluate(double r) const {
    if (kind == DensityKind::DeltaShell) return 0.0;
    if (r < 0.0 || r > support_max) return 0.0;
    return density(r);
}

double RadialDensity::radial_pdf(double r) const {
    const double surface = dimension == 3 ? 4.0 * kPi * r * r : 2.0 * kPi * r;
    return surface * evaluate(r);
}

double RadialDensity::cdf(double r) const {
    if (r <= 0.0) return 0.0;
    switch (kind) {
        case DensityKind::DeltaShell: return r >= shell_radius ? 1.0 : 0.0;
        case DensityKind::FullSpaceGaussian: {
            if (dimension == 2) return -std::expm1(-r * r / mean_square);
            const double z = r / std::sqrt(mean_square / 3.0);
            return std::erf(z / std::numbers::sqrt2) - std::sqrt(2.0 / kPi) * z * std::exp(-0.5 * z * z);
        }
        case DensityKind::CompactExact: {
            const double hi = std::min(r, support_max);
            return std::min(1.0, integrate([this](double s) { return radial_pdf(s); }, 0.0, hi));
        }
    }
    return 0.0;
}

double gaussian_rrs_density(double r, double contour_length, double step_length, int dimension) {
    detail::require(std::isfinite(contour_length) && contour_length > 0.0, "L must be positive");
    detail::require(std::isfinite(step_length) && step_length > 0.0, "a must be positive");
    detail::require(dimension == 2 || dimension == 3, "dimension must be 2 or 3");
    detail::require(r >= 0.0, "R must be nonnegative");
    const double la = contour_length * step_length;
    if (dimension == 3) return std::pow(3.0 / (2.0 * kPi * la), 1.5) * std::exp(-1.5 * r * r / la);
    return std::exp(-r * r / la) / (kPi * la);
}

RadialDensity make_gaussian_rrs_density(double contour_length, double step_length, int dimension) {
    gaussian_rrs_density(0.0, contour_length, step_length, dimension);  // validates
    RadialDensity d;
    d.density = [=](double r) { return gaussian_rrs_density(r, contour_length, step_length, dimension); };
    d.support_max = std::numeric_limits<double>::infinity();
    d.dimension = dimension;
    d.kind = DensityKind::FullSpaceGaussian;
    d.mean_square = contour_length * step_length;
    return d;
}

double exact_rrs_density(double r, std::size_t n_hops, double step_length) {
    detail::require(n_hops >= 1, "n_hops must be >= 1");
    detail::require(std::isfinite(step_length) && step_length > 0.0, "a must be positive");
    const double support = static_cast<double>(n_hops) * step_length;
    detail::require(r >= 0.0 && r <= support * (1.0 + 1e-12),
                    "R outside support [0, N a]: " + std::to_string(r));
    if (n_hops == 1) return r >= step_length ? 1.0 : 0.0;
    if (n_hops <= kMaxPolynomialHops) return treloar_density(std::min(r, support), n_hops, step_length);
    return fourier_density(r, n_hops, step_length);
}

RadialDensity make_exact_rrs_density(std::size_t n_hops, double step_length) {
    detail::require(n_hops >= 1, "n_hops must be >= 1");
    detail::require(std::isfinite(step_length) && step_length > 0.0, "a must be positive");
    if (n_hops == 1) return ors_density_and_moments(step_length, 0).density;
    RadialDensity d;
    d.density = [=](double r) { return exact_rrs_density(r, n_hops, step_length); };
    d.support_max = static_cast<double>(n_hops) * step_length;
    d.dimension = 3;
    d.kind = DensityKind::CompactExact;
    return d;
}

double rrs_moment_exact(int l, std::size_t n_hops, double step_length) {
    detail::require(l >= 0, "moment order must be nonnegative");
    if (l > 8) throw InvalidArgument("rrs_moment_exact: order l > 8 is not tabulated");
    detail::require(n_hops >= 1, "n_hops must be >= 1");
    detail::require(std::isfinite(step_length) && step_length > 0.0, "a must be positive");
    if (l == 0) return 1.0;
    const double n = static_cast<double>(n_hops);
    std::vector<double> c(static_cast<std::size_t>(l) + 1, 0.0);
    for (int i = 1; i <= l; ++i) {
        const double b2i = boost::math::bernoulli_b2n<double>(i);
        const double sign = (i % 2 == 0) ? 1.0 : -1.0;
        c[static_cast<std::size_t>(i)] = n * std::ldexp(1.0, 2 * i) * sign * b2i /
                                         (boost::math::factorial<double>(static_cast<unsigned>(2 * i)) * 2.0 * i);
    }
    const double sign = (l % 2 == 0) ? 1.0 : -1.0;
    return std::pow(step_length, 2 * l) * sign *
           boost::math::factorial<double>(static_cast<unsigned>(2 * l + 1)) * partition_sum(l, 1, c);
}

double rrs_moment_limit(int l, double contour_length, double step_length) {
    detail::require(l >= 0, "moment order must be nonnegative");
    if (l == 0) return 1.0;
    return double_factorial_odd(l) / std::pow(3.0, l) * std::pow(step_length * contour_length, l);
}

double drs_second_moment(double contour_length, double xi) {
    detail::require(std::isfinite(contour_length) && contour_length > 0.0, "L must be positive");
    detail::require(std::isfinite(xi) && xi >= 0.0, "xi must be nonnegative");
    if (xi == 0.0) return 0.0;
    const double x = contour_length / xi;
    if (x < 1e-3) {
        // L^2 (1 - x/3 + x^2/12 - x^3/60)
        const double l2 = contour_length * contour_length;
        return l2 * (1.0 - x / 3.0 + x * x / 12.0 - x * x * x / 60.0);
    }
    // 2 xi^2 (x - 1 + e^{-x})
    return 2.0 * xi * xi * (x + std::expm1(-x));
}

double drs_fourth_moment_asymptotic(double contour_length, double xi) {
    detail::require(std::isfinite(contour_length) && contour_length > 0.0, "L must be positive");
    detail::require(std::isfinite(xi) && xi > 0.0, "xi must be positive");
    const double ratio = xi / contour_length;
    if (ratio > 0.1) {
        warn("drs_fourth_moment_asymptotic: L/xi = " + std::to_string(1.0 / ratio) +
             " is below 10; the asymptotic form is unreliable");
    }
    return (20.0 / 3.0) * xi * xi * contour_length * contour_length * (1.0 - (52.0 / 15.0) * ratio);
}

double angular_propagator(double cos_angle, double contour_length, double xi, std::optional<int> l_max) {
    detail::require(cos_angle >= -1.0 && cos_angle <= 1.0, "cos_angle must lie in [-1, 1]");
    detail::require(std::isfinite(contour_length) && contour_length > 0.0, "L must be positive");
    detail::require(xi >= 0.0, "xi must be nonnegative");
    if (l_max) detail::require(*l_max >= 0, "l_max must be nonnegative");
    constexpr double inv4pi = 1.0 / (4.0 * kPi);
    if (xi == 0.0) return inv4pi;
    const double decay = contour_length / (2.0 * xi);

    int order = 0;
    if (l_max) {
        order = *l_max;
    } else {
        if (contour_length / xi < 0.01) {
            throw NonConvergence("angular_propagator: L/xi = " + std::to_string(contour_length / xi) +
                                 " is below 0.01; spectral sum not evaluated");
        }
        auto tail = [&](int from) {
            double t = 0.0;
            for (int l = from;; ++l) {
                const double term = (2.0 * l + 1.0) * inv4pi * std::exp(-l * (l + 1.0) * decay);
                t += term;
                if (term < 1e-18 || l > from + 100000) break;
            }
            return t;
        };
        order = 64;
        while (tail(order + 1) >= 1e-8) order *= 2;
    }

    // Legendre recurrence summed on the fly.
    double p_prev = 1.0;
    double p_curr = cos_angle;
    double sum = inv4pi;
    if (order >= 1) sum += 3.0 * inv4pi * std::exp(-2.0 * decay) * cos_angle;
    for (int l = 2; l <= order; ++l) {
        const double p_next = ((2.0 * l - 1.0) * cos_angle * p_curr - (l - 1.0) * p_prev) / l;
        p_prev = p_curr;
        p_curr = p_next;
        const double weight = std::exp(-l * (l + 1.0) * decay);
        if (weight == 0.0) break;
        sum += (2.0 * l + 1.0) * inv4pi * weight * p_curr;
    }
    // Deep in the backward tail the series cancels to rounding noise around zero.
    return std::max(sum, 0.0);
}

OrsDensityMoments ors_density_and_moments(double contour_length, int order) {
    detail::require(std::isfinite(contour_length) && contour_length > 0.0, "L must be positive");
    detail::require(order >= 0, "moment order must be nonnegative");
    OrsDensityMoments out;
    out.density.density = [](double) { return 0.0; };
    out.density.support_max = contour_length;
    out.density.dimension = 3;
    out.density.kind = DensityKind::DeltaShell;
    out.density.shell_radius = contour_length;
    out.moment = order == 0 ? 1.0 : std::pow(contour_length, order);
    return out;
}

double effective_radius(double xi) {
    detail::require(std::isfinite(xi) && xi >= 0.0, "xi must be nonnegative");
    return 2.0 * xi;
}

std::optional<double> analytic_moment(const StrategyParams& params, std::size_t n_hops, int l) {
    params.validate();
    detail::require(n_hops >= 1, "n_hops must be >= 1");
    detail::require(l >= 0, "moment order must be nonnegative");
    if (l == 0) return 1.0;
    const double a = params.step_length;
    const double n = static_cast<double>(n_hops);
    const double length = a * n;
    const bool random_like =
        params.kind == Strategy::Random || (params.kind == Strategy::Directed && params.persistence_radius == 0.0);
    if (random_like) {
        if (params.dimension == 3) {
            if (l > 8) return std::nullopt;
            return rrs_moment_exact(l, n_hops, a);
        }
        if (l == 1) return n * a * a;
        if (l == 2) return (2.0 * n * n - n) * std::pow(a, 4);
        return std::nullopt;
    }
    if (params.kind == Strategy::Optimal) return std::pow(length, 2 * l);
    const double xi = params.persistence_radius;
    if (l == 1) return drs_second_moment(length, xi);
    if (l == 2 && params.dimension == 3 && length / xi >= 10.0) return drs_fourth_moment_asymptotic(length, xi);
    return std::nullopt;
}

}  // namespace routechain
