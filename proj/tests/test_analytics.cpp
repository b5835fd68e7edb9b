#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "routechain/analytics.hpp"
#include "routechain/errors.hpp"

using namespace routechain;

namespace {

double binom(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

// <R^{2l}> for a unit-step random flight, built hop by hop:
// |R+u|^2 = R^2 + 1 + 2 R t, with t the cosine to a uniform direction.
std::vector<long double> moment_recursion(int l_max, int n_hops, int dimension) {
    auto even_cos_moment = [dimension](int j) -> long double {
        if (dimension == 3) return 1.0L / (2 * j + 1);
        return static_cast<long double>(binom(2 * j, j)) / std::pow(4.0L, j);
    };
    std::vector<long double> m(l_max + 1, 0.0L);
    m[0] = 1.0L;  // R = 0
    for (int n = 0; n < n_hops; ++n) {
        std::vector<long double> next(l_max + 1, 0.0L);
        for (int l = 0; l <= l_max; ++l) {
            // sum over even powers 2j of (2 R t), then expand (R^2 + 1)^{l-2j}
            for (int j = 0; 2 * j <= l; ++j) {
                const long double c = binom(l, 2 * j) * std::pow(4.0L, j) * even_cos_moment(j);
                for (int k = 0; k <= l - 2 * j; ++k) next[l] += c * binom(l - 2 * j, k) * m[j + k];
            }
        }
        m = next;
    }
    return m;
}

double simpson(const std::function<double(double)>& f, double lo, double hi, int n) {
    const double h = (hi - lo) / n;
    double s = f(lo) + f(hi);
    for (int i = 1; i < n; ++i) s += f(lo + i * h) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

std::vector<std::string> captured;
void capture(const std::string& m) { captured.push_back(m); }

}  // namespace

TEST_CASE("two-hop density is 1/(8 pi a^2 R) inside 2a") {
    for (double a : {1.0, 0.5}) {
        for (double r : {0.1, 0.7, 1.3, 1.9}) {
            const double R = r * a;
            CHECK(exact_rrs_density(R, 2, a) == doctest::Approx(1.0 / (8 * M_PI * a * a * R)).epsilon(1e-10));
        }
        CHECK_THROWS_AS(exact_rrs_density(2.1 * a, 2, a), InvalidArgument);
    }
}

TEST_CASE("exact density is normalized, nonnegative and reproduces the moments") {
    for (std::size_t n : {3u, 4u, 6u, 10u, 20u, 30u, 31u, 45u}) {
        const auto d = make_exact_rrs_density(n, 1.0);
        const double L = static_cast<double>(n);
        const int grid = 60000;
        const double mass = simpson([&](double r) { return d.radial_pdf(r); }, 0.0, L, grid);
        CHECK(mass == doctest::Approx(1.0).epsilon(n > 30 ? 1e-5 : 1e-8));
        const double m2 = simpson([&](double r) { return r * r * d.radial_pdf(r); }, 0.0, L, grid);
        CHECK(m2 == doctest::Approx(L).epsilon(1e-5));
        const double m4 = simpson([&](double r) { return std::pow(r, 4) * d.radial_pdf(r); }, 0.0, L, grid);
        CHECK(m4 == doctest::Approx(rrs_moment_exact(2, n, 1.0)).epsilon(1e-4));
        for (double r = 0.0; r <= L; r += L / 97) CHECK(d.evaluate(r) >= 0.0);
        CHECK(d.evaluate(L + 0.5) == 0.0);
        CHECK(d.cdf(L) == doctest::Approx(1.0).epsilon(1e-5));
    }
}

TEST_CASE("exact density is continuous at the origin") {
    for (std::size_t n : {4u, 7u, 12u}) {
        const double at0 = exact_rrs_density(0.0, n, 1.0);
        CHECK(at0 > 0.0);
        CHECK(exact_rrs_density(1e-4, n, 1.0) == doctest::Approx(at0).epsilon(1e-5));
    }
}

TEST_CASE("moment formula agrees with the hop-by-hop recursion") {
    for (int n = 1; n <= 25; ++n) {
        const auto m3 = moment_recursion(8, n, 3);
        for (int l = 0; l <= 8; ++l)
            CHECK(rrs_moment_exact(l, n, 1.0) == doctest::Approx(static_cast<double>(m3[l])).epsilon(1e-10));
    }
    CHECK(rrs_moment_exact(2, 7, 2.0) == doctest::Approx(16.0 * ((5.0 / 3) * 49 - (2.0 / 3) * 7)));
    CHECK_THROWS_AS(rrs_moment_exact(9, 10, 1.0), InvalidArgument);
}

TEST_CASE("2D random flight moments") {
    for (int n = 1; n <= 12; ++n) {
        const auto m2 = moment_recursion(2, n, 2);
        CHECK(static_cast<double>(m2[1]) == doctest::Approx(n));
        CHECK(static_cast<double>(m2[2]) == doctest::Approx(2.0 * n * n - n));
        StrategyParams p{Strategy::Random, 2, 1.0};
        CHECK(*analytic_moment(p, n, 2) == doctest::Approx(2.0 * n * n - n));
    }
}

TEST_CASE("continuum moment limit") {
    CHECK(rrs_moment_limit(1, 1000.0, 1.0) == doctest::Approx(1000.0));
    CHECK(rrs_moment_limit(2, 1000.0, 1.0) == doctest::Approx(5.0 / 3 * 1e6));
    CHECK(rrs_moment_limit(2, 1e4, 1.0) / rrs_moment_exact(2, 10000, 1.0) == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("Gaussian kernel normalization and second moment") {
    for (int d : {2, 3}) {
        const auto g = make_gaussian_rrs_density(100.0, 1.0, d);
        const double mass = simpson([&](double r) { return g.radial_pdf(r); }, 0.0, 100.0, 20000);
        CHECK(mass == doctest::Approx(1.0).epsilon(1e-8));
        const double m2 = simpson([&](double r) { return r * r * g.radial_pdf(r); }, 0.0, 100.0, 20000);
        CHECK(m2 == doctest::Approx(100.0).epsilon(1e-6));
        CHECK(g.cdf(12.0) == doctest::Approx(simpson([&](double r) { return g.radial_pdf(r); }, 0.0, 12.0, 2000)));
        CHECK(gaussian_rrs_density(5.0, 100.0, 1.0, d) == doctest::Approx(g.evaluate(5.0)));
    }
}

TEST_CASE("directed second moment limits") {
    CHECK(drs_second_moment(10.0, 1.0) == doctest::Approx(18.0000908).epsilon(1e-8));
    CHECK(drs_second_moment(1.0, 1e6) == doctest::Approx(0.99999967).epsilon(1e-8));
    CHECK(drs_second_moment(100.0, 1.0) == doctest::Approx(2 * 100.0 * (1 - 0.01)).epsilon(1e-4));
    CHECK(drs_second_moment(10.0, 1.0) == doctest::Approx(2 * (10.0 - (1 - std::exp(-10.0)))));
    CHECK(drs_second_moment(1e-6, 1.0) == doctest::Approx(1e-12).epsilon(1e-6));
    CHECK(drs_second_moment(1.0, 1e6) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(drs_second_moment(1e6, 1.0) / (2e6) == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(drs_second_moment(10.0, 0.0) == 0.0);
    // series branch joins the closed form smoothly
    for (double t : {0.999e-3, 1.001e-3}) {
        const long double L = t;
        const long double closed = 2.0L * (L - (1.0L - std::exp(-L)));
        CHECK(drs_second_moment(t, 1.0) == doctest::Approx(static_cast<double>(closed)).epsilon(1e-9));
    }
}

TEST_CASE("fourth-moment asymptote warns outside its regime") {
    captured.clear();
    set_warning_handler(&capture);
    CHECK(drs_fourth_moment_asymptotic(1000.0, 10.0) ==
          doctest::Approx(20.0 / 3 * 100 * 1e6 * (1 - 52.0 / 15 * 0.01)));
    CHECK(captured.empty());
    drs_fourth_moment_asymptotic(50.0, 10.0);
    CHECK(captured.size() == 1);
    set_warning_handler(nullptr);
}

TEST_CASE("angular propagator") {
    const double L = 2.0, xi = 1.0;
    const double mass = simpson([&](double c) { return 2 * M_PI * angular_propagator(c, L, xi); }, -1.0, 1.0, 2000);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-9));
    const double mc = simpson([&](double c) { return 2 * M_PI * c * angular_propagator(c, L, xi); }, -1.0, 1.0, 2000);
    CHECK(mc == doctest::Approx(std::exp(-L / xi)).epsilon(1e-9));
    CHECK(angular_propagator(0.3, 1e3, 1.0) == doctest::Approx(1.0 / (4 * M_PI)));
    CHECK(angular_propagator(0.3, 5.0, 0.0) == doctest::Approx(1.0 / (4 * M_PI)));
    CHECK(angular_propagator(1.0, 0.05, 1.0) > angular_propagator(0.9, 0.05, 1.0));
    CHECK_THROWS_AS(angular_propagator(0.5, 0.001, 1.0), NonConvergence);
    CHECK_NOTHROW(angular_propagator(0.5, 0.001, 1.0, 10));
    CHECK_THROWS_AS(angular_propagator(1.5, 1.0, 1.0), InvalidArgument);
}

TEST_CASE("optimal strategy moments and shell density") {
    const auto o = ors_density_and_moments(10.0, 4);
    CHECK(o.moment == doctest::Approx(1e4));
    CHECK(o.density.kind == DensityKind::DeltaShell);
    CHECK(o.density.cdf(9.99) == 0.0);
    CHECK(o.density.cdf(10.0) == 1.0);
    CHECK(ors_density_and_moments(10.0, 0).moment == 1.0);
    StrategyParams p{Strategy::Optimal, 3, 0.5};
    CHECK(*analytic_moment(p, 20, 3) == doctest::Approx(1e6));
}

TEST_CASE("analytic moment dispatch") {
    CHECK(effective_radius(3.0) == 6.0);
    StrategyParams drs{Strategy::Directed, 3, 0.1, 2.0};
    CHECK(*analytic_moment(drs, 100, 1) == doctest::Approx(drs_second_moment(10.0, 2.0)));
    CHECK_FALSE(analytic_moment(drs, 100, 2).has_value());  // L/xi = 5 is outside the asymptotic regime
    CHECK(analytic_moment(drs, 1000, 2).has_value());
    CHECK_FALSE(analytic_moment(drs, 1000, 3).has_value());
    StrategyParams zero{Strategy::Directed, 3, 1.0, 0.0};
    CHECK(*analytic_moment(zero, 10, 1) == doctest::Approx(10.0));
    CHECK(*analytic_moment(zero, 10, 0) == 1.0);
}

TEST_CASE("Gaussian kernel value at the origin") {
    CHECK(gaussian_rrs_density(0.0, 100.0, 1.0, 3) == doctest::Approx(std::pow(3.0 / (200 * M_PI), 1.5)));
    CHECK(gaussian_rrs_density(0.0, 100.0, 1.0, 3) == doctest::Approx(3.2992e-4).epsilon(1e-4));
}

TEST_CASE("single hop is a step in the radial CDF") {
    const auto d = make_exact_rrs_density(1, 2.0);
    CHECK(d.cdf(1.999) == 0.0);
    CHECK(d.cdf(2.0) == 1.0);
}

TEST_CASE("exact density approaches the Gaussian kernel as N grows") {
    double previous = std::numeric_limits<double>::infinity();
    for (std::size_t n : {5u, 10u, 20u, 40u}) {
        const auto exact = make_exact_rrs_density(n, 1.0);
        const auto gauss = make_gaussian_rrs_density(double(n), 1.0, 3);
        double sup = 0.0, peak = 0.0;
        for (int i = 0; i <= 2000; ++i) {
            const double r = double(n) * i / 2000.0;
            const double e = exact.radial_pdf(r);
            sup = std::max(sup, std::abs(e - gauss.radial_pdf(r)));
            peak = std::max(peak, e);
        }
        if (n == 20) CHECK(sup < 0.05 * peak);
        CHECK(sup < previous);
        previous = sup;
    }
}

TEST_CASE("random-flight fourth moment against Monte Carlo") {
    const auto ens = sample_ensemble(StrategyParams{Strategy::Random, 3, 1.0}, 100, 1000000, 61, 1);
    double s = 0, s2 = 0;
    for (double r : ens.end_to_end_distances) {
        const double r4 = r * r * r * r;
        s += r4;
        s2 += r4 * r4;
    }
    const double n = double(ens.end_to_end_distances.size());
    const double m = s / n, se = std::sqrt((s2 / n - m * m) / (n - 1));
    CHECK(std::abs(m - rrs_moment_exact(2, 100, 1.0)) < 3 * se);
    CHECK(rrs_moment_exact(0, 100, 1.0) == 1.0);
    CHECK(rrs_moment_exact(1, 100, 1.0) == doctest::Approx(100.0));
    CHECK(rrs_moment_limit(2, 10.0, 1.0) == doctest::Approx(166.6666667));
    CHECK(rrs_moment_limit(0, 10.0, 1.0) == 1.0);
}

TEST_CASE("directed fourth moment against Monte Carlo") {
    // xi = 0.1, L = 10, a = xi/10
    const double xi = 0.1, L = 10.0;
    const auto ens = sample_ensemble(StrategyParams{Strategy::Directed, 3, 0.01, xi}, 1000, 200000, 62, 1);
    double s = 0;
    for (double r : ens.end_to_end_distances) s += r * r * r * r;
    const double m = s / double(ens.end_to_end_distances.size());
    CHECK(m == doctest::Approx(drs_fourth_moment_asymptotic(L, xi)).epsilon(0.08));
    // leading order is (5/3)(a_eff L)^2
    const double big = 1e6;
    CHECK(drs_fourth_moment_asymptotic(big, 1.0) / (5.0 / 3.0 * std::pow(effective_radius(1.0) * big, 2)) ==
          doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("propagator stays positive once L/xi >= 0.05") {
    for (double ratio : {0.05, 0.2, 1.0}) {
        for (int l_max : {60, 120}) {
            for (int i = 0; i <= 400; ++i) {
                const double c = -1.0 + 2.0 * i / 400.0;
                CHECK(angular_propagator(c, ratio, 1.0, l_max) >= 0.0);
            }
        }
    }
}

TEST_CASE("propagator composes over contour length") {
    const double xi = 1.0, l1 = 0.3, l2 = 0.5;
    const int n_mu = 800, n_phi = 128;
    for (double cos_c : {-0.7, 0.0, 0.4, 0.95}) {
        const double sin_c = std::sqrt(1 - cos_c * cos_c);
        auto inner = [&](double mu) {
            const double s = std::sqrt(std::max(0.0, 1 - mu * mu));
            double acc = 0.0;
            for (int k = 0; k < n_phi; ++k) {
                const double phi = 2 * M_PI * k / n_phi;
                const double cos_bc = std::clamp(mu * cos_c + s * sin_c * std::cos(phi), -1.0, 1.0);
                acc += angular_propagator(cos_bc, l2, xi);
            }
            return angular_propagator(mu, l1, xi) * acc * 2 * M_PI / n_phi;
        };
        const double composed = simpson(inner, -1.0, 1.0, n_mu);
        CHECK(composed == doctest::Approx(angular_propagator(cos_c, l1 + l2, xi)).epsilon(1e-4));
    }
}

TEST_CASE("directed second moment is monotone and bounded") {
    double prev = 0.0;
    for (double xi = 0.01; xi < 1000; xi *= 1.7) {
        const double v = drs_second_moment(10.0, xi);
        CHECK(v > prev);
        CHECK(v <= 100.0);
        prev = v;
    }
    prev = 0.0;
    for (double L = 0.01; L < 1000; L *= 1.7) {
        const double v = drs_second_moment(L, 2.0);
        CHECK(v > prev);
        CHECK(v <= L * L);
        prev = v;
    }
}

TEST_CASE("small closed-form values") {
    CHECK(ors_density_and_moments(7.0, 2).moment == doctest::Approx(49.0));
    CHECK(effective_radius(1.0) == 2.0);
    CHECK(effective_radius(0.0) == 0.0);
}
