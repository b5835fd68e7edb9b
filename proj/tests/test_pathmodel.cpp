#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "routechain/errors.hpp"
#include "routechain/estimation.hpp"
#include "routechain/pathmodel.hpp"

using namespace routechain;

namespace {

// <R^2> of a chain whose tangents correlate as c^|i-j|.
double persistent_chain_r2(std::size_t n, double a, double c) {
    const double nd = static_cast<double>(n);
    return a * a * (nd * (1 + c) / (1 - c) - 2 * c * (1 - std::pow(c, nd)) / ((1 - c) * (1 - c)));
}

struct Stats {
    double mean = 0.0;
    double se = 0.0;
};

Stats mean_of_squares(const std::vector<double>& r) {
    double s = 0.0, s2 = 0.0;
    for (double v : r) {
        s += v * v;
        s2 += v * v * v * v;
    }
    const double n = static_cast<double>(r.size());
    const double m = s / n;
    return {m, std::sqrt((s2 / n - m * m) / (n - 1))};
}

}  // namespace

TEST_CASE("strategy names round-trip") {
    for (auto s : {Strategy::Random, Strategy::Directed, Strategy::Optimal}) CHECK(parse_strategy(to_string(s)) == s);
    CHECK_THROWS_AS(parse_strategy("zigzag"), InvalidArgument);
}

TEST_CASE("parameter validation") {
    StrategyParams p;
    CHECK_NOTHROW(p.validate());
    p.dimension = 4;
    CHECK_THROWS_AS(p.validate(), InvalidArgument);
    p.dimension = 3;
    p.step_length = 0.0;
    CHECK_THROWS_AS(p.validate(), InvalidArgument);
    p.step_length = 1.0;
    p.kind = Strategy::Directed;
    p.persistence_radius = -1.0;
    CHECK_THROWS_AS(p.validate(), InvalidArgument);
    p.persistence_radius = std::nan("");
    CHECK_THROWS_AS(p.validate(), InvalidArgument);
}

TEST_CASE("random steps have length a and stay in the plane in 2D") {
    Rng rng(7, 0);
    for (int d : {2, 3}) {
        const auto path = sample_rrs_path(200, 0.5, d, rng);
        CHECK(path.hops() == 200);
        CHECK(path.length() == doctest::Approx(100.0));
        for (const auto& s : path.steps) {
            CHECK(norm(s) == doctest::Approx(0.5).epsilon(1e-12));
            if (d == 2) CHECK(s.z == 0.0);
        }
        CHECK(path.distance() <= path.length() + 1e-9);
    }
}

TEST_CASE("zero-hop chains are rejected") {
    Rng rng(1, 1);
    CHECK_THROWS_AS(sample_rrs_path(0, 1.0, 3, rng), InvalidArgument);
    CHECK_THROWS_AS(sample_drs_path(0, 1.0, 2.0, 3, rng), InvalidArgument);
}

TEST_CASE("matched concentration reproduces the target tangent correlation") {
    for (int d : {2, 3}) {
        for (double ratio : {0.01, 0.1, 0.5, 1.0, 3.0, 20.0}) {
            const double kappa = drs_concentration(1.0, ratio, d);
            CHECK(mean_cosine(kappa, d) == doctest::Approx(std::exp(-1.0 / ratio)).epsilon(1e-9));
        }
    }
    CHECK(drs_concentration(1.0, 7.0, 3, DrsKernel::Literal) == doctest::Approx(7.0));
    CHECK(drs_concentration(2.0, 7.0, 2, DrsKernel::Literal) == doctest::Approx(3.5));
    CHECK(mean_cosine(0.0, 3) == 0.0);
    // large-kappa expansion: 1 - 1/kappa (3D), 1 - 1/(2 kappa) (2D)
    CHECK(mean_cosine(1e4, 3) == doctest::Approx(1.0 - 1e-4).epsilon(1e-10));
    CHECK(mean_cosine(1e4, 2) == doctest::Approx(1.0 - 0.5e-4).epsilon(1e-7));
}

TEST_CASE("3D turning-angle cosine follows the von Mises-Fisher law") {
    // CDF of w = cos(theta) with density proportional to exp(kappa w) on [-1, 1].
    const double kappa = 2.5;
    const double xi = 1.0 / -std::log(mean_cosine(kappa, 3));
    std::vector<double> w;
    Rng rng(11, 3);
    for (int i = 0; i < 20000; ++i) {
        const auto p = sample_drs_path(2, 1.0, xi, 3, rng);
        w.push_back(dot(p.steps[0], p.steps[1]));
    }
    std::sort(w.begin(), w.end());
    double dmax = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double f = std::expm1(kappa * (w[i] + 1)) / std::expm1(2 * kappa);
        dmax = std::max({dmax, std::abs(f - double(i) / w.size()), std::abs(f - double(i + 1) / w.size())});
    }
    CHECK(dmax < 1.63 / std::sqrt(20000.0));  // KS at the 1% level
}

TEST_CASE("2D turning angle follows the von Mises law") {
    const double xi = 2.0;
    const double kappa = drs_concentration(1.0, xi, 2);
    // Numerical CDF of the von Mises density on [-pi, pi].
    const int grid = 20000;
    std::vector<double> cdf(grid + 1, 0.0);
    const double h = 2 * M_PI / grid;
    for (int i = 1; i <= grid; ++i) {
        const double t0 = -M_PI + (i - 1) * h, t1 = t0 + h;
        cdf[i] = cdf[i - 1] + 0.5 * h * (std::exp(kappa * std::cos(t0)) + std::exp(kappa * std::cos(t1)));
    }
    for (auto& c : cdf) c /= cdf.back();

    std::vector<double> theta;
    Rng rng(5, 9);
    for (int i = 0; i < 20000; ++i) {
        const auto p = sample_drs_path(2, 1.0, xi, 2, rng);
        const auto& u = p.steps[0];
        const auto& v = p.steps[1];
        theta.push_back(std::atan2(u.x * v.y - u.y * v.x, dot(u, v)));
    }
    std::sort(theta.begin(), theta.end());
    double dmax = 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i) {
        const double pos = (theta[i] + M_PI) / h;
        const int k = std::clamp(static_cast<int>(pos), 0, grid - 1);
        const double f = cdf[k] + (cdf[k + 1] - cdf[k]) * (pos - k);
        dmax = std::max({dmax, std::abs(f - double(i) / theta.size()), std::abs(f - double(i + 1) / theta.size())});
    }
    CHECK(dmax < 1.63 / std::sqrt(20000.0));
}

TEST_CASE("directed chains match the discrete persistent-chain second moment") {
    for (int d : {2, 3}) {
        for (auto kernel : {DrsKernel::CorrelationMatched, DrsKernel::Literal}) {
            StrategyParams p{Strategy::Directed, d, 1.0, 4.0, kernel};
            const auto ens = sample_ensemble(p, 60, 40000, 123, 1);
            const auto st = mean_of_squares(ens.end_to_end_distances);
            const double c = mean_cosine(drs_concentration(1.0, 4.0, d, kernel), d);
            CHECK(std::abs(st.mean - persistent_chain_r2(60, 1.0, c)) < 4 * st.se);
        }
    }
}

TEST_CASE("random chains: <R^2> = N a^2 in both dimensions") {
    for (int d : {2, 3}) {
        StrategyParams p{Strategy::Random, d, 2.0};
        const auto ens = sample_ensemble(p, 50, 40000, 99, 1);
        const auto st = mean_of_squares(ens.end_to_end_distances);
        CHECK(std::abs(st.mean - 200.0) < 4 * st.se);
    }
}

TEST_CASE("end-to-end vectors are isotropic") {
    StrategyParams p{Strategy::Directed, 3, 1.0, 5.0};
    Rng rng(3, 0);
    double sx = 0, sy = 0, sz = 0, qx = 0, qz = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        Rng r(3, static_cast<std::uint64_t>(i));
        const Vec3 v = sample_end_to_end(p, 20, r);
        sx += v.x;
        sy += v.y;
        sz += v.z;
        qx += v.x * v.x;
        qz += v.z * v.z;
    }
    const double scale = std::sqrt(qx / n);
    CHECK(std::abs(sx / n) < 4 * scale / std::sqrt(n));
    CHECK(std::abs(sy / n) < 4 * scale / std::sqrt(n));
    CHECK(std::abs(sz / n) < 4 * scale / std::sqrt(n));
    CHECK(qx / qz == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("large persistence gives a nearly straight chain, zero gives a random one") {
    Rng rng(2, 2);
    const auto straight = sample_drs_path(100, 1.0, 1e7, 3, rng);
    CHECK(straight.distance() / straight.length() > 0.999);
    const auto straight2d = sample_drs_path(100, 1.0, 1e9, 2, rng);
    CHECK(straight2d.distance() / straight2d.length() > 0.999);

    StrategyParams zero{Strategy::Directed, 3, 1.0, 0.0};
    StrategyParams rrs{Strategy::Random, 3, 1.0, 0.0};
    const auto a = sample_ensemble(zero, 30, 10000, 4);
    const auto b = sample_ensemble(rrs, 30, 10000, 5);
    CHECK(ks_distance(a.end_to_end_distances, b.end_to_end_distances).p_value > 0.01);
}

TEST_CASE("optimal path is straight with ceil(D/a) hops") {
    const Vec3 src{0, 0, 0}, dst{3, 4, 0};
    const auto p = ors_path(src, dst, 1.0);
    CHECK(p.hops() == 5);
    CHECK(p.distance() == doctest::Approx(5.0));
    for (const auto& s : p.steps) CHECK(s == p.steps.front());
    // non-integer D/a: the last full-length hop overshoots the destination
    const auto q = ors_path(Vec3{}, Vec3{10.5, 0, 0}, 1.0);
    CHECK(q.hops() == 11);
    CHECK(10.5 / q.length() == doctest::Approx(10.5 / 11));
    CHECK(q.distance() == doctest::Approx(q.length()));
    CHECK_THROWS_AS(ors_path(src, src, 1.0), InvalidArgument);
    // rounding noise must not add a hop
    CHECK(ors_path(src, Vec3{0.1 * 3, 0, 0}, 0.1).hops() == 3);
}

TEST_CASE("ensemble output ignores thread count and matches retained paths") {
    StrategyParams p{Strategy::Directed, 3, 1.0, 3.0};
    const auto one = sample_ensemble(p, 40, 500, 77, 1, true);
    const auto many = sample_ensemble(p, 40, 500, 77, 8, true);
    CHECK(one.end_to_end_distances == many.end_to_end_distances);
    REQUIRE(one.paths_retained);
    for (std::size_t i = 0; i < 500; ++i) CHECK(one.paths_retained->at(i).distance() == one.end_to_end_distances[i]);

    const auto other_seed = sample_ensemble(p, 40, 500, 78, 1);
    CHECK(other_seed.end_to_end_distances != one.end_to_end_distances);
}

TEST_CASE("ensemble rejects empty requests") {
    StrategyParams p;
    CHECK_THROWS_AS(sample_ensemble(p, 10, 0, 1), InvalidArgument);
}

TEST_CASE("random steps have per-component mean square a^2/3") {
    Rng rng(12, 0);
    const auto path = sample_rrs_path(100000, 2.0, 3, rng);
    double sx = 0, sx2 = 0;
    for (const auto& s : path.steps) {
        sx += s.x * s.x;
        sx2 += s.x * s.x * s.x * s.x;
    }
    const double n = double(path.hops());
    const double m = sx / n, se = std::sqrt((sx2 / n - m * m) / n);
    CHECK(std::abs(m - 4.0 / 3.0) < 3 * se);
}

TEST_CASE("directed chain with fine steps follows the continuum second moment") {
    // xi = 1, a = 0.01, N = 1000, L = 10
    const auto ens = sample_ensemble(StrategyParams{Strategy::Directed, 3, 0.01, 1.0}, 1000, 20000, 31, 1);
    const auto st = mean_of_squares(ens.end_to_end_distances);
    CHECK(std::abs(st.mean - 18.0000908) < 3 * st.se);
}
