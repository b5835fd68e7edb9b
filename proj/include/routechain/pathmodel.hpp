#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "routechain/rng.hpp"
#include "routechain/vec.hpp"

namespace routechain {

enum class Strategy { Random, Directed, Optimal };

std::string_view to_string(Strategy s) noexcept;
/// Accepts "rrs"/"drs"/"ors" (case-insensitive). Throws InvalidArgument.
Strategy parse_strategy(std::string_view text);

/// How the persistence radius maps onto the per-hop von Mises-Fisher
/// concentration.
enum class DrsKernel {
    /// Concentration chosen so that <u_n . u_{n-1}> = exp(-a/xi) exactly.
    /// Tangent correlation is then exp(-s/xi) at every arc length s = k*a,
    /// in 2D and 3D alike. Tends to xi/a + 1/2 (3D) as a/xi -> 0.
    CorrelationMatched,
    /// Concentration xi/a, the literal Boltzmann weight of the bending energy.
    Literal,
};

struct StrategyParams {
    Strategy kind = Strategy::Random;
    int dimension = 3;
    double step_length = 1.0;
    /// Persistence radius xi; read only for Strategy::Directed.
    double persistence_radius = 0.0;
    DrsKernel kernel = DrsKernel::CorrelationMatched;

    /// Throws InvalidArgument naming the offending field.
    void validate() const;
};

/// An ordered chain of fixed-length hops from a source to a destination.
struct RoutePath {
    std::vector<Vec3> steps;
    double step_length = 1.0;
    int dimension = 3;

    [[nodiscard]] std::size_t hops() const noexcept { return steps.size(); }
    [[nodiscard]] double length() const noexcept { return step_length * static_cast<double>(steps.size()); }
    [[nodiscard]] Vec3 end_to_end() const noexcept;
    [[nodiscard]] double distance() const noexcept { return norm(end_to_end()); }
};

/// Per-hop concentration kappa of the transition density exp(kappa * u_n . u_{n-1}).
double drs_concentration(double step_length, double xi, int dimension,
                         DrsKernel kernel = DrsKernel::CorrelationMatched);

/// Mean cosine between consecutive directions for concentration kappa:
/// coth(k) - 1/k in 3D, I1(k)/I0(k) in 2D.
double mean_cosine(double kappa, int dimension);

RoutePath sample_rrs_path(std::size_t n_hops, double step_length, int dimension, Rng& rng);

RoutePath sample_drs_path(std::size_t n_hops, double step_length, double xi, int dimension, Rng& rng,
                          DrsKernel kernel = DrsKernel::CorrelationMatched);

/// Straight chain toward destination with ceil(|d - s| / a) hops of length a.
RoutePath ors_path(const Vec3& source, const Vec3& destination, double step_length);

/// Samples one chain under `params` and returns its end-to-end vector
/// without materialising the hops.
Vec3 sample_end_to_end(const StrategyParams& params, std::size_t n_hops, Rng& rng);

/// Draws a path under any strategy. For Optimal the chain runs along +x.
RoutePath sample_path(const StrategyParams& params, std::size_t n_hops, Rng& rng);

struct SampleEnsemble {
    StrategyParams params;
    std::size_t n_hops = 0;
    std::uint64_t seed = 0;
    std::vector<double> end_to_end_distances;
    std::optional<std::vector<RoutePath>> paths_retained;

    [[nodiscard]] double contour_length() const noexcept {
        return params.step_length * static_cast<double>(n_hops);
    }
};

/// Sample i uses Rng(seed, i); results are identical for any thread count.
SampleEnsemble sample_ensemble(const StrategyParams& params, std::size_t n_hops, std::size_t samples,
                               std::uint64_t seed, unsigned threads = 1, bool retain_paths = false);

/// Default worker count: $ROUTECHAIN_THREADS if set, else hardware concurrency.
unsigned default_thread_count() noexcept;

}  // namespace routechain
