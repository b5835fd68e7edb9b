#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "routechain/rng.hpp"
#include "routechain/vec.hpp"

namespace routechain {

using NodeId = std::uint32_t;

/// Random geometric graph: nodes in [0, side]^d, edges between nodes at
/// Euclidean distance <= radio_radius. Immutable after construction.
class Deployment {
public:
    Deployment(std::vector<Vec3> positions, double radio_radius, int dimension, double side = 1.0,
               std::uint64_t seed = 0, double bucket_size = 0.0);

    [[nodiscard]] std::size_t size() const noexcept { return positions_.size(); }
    [[nodiscard]] const std::vector<Vec3>& positions() const noexcept { return positions_; }
    [[nodiscard]] const Vec3& position(NodeId i) const { return positions_.at(i); }
    [[nodiscard]] double radio_radius() const noexcept { return radio_radius_; }
    [[nodiscard]] int dimension() const noexcept { return dimension_; }
    [[nodiscard]] double side() const noexcept { return side_; }
    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }

    /// Neighbours in ascending index order.
    [[nodiscard]] std::span<const NodeId> neighbors(NodeId i) const;
    [[nodiscard]] std::size_t degree(NodeId i) const { return neighbors(i).size(); }
    [[nodiscard]] std::size_t edge_count() const noexcept { return adjacency_.size() / 2; }
    /// Undirected edges (i, j) with i < j, sorted.
    [[nodiscard]] std::vector<std::pair<NodeId, NodeId>> edges() const;

    /// Connected-component label per node (labels are the smallest member index).
    [[nodiscard]] NodeId component(NodeId i) const { return component_.at(i); }
    [[nodiscard]] std::size_t largest_component_size() const;

    [[nodiscard]] double distance(NodeId i, NodeId j) const { return norm(position(i) - position(j)); }

private:
    std::vector<Vec3> positions_;
    double radio_radius_;
    int dimension_;
    double side_;
    std::uint64_t seed_;
    std::vector<std::size_t> offsets_;
    std::vector<NodeId> adjacency_;
    std::vector<NodeId> component_;
};

struct DeploymentOptions {
    double side = 1.0;         // domain edge length
    double bucket_size = 0.0;  // grid cell size for the neighbour search; 0 selects the radio radius
};

/// I.i.d. uniform positions drawn from Rng(seed); adjacency by exact threshold.
Deployment generate_deployment(std::size_t n_nodes, double radio_radius, int dimension, std::uint64_t seed,
                               const DeploymentOptions& options = {});

/// CSV: node_id,x,y[,z] and i,j edge lists, with full round-trip precision.
void write_deployment_csv(const Deployment& deployment, const std::filesystem::path& nodes_path,
                          const std::filesystem::path& edges_path);
/// Rebuilds a deployment from a node file; edges are recomputed from the radius.
Deployment read_deployment_csv(const std::filesystem::path& nodes_path, double radio_radius, double side = 1.0);

struct RouteResult {
    std::size_t hop_count = 0;
    double displacement = 0.0;  // |x_last - x_source|
    bool reached = false;
    std::vector<NodeId> visited;  // source first; filled when tracing is requested
};

RouteResult route_random_walk(const Deployment& deployment, NodeId source, NodeId destination,
                              std::size_t max_hops, Rng& rng, bool trace = false);

/// Knowledge-range greedy forwarding, the graph-level stand-in for a directed
/// strategy with finite effective radius. Within knowledge_range of the
/// destination the packet moves to the neighbour closest to it (never straight
/// back to the node it came from unless that is the only neighbour); elsewhere
/// it moves to a uniformly random neighbour.
RouteResult route_greedy_knowledge(const Deployment& deployment, NodeId source, NodeId destination,
                                   double knowledge_range, std::size_t max_hops, Rng& rng, bool trace = false);

/// Minimum-hop route (BFS); among equal-length routes each node steps to its
/// lowest-index predecessor. Throws InvalidArgument for disconnected pairs.
RouteResult route_shortest(const Deployment& deployment, NodeId source, NodeId destination, bool trace = false);

enum class RoutingRule { RandomWalk, GreedyKnowledge, Shortest };
std::string_view to_string(RoutingRule rule) noexcept;
RoutingRule parse_routing_rule(std::string_view text);

enum class DomainConvention {
    /// Unit domain, r = c (log N / N)^{1/d}.
    UnitDomain,
    /// Domain side (N / density)^{1/d}, r = c (log N / density)^{1/d}.
    FixedDensity,
};
std::string_view to_string(DomainConvention convention) noexcept;
DomainConvention parse_domain_convention(std::string_view text);

struct NetworkScale {
    double side = 1.0;
    double radio_radius = 0.0;
};
NetworkScale network_scale(std::size_t n_nodes, int dimension, DomainConvention convention,
                           double radius_factor = 1.5, double density = 1.0);

struct RoutingOptions {
    RoutingRule rule = RoutingRule::Shortest;
    double knowledge_factor = 1.0;    // knowledge range in units of the radio radius
    double max_hops_per_node = 50.0;  // walk budget = factor * N
};

RouteResult route(const Deployment& deployment, NodeId source, NodeId destination, const RoutingOptions& options,
                  Rng& rng, bool trace = false);

struct ScalingPoint {
    std::size_t n_nodes = 0;
    double mean_length = 0.0;  // hops * radio radius
    double std_error = 0.0;
    double mean_hops = 0.0;
    std::size_t routed = 0;
    std::size_t excluded = 0;  // disconnected after retries, or walk budget exhausted
};

struct ScalingResult {
    std::vector<ScalingPoint> points;
    double fitted_exponent = 0.0;
    double std_error = 0.0;
    double r_squared = 0.0;
};

struct ScalingConfig {
    RoutingOptions routing;
    std::vector<std::size_t> node_counts;
    int dimension = 2;
    DomainConvention convention = DomainConvention::UnitDomain;
    double radius_factor = 1.5;
    double density = 1.0;
    std::size_t pairs_per_n = 200;
    std::size_t retry_budget = 20;
    std::uint64_t seed = 0;
    unsigned threads = 1;
};

/// Mean routing path length against N with a log-log fit. Pair p of size
/// index k draws from Rng(seed_k, p) so results are thread-count independent.
ScalingResult scaling_experiment(const ScalingConfig& config);

struct CapacityEstimate {
    double per_node_throughput = 0.0;  // lambda = W / max load
    double transport_capacity = 0.0;   // sum over flows of lambda * |x_d - x_s|
    std::size_t max_load = 0;
};

/// Relay-load accounting under a perfect MAC: every node can transmit
/// per_node_rate bits/s, and each flow's route charges one transmission to the
/// source and to every relay. Throws InvalidArgument when a pair is unreached.
CapacityEstimate transport_capacity_estimate(const Deployment& deployment, std::span<const std::pair<NodeId, NodeId>> pairs,
                                             const RoutingOptions& routing, double per_node_rate, std::uint64_t seed = 0);

struct CapacityPoint {
    std::size_t n_nodes = 0;
    double per_node_throughput = 0.0;
    double transport_capacity = 0.0;
};

struct CapacityScaling {
    std::vector<CapacityPoint> points;
    double fitted_exponent = 0.0;
    double std_error = 0.0;
    double r_squared = 0.0;
};

/// Unit-domain deployments; every node sources one flow to a uniformly chosen
/// node of its component. Averages `repetitions` deployments per N.
CapacityScaling capacity_scaling(std::span<const std::size_t> node_counts, const RoutingOptions& routing,
                                 double radius_factor, double per_node_rate, std::size_t repetitions,
                                 std::uint64_t seed, unsigned threads = 1);

}  // namespace routechain
