#include "routechain/netsim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <queue>
#include <sstream>
#include <string>

#include "routechain/errors.hpp"
#include "routechain/estimation.hpp"
#include "routechain/parallel.hpp"

namespace routechain {
namespace {

constexpr NodeId kNoNode = std::numeric_limits<NodeId>::max();
constexpr std::uint64_t kPairKey = 0x5041495253454544ULL;
constexpr std::uint64_t kFlowKey = 0x464C4F5753454544ULL;

NodeId find_root(std::vector<NodeId>& parent, NodeId x) {
    while (parent[x] != x) {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    return x;
}

void check_endpoints(const Deployment& d, NodeId source, NodeId destination) {
    detail::require(source < d.size() && destination < d.size(), "route: node index out of range");
    detail::require(source != destination, "route: source equals destination");
    detail::require(d.degree(source) > 0, "route: source node is isolated");
}

}  // namespace

Deployment::Deployment(std::vector<Vec3> positions, double radio_radius, int dimension, double side,
                       std::uint64_t seed, double bucket_size)
    : positions_(std::move(positions)),
      radio_radius_(radio_radius),
      dimension_(dimension),
      side_(side),
      seed_(seed) {
    detail::require(positions_.size() >= 2, "deployment: need at least 2 nodes");
    detail::require(positions_.size() < kNoNode, "deployment: too many nodes");
    detail::require(std::isfinite(radio_radius) && radio_radius > 0.0, "deployment: radio radius must be positive");
    detail::require(dimension == 2 || dimension == 3, "deployment: dimension must be 2 or 3");
    detail::require(std::isfinite(side) && side > 0.0, "deployment: side must be positive");
    detail::require(bucket_size >= 0.0, "deployment: bucket size must be nonnegative");

    const std::size_t n = positions_.size();
    const double r2 = radio_radius * radio_radius;

    // Uniform grid; cells are at least `cell` wide and the search reaches
    // ceil(r / width) cells in each direction.
    const double cell = bucket_size > 0.0 ? bucket_size : radio_radius;
    const std::size_t max_per_dim = dimension == 2 ? 4096 : 256;
    const auto per_dim = static_cast<std::size_t>(
        std::clamp(std::floor(side / cell), 1.0, static_cast<double>(max_per_dim)));
    const double width = side / static_cast<double>(per_dim);
    const auto reach = static_cast<long>(std::ceil(radio_radius / width));
    const std::size_t zcells = dimension == 3 ? per_dim : 1;

    auto coord = [&](double v) {
        const double c = std::floor(v / width);
        return static_cast<long>(std::clamp(c, 0.0, static_cast<double>(per_dim - 1)));
    };
    auto cell_index = [&](long cx, long cy, long cz) {
        return (static_cast<std::size_t>(cz) * per_dim + static_cast<std::size_t>(cy)) * per_dim +
               static_cast<std::size_t>(cx);
    };
    const std::size_t total_cells = per_dim * per_dim * zcells;
    std::vector<std::size_t> cell_start(total_cells + 1, 0);
    std::vector<std::size_t> node_cell(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& p = positions_[i];
        node_cell[i] = cell_index(coord(p.x), coord(p.y), dimension == 3 ? coord(p.z) : 0);
        cell_start[node_cell[i] + 1]++;
    }
    std::partial_sum(cell_start.begin(), cell_start.end(), cell_start.begin());
    std::vector<NodeId> cell_nodes(n);
    {
        std::vector<std::size_t> fill(cell_start.begin(), cell_start.end() - 1);
        for (std::size_t i = 0; i < n; ++i) cell_nodes[fill[node_cell[i]]++] = static_cast<NodeId>(i);
    }

    offsets_.assign(n + 1, 0);
    std::vector<NodeId> found;
    const long zreach = dimension == 3 ? reach : 0;
    const long last = static_cast<long>(per_dim) - 1;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& p = positions_[i];
        const long cx = coord(p.x), cy = coord(p.y), cz = dimension == 3 ? coord(p.z) : 0;
        found.clear();
        for (long z = std::max(0L, cz - zreach); z <= std::min(dimension == 3 ? last : 0L, cz + zreach); ++z)
            for (long y = std::max(0L, cy - reach); y <= std::min(last, cy + reach); ++y)
                for (long x = std::max(0L, cx - reach); x <= std::min(last, cx + reach); ++x) {
                    const std::size_t c = cell_index(x, y, z);
                    for (std::size_t k = cell_start[c]; k < cell_start[c + 1]; ++k) {
                        const NodeId j = cell_nodes[k];
                        if (j != i && norm2(positions_[j] - p) <= r2) found.push_back(j);
                    }
                }
        std::sort(found.begin(), found.end());
        adjacency_.insert(adjacency_.end(), found.begin(), found.end());
        offsets_[i + 1] = adjacency_.size();
    }

    std::vector<NodeId> parent(n);
    std::iota(parent.begin(), parent.end(), NodeId{0});
    for (std::size_t i = 0; i < n; ++i)
        for (const NodeId j : neighbors(static_cast<NodeId>(i))) {
            const NodeId a = find_root(parent, static_cast<NodeId>(i));
            const NodeId b = find_root(parent, j);
            if (a != b) parent[std::max(a, b)] = std::min(a, b);
        }
    component_.resize(n);
    for (std::size_t i = 0; i < n; ++i) component_[i] = find_root(parent, static_cast<NodeId>(i));
}

std::span<const NodeId> Deployment::neighbors(NodeId i) const {
    detail::require(i < positions_.size(), "deployment: node index out of range");
    return {adjacency_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
}

std::vector<std::pair<NodeId, NodeId>> Deployment::edges() const {
    std::vector<std::pair<NodeId, NodeId>> out;
    out.reserve(edge_count());
    for (NodeId i = 0; i < size(); ++i)
        for (const NodeId j : neighbors(i))
            if (i < j) out.emplace_back(i, j);
    return out;
}

std::size_t Deployment::largest_component_size() const {
    std::vector<std::size_t> counts(size(), 0);
    for (const NodeId c : component_) counts[c]++;
    return *std::max_element(counts.begin(), counts.end());
}

Deployment generate_deployment(std::size_t n_nodes, double radio_radius, int dimension, std::uint64_t seed,
                               const DeploymentOptions& options) {
    detail::require(n_nodes >= 2, "generate_deployment: n_nodes must be >= 2");
    detail::require(dimension == 2 || dimension == 3, "generate_deployment: dimension must be 2 or 3");
    Rng rng(seed);
    std::vector<Vec3> positions(n_nodes);
    for (auto& p : positions) {
        p.x = options.side * rng.uniform();
        p.y = options.side * rng.uniform();
        p.z = dimension == 3 ? options.side * rng.uniform() : 0.0;
    }
    return Deployment(std::move(positions), radio_radius, dimension, options.side, seed, options.bucket_size);
}

void write_deployment_csv(const Deployment& deployment, const std::filesystem::path& nodes_path,
                          const std::filesystem::path& edges_path) {
    std::ofstream nodes(nodes_path);
    std::ofstream edges(edges_path);
    if (!nodes || !edges) throw std::ios_base::failure("cannot open deployment output files");
    nodes << std::setprecision(17);
    nodes << (deployment.dimension() == 3 ? "node_id,x,y,z\n" : "node_id,x,y\n");
    for (NodeId i = 0; i < deployment.size(); ++i) {
        const auto& p = deployment.position(i);
        nodes << i << ',' << p.x << ',' << p.y;
        if (deployment.dimension() == 3) nodes << ',' << p.z;
        nodes << '\n';
    }
    edges << "i,j\n";
    for (const auto& [i, j] : deployment.edges()) edges << i << ',' << j << '\n';
    if (!nodes || !edges) throw std::ios_base::failure("failed writing deployment files");
}

Deployment read_deployment_csv(const std::filesystem::path& nodes_path, double radio_radius, double side) {
    std::ifstream in(nodes_path);
    if (!in) throw std::ios_base::failure("cannot open " + nodes_path.string());
    std::string line;
    std::getline(in, line);
    const int dimension = line == "node_id,x,y,z" ? 3 : 2;
    detail::require(line == "node_id,x,y" || line == "node_id,x,y,z", "node file: unexpected header '" + line + "'");
    std::vector<Vec3> positions;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string field;
        std::vector<double> values;
        while (std::getline(row, field, ',')) values.push_back(std::stod(field));
        detail::require(values.size() == static_cast<std::size_t>(dimension) + 1, "node file: bad row '" + line + "'");
        detail::require(values[0] == static_cast<double>(positions.size()), "node file: node ids must be 0..N-1 in order");
        positions.push_back({values[1], values[2], dimension == 3 ? values[3] : 0.0});
    }
    return Deployment(std::move(positions), radio_radius, dimension, side);
}

RouteResult route_random_walk(const Deployment& deployment, NodeId source, NodeId destination, std::size_t max_hops,
                              Rng& rng, bool trace) {
    check_endpoints(deployment, source, destination);
    RouteResult out;
    NodeId current = source;
    if (trace) out.visited.push_back(current);
    while (out.hop_count < max_hops) {
        const auto nb = deployment.neighbors(current);
        current = nb[rng.below(nb.size())];
        ++out.hop_count;
        if (trace) out.visited.push_back(current);
        if (current == destination) {
            out.reached = true;
            break;
        }
    }
    out.displacement = deployment.distance(source, current);
    return out;
}

RouteResult route_greedy_knowledge(const Deployment& deployment, NodeId source, NodeId destination,
                                   double knowledge_range, std::size_t max_hops, Rng& rng, bool trace) {
    check_endpoints(deployment, source, destination);
    detail::require(knowledge_range >= deployment.radio_radius(),
                    "route_greedy_knowledge: knowledge range must be >= radio radius");
    RouteResult out;
    const Vec3& target = deployment.position(destination);
    const double k2 = knowledge_range * knowledge_range;
    NodeId current = source;
    NodeId previous = kNoNode;
    if (trace) out.visited.push_back(current);
    while (out.hop_count < max_hops) {
        const auto nb = deployment.neighbors(current);
        NodeId next = kNoNode;
        if (norm2(deployment.position(current) - target) <= k2) {
            double best = std::numeric_limits<double>::infinity();
            for (const NodeId j : nb) {
                if (j == previous) continue;
                const double d2 = norm2(deployment.position(j) - target);
                if (d2 < best) {
                    best = d2;
                    next = j;
                }
            }
        }
        // Outside the knowledge range, or a dead end whose only exit is the tabu node.
        if (next == kNoNode) next = nb[rng.below(nb.size())];
        previous = current;
        current = next;
        ++out.hop_count;
        if (trace) out.visited.push_back(current);
        if (current == destination) {
            out.reached = true;
            break;
        }
    }
    out.displacement = deployment.distance(source, current);
    return out;
}

RouteResult route_shortest(const Deployment& deployment, NodeId source, NodeId destination, bool trace) {
    check_endpoints(deployment, source, destination);
    if (deployment.component(source) != deployment.component(destination)) {
        throw InvalidArgument("route_shortest: source and destination are disconnected");
    }
    std::vector<std::uint32_t> depth(deployment.size(), std::numeric_limits<std::uint32_t>::max());
    std::queue<NodeId> frontier;
    depth[source] = 0;
    frontier.push(source);
    // Once the destination is labelled, every node one layer closer already is.
    while (!frontier.empty() && depth[destination] == std::numeric_limits<std::uint32_t>::max()) {
        const NodeId v = frontier.front();
        frontier.pop();
        for (const NodeId w : deployment.neighbors(v)) {
            if (depth[w] != std::numeric_limits<std::uint32_t>::max()) continue;
            depth[w] = depth[v] + 1;
            frontier.push(w);
        }
    }
    RouteResult out;
    out.hop_count = depth[destination];
    out.reached = true;
    out.displacement = deployment.distance(source, destination);
    if (trace) {
        std::vector<NodeId> back{destination};
        NodeId v = destination;
        while (v != source) {
            for (const NodeId w : deployment.neighbors(v)) {  // ascending: first match is lowest index
                if (depth[w] + 1 == depth[v]) {
                    v = w;
                    break;
                }
            }
            back.push_back(v);
        }
        out.visited.assign(back.rbegin(), back.rend());
    }
    return out;
}

std::string_view to_string(RoutingRule rule) noexcept {
    switch (rule) {
        case RoutingRule::RandomWalk: return "random-walk";
        case RoutingRule::GreedyKnowledge: return "greedy";
        case RoutingRule::Shortest: return "shortest";
    }
    return "?";
}

RoutingRule parse_routing_rule(std::string_view text) {
    if (text == "random-walk" || text == "random") return RoutingRule::RandomWalk;
    if (text == "greedy" || text == "greedy-knowledge") return RoutingRule::GreedyKnowledge;
    if (text == "shortest") return RoutingRule::Shortest;
    throw InvalidArgument("unknown routing rule '" + std::string(text) + "' (expected random-walk, greedy, shortest)");
}

std::string_view to_string(DomainConvention convention) noexcept {
    return convention == DomainConvention::UnitDomain ? "unit" : "fixed-density";
}

DomainConvention parse_domain_convention(std::string_view text) {
    if (text == "unit") return DomainConvention::UnitDomain;
    if (text == "fixed-density") return DomainConvention::FixedDensity;
    throw InvalidArgument("unknown density rule '" + std::string(text) + "' (expected unit or fixed-density)");
}

NetworkScale network_scale(std::size_t n_nodes, int dimension, DomainConvention convention, double radius_factor,
                           double density) {
    detail::require(n_nodes >= 2, "network_scale: n_nodes must be >= 2");
    detail::require(dimension == 2 || dimension == 3, "network_scale: dimension must be 2 or 3");
    detail::require(radius_factor > 0.0, "network_scale: radius factor must be positive");
    detail::require(density > 0.0, "network_scale: density must be positive");
    const double n = static_cast<double>(n_nodes);
    const double inv_d = 1.0 / dimension;
    NetworkScale s;
    if (convention == DomainConvention::UnitDomain) {
        s.side = 1.0;
        s.radio_radius = radius_factor * std::pow(std::log(n) / n, inv_d);
    } else {
        s.side = std::pow(n / density, inv_d);
        s.radio_radius = radius_factor * std::pow(std::log(n) / density, inv_d);
    }
    return s;
}

RouteResult route(const Deployment& deployment, NodeId source, NodeId destination, const RoutingOptions& options,
                  Rng& rng, bool trace) {
    const auto budget = static_cast<std::size_t>(options.max_hops_per_node * static_cast<double>(deployment.size()));
    switch (options.rule) {
        case RoutingRule::RandomWalk:
            return route_random_walk(deployment, source, destination, budget, rng, trace);
        case RoutingRule::GreedyKnowledge:
            return route_greedy_knowledge(deployment, source, destination,
                                          options.knowledge_factor * deployment.radio_radius(), budget, rng, trace);
        case RoutingRule::Shortest:
            if (deployment.component(source) != deployment.component(destination)) {
                check_endpoints(deployment, source, destination);
                return RouteResult{};
            }
            return route_shortest(deployment, source, destination, trace);
    }
    return RouteResult{};
}

ScalingResult scaling_experiment(const ScalingConfig& config) {
    detail::require(config.node_counts.size() >= 4, "scaling_experiment: need at least 4 values of N");
    const auto [lo, hi] = std::minmax_element(config.node_counts.begin(), config.node_counts.end());
    detail::require(*hi >= 10 * *lo, "scaling_experiment: N values must span at least one decade");
    detail::require(config.pairs_per_n >= 2, "scaling_experiment: pairs_per_n must be >= 2");

    ScalingResult result;
    for (std::size_t k = 0; k < config.node_counts.size(); ++k) {
        const std::size_t n = config.node_counts[k];
        const auto scale = network_scale(n, config.dimension, config.convention, config.radius_factor, config.density);
        const std::uint64_t seed_k = Rng(config.seed, k)();
        const Deployment dep = generate_deployment(n, scale.radio_radius, config.dimension, seed_k, {scale.side, 0.0});

        std::vector<double> lengths(config.pairs_per_n, -1.0);
        std::vector<double> hops(config.pairs_per_n, 0.0);
        parallel_chunks(config.pairs_per_n, config.threads, [&](std::size_t begin, std::size_t end) {
            for (std::size_t p = begin; p < end; ++p) {
                Rng rng(seed_k ^ kPairKey, p);
                bool found = false;
                NodeId s = 0, d = 0;
                for (std::size_t attempt = 0; attempt <= config.retry_budget && !found; ++attempt) {
                    s = static_cast<NodeId>(rng.below(n));
                    d = static_cast<NodeId>(rng.below(n));
                    found = s != d && dep.degree(s) > 0 && dep.component(s) == dep.component(d);
                }
                if (!found) continue;
                const auto r = route(dep, s, d, config.routing, rng);
                if (!r.reached) continue;
                hops[p] = static_cast<double>(r.hop_count);
                lengths[p] = hops[p] * dep.radio_radius();
            }
        });

        ScalingPoint pt;
        pt.n_nodes = n;
        double sum = 0.0, sum_sq = 0.0, hop_sum = 0.0;
        for (std::size_t p = 0; p < lengths.size(); ++p) {
            if (lengths[p] < 0.0) {
                ++pt.excluded;
                continue;
            }
            ++pt.routed;
            sum += lengths[p];
            sum_sq += lengths[p] * lengths[p];
            hop_sum += hops[p];
        }
        if (pt.routed < 2) throw NonConvergence("scaling_experiment: fewer than 2 routed pairs at N = " + std::to_string(n));
        const double m = static_cast<double>(pt.routed);
        pt.mean_length = sum / m;
        pt.mean_hops = hop_sum / m;
        pt.std_error = std::sqrt(std::max(0.0, sum_sq / m - pt.mean_length * pt.mean_length) / (m - 1.0));
        result.points.push_back(pt);
    }

    std::vector<double> xs, ys;
    for (const auto& pt : result.points) {
        xs.push_back(static_cast<double>(pt.n_nodes));
        ys.push_back(pt.mean_length);
    }
    const auto fit = fit_power_law(xs, ys);
    result.fitted_exponent = fit.exponent;
    result.std_error = fit.std_error;
    result.r_squared = fit.r_squared;
    return result;
}

CapacityEstimate transport_capacity_estimate(const Deployment& deployment,
                                             std::span<const std::pair<NodeId, NodeId>> pairs,
                                             const RoutingOptions& routing, double per_node_rate, std::uint64_t seed) {
    detail::require(!pairs.empty(), "transport_capacity_estimate: no pairs");
    detail::require(std::isfinite(per_node_rate) && per_node_rate > 0.0,
                    "transport_capacity_estimate: per-node rate must be positive");
    std::vector<std::size_t> load(deployment.size(), 0);
    double distance_sum = 0.0;
    for (std::size_t f = 0; f < pairs.size(); ++f) {
        Rng rng(seed ^ kFlowKey, f);
        const auto r = route(deployment, pairs[f].first, pairs[f].second, routing, rng, true);
        if (!r.reached) {
            throw InvalidArgument("transport_capacity_estimate: flow " + std::to_string(f) + " was not delivered");
        }
        // Every node but the last transmits once per traversal.
        for (std::size_t h = 0; h + 1 < r.visited.size(); ++h) load[r.visited[h]]++;
        distance_sum += deployment.distance(pairs[f].first, pairs[f].second);
    }
    CapacityEstimate out;
    out.max_load = *std::max_element(load.begin(), load.end());
    out.per_node_throughput = per_node_rate / static_cast<double>(out.max_load);
    out.transport_capacity = out.per_node_throughput * distance_sum;
    return out;
}

CapacityScaling capacity_scaling(std::span<const std::size_t> node_counts, const RoutingOptions& routing,
                                 double radius_factor, double per_node_rate, std::size_t repetitions,
                                 std::uint64_t seed, unsigned threads) {
    detail::require(node_counts.size() >= 3, "capacity_scaling: need at least 3 values of N");
    detail::require(repetitions >= 1, "capacity_scaling: repetitions must be >= 1");
    CapacityScaling out;
    for (std::size_t k = 0; k < node_counts.size(); ++k) {
        const std::size_t n = node_counts[k];
        const auto scale = network_scale(n, 2, DomainConvention::UnitDomain, radius_factor);
        std::vector<CapacityEstimate> reps(repetitions);
        parallel_chunks(repetitions, threads, [&](std::size_t begin, std::size_t end) {
            for (std::size_t rep = begin; rep < end; ++rep) {
                const std::uint64_t dep_seed = Rng(Rng(seed, k)(), rep)();
                const Deployment dep = generate_deployment(n, scale.radio_radius, 2, dep_seed);
                std::vector<std::vector<NodeId>> members(n);
                for (NodeId i = 0; i < n; ++i) members[dep.component(i)].push_back(i);
                std::vector<std::pair<NodeId, NodeId>> flows;
                Rng rng(dep_seed ^ kFlowKey);
                for (NodeId i = 0; i < n; ++i) {
                    const auto& group = members[dep.component(i)];
                    if (group.size() < 2) continue;
                    NodeId d = i;
                    while (d == i) d = group[rng.below(group.size())];
                    flows.emplace_back(i, d);
                }
                reps[rep] = transport_capacity_estimate(dep, flows, routing, per_node_rate, dep_seed);
            }
        });
        CapacityPoint pt;
        pt.n_nodes = n;
        for (const auto& r : reps) {
            pt.per_node_throughput += r.per_node_throughput / static_cast<double>(repetitions);
            pt.transport_capacity += r.transport_capacity / static_cast<double>(repetitions);
        }
        out.points.push_back(pt);
    }
    std::vector<double> xs, ys;
    for (const auto& pt : out.points) {
        xs.push_back(static_cast<double>(pt.n_nodes));
        ys.push_back(pt.transport_capacity);
    }
    const auto fit = fit_power_law(xs, ys);
    out.fitted_exponent = fit.exponent;
    out.std_error = fit.std_error;
    out.r_squared = fit.r_squared;
    return out;
}

}  // namespace routechain
