#include "crfmm/paths.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <set>

namespace crfmm {

namespace {

struct NodeRoute {
    std::vector<std::size_t> edges;  // edge positions, source -> target
    double cost = 0.0;
};

/// Label-setting shortest path over node positions with banned nodes/edges.
/// Equal-distance labels keep the first settled predecessor; out-edges are
/// relaxed in ascending edge id, so results are deterministic.
std::optional<NodeRoute> shortest_route(const RoadNetwork& net, std::size_t source, std::size_t target,
                                        const std::vector<char>& banned_node,
                                        const std::set<std::size_t>& banned_edge, double budget) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    const std::size_t n = net.nodes().size();
    std::vector<double> dist(n, inf);
    std::vector<std::size_t> via(n, std::numeric_limits<std::size_t>::max());
    using Item = std::pair<double, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
    dist[source] = 0.0;
    queue.push({0.0, source});
    while (!queue.empty()) {
        const auto [d, u] = queue.top();
        queue.pop();
        if (d > dist[u]) continue;
        if (u == target) break;
        for (std::size_t ep : net.out_edges(u)) {
            if (banned_edge.contains(ep)) continue;
            const RoadEdge& e = net.edges()[ep];
            const std::size_t v = net.node_position(e.to_node);
            if (banned_node[v]) continue;
            const double nd = d + e.length_m;
            if (nd > budget) continue;
            if (nd < dist[v]) {
                dist[v] = nd;
                via[v] = ep;
                queue.push({nd, v});
            }
        }
    }
    if (dist[target] == inf) return std::nullopt;
    NodeRoute route;
    route.cost = dist[target];
    for (std::size_t v = target; v != source;) {
        const std::size_t ep = via[v];
        route.edges.push_back(ep);
        v = net.node_position(net.edges()[ep].from_node);
    }
    std::reverse(route.edges.begin(), route.edges.end());
    return route;
}

std::vector<std::size_t> route_nodes(const RoadNetwork& net, std::size_t source, const NodeRoute& r) {
    std::vector<std::size_t> nodes{source};
    for (std::size_t ep : r.edges) nodes.push_back(net.node_position(net.edges()[ep].to_node));
    return nodes;
}

double route_cost(const RoadNetwork& net, std::span<const std::size_t> edges) {
    double c = 0.0;
    for (std::size_t ep : edges) c += net.edges()[ep].length_m;
    return c;
}

/// Deviation-based enumeration of up to k loop-free node routes (Yen).
std::vector<NodeRoute> k_shortest_routes(const RoadNetwork& net, std::size_t source, std::size_t target,
                                         std::size_t k, double budget) {
    std::vector<NodeRoute> accepted;
    std::vector<char> no_nodes(net.nodes().size(), 0);
    auto first = shortest_route(net, source, target, no_nodes, {}, budget);
    if (!first) return accepted;
    accepted.push_back(std::move(*first));
    if (source == target) return accepted;

    auto edge_ids = [&net](const NodeRoute& r) {
        std::vector<EdgeId> ids;
        for (std::size_t ep : r.edges) ids.push_back(net.edges()[ep].id);
        return ids;
    };
    // Candidates ordered by (cost, edge id sequence).
    auto less = [&](const NodeRoute& a, const NodeRoute& b) {
        if (a.cost != b.cost) return a.cost < b.cost;
        return edge_ids(a) < edge_ids(b);
    };
    std::vector<NodeRoute> pending;

    while (accepted.size() < k) {
        const NodeRoute& last = accepted.back();
        const std::vector<std::size_t> last_nodes = route_nodes(net, source, last);
        for (std::size_t i = 0; i + 1 < last_nodes.size(); ++i) {
            const std::size_t spur = last_nodes[i];
            const std::span<const std::size_t> root(last.edges.data(), i);
            std::set<std::size_t> banned_edges;
            for (const NodeRoute& r : accepted) {
                if (r.edges.size() > i && std::equal(root.begin(), root.end(), r.edges.begin()))
                    banned_edges.insert(r.edges[i]);
            }
            std::vector<char> banned_nodes(net.nodes().size(), 0);
            for (std::size_t j = 0; j < i; ++j) banned_nodes[last_nodes[j]] = 1;
            const double root_cost = route_cost(net, root);
            auto tail = shortest_route(net, spur, target, banned_nodes, banned_edges, budget - root_cost);
            if (!tail) continue;
            NodeRoute cand;
            cand.edges.assign(root.begin(), root.end());
            cand.edges.insert(cand.edges.end(), tail->edges.begin(), tail->edges.end());
            cand.cost = route_cost(net, cand.edges);
            if (cand.cost > budget) continue;
            auto same = [&cand](const NodeRoute& r) { return r.edges == cand.edges; };
            if (std::any_of(accepted.begin(), accepted.end(), same) ||
                std::any_of(pending.begin(), pending.end(), same))
                continue;
            pending.push_back(std::move(cand));
        }
        if (pending.empty()) break;
        const auto best = std::min_element(pending.begin(), pending.end(), less);
        accepted.push_back(std::move(*best));
        pending.erase(best);
    }
    return accepted;
}

} // namespace

double Path::traversed_on(const RoadNetwork& net, std::size_t i) const {
    const RoadEdge& e = net.edge(edge_ids[i]);
    if (edge_ids.size() == 1) return end_offset_m - start_offset_m;
    if (i == 0) return e.length_m - start_offset_m;
    if (i + 1 == edge_ids.size()) return end_offset_m;
    return e.length_m;
}

std::vector<Path> feasible_paths(const RoadNetwork& net, const RoadState& from, const RoadState& to,
                                 std::size_t k_max, double length_cap_m) {
    std::vector<Path> out;
    if (k_max == 0 || !(length_cap_m > 0.0)) return out;
    const RoadEdge& first = net.edge(from.edge_id);
    const RoadEdge& last = net.edge(to.edge_id);

    if (from.edge_id == to.edge_id && to.offset_m >= from.offset_m) {
        const double len = to.offset_m - from.offset_m;
        if (len <= length_cap_m) {
            Path p;
            p.edge_ids = {from.edge_id};
            p.start_offset_m = from.offset_m;
            p.end_offset_m = to.offset_m;
            p.length_m = len;
            p.geometry = first.slice(from.offset_m, to.offset_m);
            out.push_back(std::move(p));
        }
        return out;
    }

    const double fixed = (first.length_m - from.offset_m) + to.offset_m;
    const double budget = length_cap_m - fixed;
    if (budget < 0.0) return out;
    const std::size_t source = net.node_position(first.to_node);
    const std::size_t target = net.node_position(last.from_node);
    for (const NodeRoute& r : k_shortest_routes(net, source, target, k_max, budget)) {
        Path p;
        p.start_offset_m = from.offset_m;
        p.end_offset_m = to.offset_m;
        p.edge_ids.push_back(first.id);
        p.geometry = first.slice(from.offset_m, first.length_m);
        double len = first.length_m - from.offset_m;
        for (std::size_t ep : r.edges) {
            const RoadEdge& e = net.edges()[ep];
            p.edge_ids.push_back(e.id);
            p.geometry.insert(p.geometry.end(), e.shape.begin() + 1, e.shape.end());
            len += e.length_m;
        }
        p.edge_ids.push_back(last.id);
        const auto tail = last.slice(0.0, to.offset_m);
        p.geometry.insert(p.geometry.end(), tail.begin() + 1, tail.end());
        p.length_m = len + to.offset_m;
        out.push_back(std::move(p));
    }
    return out;
}

void classify_turn(double delta_deg, const TurnConfig& cfg, TurnCounts& counts) {
    const double mag = std::fabs(delta_deg);
    if (mag > cfg.turn_max_deg) {
        ++counts.u_turn;
    } else if (mag >= cfg.straight_max_deg) {
        if (delta_deg > 0.0)
            ++counts.right;
        else
            ++counts.left;
    }
}

TurnCounts count_turns(const RoadNetwork& net, const Path& path, const TurnConfig& cfg) {
    TurnCounts counts;
    for (std::size_t i = 0; i + 1 < path.edge_ids.size(); ++i) {
        const double in = net.edge(path.edge_ids[i]).end_bearing();
        const double out = net.edge(path.edge_ids[i + 1]).start_bearing();
        classify_turn(signed_heading_change(in, out), cfg, counts);
    }
    return counts;
}

} // namespace crfmm
