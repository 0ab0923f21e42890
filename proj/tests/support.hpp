#pragma once

// Shared fixtures and independent oracles for the unit and acceptance tests.

#include "crfmm/crf.hpp"
#include "crfmm/road_network.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

namespace crfmm::testing {

/// Nodes placed at planar offsets (metres) from a fixed geographic origin.
inline std::vector<RoadNode> nodes_at(const std::vector<std::pair<double, double>>& xy,
                                      GeoPoint origin = {121.45, 31.22}) {
    const Projection proj{origin};
    std::vector<RoadNode> nodes;
    for (std::size_t i = 0; i < xy.size(); ++i)
        nodes.push_back({static_cast<NodeId>(i + 1), proj.from_plane({xy[i].first, xy[i].second})});
    return nodes;
}

inline EdgeRow straight_row(const std::vector<RoadNode>& nodes, EdgeId id, NodeId from, NodeId to, bool oneway,
                            double speed = 50.0) {
    return {id, from, to, speed, oneway, {nodes[from - 1].pos, nodes[to - 1].pos}, 0};
}

/// rows x cols two-way grid, node id r*cols + c + 1, horizontal rows first.
inline RoadNetwork grid(std::size_t rows, std::size_t cols, double spacing = 200.0, double speed = 50.0) {
    std::vector<std::pair<double, double>> xy;
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) xy.push_back({c * spacing, r * spacing});
    const auto nodes = nodes_at(xy);
    std::vector<EdgeRow> rows_out;
    EdgeId id = 1;
    const auto node = [cols](std::size_t r, std::size_t c) { return static_cast<NodeId>(r * cols + c + 1); };
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c + 1 < cols; ++c) rows_out.push_back(straight_row(nodes, id++, node(r, c), node(r, c + 1), false, speed));
    for (std::size_t r = 0; r + 1 < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) rows_out.push_back(straight_row(nodes, id++, node(r, c), node(r + 1, c), false, speed));
    return RoadNetwork::build(nodes, rows_out);
}

/// Planar point of a geographic position in the network's own frame.
inline PlanePoint at(const RoadNetwork& net, double x_from_first_node, double y_from_first_node) {
    const PlanePoint base = net.projection().to_plane(net.nodes()[0].pos);
    return {base.x + x_from_first_node, base.y + y_from_first_node};
}

/// Random chain lattice: every gap has at least one path on pair (0, 0), so
/// at least one assignment is compatible; other pairs hold 0..max_paths.
inline FeatureLattice random_lattice(std::mt19937_64& rng, std::size_t max_obs, std::size_t max_cands,
                                     std::size_t max_paths, std::size_t point_dim, std::size_t path_dim) {
    std::uniform_int_distribution<std::size_t> n_obs(1, max_obs), n_cand(1, max_cands), n_path(0, max_paths);
    std::uniform_real_distribution<double> feat(0.0, 1.0);
    FeatureLattice fl;
    fl.point_dim = point_dim;
    fl.path_dim = path_dim;
    const std::size_t n = n_obs(rng);
    for (std::size_t t = 0; t < n; ++t) {
        FeatureLattice::PointLayer layer;
        layer.count = n_cand(rng);
        for (std::size_t k = 0; k < layer.count * point_dim; ++k) layer.features.push_back(feat(rng));
        fl.points.push_back(std::move(layer));
    }
    for (std::size_t t = 0; t + 1 < n; ++t) {
        FeatureLattice::PathLayer layer;
        layer.from_count = fl.points[t].count;
        layer.to_count = fl.points[t + 1].count;
        layer.pair_offset.push_back(0);
        for (std::size_t pr = 0; pr < layer.from_count * layer.to_count; ++pr) {
            std::size_t c = n_path(rng);
            if (pr == 0 && c == 0) c = 1;
            for (std::size_t k = 0; k < c * path_dim; ++k) layer.features.push_back(feat(rng));
            layer.pair_offset.push_back(layer.pair_offset.back() + c);
        }
        fl.paths.push_back(std::move(layer));
    }
    return fl;
}

/// Score recomputed from raw arrays, independent of the library's indexing helpers.
inline double oracle_score(const FeatureLattice& fl, const std::vector<double>& w, const Assignment& a) {
    double s = 0.0;
    for (std::size_t t = 0; t < fl.points.size(); ++t)
        for (std::size_t k = 0; k < fl.point_dim; ++k)
            s += w[k] * fl.points[t].features[a.candidates[t] * fl.point_dim + k];
    for (std::size_t t = 0; t < fl.paths.size(); ++t) {
        const auto& layer = fl.paths[t];
        const std::size_t row = layer.pair_offset[a.candidates[t] * layer.to_count + a.candidates[t + 1]] + a.paths[t];
        for (std::size_t k = 0; k < fl.path_dim; ++k) s += w[fl.point_dim + k] * layer.features[row * fl.path_dim + k];
    }
    return s;
}

/// Every compatible assignment, in lexicographic (candidate, path) order.
inline void enumerate(const FeatureLattice& fl, const std::function<void(const Assignment&)>& visit) {
    Assignment a;
    a.candidates.resize(fl.points.size());
    a.paths.resize(fl.paths.size());
    // Choose candidate t, then every path into it from candidate t-1.
    std::function<void(std::size_t)> rec = [&](std::size_t t) {
        if (t == fl.points.size()) {
            visit(a);
            return;
        }
        for (std::size_t c = 0; c < fl.points[t].count; ++c) {
            a.candidates[t] = c;
            if (t == 0) {
                rec(1);
                continue;
            }
            const auto& layer = fl.paths[t - 1];
            const std::size_t pr = a.candidates[t - 1] * layer.to_count + c;
            for (std::size_t p = 0; p < layer.pair_offset[pr + 1] - layer.pair_offset[pr]; ++p) {
                a.paths[t - 1] = p;
                rec(t + 1);
            }
        }
    };
    rec(0);
}

inline double log_sum_exp(const std::vector<double>& v) {
    double m = -std::numeric_limits<double>::infinity();
    for (double x : v) m = std::max(m, x);
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

inline std::vector<double> random_weights(std::mt19937_64& rng, std::size_t dim, double lo = -2.0, double hi = 2.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> w(dim);
    for (double& x : w) x = u(rng);
    return w;
}

} // namespace crfmm::testing
