#include "crfmm/error.hpp"
#include "crfmm/features.hpp"
#include "crfmm/lattice.hpp"
#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <doctest.h>

using namespace crfmm;
using namespace crfmm::testing;

namespace {

Observation obs_at(const RoadNetwork& net, PlanePoint p, std::int64_t t, double speed = 40.0, int dir = 90) {
    return {1, net.projection().from_plane(p), speed, dir, true, 1270022400 + t};
}

Trajectory traj_of(std::vector<Observation> obs) { return {1, std::move(obs)}; }

// One-way straight road of the given length heading east, limit in km/h.
RoadNetwork single_road(double length, double limit) {
    auto nodes = nodes_at({{0, 0}, {length, 0}});
    return RoadNetwork::build(nodes, {straight_row(nodes, 1, 1, 2, true, limit)});
}

} // namespace

TEST_CASE("single observation gives one point layer") {
    const RoadNetwork net = grid(3, 3);
    const auto build = build_lattice(traj_of({obs_at(net, at(net, 60, 5), 0)}), net, LatticeConfig{});
    REQUIRE(build.pieces.size() == 1);
    CHECK(build.pieces[0].size() == 1);
    CHECK(build.pieces[0].path_layers.empty());
    CHECK(build.dropped.empty());
}

TEST_CASE("three observations form the alternating chain") {
    const RoadNetwork net = grid(3, 3);
    LatticeConfig cfg;
    cfg.max_candidates_k = 2;
    const auto traj = traj_of({obs_at(net, at(net, 60, 3), 0), obs_at(net, at(net, 200, 90), 20, 40, 0),
                               obs_at(net, at(net, 330, 200), 40)});
    const auto build = build_lattice(traj, net, cfg);
    REQUIRE(build.pieces.size() == 1);
    const Lattice& l = build.pieces[0];
    REQUIRE(l.size() == 3);
    REQUIRE(l.path_layers.size() == 2);
    for (std::size_t t = 0; t < 3; ++t) {
        CHECK(l.point_layers[t].size() == 2);
        for (std::size_t c = 1; c < l.point_layers[t].size(); ++c)
            CHECK(l.point_layers[t][c - 1].dist_m <= l.point_layers[t][c].dist_m);
    }
    for (std::size_t t = 0; t < 2; ++t) {
        const PathLayer& layer = l.path_layers[t];
        CHECK(layer.from_count == l.point_layers[t].size());
        CHECK(layer.to_count == l.point_layers[t + 1].size());
        CHECK(layer.path_count() > 0);
        for (std::size_t i = 0; i < layer.from_count; ++i)
            for (std::size_t j = 0; j < layer.to_count; ++j) {
                CHECK(layer.paths(i, j).size() <= cfg.paths_per_pair_k);
                for (const Path& p : layer.paths(i, j)) {
                    CHECK(p.edge_ids.front() == l.point_layers[t][i].edge_id);
                    CHECK(p.edge_ids.back() == l.point_layers[t + 1][j].edge_id);
                }
            }
    }
    CHECK(lattice_to_json(l) == lattice_to_json(build_lattice(traj, net, cfg).pieces[0]));
}

TEST_CASE("unreachable gaps split the trajectory") {
    auto nodes = nodes_at({{0, 0}, {100, 0}, {0, 1000}, {100, 1000}});
    const RoadNetwork net =
        RoadNetwork::build(nodes, {straight_row(nodes, 1, 1, 2, true), straight_row(nodes, 2, 3, 4, true)});
    const PlanePoint base = at(net, 0, 0);
    const auto build =
        build_lattice(traj_of({obs_at(net, base + PlanePoint{50, 0}, 0), obs_at(net, base + PlanePoint{50, 1000}, 60)}),
                      net, LatticeConfig{});
    REQUIRE(build.pieces.size() == 2);
    CHECK(build.pieces[0].size() == 1);
    CHECK(build.pieces[1].size() == 1);
    CHECK(build.pieces[1].obs_index == std::vector<std::size_t>{1});
}

TEST_CASE("radius escalation and dropped observations") {
    const RoadNetwork net = single_road(400, 50);
    LatticeConfig cfg;
    CHECK(candidate_states(net, at(net, 100, 120), cfg).size() == 1);
    CHECK(candidate_states(net, at(net, 100, 500), cfg).empty());
    const auto build = build_lattice(
        traj_of({obs_at(net, at(net, 50, 0), 0), obs_at(net, at(net, 100, 500), 10), obs_at(net, at(net, 150, 0), 20)}),
        net, cfg);
    CHECK(build.dropped == std::vector<std::size_t>{1});
    REQUIRE(build.pieces.size() == 1);
    CHECK(build.pieces[0].obs_index == std::vector<std::size_t>{0, 2});
}

TEST_CASE("labelling flags missing truth") {
    const RoadNetwork net = grid(3, 3);
    LatticeConfig cfg;
    cfg.paths_per_pair_k = 1;
    // Both observations on edge 1 (node 1 -> 2), then on edge 2 (node 2 -> 3).
    const auto traj = traj_of({obs_at(net, at(net, 60, 2), 0), obs_at(net, at(net, 330, 2), 30)});
    const Lattice l = build_lattice(traj, net, cfg).pieces.at(0);

    const auto labels = label_lattice(l, GroundTruth{{1, 2}, {{1, 2}}});
    REQUIRE(labels.point[0]);
    CHECK(l.point_layers[0][*labels.point[0]].edge_id == 1);
    REQUIRE(labels.path[0]);
    CHECK(labels.complete());

    // Truth on a far edge: beyond every candidate.
    const auto far = label_lattice(l, GroundTruth{{12, 2}, {{12, 2}}});
    CHECK_FALSE(far.point[0]);
    CHECK_FALSE(far.complete());

    // Two equal-length L-routes lead from node 2 to node 6; with one path per
    // pair only one is enumerated and the other is a missing label.
    const auto corner = traj_of({obs_at(net, at(net, 60, 2), 0), obs_at(net, at(net, 402, 300), 60, 40, 0)});
    const Lattice lc = build_lattice(corner, net, cfg).pieces.at(0);
    const auto i = std::find_if(lc.point_layers[0].begin(), lc.point_layers[0].end(), [](auto& s) { return s.edge_id == 1; });
    const auto j = std::find_if(lc.point_layers[1].begin(), lc.point_layers[1].end(), [](auto& s) { return s.edge_id == 12; });
    REQUIRE(i != lc.point_layers[0].end());
    REQUIRE(j != lc.point_layers[1].end());
    const auto& only = lc.path_layers[0].paths(i - lc.point_layers[0].begin(), j - lc.point_layers[1].begin());
    REQUIRE(only.size() == 1);
    const std::vector<EdgeId> via3{1, 2, 9, 12}, via5{1, 8, 4, 12};
    REQUIRE((only[0].edge_ids == via3 || only[0].edge_ids == via5));
    const auto other = only[0].edge_ids == via3 ? via5 : via3;
    const auto hit = label_lattice(lc, GroundTruth{{1, 12}, {only[0].edge_ids}});
    CHECK(hit.complete());
    const auto detour = label_lattice(lc, GroundTruth{{1, 12}, {other}});
    CHECK(detour.point[0]);
    CHECK(detour.point[1]);
    CHECK_FALSE(detour.path[0]);
    CHECK(detour.missing_count() == 1);
}

TEST_CASE("point features") {
    const RoadNetwork net = single_road(400, 50);
    const FeatureCatalog cat({"distance_error", "bearing_error", "bearing_error_filtered", "log_distance", "point_bias"},
                             {"length"});
    const RoadEdge& e = net.edge(1);
    const double road_bearing = e.bearing_at(100);

    const Observation on = obs_at(net, e.point_at(100), 0, 61.2, static_cast<int>(std::lround(road_bearing)));
    const auto f0 = cat.point_features(on, net.project_onto_edge(e.point_at(100), e));
    CHECK(f0[0] < 1e-6);
    CHECK(f0[1] < 0.5);  // headings are whole degrees
    CHECK(f0[4] == 1.0);

    const PlanePoint off = e.point_at(100) + PlanePoint{0, 30};
    const Observation skew = obs_at(net, off, 0, 40.0, static_cast<int>(std::lround(road_bearing)) + 20);
    const RoadState s = net.project_onto_edge(net.projection().to_plane(skew.pos), e);
    const auto f1 = cat.point_features(skew, s);
    CHECK(f1[0] == doctest::Approx(30.0).epsilon(1e-6));
    CHECK(std::fabs(f1[1] - 20.0) < 0.5);
    CHECK(f1[2] == doctest::Approx(f1[1]));
    CHECK(f1[3] == doctest::Approx(std::log(31.0)).epsilon(1e-6));

    for (double val0 : {0.0, 0.5}) {
        const FeatureCatalog slow({"bearing_error_filtered"}, {"length"}, FilterConfig{7.2, val0});
        const Observation crawl = obs_at(net, off, 0, 5.0, 300);
        CHECK(slow.point_features(crawl, s)[0] == val0);
        const Observation edge_case = obs_at(net, off, 0, 7.2, 300);
        CHECK(slow.point_features(edge_case, s)[0] == val0);
    }
}

TEST_CASE("path features") {
    const RoadNetwork net = single_road(1000, 50);
    const FeatureCatalog cat(
        {"distance_error"},
        {"length", "avg_speed_limit", "travel_time_s", "length_ratio", "left_turns", "right_turns", "u_turns", "path_bias"});
    const RoadEdge& e = net.edge(1);
    const RoadState a = net.project_onto_edge(e.point_at(100), e);
    const RoadState b = net.project_onto_edge(e.point_at(600), e);
    const auto paths = feasible_paths(net, a, b, 3, 5000);
    REQUIRE(paths.size() == 1);
    const auto f = cat.path_features(net, paths[0], obs_at(net, a.point, 0), a.point, obs_at(net, b.point, 60), b.point);
    CHECK(f[0] == doctest::Approx(500.0).epsilon(1e-9));
    CHECK(f[1] == 50.0);
    CHECK(f[2] == doctest::Approx(36.0).epsilon(1e-9));
    CHECK(f[3] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(f[4] == 0.0);
    CHECK(f[5] == 0.0);
    CHECK(f[6] == 0.0);
    CHECK(f[7] == 1.0);

    auto nodes = nodes_at({{0, 0}, {200, 0}, {400, 0}, {600, 0}});
    const RoadNetwork line = RoadNetwork::build(
        nodes, {straight_row(nodes, 1, 1, 2, true, 60), straight_row(nodes, 2, 2, 3, true, 60),
                straight_row(nodes, 3, 3, 4, true, 60)});
    const RoadState s = line.project_onto_edge(line.edge(1).point_at(50), line.edge(1));
    const RoadState t = line.project_onto_edge(line.edge(3).point_at(50), line.edge(3));
    const auto collinear = feasible_paths(line, s, t, 1, 5000).at(0);
    const auto g = cat.path_features(line, collinear, obs_at(line, s.point, 0), s.point, obs_at(line, t.point, 30), t.point);
    CHECK(g[1] == 60.0);
    CHECK(g[4] + g[5] + g[6] == 0.0);
    CHECK_THROWS_AS(cat.path_features(line, collinear, obs_at(line, s.point, 0), s.point, obs_at(line, t.point, 0), t.point),
                    DataError);
}

TEST_CASE("catalog validation") {
    CHECK_THROWS_AS(FeatureCatalog({"distance_error", "no_such"}, {"length"}), DataError);
    CHECK_THROWS_AS(FeatureCatalog({"distance_error", "distance_error"}, {"length"}), DataError);
    CHECK(FeatureCatalog::standard().point_dim() == 4);
    CHECK(FeatureCatalog::standard().path_dim() == 9);
}

TEST_CASE("min-max scaling") {
    const FeatureCatalog cat({"distance_error", "point_bias"}, {"length", "path_bias"});
    FeatureLattice a;
    a.point_dim = 2;
    a.path_dim = 2;
    a.points.push_back({2, {10.0, 1.0, 30.0, 1.0}});
    a.points.push_back({1, {20.0, 1.0}});
    a.paths.push_back({2, 1, {0, 1, 2}, {100.0, 1.0, 100.0, 1.0}});
    const Scaler sc = fit_scaler(std::vector<FeatureLattice>{a}, cat);
    CHECK(sc.scale_point(0, 10.0) == 0.0);
    CHECK(sc.scale_point(0, 30.0) == 1.0);
    CHECK(sc.scale_point(0, 20.0) == doctest::Approx(0.5));
    CHECK(sc.scale_point(0, 99.0) == 1.0);
    CHECK(sc.scale_point(0, -5.0) == 0.0);
    CHECK(sc.scale_path(0, 100.0) == 0.0);  // constant feature
    CHECK(sc.scale_path(0, 250.0) == 0.0);
    CHECK(sc.scale_point(1, 1.0) == 1.0);  // bias passes through
    CHECK_THROWS_AS(fit_scaler(std::vector<FeatureLattice>{}, cat), DataError);
}
