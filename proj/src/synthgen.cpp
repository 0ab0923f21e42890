#include "crfmm/synthgen.hpp"

#include "crfmm/error.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

namespace crfmm {

void GenConfig::validate() const {
    if (rows < 2 || cols < 2) throw DataError("gen config: rows and cols must be >= 2");
    if (!(spacing_m > 0.0) || jitter_m < 0.0 || noise_sigma_m < 0.0 || heading_noise_deg < 0.0 ||
        !(native_interval_s > 0.0) || !(low_speed_max_kmh > 0.0))
        throw DataError("gen config: magnitudes must be non-negative");
    if (oneway_fraction < 0.0 || oneway_fraction > 1.0 || low_speed_fraction < 0.0 || low_speed_fraction > 1.0 ||
        turn_probability < 0.0 || turn_probability > 1.0)
        throw DataError("gen config: fractions must be in [0, 1]");
    if (speed_choices_kmh.empty()) throw DataError("gen config: no speed choices");
    for (double s : speed_choices_kmh)
        if (!(s > 0.0) || s > 200.0) throw DataError("gen config: speed choices must be in (0, 200]");
    if (jitter_m * 2.0 >= spacing_m) throw DataError("gen config: jitter must be below half the spacing");
}

RoadNetwork gen_network(const GenConfig& cfg) {
    cfg.validate();
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> jitter(-cfg.jitter_m, cfg.jitter_m);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> pick_speed(0, cfg.speed_choices_kmh.size() - 1);

    // Grid centred on the origin, so the node centroid is close to it.
    const Projection proj{cfg.origin, kEarthRadiusM};
    const double x0 = -0.5 * cfg.spacing_m * static_cast<double>(cfg.cols - 1);
    const double y0 = -0.5 * cfg.spacing_m * static_cast<double>(cfg.rows - 1);
    std::vector<RoadNode> nodes;
    for (std::size_t r = 0; r < cfg.rows; ++r) {
        for (std::size_t c = 0; c < cfg.cols; ++c) {
            const PlanePoint p{x0 + cfg.spacing_m * static_cast<double>(c) + jitter(rng),
                               y0 + cfg.spacing_m * static_cast<double>(r) + jitter(rng)};
            GeoPoint g = proj.from_plane(p);
            // Round to the file precision so a written network reloads identically.
            g.lon = std::round(g.lon * 1e7) / 1e7;
            g.lat = std::round(g.lat * 1e7) / 1e7;
            nodes.push_back({static_cast<NodeId>(r * cfg.cols + c + 1), g});
        }
    }

    std::vector<EdgeRow> rows;
    EdgeId next_id = 1;
    auto connect = [&](std::size_t a, std::size_t b) {
        EdgeRow row;
        row.id = next_id++;
        row.speed_limit_kmh = cfg.speed_choices_kmh[pick_speed(rng)];
        row.oneway = unit(rng) < cfg.oneway_fraction;
        if (row.oneway && unit(rng) < 0.5) std::swap(a, b);
        row.from_node = nodes[a].id;
        row.to_node = nodes[b].id;
        row.geometry = {nodes[a].pos, nodes[b].pos};
        rows.push_back(std::move(row));
    };
    for (std::size_t r = 0; r < cfg.rows; ++r) {
        for (std::size_t c = 0; c < cfg.cols; ++c) {
            const std::size_t i = r * cfg.cols + c;
            if (c + 1 < cfg.cols) connect(i, i + 1);
            if (r + 1 < cfg.rows) connect(i, i + cfg.cols);
        }
    }
    return RoadNetwork::build(std::move(nodes), std::move(rows));
}

namespace {

struct Leg {
    std::size_t edge;      // position in net.edges()
    double start_offset;   // where the vehicle enters the edge
    double enter_time;
    double exit_time;
    double speed_ms;
};

int wrap_heading(double deg) {
    long h = std::lround(deg);
    h %= 360;
    if (h < 0) h += 360;
    return static_cast<int>(h);
}

} // namespace

GeneratedTrajectory gen_trajectory(const RoadNetwork& net, const GenConfig& cfg, std::size_t route_len_edges,
                                   CarId car_id, std::uint64_t seed) {
    cfg.validate();
    if (route_len_edges == 0) throw DataError("route length must be >= 1 edge");
    if (net.edges().empty()) throw DataError("network has no edges");
    std::seed_seq seq{seed, static_cast<std::uint64_t>(car_id)};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> noise(0.0, 1.0);

    // Walk.
    std::vector<std::size_t> route;
    route.push_back(std::uniform_int_distribution<std::size_t>(0, net.edges().size() - 1)(rng));
    std::set<NodeId> visited{net.edges()[route[0]].from_node, net.edges()[route[0]].to_node};
    while (route.size() < route_len_edges) {
        const RoadEdge& cur = net.edges()[route.back()];
        std::vector<std::size_t> options, fresh;
        for (std::size_t ep : net.out_edges(net.node_position(cur.to_node))) {
            if (cur.twin && net.edges()[ep].id == *cur.twin) continue;
            options.push_back(ep);
            if (!visited.contains(net.edges()[ep].to_node)) fresh.push_back(ep);
        }
        if (options.empty()) break;
        // Drivers rarely circle a block; revisit a junction only when boxed in.
        if (!fresh.empty()) options = std::move(fresh);
        const auto turn_of = [&](std::size_t ep) {
            return std::fabs(signed_heading_change(cur.end_bearing(), net.edges()[ep].start_bearing()));
        };
        const auto straight = std::min_element(options.begin(), options.end(),
                                               [&](std::size_t a, std::size_t b) { return turn_of(a) < turn_of(b); });
        const bool has_straight = turn_of(*straight) < 30.0;
        if (has_straight && (options.size() == 1 || unit(rng) >= cfg.turn_probability)) {
            route.push_back(*straight);
        } else {
            std::vector<std::size_t> turns;
            for (std::size_t ep : options)
                if (!has_straight || ep != *straight) turns.push_back(ep);
            route.push_back(turns[std::uniform_int_distribution<std::size_t>(0, turns.size() - 1)(rng)]);
        }
        visited.insert(net.edges()[route.back()].to_node);
    }

    // Timeline.
    std::vector<Leg> legs;
    double clock = 0.0;
    for (std::size_t k = 0; k < route.size(); ++k) {
        const RoadEdge& e = net.edges()[route[k]];
        const double start = k == 0 ? unit(rng) * 0.5 * e.length_m : 0.0;
        const double speed = (0.5 + 0.5 * unit(rng)) * e.speed_limit_kmh / 3.6;
        const double duration = (e.length_m - start) / speed;
        legs.push_back({route[k], start, clock, clock + duration, speed});
        clock += duration;
    }

    GeneratedTrajectory out;
    out.route_edges = route.size();
    out.trajectory.car_id = car_id;
    const Projection& proj = net.projection();
    std::vector<std::size_t> leg_of_fix;
    std::size_t leg = 0;
    for (std::size_t k = 0;; ++k) {
        const double tau = static_cast<double>(k) * cfg.native_interval_s;
        if (tau > clock) break;
        while (leg + 1 < legs.size() && tau >= legs[leg].exit_time) ++leg;
        const Leg& l = legs[leg];
        const RoadEdge& e = net.edges()[l.edge];
        const double offset = std::min(e.length_m, l.start_offset + l.speed_ms * (tau - l.enter_time));
        const PlanePoint on_road = e.point_at(offset);
        const PlanePoint noisy{on_road.x + cfg.noise_sigma_m * noise(rng), on_road.y + cfg.noise_sigma_m * noise(rng)};

        Observation obs;
        obs.car_id = car_id;
        obs.pos = proj.from_plane(noisy);
        obs.timestamp = cfg.start_time + std::llround(tau);
        obs.occupied = true;
        const double heading_noise = cfg.heading_noise_deg * noise(rng);
        if (unit(rng) < cfg.low_speed_fraction) {
            obs.speed_kmh = std::floor(unit(rng) * 0.9 * cfg.low_speed_max_kmh * 10.0) / 10.0;
            obs.direction = std::uniform_int_distribution<int>(0, 359)(rng);
        } else {
            obs.speed_kmh = std::round(l.speed_ms * 3.6 * 10.0) / 10.0;
            obs.direction = wrap_heading(e.bearing_at(offset) + heading_noise);
        }
        out.trajectory.observations.push_back(obs);
        out.truth.point_labels.push_back(e.id);
        leg_of_fix.push_back(leg);
    }
    for (std::size_t k = 0; k + 1 < leg_of_fix.size(); ++k) {
        std::vector<EdgeId> gap;
        for (std::size_t j = leg_of_fix[k]; j <= leg_of_fix[k + 1]; ++j) gap.push_back(net.edges()[legs[j].edge].id);
        out.truth.gap_paths.push_back(std::move(gap));
    }
    return out;
}

std::vector<GeneratedTrajectory> gen_trajectories(const RoadNetwork& net, const GenConfig& cfg,
                                                  std::size_t route_len_edges, std::size_t count,
                                                  CarId base_car_id) {
    std::vector<GeneratedTrajectory> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i)
        out.push_back(gen_trajectory(net, cfg, route_len_edges, base_car_id + static_cast<CarId>(i), cfg.seed));
    return out;
}

} // namespace crfmm
