#include "crfmm/lattice.hpp"

#include "crfmm/error.hpp"

#include <algorithm>
#include <json.hpp>

namespace crfmm {

void LatticeConfig::validate() const {
    if (!(radius_m > 0.0) || !(radius_max_m >= radius_m) || max_candidates_k == 0 || paths_per_pair_k == 0 ||
        !(length_cap_factor > 0.0) || !(length_cap_floor_m > 0.0) || !(speed_cap_kmh > 0.0))
        throw DataError("lattice config: values must be positive and radius_max_m >= radius_m");
}

double LatticeConfig::length_cap(double straight_m, double dt_s) const {
    const double by_distance = std::max(length_cap_factor * straight_m, length_cap_floor_m);
    const double by_speed = speed_cap_kmh / 3.6 * dt_s;
    return std::min(by_distance, by_speed);
}

std::size_t PathLayer::path_count() const {
    std::size_t n = 0;
    for (const auto& p : pairs) n += p.size();
    return n;
}

std::vector<RoadState> candidate_states(const RoadNetwork& net, PlanePoint p, const LatticeConfig& cfg) {
    double radius = cfg.radius_m;
    while (true) {
        auto found = net.nearest_road_states(p, radius, cfg.max_candidates_k);
        if (!found.empty() || radius >= cfg.radius_max_m) return found;
        radius = std::min(2.0 * radius, cfg.radius_max_m);
    }
}

LatticeBuild build_lattice(const Trajectory& traj, const RoadNetwork& net, const LatticeConfig& cfg) {
    cfg.validate();
    LatticeBuild build;

    Lattice current;
    current.car_id = traj.car_id;
    // Candidates of the last layer reachable from the start of the piece.
    std::vector<char> reachable;
    for (std::size_t idx = 0; idx < traj.size(); ++idx) {
        const Observation& obs = traj.observations[idx];
        const PlanePoint xy = net.projection().to_plane(obs.pos);
        auto candidates = candidate_states(net, xy, cfg);
        if (candidates.empty()) {
            build.dropped.push_back(idx);
            continue;
        }
        if (!current.point_layers.empty()) {
            const std::vector<RoadState>& prev = current.point_layers.back();
            const double straight = distance(current.obs_xy.back(), xy);
            const auto dt = static_cast<double>(obs.timestamp - current.observations.back().timestamp);
            const double cap = cfg.length_cap(straight, dt);
            PathLayer layer;
            layer.from_count = prev.size();
            layer.to_count = candidates.size();
            layer.pairs.resize(prev.size() * candidates.size());
            std::vector<char> next(candidates.size(), 0);
            for (std::size_t i = 0; i < prev.size(); ++i) {
                for (std::size_t j = 0; j < candidates.size(); ++j) {
                    auto& slot = layer.pairs[i * candidates.size() + j];
                    slot = feasible_paths(net, prev[i], candidates[j], cfg.paths_per_pair_k, cap);
                    if (reachable[i] && !slot.empty()) next[j] = 1;
                }
            }
            if (std::find(next.begin(), next.end(), 1) != next.end()) {
                current.path_layers.push_back(std::move(layer));
                reachable = std::move(next);
            } else {
                build.pieces.push_back(std::move(current));
                current = Lattice{};
                current.car_id = traj.car_id;
                reachable.assign(candidates.size(), 1);
            }
        } else {
            reachable.assign(candidates.size(), 1);
        }
        current.obs_index.push_back(idx);
        current.observations.push_back(obs);
        current.obs_xy.push_back(xy);
        current.point_layers.push_back(std::move(candidates));
    }
    if (!current.point_layers.empty()) build.pieces.push_back(std::move(current));
    return build;
}

bool LatticeLabels::complete() const { return missing_count() == 0; }

std::size_t LatticeLabels::missing_count() const {
    const auto missing = [](const auto& v) { return !v.has_value(); };
    return static_cast<std::size_t>(std::count_if(point.begin(), point.end(), missing) +
                                    std::count_if(path.begin(), path.end(), missing));
}

LatticeLabels label_lattice(const Lattice& lattice, const GroundTruth& truth) {
    LatticeLabels labels;
    for (std::size_t t = 0; t < lattice.size(); ++t) {
        const EdgeId want = truth.point_labels.at(lattice.obs_index[t]);
        const auto& layer = lattice.point_layers[t];
        std::optional<std::size_t> hit;
        for (std::size_t c = 0; c < layer.size(); ++c) {
            if (layer[c].edge_id == want && (!hit || layer[c].dist_m < layer[*hit].dist_m)) hit = c;
        }
        labels.point.push_back(hit);
    }
    for (std::size_t t = 0; t + 1 < lattice.size(); ++t) {
        std::optional<std::size_t> hit;
        const auto i = labels.point[t];
        const auto j = labels.point[t + 1];
        if (i && j) {
            // Joined truth covers dropped observations between the two layers.
            const std::size_t kept[] = {lattice.obs_index[t], lattice.obs_index[t + 1]};
            const auto want = truth.subsample(kept).gap_paths.front();
            const auto& paths = lattice.path_layers[t].paths(*i, *j);
            for (std::size_t p = 0; p < paths.size(); ++p) {
                if (paths[p].edge_ids == want) {
                    hit = p;
                    break;
                }
            }
        }
        labels.path.push_back(hit);
    }
    return labels;
}

std::string lattice_to_json(const Lattice& lattice, int indent) {
    using nlohmann::json;
    json doc;
    doc["format"] = "crfmm-lattice/1";
    doc["car_id"] = lattice.car_id;
    doc["obs_index"] = lattice.obs_index;
    json points = json::array();
    for (const auto& layer : lattice.point_layers) {
        json cands = json::array();
        for (const RoadState& s : layer)
            cands.push_back({{"edge", s.edge_id}, {"offset_m", s.offset_m}, {"dist_m", s.dist_m},
                             {"bearing", s.road_bearing}, {"x", s.point.x}, {"y", s.point.y}});
        points.push_back(std::move(cands));
    }
    doc["point_layers"] = std::move(points);
    json gaps = json::array();
    for (const PathLayer& layer : lattice.path_layers) {
        json entries = json::array();
        for (std::size_t i = 0; i < layer.from_count; ++i) {
            for (std::size_t j = 0; j < layer.to_count; ++j) {
                for (const Path& p : layer.paths(i, j))
                    entries.push_back({{"from", i}, {"to", j}, {"edges", p.edge_ids}, {"length_m", p.length_m}});
            }
        }
        gaps.push_back(std::move(entries));
    }
    doc["path_layers"] = std::move(gaps);
    return doc.dump(indent);
}

} // namespace crfmm
