#include "crfmm/features.hpp"

#include "crfmm/error.hpp"
#include "text_util.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <set>

namespace crfmm {

namespace {

struct PointEntry {
    const char* name;
    PointFeature id;
};
struct PathEntry {
    const char* name;
    PathFeature id;
};

constexpr PointEntry kPointRegistry[] = {
    {"distance_error", PointFeature::DistanceError},
    {"bearing_error_filtered", PointFeature::BearingErrorFiltered},
    {"bearing_error", PointFeature::BearingError},
    {"log_distance", PointFeature::LogDistance},
    {"point_bias", PointFeature::PointBias},
};

constexpr PathEntry kPathRegistry[] = {
    {"length", PathFeature::Length},
    {"avg_speed_limit", PathFeature::AvgSpeedLimit},
    {"travel_time_s", PathFeature::TravelTime},
    {"length_ratio", PathFeature::LengthRatio},
    {"implied_speed_gap", PathFeature::ImpliedSpeedGap},
    {"left_turns", PathFeature::LeftTurns},
    {"right_turns", PathFeature::RightTurns},
    {"u_turns", PathFeature::UTurns},
    {"path_bias", PathFeature::PathBias},
};

constexpr double kMinStraightM = 1.0;

} // namespace

FeatureCatalog::FeatureCatalog(std::vector<std::string> point_names, std::vector<std::string> path_names,
                               FilterConfig filter, TurnConfig turns)
    : point_names_(std::move(point_names)), path_names_(std::move(path_names)), filter_(filter), turns_(turns) {
    if (filter_.v_min_kmh < 0.0) throw DataError("filter: v_min_kmh must be >= 0");
    std::set<std::string> seen;
    for (const auto& name : point_names_) {
        if (!seen.insert(name).second) throw DataError("duplicate feature " + name);
        const auto it = std::find_if(std::begin(kPointRegistry), std::end(kPointRegistry),
                                     [&](const PointEntry& e) { return name == e.name; });
        if (it == std::end(kPointRegistry)) throw DataError("unknown point feature " + name);
        point_.push_back(it->id);
    }
    for (const auto& name : path_names_) {
        if (!seen.insert(name).second) throw DataError("duplicate feature " + name);
        const auto it = std::find_if(std::begin(kPathRegistry), std::end(kPathRegistry),
                                     [&](const PathEntry& e) { return name == e.name; });
        if (it == std::end(kPathRegistry)) throw DataError("unknown path feature " + name);
        path_.push_back(it->id);
    }
}

FeatureCatalog FeatureCatalog::standard(FilterConfig filter, TurnConfig turns) {
    return FeatureCatalog({"distance_error", "bearing_error_filtered", "log_distance", "point_bias"},
                          {"length", "avg_speed_limit", "travel_time_s", "length_ratio", "implied_speed_gap",
                           "left_turns", "right_turns", "u_turns", "path_bias"},
                          filter, turns);
}

const std::vector<std::string>& FeatureCatalog::known_point_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> v;
        for (const auto& e : kPointRegistry) v.emplace_back(e.name);
        return v;
    }();
    return names;
}

const std::vector<std::string>& FeatureCatalog::known_path_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> v;
        for (const auto& e : kPathRegistry) v.emplace_back(e.name);
        return v;
    }();
    return names;
}

std::vector<double> FeatureCatalog::point_features(const Observation& obs, const RoadState& state) const {
    std::vector<double> out;
    out.reserve(point_.size());
    for (PointFeature f : point_) {
        switch (f) {
        case PointFeature::DistanceError:
            out.push_back(state.dist_m);
            break;
        case PointFeature::BearingErrorFiltered:
            out.push_back(filter_.filtered(obs.speed_kmh) ? filter_.val_0
                                                          : bearing_diff(obs.direction, state.road_bearing));
            break;
        case PointFeature::BearingError:
            out.push_back(bearing_diff(obs.direction, state.road_bearing));
            break;
        case PointFeature::LogDistance:
            out.push_back(std::log1p(state.dist_m));
            break;
        case PointFeature::PointBias:
            out.push_back(1.0);
            break;
        }
    }
    return out;
}

std::vector<double> FeatureCatalog::path_features(const RoadNetwork& net, const Path& path,
                                                  const Observation& obs_a, PlanePoint xy_a,
                                                  const Observation& obs_b, PlanePoint xy_b) const {
    const auto dt = static_cast<double>(obs_b.timestamp - obs_a.timestamp);
    if (!(dt > 0.0)) throw DataError("path features: non-increasing timestamps");

    double limit_sum = 0.0;
    double travel_time = 0.0;
    for (std::size_t i = 0; i < path.edge_ids.size(); ++i) {
        const RoadEdge& e = net.edge(path.edge_ids[i]);
        limit_sum += e.speed_limit_kmh;
        travel_time += path.traversed_on(net, i) / (e.speed_limit_kmh / 3.6);
    }
    const double avg_limit = limit_sum / static_cast<double>(path.edge_ids.size());
    const TurnCounts turns = count_turns(net, path, turns_);

    std::vector<double> out;
    out.reserve(path_.size());
    for (PathFeature f : path_) {
        switch (f) {
        case PathFeature::Length:
            out.push_back(path.length_m);
            break;
        case PathFeature::AvgSpeedLimit:
            out.push_back(avg_limit);
            break;
        case PathFeature::TravelTime:
            out.push_back(travel_time);
            break;
        case PathFeature::LengthRatio:
            out.push_back(path.length_m / std::max(kMinStraightM, distance(xy_a, xy_b)));
            break;
        case PathFeature::ImpliedSpeedGap:
            out.push_back(std::fabs(path.length_m / dt - avg_limit / 3.6));
            break;
        case PathFeature::LeftTurns:
            out.push_back(turns.left);
            break;
        case PathFeature::RightTurns:
            out.push_back(turns.right);
            break;
        case PathFeature::UTurns:
            out.push_back(turns.u_turn);
            break;
        case PathFeature::PathBias:
            out.push_back(1.0);
            break;
        }
    }
    return out;
}

FeatureLattice extract_features(const Lattice& lattice, const RoadNetwork& net, const FeatureCatalog& catalog) {
    FeatureLattice fl;
    fl.point_dim = catalog.point_dim();
    fl.path_dim = catalog.path_dim();
    for (std::size_t t = 0; t < lattice.size(); ++t) {
        FeatureLattice::PointLayer layer;
        layer.count = lattice.point_layers[t].size();
        for (const RoadState& s : lattice.point_layers[t]) {
            const auto row = catalog.point_features(lattice.observations[t], s);
            layer.features.insert(layer.features.end(), row.begin(), row.end());
        }
        fl.points.push_back(std::move(layer));
    }
    for (std::size_t t = 0; t < lattice.path_layers.size(); ++t) {
        const PathLayer& src = lattice.path_layers[t];
        FeatureLattice::PathLayer layer;
        layer.from_count = src.from_count;
        layer.to_count = src.to_count;
        layer.pair_offset.push_back(0);
        for (const auto& paths : src.pairs) {
            for (const Path& p : paths) {
                const auto row = catalog.path_features(net, p, lattice.observations[t], lattice.obs_xy[t],
                                                       lattice.observations[t + 1], lattice.obs_xy[t + 1]);
                layer.features.insert(layer.features.end(), row.begin(), row.end());
            }
            layer.pair_offset.push_back(layer.pair_offset.back() + paths.size());
        }
        fl.paths.push_back(std::move(layer));
    }
    return fl;
}

namespace {

double min_max(double x, double lo, double hi) {
    if (!(hi > lo)) return 0.0;
    return std::clamp((x - lo) / (hi - lo), 0.0, 1.0);
}

} // namespace

double Scaler::scale_point(std::size_t k, double x) const {
    return point_exempt[k] ? x : min_max(x, point_min[k], point_max[k]);
}

double Scaler::scale_path(std::size_t k, double x) const {
    return path_exempt[k] ? x : min_max(x, path_min[k], path_max[k]);
}

void Scaler::apply(FeatureLattice& lattice) const {
    if (lattice.point_dim != point_min.size() || lattice.path_dim != path_min.size())
        throw DataError("scaler: dimension mismatch");
    for (auto& layer : lattice.points)
        for (std::size_t i = 0; i < layer.features.size(); ++i)
            layer.features[i] = scale_point(i % lattice.point_dim, layer.features[i]);
    for (auto& layer : lattice.paths)
        for (std::size_t i = 0; i < layer.features.size(); ++i)
            layer.features[i] = scale_path(i % lattice.path_dim, layer.features[i]);
}

Scaler fit_scaler(std::span<const FeatureLattice> train, const FeatureCatalog& catalog) {
    const std::size_t pd = catalog.point_dim();
    const std::size_t qd = catalog.path_dim();
    constexpr double inf = std::numeric_limits<double>::infinity();
    Scaler s;
    s.point_min.assign(pd, inf);
    s.point_max.assign(pd, -inf);
    s.path_min.assign(qd, inf);
    s.path_max.assign(qd, -inf);
    bool any_point = false;
    for (const FeatureLattice& fl : train) {
        for (const auto& layer : fl.points) {
            for (std::size_t i = 0; i < layer.features.size(); ++i) {
                s.point_min[i % pd] = std::min(s.point_min[i % pd], layer.features[i]);
                s.point_max[i % pd] = std::max(s.point_max[i % pd], layer.features[i]);
                any_point = true;
            }
        }
        for (const auto& layer : fl.paths) {
            for (std::size_t i = 0; i < layer.features.size(); ++i) {
                s.path_min[i % qd] = std::min(s.path_min[i % qd], layer.features[i]);
                s.path_max[i % qd] = std::max(s.path_max[i % qd], layer.features[i]);
            }
        }
    }
    if (!any_point) throw DataError("scaler: empty training set");
    // Features never observed (e.g. no path layers at all) scale to 0.
    for (std::size_t k = 0; k < qd; ++k)
        if (s.path_min[k] > s.path_max[k]) s.path_min[k] = s.path_max[k] = 0.0;
    for (std::size_t k = 0; k < pd; ++k) s.point_exempt.push_back(catalog.point_is_bias(k));
    for (std::size_t k = 0; k < qd; ++k) s.path_exempt.push_back(catalog.path_is_bias(k));
    return s;
}

void write_point_matrix(std::ostream& out, const FeatureCatalog& catalog, std::span<const FeatureExportRow> rows) {
    out << "car_id,piece,layer,obs_index,candidate,edge_id";
    for (const auto& n : catalog.point_names()) out << ',' << n;
    out << '\n';
    for (const auto& r : rows) {
        for (std::size_t t = 0; t < r.lattice->size(); ++t) {
            for (std::size_t c = 0; c < r.lattice->point_layers[t].size(); ++c) {
                out << r.car_id << ',' << r.piece << ',' << t << ',' << r.lattice->obs_index[t] << ',' << c << ','
                    << r.lattice->point_layers[t][c].edge_id;
                for (double v : r.features->point_row(t, c)) out << ',' << text::fixed(v, 6);
                out << '\n';
            }
        }
    }
}

void write_path_matrix(std::ostream& out, const FeatureCatalog& catalog, std::span<const FeatureExportRow> rows) {
    out << "car_id,piece,gap,from,to,path,edges";
    for (const auto& n : catalog.path_names()) out << ',' << n;
    out << '\n';
    for (const auto& r : rows) {
        for (std::size_t t = 0; t < r.lattice->path_layers.size(); ++t) {
            const PathLayer& layer = r.lattice->path_layers[t];
            for (std::size_t i = 0; i < layer.from_count; ++i) {
                for (std::size_t j = 0; j < layer.to_count; ++j) {
                    const auto& paths = layer.paths(i, j);
                    for (std::size_t p = 0; p < paths.size(); ++p) {
                        out << r.car_id << ',' << r.piece << ',' << t << ',' << i << ',' << j << ',' << p << ',';
                        for (std::size_t e = 0; e < paths[p].edge_ids.size(); ++e)
                            out << (e ? " " : "") << paths[p].edge_ids[e];
                        for (double v : r.features->path_row(t, i, j, p)) out << ',' << text::fixed(v, 6);
                        out << '\n';
                    }
                }
            }
        }
    }
}

} // namespace crfmm
