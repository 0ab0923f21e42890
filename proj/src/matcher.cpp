#include "crfmm/matcher.hpp"

#include "crfmm/crf.hpp"
#include "crfmm/error.hpp"
#include "text_util.hpp"

#include <exception>
#include <istream>
#include <omp.h>
#include <ostream>

namespace crfmm {

PreparedTrajectory prepare_trajectory(const Trajectory& traj, const RoadNetwork& net, const FeatureCatalog& catalog,
                                      const LatticeConfig& cfg) {
    PreparedTrajectory out;
    out.car_id = traj.car_id;
    out.n_points = traj.size();
    out.build = build_lattice(traj, net, cfg);
    for (const Lattice& piece : out.build.pieces) out.features.push_back(extract_features(piece, net, catalog));
    return out;
}

std::vector<PreparedTrajectory> prepare_all_serial(std::span<const Trajectory> trajs, const RoadNetwork& net,
                                                   const FeatureCatalog& catalog, const LatticeConfig& cfg) {
    std::vector<PreparedTrajectory> out;
    out.reserve(trajs.size());
    for (const Trajectory& t : trajs) out.push_back(prepare_trajectory(t, net, catalog, cfg));
    return out;
}

namespace {

template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn&& body) {
    const int nthreads = threads > 0 ? threads : omp_get_max_threads();
    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 1) num_threads(nthreads)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
        try {
            body(static_cast<std::size_t>(i));
        } catch (...) {
#pragma omp critical(crfmm_matcher_failure)
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
}

void record_gap(MatchResult& r, std::size_t a, std::size_t b, const Path& path) {
    if (b == a + 1) r.gaps[a] = path.edge_ids;
}

} // namespace

std::vector<PreparedTrajectory> prepare_all_parallel(std::span<const Trajectory> trajs, const RoadNetwork& net,
                                                     const FeatureCatalog& catalog, const LatticeConfig& cfg,
                                                     int threads) {
    std::vector<PreparedTrajectory> out(trajs.size());
    parallel_for(trajs.size(), threads, [&](std::size_t i) { out[i] = prepare_trajectory(trajs[i], net, catalog, cfg); });
    return out;
}

MatchResult decode(const PreparedTrajectory& prepared, std::span<const double> weights) {
    MatchResult r;
    r.car_id = prepared.car_id;
    r.points.assign(prepared.n_points, std::nullopt);
    r.gaps.assign(prepared.n_points > 0 ? prepared.n_points - 1 : 0, std::nullopt);
    r.dropped = prepared.build.dropped;
    for (std::size_t k = 0; k < prepared.build.pieces.size(); ++k) {
        const Lattice& piece = prepared.build.pieces[k];
        const ViterbiResult best = viterbi(prepared.features[k], weights);
        for (std::size_t t = 0; t < piece.size(); ++t) {
            const std::size_t c = best.assignment.candidates[t];
            r.points[piece.obs_index[t]] = piece.point_layers[t][c].edge_id;
            if (t + 1 < piece.size()) {
                const auto& path = piece.path_layers[t].paths(c, best.assignment.candidates[t + 1])[best.assignment.paths[t]];
                record_gap(r, piece.obs_index[t], piece.obs_index[t + 1], path);
            }
        }
        r.pieces.push_back({piece.obs_index.front(), piece.obs_index.back(), best.score});
    }
    return r;
}

MatchResult decode_nearest(const PreparedTrajectory& prepared) {
    MatchResult r;
    r.car_id = prepared.car_id;
    r.points.assign(prepared.n_points, std::nullopt);
    r.gaps.assign(prepared.n_points > 0 ? prepared.n_points - 1 : 0, std::nullopt);
    r.dropped = prepared.build.dropped;
    for (const Lattice& piece : prepared.build.pieces) {
        for (std::size_t t = 0; t < piece.size(); ++t) {
            r.points[piece.obs_index[t]] = piece.point_layers[t][0].edge_id;
            if (t + 1 < piece.size()) {
                const auto& paths = piece.path_layers[t].paths(0, 0);
                if (!paths.empty()) record_gap(r, piece.obs_index[t], piece.obs_index[t + 1], paths.front());
            }
        }
        r.pieces.push_back({piece.obs_index.front(), piece.obs_index.back(), 0.0});
    }
    return r;
}

MatchResult match(const Trajectory& traj, const RoadNetwork& net, const CrfModel& model) {
    PreparedTrajectory prepared = prepare_trajectory(traj, net, model.catalog, model.lattice);
    for (FeatureLattice& fl : prepared.features) model.scaler.apply(fl);
    return decode(prepared, model.weights());
}

std::vector<MatchResult> match_all_serial(std::span<const Trajectory> trajs, const RoadNetwork& net,
                                          const CrfModel& model) {
    std::vector<MatchResult> out;
    out.reserve(trajs.size());
    for (const Trajectory& t : trajs) out.push_back(match(t, net, model));
    return out;
}

std::vector<MatchResult> match_all_parallel(std::span<const Trajectory> trajs, const RoadNetwork& net,
                                            const CrfModel& model, int threads) {
    std::vector<MatchResult> out(trajs.size());
    parallel_for(trajs.size(), threads, [&](std::size_t i) { out[i] = match(trajs[i], net, model); });
    return out;
}

void write_match_results(std::ostream& out, std::span<const MatchResult> results) {
    for (const MatchResult& r : results) {
        out << "traj " << r.car_id << ' ' << r.points.size() << '\n';
        for (std::size_t i = 0; i < r.points.size(); ++i) {
            out << "point " << i << ' ';
            if (r.points[i])
                out << *r.points[i];
            else
                out << '?';
            out << '\n';
        }
        for (std::size_t i = 0; i < r.gaps.size(); ++i) {
            out << "gap " << i;
            if (r.gaps[i]) {
                for (EdgeId e : *r.gaps[i]) out << ' ' << e;
            } else {
                out << " ?";
            }
            out << '\n';
        }
        for (const PieceScore& p : r.pieces)
            out << "piece " << p.first_obs << ' ' << p.last_obs << ' ' << text::fixed(p.log_score, 9) << '\n';
    }
}

std::vector<MatchResult> parse_match_results(std::istream& in) {
    std::vector<MatchResult> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto body = text::trim(line);
        if (body.empty() || body.front() == '#') continue;
        const auto toks = text::tokens(body);
        if (toks[0] == "traj") {
            const auto car = toks.size() == 3 ? text::parse_number<CarId>(toks[1]) : std::nullopt;
            const auto n = toks.size() == 3 ? text::parse_number<std::size_t>(toks[2]) : std::nullopt;
            if (!car || !n) throw data_error_at(lineno, "malformed traj line");
            MatchResult r;
            r.car_id = *car;
            r.points.assign(*n, std::nullopt);
            r.gaps.assign(*n > 0 ? *n - 1 : 0, std::nullopt);
            out.push_back(std::move(r));
            continue;
        }
        if (out.empty()) throw data_error_at(lineno, "entry before any traj line");
        MatchResult& r = out.back();
        const auto idx = toks.size() >= 2 ? text::parse_number<std::size_t>(toks[1]) : std::nullopt;
        if (toks[0] == "point") {
            if (toks.size() != 3 || !idx || *idx >= r.points.size()) throw data_error_at(lineno, "malformed point line");
            if (toks[2] == "?") {
                r.dropped.push_back(*idx);
            } else {
                const auto e = text::parse_number<EdgeId>(toks[2]);
                if (!e) throw data_error_at(lineno, "malformed point edge");
                r.points[*idx] = *e;
            }
        } else if (toks[0] == "gap") {
            if (toks.size() < 3 || !idx || *idx >= r.gaps.size()) throw data_error_at(lineno, "malformed gap line");
            if (toks.size() == 3 && toks[2] == "?") continue;
            std::vector<EdgeId> path;
            for (std::size_t k = 2; k < toks.size(); ++k) {
                const auto e = text::parse_number<EdgeId>(toks[k]);
                if (!e) throw data_error_at(lineno, "malformed gap edge");
                path.push_back(*e);
            }
            r.gaps[*idx] = std::move(path);
        } else if (toks[0] == "piece") {
            const auto last = toks.size() == 4 ? text::parse_number<std::size_t>(toks[2]) : std::nullopt;
            const auto score = toks.size() == 4 ? text::parse_number<double>(toks[3]) : std::nullopt;
            if (!idx || !last || !score) throw data_error_at(lineno, "malformed piece line");
            r.pieces.push_back({*idx, *last, *score});
        } else {
            throw data_error_at(lineno, "unknown entry '" + std::string(toks[0]) + "'");
        }
    }
    return out;
}

GroundTruth as_ground_truth(const MatchResult& r) {
    GroundTruth g;
    for (std::size_t i = 0; i < r.points.size(); ++i) {
        if (!r.points[i]) throw DataError("car " + std::to_string(r.car_id) + ": unlabelled point " + std::to_string(i));
        g.point_labels.push_back(*r.points[i]);
    }
    for (std::size_t i = 0; i < r.gaps.size(); ++i) {
        if (!r.gaps[i]) throw DataError("car " + std::to_string(r.car_id) + ": unlabelled gap " + std::to_string(i));
        g.gap_paths.push_back(*r.gaps[i]);
    }
    g.validate(r.points.size());
    return g;
}

MatchResult from_ground_truth(CarId car, const GroundTruth& truth) {
    MatchResult r;
    r.car_id = car;
    for (EdgeId e : truth.point_labels) r.points.push_back(e);
    for (const auto& g : truth.gap_paths) r.gaps.push_back(g);
    return r;
}

} // namespace crfmm
