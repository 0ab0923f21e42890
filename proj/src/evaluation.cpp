#include "crfmm/evaluation.hpp"

#include "crfmm/error.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

namespace crfmm {

double EvalReport::point_error_rate() const {
    return points == 0 ? 0.0 : static_cast<double>(point_errors) / static_cast<double>(points);
}

double EvalReport::path_error_rate() const {
    return paths == 0 ? 0.0 : static_cast<double>(path_errors) / static_cast<double>(paths);
}

void EvalReport::merge(const EvalReport& o) {
    points += o.points;
    paths += o.paths;
    point_errors += o.point_errors;
    path_errors += o.path_errors;
    unmatched_points += o.unmatched_points;
    unpredicted_gaps += o.unpredicted_gaps;
}

nlohmann::json EvalReport::to_json() const {
    return {{"points", points},
            {"paths", paths},
            {"point_errors", point_errors},
            {"path_errors", path_errors},
            {"unmatched_points", unmatched_points},
            {"unpredicted_gaps", unpredicted_gaps},
            {"point_error_rate", point_error_rate()},
            {"path_error_rate", path_error_rate()}};
}

EvalReport error_rates(const MatchResult& prediction, const GroundTruth& truth) {
    if (prediction.points.size() != truth.point_labels.size() || prediction.gaps.size() != truth.gap_paths.size())
        throw DataError("car " + std::to_string(prediction.car_id) + ": prediction and truth are not aligned");
    EvalReport r;
    r.points = truth.point_labels.size();
    r.paths = truth.gap_paths.size();
    for (std::size_t i = 0; i < r.points; ++i) {
        if (!prediction.points[i]) ++r.unmatched_points;
        if (prediction.points[i] != truth.point_labels[i]) ++r.point_errors;
    }
    for (std::size_t i = 0; i < r.paths; ++i) {
        if (!prediction.gaps[i]) ++r.unpredicted_gaps;
        if (!prediction.gaps[i] || *prediction.gaps[i] != truth.gap_paths[i]) ++r.path_errors;
    }
    return r;
}

EvalReport error_rates(std::span<const MatchResult> predictions, std::span<const GroundTruth> truths) {
    if (predictions.size() != truths.size()) throw DataError("prediction and truth trajectory counts differ");
    EvalReport total;
    for (std::size_t i = 0; i < predictions.size(); ++i) total.merge(error_rates(predictions[i], truths[i]));
    return total;
}

std::string to_string(ErrorCategory c) {
    switch (c) {
    case ErrorCategory::MissingLabel: return "missing_label";
    case ErrorCategory::PositionOutlier: return "position_outlier";
    case ErrorCategory::StartEndPoint: return "start_end_point";
    case ErrorCategory::UTurn: return "u_turn";
    case ErrorCategory::ParallelRoads: return "parallel_roads";
    case ErrorCategory::Other: return "other";
    }
    return "other";
}

std::size_t ErrorTaxonomy::total() const {
    std::size_t n = 0;
    for (auto c : counts) n += c;
    return n;
}

double ErrorTaxonomy::fraction(ErrorCategory c) const {
    const std::size_t n = total();
    return n == 0 ? 0.0 : static_cast<double>(counts[static_cast<std::size_t>(c)]) / static_cast<double>(n);
}

void ErrorTaxonomy::merge(const ErrorTaxonomy& o) {
    for (std::size_t k = 0; k < kErrorCategoryCount; ++k) counts[k] += o.counts[k];
}

nlohmann::json ErrorTaxonomy::to_json() const {
    nlohmann::json j;
    j["total"] = total();
    for (std::size_t k = 0; k < kErrorCategoryCount; ++k) {
        const auto c = static_cast<ErrorCategory>(k);
        j[to_string(c)] = {{"count", counts[k]}, {"fraction", fraction(c)}};
    }
    return j;
}

namespace {

struct Position {
    std::size_t piece;
    std::size_t layer;
};

bool has_reversal(const RoadNetwork& net, const std::vector<EdgeId>& path, std::set<std::pair<EdgeId, EdgeId>>* out) {
    bool any = false;
    for (std::size_t k = 0; k + 1 < path.size(); ++k) {
        if (!net.has_edge(path[k])) continue;
        const auto twin = net.edge(path[k]).twin;
        if (twin && *twin == path[k + 1]) {
            any = true;
            if (out) out->insert({path[k], path[k + 1]});
        }
    }
    return any;
}

// Reversal in the prediction that the truth does not make.
bool spurious_reversal(const RoadNetwork& net, const std::vector<EdgeId>& predicted, const std::vector<EdgeId>& truth) {
    std::set<std::pair<EdgeId, EdgeId>> pred_turns, true_turns;
    if (!has_reversal(net, predicted, &pred_turns)) return false;
    has_reversal(net, truth, &true_turns);
    return std::any_of(pred_turns.begin(), pred_turns.end(), [&](const auto& t) { return !true_turns.contains(t); });
}

bool parallel_to(const RoadNetwork& net, PlanePoint p, double bearing_deg, EdgeId other, const TaxonomyConfig& cfg) {
    if (!net.has_edge(other)) return false;
    const RoadState s = net.project_onto_edge(p, net.edge(other));
    return s.dist_m <= cfg.parallel_distance_m && bearing_diff(bearing_deg, s.road_bearing) < cfg.parallel_bearing_deg;
}

} // namespace

std::vector<CategorizedError> categorize_errors(const MatchResult& prediction, const GroundTruth& truth,
                                                const LatticeBuild& build, const RoadNetwork& net,
                                                const TaxonomyConfig& cfg) {
    if (prediction.points.size() != truth.point_labels.size() || prediction.gaps.size() != truth.gap_paths.size())
        throw DataError("car " + std::to_string(prediction.car_id) + ": prediction and truth are not aligned");
    std::map<std::size_t, Position> where;
    for (std::size_t k = 0; k < build.pieces.size(); ++k)
        for (std::size_t t = 0; t < build.pieces[k].size(); ++t) where[build.pieces[k].obs_index[t]] = {k, t};

    auto candidate_on = [&](const Position& pos, EdgeId e) -> const RoadState* {
        for (const RoadState& s : build.pieces[pos.piece].point_layers[pos.layer])
            if (s.edge_id == e) return &s;
        return nullptr;
    };
    auto outlier = [&](std::size_t obs) {
        const auto it = where.find(obs);
        if (it == where.end()) return true;  // dropped
        const Lattice& piece = build.pieces[it->second.piece];
        const EdgeId want = truth.point_labels[obs];
        if (!net.has_edge(want)) return true;
        return net.project_onto_edge(piece.obs_xy[it->second.layer], net.edge(want)).dist_m > cfg.outlier_radius_m;
    };
    auto at_piece_end = [&](const Position& pos) {
        return pos.layer == 0 || pos.layer + 1 == build.pieces[pos.piece].size();
    };

    std::vector<CategorizedError> out;
    for (std::size_t i = 0; i < truth.point_labels.size(); ++i) {
        if (prediction.points[i] == truth.point_labels[i]) continue;
        CategorizedError err{false, i, ErrorCategory::Other};
        const auto it = where.find(i);
        if (it != where.end() && !candidate_on(it->second, truth.point_labels[i])) {
            err.category = ErrorCategory::MissingLabel;
        } else if (outlier(i)) {
            err.category = ErrorCategory::PositionOutlier;
        } else if (at_piece_end(it->second)) {
            err.category = ErrorCategory::StartEndPoint;
        } else if ((i > 0 && prediction.gaps[i - 1] && spurious_reversal(net, *prediction.gaps[i - 1], truth.gap_paths[i - 1])) ||
                   (i < prediction.gaps.size() && prediction.gaps[i] &&
                    spurious_reversal(net, *prediction.gaps[i], truth.gap_paths[i]))) {
            err.category = ErrorCategory::UTurn;
        } else if (prediction.points[i]) {
            const RoadState* chosen = candidate_on(it->second, *prediction.points[i]);
            if (chosen && parallel_to(net, chosen->point, chosen->road_bearing, truth.point_labels[i], cfg))
                err.category = ErrorCategory::ParallelRoads;
        }
        out.push_back(err);
    }

    for (std::size_t g = 0; g < truth.gap_paths.size(); ++g) {
        const auto& want = truth.gap_paths[g];
        if (prediction.gaps[g] && *prediction.gaps[g] == want) continue;
        CategorizedError err{true, g, ErrorCategory::Other};
        const auto a = where.find(g);
        const auto b = where.find(g + 1);
        const bool both = a != where.end() && b != where.end();
        const bool same_piece = both && a->second.piece == b->second.piece;
        bool missing = false;
        if (both && !same_piece) {
            missing = true;  // split gap: no path set spans it
        } else if (same_piece) {
            const Lattice& piece = build.pieces[a->second.piece];
            const RoadState* from = candidate_on(a->second, truth.point_labels[g]);
            const RoadState* to = candidate_on(b->second, truth.point_labels[g + 1]);
            if (!from || !to) {
                missing = true;
            } else {
                const auto& layer = piece.path_layers[a->second.layer];
                const auto& paths = layer.paths(static_cast<std::size_t>(from - piece.point_layers[a->second.layer].data()),
                                                static_cast<std::size_t>(to - piece.point_layers[b->second.layer].data()));
                missing = std::none_of(paths.begin(), paths.end(), [&](const Path& p) { return p.edge_ids == want; });
            }
        }
        if (missing) {
            err.category = ErrorCategory::MissingLabel;
        } else if (outlier(g) || outlier(g + 1)) {
            err.category = ErrorCategory::PositionOutlier;
        } else if (a->second.layer == 0 || b->second.layer + 1 == build.pieces[b->second.piece].size()) {
            err.category = ErrorCategory::StartEndPoint;
        } else if (prediction.gaps[g] && spurious_reversal(net, *prediction.gaps[g], want)) {
            err.category = ErrorCategory::UTurn;
        } else if (prediction.gaps[g]) {
            std::set<EdgeId> truth_set(want.begin(), want.end());
            bool all_parallel = true;
            bool any_extra = false;
            for (EdgeId e : *prediction.gaps[g]) {
                if (truth_set.contains(e) || !net.has_edge(e)) continue;
                any_extra = true;
                const RoadEdge& edge = net.edge(e);
                const double mid = 0.5 * edge.length_m;
                const bool par = std::any_of(want.begin(), want.end(), [&](EdgeId t) {
                    return parallel_to(net, edge.point_at(mid), edge.bearing_at(mid), t, cfg);
                });
                if (!par) {
                    all_parallel = false;
                    break;
                }
            }
            if (any_extra && all_parallel) err.category = ErrorCategory::ParallelRoads;
        }
        out.push_back(err);
    }
    return out;
}

ErrorTaxonomy summarize(std::span<const CategorizedError> errors) {
    ErrorTaxonomy t;
    for (const auto& e : errors) ++t.counts[static_cast<std::size_t>(e.category)];
    return t;
}

ReportFormat parse_report_format(const std::string& s) {
    if (s == "csv") return ReportFormat::Csv;
    if (s == "json") return ReportFormat::Json;
    throw DataError("unknown report format '" + s + "' (expected csv or json)");
}

std::string emit_report(std::span<const MethodRow> rows, ReportFormat format) {
    if (rows.empty()) throw DataError("report: no rows");
    if (format == ReportFormat::Json) {
        nlohmann::json doc = nlohmann::json::array();
        for (const MethodRow& r : rows)
            doc.push_back({{"method", r.method},
                           {"feature_count", r.feature_count},
                           {"train_point", r.train_point},
                           {"train_path", r.train_path},
                           {"test_point", r.test_point},
                           {"test_path", r.test_path}});
        return doc.dump(2) + "\n";
    }
    std::ostringstream out;
    out << "method,feature_count,train_point,train_path,test_point,test_path\n";
    char buf[160];
    for (const MethodRow& r : rows) {
        std::snprintf(buf, sizeof buf, ",%zu,%.4f,%.4f,%.4f,%.4f\n", r.feature_count, r.train_point, r.train_path,
                      r.test_point, r.test_path);
        out << r.method << buf;
    }
    return out.str();
}

std::vector<MethodRow> parse_report_json(const std::string& doc) {
    std::vector<MethodRow> rows;
    try {
        for (const auto& j : nlohmann::json::parse(doc)) {
            rows.push_back({j.at("method").get<std::string>(), j.at("feature_count").get<std::size_t>(),
                            j.at("train_point").get<double>(), j.at("train_path").get<double>(),
                            j.at("test_point").get<double>(), j.at("test_path").get<double>()});
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("report: ") + e.what());
    }
    return rows;
}

} // namespace crfmm
