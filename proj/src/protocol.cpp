#include "crfmm/protocol.hpp"

#include "crfmm/error.hpp"

#include <omp.h>

namespace crfmm {

Dataset make_dataset(const ProtocolConfig& cfg) {
    Dataset d{gen_network(cfg.gen), {}, {}, {}, {}};
    for (auto& g : gen_trajectories(d.net, cfg.gen, cfg.route_len_edges, cfg.trajectories)) {
        const auto kept = even_sample_indices(g.trajectory, cfg.interval_s);
        Trajectory t{g.trajectory.car_id, {}};
        for (std::size_t i : kept) t.observations.push_back(g.trajectory.observations[i]);
        d.truths.push_back(g.truth.subsample(kept));
        d.trajectories.push_back(std::move(t));
    }
    d.split = split_train_test(d.trajectories.size(), cfg.train_ratio, cfg.gen.seed);
    d.builds.resize(d.trajectories.size());
    const int threads = cfg.threads > 0 ? cfg.threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(d.trajectories.size()); ++i) {
        const auto k = static_cast<std::size_t>(i);
        d.builds[k] = build_lattice(d.trajectories[k], d.net, cfg.lattice);
    }
    return d;
}

std::vector<MethodSpec> standard_methods(const FilterConfig& filter, const TurnConfig& turns) {
    std::vector<MethodSpec> out;
    for (const char* name : {"base_simple", "base_complex", "CRFs_L2", "CRFs_L1"})
        out.push_back(method_by_name(name, filter, turns));
    return out;
}

MethodSpec method_by_name(const std::string& name, const FilterConfig& filter, const TurnConfig& turns) {
    if (name == "base_simple") return {name, FeatureCatalog({"distance_error"}, {"length"}, filter, turns), Regularizer::L2};
    if (name == "base_complex")
        return {name,
                FeatureCatalog({"distance_error", "log_distance", "bearing_error_filtered"},
                               {"length", "length_ratio", "travel_time_s", "left_turns", "right_turns"}, filter, turns),
                Regularizer::L2};
    if (name == "CRFs_L2") return {name, FeatureCatalog::standard(filter, turns), Regularizer::L2};
    if (name == "CRFs_L1") return {name, FeatureCatalog::standard(filter, turns), Regularizer::L1};
    throw DataError("unknown method '" + name + "'");
}

MethodOutcome run_method(const Dataset& data, const MethodSpec& spec, const ProtocolConfig& cfg) {
    MethodOutcome out;
    out.spec = spec;
    const std::size_t n = data.trajectories.size();
    out.prepared.resize(n);
    const int threads = cfg.threads > 0 ? cfg.threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
        const auto k = static_cast<std::size_t>(i);
        PreparedTrajectory& p = out.prepared[k];
        p.car_id = data.trajectories[k].car_id;
        p.n_points = data.trajectories[k].size();
        p.build = data.builds[k];
        for (const Lattice& piece : p.build.pieces) p.features.push_back(extract_features(piece, data.net, spec.catalog));
    }

    std::vector<FeatureLattice> train_raw;
    for (std::size_t i : data.split.train)
        for (const auto& fl : out.prepared[i].features) train_raw.push_back(fl);
    const Scaler scaler = fit_scaler(train_raw, spec.catalog);
    for (auto& p : out.prepared)
        for (auto& fl : p.features) scaler.apply(fl);

    std::vector<LabeledInstance> labeled;
    for (std::size_t i : data.split.train) {
        const PreparedTrajectory& p = out.prepared[i];
        for (std::size_t k = 0; k < p.build.pieces.size(); ++k)
            labeled.push_back({p.features[k], label_lattice(p.build.pieces[k], data.truths[i]), i});
    }
    TrainConfig tc = cfg.train;
    tc.regularizer = spec.regularizer;
    tc.threads = cfg.threads;
    TrainResult trained = train(labeled, spec.catalog.dim(), tc);

    out.model.catalog = spec.catalog;
    out.model.scaler = scaler;
    out.model.lattice = cfg.lattice;
    out.model.set_weights(trained.weights);
    out.report = std::move(trained.report);

    out.predictions.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.predictions[i] = decode(out.prepared[i], trained.weights);
    for (std::size_t i : data.split.train) out.train_eval.merge(error_rates(out.predictions[i], data.truths[i]));
    for (std::size_t i : data.split.test) out.test_eval.merge(error_rates(out.predictions[i], data.truths[i]));

    out.row.method = spec.name;
    out.row.feature_count = spec.regularizer == Regularizer::L1 ? out.model.nonzero_weights() : spec.catalog.dim();
    out.row.train_point = out.train_eval.point_error_rate();
    out.row.train_path = out.train_eval.path_error_rate();
    out.row.test_point = out.test_eval.point_error_rate();
    out.row.test_path = out.test_eval.path_error_rate();
    return out;
}

EvalReport nearest_baseline(const Dataset& data, std::span<const std::size_t> subset) {
    EvalReport r;
    for (std::size_t i : subset) {
        PreparedTrajectory p;
        p.car_id = data.trajectories[i].car_id;
        p.n_points = data.trajectories[i].size();
        p.build = data.builds[i];
        r.merge(error_rates(decode_nearest(p), data.truths[i]));
    }
    return r;
}

const MethodOutcome& ProtocolResult::method(const std::string& name) const {
    for (const auto& m : methods)
        if (m.spec.name == name) return m;
    throw Error("no method " + name + " in protocol result");
}

ProtocolResult run_protocol(const Dataset& data, std::span<const MethodSpec> methods, const ProtocolConfig& cfg) {
    ProtocolResult res;
    for (const MethodSpec& spec : methods) {
        res.methods.push_back(run_method(data, spec, cfg));
        res.rows.push_back(res.methods.back().row);
    }
    res.nearest_train = nearest_baseline(data, data.split.train);
    res.nearest_test = nearest_baseline(data, data.split.test);
    for (const MethodOutcome& m : res.methods) {
        if (m.spec.regularizer != Regularizer::L1) continue;
        std::vector<CategorizedError> all;
        for (std::size_t i = 0; i < data.trajectories.size(); ++i) {
            auto errs = categorize_errors(m.predictions[i], data.truths[i], data.builds[i], data.net, cfg.taxonomy);
            all.insert(all.end(), errs.begin(), errs.end());
        }
        res.taxonomy = summarize(all);
    }
    return res;
}

nlohmann::json ProtocolResult::to_json() const {
    nlohmann::json j;
    auto& ms = j["methods"] = nlohmann::json::array();
    for (const MethodOutcome& m : methods) {
        ms.push_back({{"method", m.spec.name},
                      {"feature_count", m.row.feature_count},
                      {"train", m.train_eval.to_json()},
                      {"test", m.test_eval.to_json()},
                      {"training", m.report.to_json()}});
    }
    j["nearest_candidate"] = {{"train", nearest_train.to_json()}, {"test", nearest_test.to_json()}};
    if (taxonomy) j["error_taxonomy"] = taxonomy->to_json();
    return j;
}

} // namespace crfmm
