#include "crfmm/cli.hpp"

#include "crfmm/error.hpp"

#include <CLI11.hpp>
#include <omp.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

namespace crfmm {

namespace {

using nlohmann::json;

struct UsageError : Error {
    using Error::Error;
};

/// Reads keys of one config section and rejects the ones nobody asked for.
class Section {
public:
    Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
        if (!j_.is_object()) throw DataError("config: section '" + name_ + "' must be an object");
    }
    template <class T>
    Section& get(const char* key, T& out) {
        seen_.insert(key);
        if (j_.contains(key)) {
            try {
                out = j_.at(key).get<T>();
            } catch (const json::exception&) {
                throw DataError("config: bad value for " + name_ + "." + key);
            }
        }
        return *this;
    }
    const json* child(const char* key) {
        seen_.insert(key);
        return j_.contains(key) ? &j_.at(key) : nullptr;
    }
    void finish() const {
        for (const auto& [key, value] : j_.items())
            if (!seen_.contains(key)) throw DataError("config: unknown key '" + name_ + "." + key + "'");
    }

private:
    const json& j_;
    std::string name_;
    std::set<std::string> seen_;
};

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot write " + path);
    return f;
}

/// Writes to `path`, or to `fallback` when the path is empty.
template <class F>
void emit(const std::string& path, std::ostream& fallback, F&& write) {
    if (path.empty()) {
        write(fallback);
        return;
    }
    auto f = open_out(path);
    write(f);
    if (!f) throw DataError("write failed: " + path);
}

void require(const std::string& value, const char* flag) {
    if (value.empty()) throw UsageError(std::string("missing required ") + flag);
}

RoadNetwork load_net(const RunConfig& cfg) {
    require(cfg.files.net_nodes, "--net-nodes");
    require(cfg.files.net_edges, "--net-edges");
    return load_network(cfg.files.net_nodes, cfg.files.net_edges);
}

std::vector<Trajectory> load_obs(const RunConfig& cfg, std::ostream& err) {
    require(cfg.files.obs, "--obs");
    ParsedObservations parsed = parse_observations(std::filesystem::path(cfg.files.obs));
    const CleaningReport& r = parsed.report;
    if (r.rows_kept != r.rows_read) {
        err << "cleaning: kept " << r.rows_kept << " of " << r.rows_read << " rows";
        for (const auto& [reason, count] : r.dropped) err << "; " << reason << " " << count;
        err << '\n';
    }
    return std::move(parsed.trajectories);
}

std::string eval_csv(const EvalReport& r) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%zu,%zu,%.4f,%zu,%zu,%.4f,%zu,%zu\n", r.points, r.point_errors,
                  r.point_error_rate(), r.paths, r.path_errors, r.path_error_rate(), r.unmatched_points,
                  r.unpredicted_gaps);
    return std::string("points,point_errors,point_error_rate,paths,path_errors,path_error_rate,"
                       "unmatched_points,unpredicted_gaps\n") +
           buf;
}

// Commands. Each takes the effective config and returns an exit code.

int cmd_gen_network(const RunConfig& cfg, std::ostream& out) {
    require(cfg.files.net_nodes, "--out-nodes");
    require(cfg.files.net_edges, "--out-edges");
    const RoadNetwork net = gen_network(cfg.protocol.gen);
    emit(cfg.files.net_nodes, out, [&](std::ostream& o) { write_nodes(o, net.nodes()); });
    emit(cfg.files.net_edges, out, [&](std::ostream& o) { write_edges(o, net.rows()); });
    out << "network: " << net.nodes().size() << " nodes, " << net.edges().size() << " directed edges\n";
    return kExitOk;
}

int cmd_gen_traj(const RunConfig& cfg, std::ostream& out) {
    require(cfg.files.obs, "--out-obs");
    require(cfg.files.truth, "--out-truth");
    const RoadNetwork net = load_net(cfg);
    const ProtocolConfig& p = cfg.protocol;
    std::vector<Trajectory> trajs;
    std::vector<GroundTruth> truths;
    for (GeneratedTrajectory& g : gen_trajectories(net, p.gen, p.route_len_edges, p.trajectories)) {
        if (p.interval_s > 0.0) {
            const auto kept = even_sample_indices(g.trajectory, p.interval_s);
            Trajectory t{g.trajectory.car_id, {}};
            for (std::size_t i : kept) t.observations.push_back(g.trajectory.observations[i]);
            truths.push_back(g.truth.subsample(kept));
            trajs.push_back(std::move(t));
        } else {
            truths.push_back(std::move(g.truth));
            trajs.push_back(std::move(g.trajectory));
        }
    }
    emit(cfg.files.obs, out, [&](std::ostream& o) { write_observations(o, trajs); });
    emit(cfg.files.truth, out, [&](std::ostream& o) {
        for (std::size_t i = 0; i < trajs.size(); ++i) write_ground_truth(o, trajs[i].car_id, truths[i]);
    });
    std::size_t fixes = 0;
    for (const auto& t : trajs) fixes += t.size();
    out << "trajectories: " << trajs.size() << ", observations: " << fixes << '\n';
    return kExitOk;
}

int cmd_train(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    require(cfg.files.truth, "--truth");
    require(cfg.files.out, "--out");
    const RoadNetwork net = load_net(cfg);
    const std::vector<Trajectory> trajs = load_obs(cfg, err);
    const auto truths = parse_ground_truth(std::filesystem::path(cfg.files.truth));
    const FeatureCatalog catalog = cfg.catalog();
    auto prepared = prepare_all_parallel(trajs, net, catalog, cfg.protocol.lattice, cfg.jobs);

    std::vector<FeatureLattice> raw;
    for (const auto& p : prepared) raw.insert(raw.end(), p.features.begin(), p.features.end());
    const Scaler scaler = fit_scaler(raw, catalog);
    std::vector<LabeledInstance> labeled;
    for (std::size_t i = 0; i < trajs.size(); ++i) {
        const GroundTruth truth = load_ground_truth(truths, trajs[i]);
        for (std::size_t k = 0; k < prepared[i].features.size(); ++k) {
            scaler.apply(prepared[i].features[k]);
            labeled.push_back({prepared[i].features[k], label_lattice(prepared[i].build.pieces[k], truth), i});
        }
    }
    TrainConfig tc = cfg.protocol.train;
    tc.threads = cfg.jobs;
    const TrainResult trained = train(labeled, catalog.dim(), tc);

    CrfModel model;
    model.catalog = catalog;
    model.scaler = scaler;
    model.lattice = cfg.protocol.lattice;
    model.set_weights(trained.weights);
    model.save(cfg.files.out);
    const std::string report = trained.report.to_json().dump(2) + "\n";
    emit(cfg.files.report, out, [&](std::ostream& o) { o << report; });
    if (!trained.report.converged) {
        err << "training hit the iteration cap before reaching the gradient tolerance\n";
        return kExitNotConverged;
    }
    return kExitOk;
}

int cmd_match(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    require(cfg.files.model, "--model");
    const RoadNetwork net = load_net(cfg);
    const CrfModel model = CrfModel::load(cfg.files.model);
    const std::vector<Trajectory> trajs = load_obs(cfg, err);
    const auto results = match_all_parallel(trajs, net, model, cfg.jobs);
    emit(cfg.files.out, out, [&](std::ostream& o) { write_match_results(o, results); });
    return kExitOk;
}

int cmd_eval(const RunConfig& cfg, ReportFormat format, std::ostream& out) {
    require(cfg.files.pred, "--pred");
    require(cfg.files.truth, "--truth");
    std::ifstream pf(cfg.files.pred);
    if (!pf) throw DataError("cannot open " + cfg.files.pred);
    const std::vector<MatchResult> preds = parse_match_results(pf);
    const auto truths = parse_ground_truth(std::filesystem::path(cfg.files.truth));
    std::vector<EvalReport> parts(preds.size());
    std::vector<std::string> problems(preds.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(cfg.jobs > 0 ? cfg.jobs : omp_get_max_threads())
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(preds.size()); ++i) {
        const auto k = static_cast<std::size_t>(i);
        try {
            const auto it = truths.find(preds[k].car_id);
            if (it == truths.end()) throw DataError("no ground truth for car " + std::to_string(preds[k].car_id));
            parts[k] = error_rates(preds[k], it->second);
        } catch (const std::exception& e) {
            problems[k] = e.what();
        }
    }
    EvalReport total;
    for (std::size_t k = 0; k < preds.size(); ++k) {
        if (!problems[k].empty()) throw DataError(problems[k]);
        total.merge(parts[k]);
    }
    emit(cfg.files.out, out, [&](std::ostream& o) {
        if (format == ReportFormat::Json)
            o << total.to_json().dump(2) << '\n';
        else
            o << eval_csv(total);
    });
    return kExitOk;
}

int cmd_features(const RunConfig& cfg, const std::string& kind, std::ostream& out, std::ostream& err) {
    const RoadNetwork net = load_net(cfg);
    const std::vector<Trajectory> trajs = load_obs(cfg, err);
    FeatureCatalog catalog = cfg.catalog();
    LatticeConfig lattice = cfg.protocol.lattice;
    std::optional<Scaler> scaler;
    if (!cfg.files.model.empty()) {
        const CrfModel model = CrfModel::load(cfg.files.model);
        catalog = model.catalog;
        lattice = model.lattice;
        scaler = model.scaler;
    }
    auto prepared = prepare_all_parallel(trajs, net, catalog, lattice, cfg.jobs);
    std::vector<FeatureExportRow> rows;
    for (auto& p : prepared)
        for (std::size_t k = 0; k < p.features.size(); ++k) {
            if (scaler) scaler->apply(p.features[k]);
            rows.push_back({p.car_id, k, &p.build.pieces[k], &p.features[k]});
        }
    emit(cfg.files.out, out, [&](std::ostream& o) {
        if (kind == "point")
            write_point_matrix(o, catalog, rows);
        else
            write_path_matrix(o, catalog, rows);
    });
    return kExitOk;
}

int cmd_experiment(const RunConfig& cfg, const std::vector<std::string>& method_names, ReportFormat format,
                   const std::string& model_dir, std::ostream& out) {
    ProtocolConfig p = cfg.protocol;
    p.threads = cfg.jobs;
    std::vector<MethodSpec> methods;
    for (const auto& name : method_names) methods.push_back(method_by_name(name, p.filter, cfg.turns));
    const Dataset data = make_dataset(p);
    const ProtocolResult result = run_protocol(data, methods, p);
    if (!model_dir.empty()) {
        std::filesystem::create_directories(model_dir);
        for (const auto& m : result.methods) m.model.save(std::filesystem::path(model_dir) / (m.spec.name + ".json"));
    }
    if (!cfg.files.report.empty()) {
        auto f = open_out(cfg.files.report);
        f << result.to_json().dump(2) << '\n';
    }
    emit(cfg.files.out, out, [&](std::ostream& o) { o << emit_report(result.rows, format); });
    return kExitOk;
}

std::optional<std::string> find_config_path(int argc, const char* const* argv) {
    for (int i = 1; i < argc; ++i) {
        const std::string_view a = argv[i];
        if (a == "--config" && i + 1 < argc) return argv[i + 1];
        if (a.starts_with("--config=")) return std::string(a.substr(9));
    }
    return std::nullopt;
}

} // namespace

RunConfig::RunConfig() {
    protocol.gen.seed = seed;
    protocol.train.seed = seed;
    point_features = FeatureCatalog::standard().point_names();
    path_features = FeatureCatalog::standard().path_names();
}

FeatureCatalog RunConfig::catalog() const {
    return FeatureCatalog(point_features, path_features, protocol.filter, turns);
}

json RunConfig::to_json() const {
    const GenConfig& g = protocol.gen;
    const TrainConfig& t = protocol.train;
    json j;
    j["seed"] = seed;
    j["jobs"] = jobs;
    j["files"] = {{"net_nodes", files.net_nodes}, {"net_edges", files.net_edges}, {"obs", files.obs},
                  {"truth", files.truth},         {"model", files.model},         {"pred", files.pred},
                  {"out", files.out},             {"report", files.report}};
    j["gen"] = {{"rows", g.rows},
                {"cols", g.cols},
                {"spacing_m", g.spacing_m},
                {"jitter_m", g.jitter_m},
                {"oneway_fraction", g.oneway_fraction},
                {"speed_choices_kmh", g.speed_choices_kmh},
                {"noise_sigma_m", g.noise_sigma_m},
                {"native_interval_s", g.native_interval_s},
                {"heading_noise_deg", g.heading_noise_deg},
                {"low_speed_fraction", g.low_speed_fraction},
                {"low_speed_max_kmh", g.low_speed_max_kmh},
                {"turn_probability", g.turn_probability},
                {"origin_lon", g.origin.lon},
                {"origin_lat", g.origin.lat},
                {"start_time", g.start_time}};
    j["sampling"] = {{"trajectories", protocol.trajectories},
                     {"route_len_edges", protocol.route_len_edges},
                     {"interval_s", protocol.interval_s},
                     {"train_ratio", protocol.train_ratio}};
    j["lattice"] = crfmm::to_json(protocol.lattice);
    j["features"] = {{"point", point_features}, {"path", path_features}};
    j["filter"] = {{"v_min_kmh", protocol.filter.v_min_kmh}, {"val_0", protocol.filter.val_0}};
    j["turns"] = {{"straight_max_deg", turns.straight_max_deg}, {"turn_max_deg", turns.turn_max_deg}};
    j["train"] = {{"regularizer", to_string(t.regularizer)},
                  {"lambda", t.lambda},
                  {"tune_lambda", t.tune_lambda},
                  {"grad_tolerance", t.grad_tolerance},
                  {"max_iterations", t.max_iterations},
                  {"lambda_grid", t.lambda_grid},
                  {"holdout_fraction", t.holdout_fraction}};
    j["taxonomy"] = {{"outlier_radius_m", protocol.taxonomy.outlier_radius_m},
                     {"parallel_distance_m", protocol.taxonomy.parallel_distance_m},
                     {"parallel_bearing_deg", protocol.taxonomy.parallel_bearing_deg}};
    return j;
}

RunConfig run_config_from_json(const json& j, RunConfig base) {
    RunConfig c = std::move(base);
    Section top(j, "config");
    top.get("seed", c.seed).get("jobs", c.jobs);
    if (const json* s = top.child("files")) {
        Section f(*s, "files");
        f.get("net_nodes", c.files.net_nodes).get("net_edges", c.files.net_edges).get("obs", c.files.obs);
        f.get("truth", c.files.truth).get("model", c.files.model).get("pred", c.files.pred);
        f.get("out", c.files.out).get("report", c.files.report).finish();
    }
    if (const json* s = top.child("gen")) {
        GenConfig& g = c.protocol.gen;
        Section sec(*s, "gen");
        sec.get("rows", g.rows).get("cols", g.cols).get("spacing_m", g.spacing_m).get("jitter_m", g.jitter_m);
        sec.get("oneway_fraction", g.oneway_fraction).get("speed_choices_kmh", g.speed_choices_kmh);
        sec.get("noise_sigma_m", g.noise_sigma_m).get("native_interval_s", g.native_interval_s);
        sec.get("heading_noise_deg", g.heading_noise_deg).get("low_speed_fraction", g.low_speed_fraction);
        sec.get("low_speed_max_kmh", g.low_speed_max_kmh).get("turn_probability", g.turn_probability);
        sec.get("origin_lon", g.origin.lon).get("origin_lat", g.origin.lat).get("start_time", g.start_time);
        sec.finish();
    }
    if (const json* s = top.child("sampling")) {
        Section sec(*s, "sampling");
        sec.get("trajectories", c.protocol.trajectories).get("route_len_edges", c.protocol.route_len_edges);
        sec.get("interval_s", c.protocol.interval_s).get("train_ratio", c.protocol.train_ratio).finish();
    }
    if (const json* s = top.child("lattice")) {
        json merged = crfmm::to_json(c.protocol.lattice);
        if (!s->is_object()) throw DataError("config: section 'lattice' must be an object");
        for (const auto& [key, value] : s->items()) merged[key] = value;
        try {
            c.protocol.lattice = lattice_config_from_json(merged);
        } catch (const json::exception&) {
            throw DataError("config: bad value in lattice section");
        }
    }
    if (const json* s = top.child("features")) {
        Section sec(*s, "features");
        sec.get("point", c.point_features).get("path", c.path_features).finish();
    }
    if (const json* s = top.child("filter")) {
        Section sec(*s, "filter");
        sec.get("v_min_kmh", c.protocol.filter.v_min_kmh).get("val_0", c.protocol.filter.val_0).finish();
    }
    if (const json* s = top.child("turns")) {
        Section sec(*s, "turns");
        sec.get("straight_max_deg", c.turns.straight_max_deg).get("turn_max_deg", c.turns.turn_max_deg).finish();
    }
    if (const json* s = top.child("train")) {
        TrainConfig& t = c.protocol.train;
        Section sec(*s, "train");
        std::string reg = to_string(t.regularizer);
        sec.get("regularizer", reg).get("lambda", t.lambda).get("tune_lambda", t.tune_lambda);
        sec.get("grad_tolerance", t.grad_tolerance).get("max_iterations", t.max_iterations);
        sec.get("lambda_grid", t.lambda_grid).get("holdout_fraction", t.holdout_fraction).finish();
        t.regularizer = parse_regularizer(reg);
    }
    if (const json* s = top.child("taxonomy")) {
        TaxonomyConfig& x = c.protocol.taxonomy;
        Section sec(*s, "taxonomy");
        sec.get("outlier_radius_m", x.outlier_radius_m).get("parallel_distance_m", x.parallel_distance_m);
        sec.get("parallel_bearing_deg", x.parallel_bearing_deg).finish();
    }
    top.finish();
    return c;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    RunConfig cfg;
    try {
        if (const auto path = find_config_path(argc, argv)) {
            std::ifstream f(*path);
            if (!f) throw DataError("cannot open config " + *path);
            json j;
            try {
                j = json::parse(f);
            } catch (const json::exception& e) {
                throw DataError("config " + *path + ": " + e.what());
            }
            cfg = run_config_from_json(j, cfg);
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitData;
    }

    CLI::App app{"Map matching of low-rate GPS trajectories with chain CRFs", "crfmm"};
    app.require_subcommand(1);
    app.option_defaults()->always_capture_default();
    std::string config_path, reg_name = to_string(cfg.protocol.train.regularizer), format_name = "csv";
    std::string feature_kind = "point", model_dir;
    std::vector<std::string> methods{"base_simple", "base_complex", "CRFs_L2", "CRFs_L1"};
    std::vector<CLI::Option*> lambda_opts;  // one per subcommand
    GenConfig& g = cfg.protocol.gen;
    ProtocolConfig& p = cfg.protocol;
    FileConfig& files = cfg.files;

    const auto common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON config document (flags override it)");
        sub->add_option("--seed", cfg.seed, "seed for every random choice");
    };
    const auto network_in = [&](CLI::App* sub) {
        sub->add_option("--net-nodes", files.net_nodes, "road network nodes CSV");
        sub->add_option("--net-edges", files.net_edges, "road network edges CSV");
    };
    const auto jobs = [&](CLI::App* sub) {
        sub->add_option("--jobs", cfg.jobs, "worker threads, 0 for all cores")->check(CLI::NonNegativeNumber);
    };
    const auto gen_opts = [&](CLI::App* sub) {
        sub->add_option("--rows", g.rows, "grid rows");
        sub->add_option("--cols", g.cols, "grid columns");
        sub->add_option("--spacing", g.spacing_m, "grid spacing in metres");
        sub->add_option("--jitter", g.jitter_m, "random node displacement in metres");
        sub->add_option("--oneway-fraction", g.oneway_fraction, "share of one-way streets");
        sub->add_option("--speeds", g.speed_choices_kmh, "speed limit choices in km/h")->delimiter(',');
    };
    const auto lattice_opts = [&](CLI::App* sub) {
        sub->add_option("--radius", p.lattice.radius_m, "candidate search radius in metres");
        sub->add_option("--radius-max", p.lattice.radius_max_m, "largest escalated radius in metres");
        sub->add_option("--candidates", p.lattice.max_candidates_k, "road states per observation");
        sub->add_option("--paths", p.lattice.paths_per_pair_k, "paths per candidate pair");
    };
    const auto feature_opts = [&](CLI::App* sub) {
        sub->add_option("--point-features", cfg.point_features, "point feature names")->delimiter(',');
        sub->add_option("--path-features", cfg.path_features, "path feature names")->delimiter(',');
        sub->add_option("--v-min", p.filter.v_min_kmh, "speed at or below which headings are ignored, km/h");
        sub->add_option("--val0", p.filter.val_0, "bearing feature value for low-speed fixes");
    };
    const auto train_opts = [&](CLI::App* sub) {
        sub->add_option("--reg", reg_name, "regularizer")->check(CLI::IsMember({"l1", "l2"}));
        lambda_opts.push_back(sub->add_option("--lambda", p.train.lambda, "fixed regularization strength (disables tuning)"));
        sub->add_option("--lambda-grid", p.train.lambda_grid, "holdout search grid")->delimiter(',');
        sub->add_option("--holdout", p.train.holdout_fraction, "holdout share of training trajectories");
        sub->add_option("--tolerance", p.train.grad_tolerance, "gradient infinity-norm tolerance");
        sub->add_option("--max-iter", p.train.max_iterations, "iteration cap");
    };
    const auto format_opt = [&](CLI::App* sub) {
        sub->add_option("--format", format_name, "report format")->check(CLI::IsMember({"csv", "json"}));
    };

    auto* gen_net = app.add_subcommand("gen-network", "generate a jittered grid road network");
    common(gen_net);
    gen_opts(gen_net);
    gen_net->add_option("--out-nodes", files.net_nodes, "nodes CSV to write");
    gen_net->add_option("--out-edges", files.net_edges, "edges CSV to write");

    auto* gen_traj = app.add_subcommand("gen-traj", "generate noisy trajectories and their ground truth");
    common(gen_traj);
    network_in(gen_traj);
    gen_traj->add_option("--count", p.trajectories, "number of trajectories");
    gen_traj->add_option("--route-len", p.route_len_edges, "edges per route");
    gen_traj->add_option("--interval", p.interval_s, "even-sampling interval in seconds, 0 keeps every fix");
    gen_traj->add_option("--noise", g.noise_sigma_m, "positional noise sigma per axis in metres");
    gen_traj->add_option("--native-interval", g.native_interval_s, "seconds between generated fixes");
    gen_traj->add_option("--low-speed-fraction", g.low_speed_fraction, "share of low-speed fixes");
    gen_traj->add_option("--out-obs", files.obs, "observations CSV to write");
    gen_traj->add_option("--out-truth", files.truth, "ground truth file to write");

    auto* train_cmd = app.add_subcommand("train", "train a CRF model on labelled trajectories");
    common(train_cmd);
    network_in(train_cmd);
    jobs(train_cmd);
    train_cmd->add_option("--obs", files.obs, "observations CSV");
    train_cmd->add_option("--truth", files.truth, "ground truth file");
    train_cmd->add_option("--out", files.out, "model file to write");
    train_cmd->add_option("--report", files.report, "training report JSON (stdout when empty)");
    lattice_opts(train_cmd);
    feature_opts(train_cmd);
    train_opts(train_cmd);

    auto* match_cmd = app.add_subcommand("match", "match trajectories with a trained model");
    common(match_cmd);
    network_in(match_cmd);
    jobs(match_cmd);
    match_cmd->add_option("--model", files.model, "model file");
    match_cmd->add_option("--obs", files.obs, "observations CSV");
    match_cmd->add_option("--out", files.out, "match file to write (stdout when empty)");

    auto* eval_cmd = app.add_subcommand("eval", "point and path error rates of a match file");
    common(eval_cmd);
    jobs(eval_cmd);
    eval_cmd->add_option("--pred", files.pred, "match file");
    eval_cmd->add_option("--truth", files.truth, "ground truth file");
    eval_cmd->add_option("--out", files.out, "report file (stdout when empty)");
    format_opt(eval_cmd);

    auto* features_cmd = app.add_subcommand("features", "export the feature matrix");
    common(features_cmd);
    network_in(features_cmd);
    jobs(features_cmd);
    features_cmd->add_option("--obs", files.obs, "observations CSV");
    features_cmd->add_option("--model", files.model, "use this model's catalog, lattice settings and scaler");
    features_cmd->add_option("--kind", feature_kind, "matrix to export")->check(CLI::IsMember({"point", "path"}));
    features_cmd->add_option("--out", files.out, "CSV to write (stdout when empty)");
    lattice_opts(features_cmd);
    feature_opts(features_cmd);

    auto* exp_cmd = app.add_subcommand("experiment", "synthetic train/test comparison of all methods");
    common(exp_cmd);
    jobs(exp_cmd);
    gen_opts(exp_cmd);
    exp_cmd->add_option("--trajectories", p.trajectories, "number of trajectories");
    exp_cmd->add_option("--route-len", p.route_len_edges, "edges per route");
    exp_cmd->add_option("--interval", p.interval_s, "even-sampling interval in seconds");
    exp_cmd->add_option("--train-ratio", p.train_ratio, "share of trajectories used for training");
    exp_cmd->add_option("--noise", g.noise_sigma_m, "positional noise sigma per axis in metres");
    exp_cmd->add_option("--methods", methods, "methods to run")->delimiter(',');
    exp_cmd->add_option("--model-dir", model_dir, "directory for one model file per method");
    exp_cmd->add_option("--out", files.out, "table to write (stdout when empty)");
    exp_cmd->add_option("--report", files.report, "detailed JSON report with the error taxonomy");
    lattice_opts(exp_cmd);
    feature_opts(exp_cmd);
    train_opts(exp_cmd);
    format_opt(exp_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        cfg.protocol.gen.seed = cfg.seed;
        cfg.protocol.train.seed = cfg.seed;
        cfg.protocol.train.regularizer = parse_regularizer(reg_name);
        for (const CLI::Option* o : lambda_opts)
            if (o->count() > 0) cfg.protocol.train.tune_lambda = false;
        cfg.protocol.gen.validate();
        cfg.protocol.lattice.validate();
        cfg.protocol.train.validate();
        (void)cfg.catalog();
        err << "effective config: " << cfg.to_json().dump() << '\n';

        const ReportFormat format = parse_report_format(format_name);
        if (gen_net->parsed()) return cmd_gen_network(cfg, out);
        if (gen_traj->parsed()) return cmd_gen_traj(cfg, out);
        if (train_cmd->parsed()) return cmd_train(cfg, out, err);
        if (match_cmd->parsed()) return cmd_match(cfg, out, err);
        if (eval_cmd->parsed()) return cmd_eval(cfg, format, out);
        if (features_cmd->parsed()) return cmd_features(cfg, feature_kind, out, err);
        if (exp_cmd->parsed()) return cmd_experiment(cfg, methods, format, model_dir, out);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitData;
    }
    return kExitUsage;
}

} // namespace crfmm
