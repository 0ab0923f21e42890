#include "crfmm/trainer.hpp"

#include "crfmm/error.hpp"
#include "crfmm/optimizer.hpp"
#include "crfmm/trajectory.hpp"

#include <algorithm>
#include <limits>
#include <set>

namespace crfmm {

std::string to_string(Regularizer r) { return r == Regularizer::L1 ? "l1" : "l2"; }

Regularizer parse_regularizer(const std::string& s) {
    if (s == "l1") return Regularizer::L1;
    if (s == "l2") return Regularizer::L2;
    throw DataError("unknown regularizer '" + s + "' (expected l1 or l2)");
}

void TrainConfig::validate() const {
    if (lambda < 0.0) throw DataError("train config: lambda must be >= 0");
    if (lambda_grid.empty()) throw DataError("train config: lambda grid must not be empty");
    for (double l : lambda_grid)
        if (l < 0.0) throw DataError("train config: lambda grid values must be >= 0");
    if (!(holdout_fraction > 0.0 && holdout_fraction <= 0.5))
        throw DataError("train config: holdout_fraction must be in (0, 0.5]");
    if (!(grad_tolerance > 0.0) || max_iterations < 1) throw DataError("train config: bad stopping rule");
}

nlohmann::json TrainReport::to_json() const {
    nlohmann::json j;
    j["regularizer"] = to_string(regularizer);
    j["lambda"] = lambda;
    j["iterations"] = iterations;
    j["final_objective"] = final_objective;
    j["grad_norm_inf"] = grad_norm_inf;
    j["converged"] = converged;
    j["monotone"] = monotone;
    j["stop_reason"] = stop_reason;
    j["nonzero_weights"] = nonzero_weights;
    j["usable_lattices"] = usable_lattices;
    j["excluded_lattices"] = excluded_lattices;
    auto& h = j["holdout"] = nlohmann::json::array();
    for (const auto& s : holdout) h.push_back({{"lambda", s.lambda}, {"point_error", s.point_error}});
    return j;
}

Assignment truth_assignment(const LatticeLabels& labels) {
    Assignment a;
    for (const auto& c : labels.point) a.candidates.push_back(c.value());
    for (const auto& p : labels.path) a.paths.push_back(p.value());
    return a;
}

TrainResult fit_weights(std::span<const TrainingInstance> data, std::size_t dim, Regularizer reg, double lambda,
                        const TrainConfig& cfg) {
    if (data.empty()) throw Error("training: no usable lattices");
    const double l2 = reg == Regularizer::L2 ? lambda : 0.0;
    const SmoothObjective negative_ll = [&](std::span<const double> w, std::span<double> grad) {
        const double v = objective_parallel(data, w, l2, grad, cfg.threads);
        for (double& g : grad) g = -g;
        return -v;
    };
    OptimizerConfig oc;
    oc.l1 = reg == Regularizer::L1 ? lambda : 0.0;
    oc.grad_tolerance = cfg.grad_tolerance;
    oc.max_iterations = cfg.max_iterations;
    OptimizerResult opt = minimize_lbfgs(negative_ll, std::vector<double>(dim, 0.0), oc);

    TrainResult out;
    out.weights = std::move(opt.x);
    TrainReport& r = out.report;
    r.regularizer = reg;
    r.lambda = lambda;
    r.iterations = opt.iterations;
    r.final_objective = -opt.value;  // penalized log-likelihood
    r.grad_norm_inf = opt.grad_norm_inf;
    r.converged = opt.converged;
    r.monotone = opt.monotone;
    r.stop_reason = opt.stop_reason;
    r.nonzero_weights = static_cast<std::size_t>(
        std::count_if(out.weights.begin(), out.weights.end(), [](double w) { return w != 0.0; }));
    r.usable_lattices = data.size();
    return out;
}

double point_error(std::span<const LabeledInstance> data, std::span<const double> weights) {
    std::size_t total = 0;
    std::size_t wrong = 0;
    for (const LabeledInstance& inst : data) {
        const ViterbiResult best = viterbi(inst.features, weights);
        for (std::size_t t = 0; t < inst.labels.point.size(); ++t) {
            ++total;
            if (!inst.labels.point[t] || *inst.labels.point[t] != best.assignment.candidates[t]) ++wrong;
        }
    }
    return total == 0 ? 0.0 : static_cast<double>(wrong) / static_cast<double>(total);
}

namespace {

std::vector<TrainingInstance> usable(std::span<const LabeledInstance> data, const std::set<std::size_t>* groups) {
    std::vector<TrainingInstance> out;
    for (const LabeledInstance& inst : data) {
        if (groups && !groups->contains(inst.group)) continue;
        if (!inst.labels.complete()) continue;
        out.push_back({inst.features, truth_assignment(inst.labels), inst.group});
    }
    return out;
}

} // namespace

TrainResult train(std::span<const LabeledInstance> data, std::size_t dim, const TrainConfig& cfg) {
    cfg.validate();
    const std::vector<TrainingInstance> all = usable(data, nullptr);
    if (all.empty()) throw Error("training: no usable lattices");

    double lambda = cfg.lambda;
    std::vector<HoldoutScore> scores;
    std::set<std::size_t> group_set;
    for (const auto& inst : data) group_set.insert(inst.group);
    const std::vector<std::size_t> groups(group_set.begin(), group_set.end());

    if (cfg.tune_lambda && groups.size() >= 2) {
        const TrainTestSplit split = split_train_test(groups.size(), 1.0 - cfg.holdout_fraction, cfg.seed);
        std::set<std::size_t> fit_groups, holdout_groups;
        for (std::size_t i : split.train) fit_groups.insert(groups[i]);
        for (std::size_t i : split.test) holdout_groups.insert(groups[i]);
        const auto fit_set = usable(data, &fit_groups);
        std::vector<LabeledInstance> holdout;
        for (const auto& inst : data)
            if (holdout_groups.contains(inst.group)) holdout.push_back(inst);

        if (!fit_set.empty() && !holdout.empty()) {
            double best = std::numeric_limits<double>::infinity();
            for (double candidate : cfg.lambda_grid) {
                const TrainResult r = fit_weights(fit_set, dim, cfg.regularizer, candidate, cfg);
                const double err = point_error(holdout, r.weights);
                scores.push_back({candidate, err});
                // Ties prefer the stronger penalty.
                if (err < best || (err == best && candidate > lambda)) {
                    best = err;
                    lambda = candidate;
                }
            }
        }
    }

    TrainResult out = fit_weights(all, dim, cfg.regularizer, lambda, cfg);
    out.report.holdout = std::move(scores);
    out.report.excluded_lattices = data.size() - all.size();
    return out;
}

} // namespace crfmm
