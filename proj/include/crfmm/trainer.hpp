#pragma once

#include "crfmm/crf.hpp"
#include "crfmm/lattice.hpp"

#include <cstdint>
#include <json.hpp>
#include <string>
#include <vector>

namespace crfmm {

enum class Regularizer { L2, L1 };

std::string to_string(Regularizer r);
Regularizer parse_regularizer(const std::string& s);

struct TrainConfig {
    Regularizer regularizer = Regularizer::L2;
    double lambda = 1.0;  // used when tune_lambda is off
    bool tune_lambda = true;
    double grad_tolerance = 1e-5;
    int max_iterations = 500;
    std::vector<double> lambda_grid{0.01, 0.1, 1.0, 10.0};
    double holdout_fraction = 0.2;
    std::uint64_t seed = 1;
    int threads = 0;

    void validate() const;
};

/// A scaled feature lattice with its (possibly incomplete) labels.
struct LabeledInstance {
    FeatureLattice features;
    LatticeLabels labels;
    std::size_t group = 0;  // source trajectory
};

struct HoldoutScore {
    double lambda = 0.0;
    double point_error = 0.0;
};

struct TrainReport {
    Regularizer regularizer = Regularizer::L2;
    double lambda = 0.0;
    int iterations = 0;
    double final_objective = 0.0;
    double grad_norm_inf = 0.0;
    bool converged = false;
    bool monotone = true;
    std::string stop_reason;
    std::size_t nonzero_weights = 0;
    std::size_t usable_lattices = 0;
    std::size_t excluded_lattices = 0;  // dropped for missing labels
    std::vector<HoldoutScore> holdout;

    nlohmann::json to_json() const;
};

struct TrainResult {
    std::vector<double> weights;  // point weights then path weights
    TrainReport report;
};

/// Truth assignment of a fully labelled instance.
Assignment truth_assignment(const LatticeLabels& labels);

/// Fits weights at a fixed lambda on the complete instances.
TrainResult fit_weights(std::span<const TrainingInstance> data, std::size_t dim, Regularizer reg, double lambda,
                        const TrainConfig& cfg);

/// Full training: excludes instances with missing labels, selects lambda by
/// holdout point error when tuning is on, then refits on all usable data.
/// Throws Error when no usable instance remains.
TrainResult train(std::span<const LabeledInstance> data, std::size_t dim, const TrainConfig& cfg);

/// Share of labelled point layers whose Viterbi choice differs from the label
/// (missing labels count as errors).
double point_error(std::span<const LabeledInstance> data, std::span<const double> weights);

} // namespace crfmm
