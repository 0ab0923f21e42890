#pragma once

#include "crfmm/feature_lattice.hpp"

#include <span>
#include <vector>

namespace crfmm {

/// A full label sequence: a candidate per point layer and, per path layer,
/// a path index within the chosen candidate pair.
struct Assignment {
    std::vector<std::size_t> candidates;
    std::vector<std::size_t> paths;

    friend bool operator==(const Assignment&, const Assignment&) = default;
};

/// Weight vector layout: point weights first, then path weights.
struct WeightView {
    std::span<const double> point;
    std::span<const double> path;

    WeightView(const FeatureLattice& fl, std::span<const double> w);
};

bool compatible(const FeatureLattice& fl, const Assignment& a);

/// Unnormalized log score. Throws Error for an incompatible assignment.
double log_score(const FeatureLattice& fl, std::span<const double> weights, const Assignment& a);

/// log Z by the forward recursion, in log space.
double log_partition(const FeatureLattice& fl, std::span<const double> weights);

struct ViterbiResult {
    Assignment assignment;
    double score = 0.0;
};

/// Highest-scoring compatible assignment; ties go to lower indices.
ViterbiResult viterbi(const FeatureLattice& fl, std::span<const double> weights);

/// Per-layer marginals from forward-backward.
struct Marginals {
    double log_z = 0.0;
    std::vector<std::vector<double>> point;  // [t][candidate]
    std::vector<std::vector<double>> path;   // [t][path row within the layer]
};
Marginals marginals(const FeatureLattice& fl, std::span<const double> weights);

/// log P(truth) and its gradient, added into `grad` (size fl.dim()).
double log_likelihood(const FeatureLattice& fl, std::span<const double> weights, const Assignment& truth,
                      std::span<double> grad);

/// One labelled training lattice. `group` ties pieces of the same trajectory
/// together for holdout splitting.
struct TrainingInstance {
    FeatureLattice features;
    Assignment truth;
    std::size_t group = 0;
};

/// Penalized conditional log-likelihood over a training set:
///   sum_i log P(truth_i) - l2_lambda * ||w||^2
/// Writes the gradient into `grad`. Per-lattice terms are summed in input
/// order so both kernels agree bit for bit.
double objective_serial(std::span<const TrainingInstance> data, std::span<const double> weights,
                        double l2_lambda, std::span<double> grad);
double objective_parallel(std::span<const TrainingInstance> data, std::span<const double> weights,
                          double l2_lambda, std::span<double> grad, int threads = 0);

} // namespace crfmm
