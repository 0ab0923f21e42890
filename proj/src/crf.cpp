#include "crfmm/crf.hpp"

#include "crfmm/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <omp.h>

namespace crfmm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
}

double log_sum_exp(std::span<const double> xs) {
    double m = kNegInf;
    for (double x : xs) m = std::max(m, x);
    if (m == kNegInf) return kNegInf;
    double s = 0.0;
    for (double x : xs) s += std::exp(x - m);
    return m + std::log(s);
}

double log_add(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    const double m = std::max(a, b);
    return m + std::log1p(std::exp(-std::fabs(a - b)));
}

/// Node and path potentials of a lattice under fixed weights.
struct Potentials {
    std::vector<std::vector<double>> point;      // [t][c]
    std::vector<std::vector<double>> path;       // [t][row]
    std::vector<std::vector<double>> pair_lse;   // [t][pair] log-sum over the pair's paths

    Potentials(const FeatureLattice& fl, const WeightView& w) {
        point.resize(fl.size());
        for (std::size_t t = 0; t < fl.size(); ++t) {
            point[t].resize(fl.points[t].count);
            for (std::size_t c = 0; c < fl.points[t].count; ++c) point[t][c] = dot(w.point, fl.point_row(t, c));
        }
        path.resize(fl.paths.size());
        pair_lse.resize(fl.paths.size());
        for (std::size_t t = 0; t < fl.paths.size(); ++t) {
            const auto& layer = fl.paths[t];
            const std::size_t rows = layer.pair_offset.back();
            path[t].resize(rows);
            for (std::size_t r = 0; r < rows; ++r)
                path[t][r] = dot(w.path, {layer.features.data() + r * fl.path_dim, fl.path_dim});
            pair_lse[t].resize(layer.from_count * layer.to_count);
            for (std::size_t k = 0; k + 1 < layer.pair_offset.size(); ++k) {
                pair_lse[t][k] = log_sum_exp(std::span<const double>(path[t]).subspan(
                    layer.pair_offset[k], layer.pair_offset[k + 1] - layer.pair_offset[k]));
            }
        }
    }
};

struct ForwardBackward {
    std::vector<std::vector<double>> alpha;  // includes the point potential at t
    std::vector<std::vector<double>> beta;   // excludes it
    double log_z = kNegInf;

    ForwardBackward(const FeatureLattice& fl, const Potentials& pot) {
        const std::size_t n = fl.size();
        alpha.resize(n);
        beta.resize(n);
        alpha[0] = pot.point[0];
        for (std::size_t t = 0; t + 1 < n; ++t) {
            const auto& layer = fl.paths[t];
            alpha[t + 1].assign(layer.to_count, kNegInf);
            for (std::size_t j = 0; j < layer.to_count; ++j) {
                double acc = kNegInf;
                for (std::size_t i = 0; i < layer.from_count; ++i)
                    acc = log_add(acc, alpha[t][i] + pot.pair_lse[t][layer.pair(i, j)]);
                alpha[t + 1][j] = acc + pot.point[t + 1][j];
            }
        }
        beta[n - 1].assign(fl.points[n - 1].count, 0.0);
        for (std::size_t t = n - 1; t-- > 0;) {
            const auto& layer = fl.paths[t];
            beta[t].assign(layer.from_count, kNegInf);
            for (std::size_t i = 0; i < layer.from_count; ++i) {
                double acc = kNegInf;
                for (std::size_t j = 0; j < layer.to_count; ++j)
                    acc = log_add(acc, pot.pair_lse[t][layer.pair(i, j)] + pot.point[t + 1][j] + beta[t + 1][j]);
                beta[t][i] = acc;
            }
        }
        log_z = log_sum_exp(alpha[n - 1]);
    }
};

void check_dims(const FeatureLattice& fl, std::span<const double> weights) {
    if (weights.size() != fl.dim()) throw Error("weight vector does not match lattice feature dimensions");
    if (fl.size() == 0) throw Error("empty lattice");
}

} // namespace

WeightView::WeightView(const FeatureLattice& fl, std::span<const double> w)
    : point(w.subspan(0, fl.point_dim)), path(w.subspan(fl.point_dim, fl.path_dim)) {}

bool compatible(const FeatureLattice& fl, const Assignment& a) {
    if (a.candidates.size() != fl.size() || a.paths.size() + 1 != fl.size()) return false;
    for (std::size_t t = 0; t < fl.size(); ++t)
        if (a.candidates[t] >= fl.points[t].count) return false;
    for (std::size_t t = 0; t + 1 < fl.size(); ++t)
        if (a.paths[t] >= fl.paths[t].path_count(a.candidates[t], a.candidates[t + 1])) return false;
    return true;
}

double log_score(const FeatureLattice& fl, std::span<const double> weights, const Assignment& a) {
    check_dims(fl, weights);
    if (!compatible(fl, a)) throw Error("incompatible assignment");
    const WeightView w(fl, weights);
    double s = 0.0;
    for (std::size_t t = 0; t < fl.size(); ++t) {
        s += dot(w.point, fl.point_row(t, a.candidates[t]));
        if (t + 1 < fl.size()) s += dot(w.path, fl.path_row(t, a.candidates[t], a.candidates[t + 1], a.paths[t]));
    }
    return s;
}

double log_partition(const FeatureLattice& fl, std::span<const double> weights) {
    check_dims(fl, weights);
    const Potentials pot(fl, WeightView(fl, weights));
    return ForwardBackward(fl, pot).log_z;
}

ViterbiResult viterbi(const FeatureLattice& fl, std::span<const double> weights) {
    check_dims(fl, weights);
    const WeightView w(fl, weights);
    const Potentials pot(fl, w);
    const std::size_t n = fl.size();
    constexpr std::size_t none = std::numeric_limits<std::size_t>::max();

    std::vector<std::vector<double>> delta(n);
    std::vector<std::vector<std::size_t>> from(n), via(n);
    delta[0] = pot.point[0];
    for (std::size_t t = 0; t + 1 < n; ++t) {
        const auto& layer = fl.paths[t];
        delta[t + 1].assign(layer.to_count, kNegInf);
        from[t + 1].assign(layer.to_count, none);
        via[t + 1].assign(layer.to_count, none);
        for (std::size_t j = 0; j < layer.to_count; ++j) {
            for (std::size_t i = 0; i < layer.from_count; ++i) {
                if (delta[t][i] == kNegInf) continue;
                const std::size_t first = layer.first_path(i, j);
                const std::size_t count = layer.path_count(i, j);
                for (std::size_t p = 0; p < count; ++p) {
                    const double v = delta[t][i] + pot.path[t][first + p];
                    if (from[t + 1][j] == none || v > delta[t + 1][j]) {
                        delta[t + 1][j] = v;
                        from[t + 1][j] = i;
                        via[t + 1][j] = p;
                    }
                }
            }
            if (from[t + 1][j] != none) delta[t + 1][j] += pot.point[t + 1][j];
        }
    }

    ViterbiResult result;
    std::size_t best = none;
    for (std::size_t c = 0; c < delta[n - 1].size(); ++c) {
        if (delta[n - 1][c] == kNegInf) continue;
        if (best == none || delta[n - 1][c] > delta[n - 1][best]) best = c;
    }
    if (best == none) throw Error("lattice has no compatible assignment");
    result.score = delta[n - 1][best];
    result.assignment.candidates.assign(n, 0);
    result.assignment.paths.assign(n - 1, 0);
    for (std::size_t t = n - 1;; --t) {
        result.assignment.candidates[t] = best;
        if (t == 0) break;
        result.assignment.paths[t - 1] = via[t][best];
        best = from[t][best];
    }
    return result;
}

Marginals marginals(const FeatureLattice& fl, std::span<const double> weights) {
    check_dims(fl, weights);
    const Potentials pot(fl, WeightView(fl, weights));
    const ForwardBackward fb(fl, pot);
    Marginals m;
    m.log_z = fb.log_z;
    m.point.resize(fl.size());
    for (std::size_t t = 0; t < fl.size(); ++t) {
        m.point[t].resize(fl.points[t].count);
        for (std::size_t c = 0; c < fl.points[t].count; ++c)
            m.point[t][c] = std::exp(fb.alpha[t][c] + fb.beta[t][c] - fb.log_z);
    }
    m.path.resize(fl.paths.size());
    for (std::size_t t = 0; t < fl.paths.size(); ++t) {
        const auto& layer = fl.paths[t];
        m.path[t].assign(layer.pair_offset.back(), 0.0);
        for (std::size_t i = 0; i < layer.from_count; ++i) {
            if (fb.alpha[t][i] == kNegInf) continue;
            for (std::size_t j = 0; j < layer.to_count; ++j) {
                const double tail = pot.point[t + 1][j] + fb.beta[t + 1][j];
                if (tail == kNegInf) continue;
                const std::size_t first = layer.first_path(i, j);
                for (std::size_t p = 0; p < layer.path_count(i, j); ++p)
                    m.path[t][first + p] = std::exp(fb.alpha[t][i] + pot.path[t][first + p] + tail - fb.log_z);
            }
        }
    }
    return m;
}

double log_likelihood(const FeatureLattice& fl, std::span<const double> weights, const Assignment& truth,
                      std::span<double> grad) {
    const double score = log_score(fl, weights, truth);
    const Marginals m = marginals(fl, weights);
    const std::size_t pd = fl.point_dim;
    const std::size_t qd = fl.path_dim;

    // Empirical minus expected feature counts.
    for (std::size_t t = 0; t < fl.size(); ++t) {
        const auto row = fl.point_row(t, truth.candidates[t]);
        for (std::size_t k = 0; k < pd; ++k) grad[k] += row[k];
        for (std::size_t c = 0; c < fl.points[t].count; ++c) {
            const double p = m.point[t][c];
            if (p == 0.0) continue;
            const auto r = fl.point_row(t, c);
            for (std::size_t k = 0; k < pd; ++k) grad[k] -= p * r[k];
        }
    }
    for (std::size_t t = 0; t + 1 < fl.size(); ++t) {
        const auto row = fl.path_row(t, truth.candidates[t], truth.candidates[t + 1], truth.paths[t]);
        for (std::size_t k = 0; k < qd; ++k) grad[pd + k] += row[k];
        const auto& layer = fl.paths[t];
        for (std::size_t r = 0; r < layer.pair_offset.back(); ++r) {
            const double p = m.path[t][r];
            if (p == 0.0) continue;
            const double* f = layer.features.data() + r * qd;
            for (std::size_t k = 0; k < qd; ++k) grad[pd + k] -= p * f[k];
        }
    }
    return score - m.log_z;
}

namespace {

double add_penalty(std::span<const double> weights, double l2_lambda, double value, std::span<double> grad) {
    double sq = 0.0;
    for (std::size_t k = 0; k < weights.size(); ++k) {
        sq += weights[k] * weights[k];
        grad[k] -= 2.0 * l2_lambda * weights[k];
    }
    return value - l2_lambda * sq;
}

} // namespace

double objective_serial(std::span<const TrainingInstance> data, std::span<const double> weights,
                        double l2_lambda, std::span<double> grad) {
    std::fill(grad.begin(), grad.end(), 0.0);
    std::vector<double> local(grad.size());
    double value = 0.0;
    for (const TrainingInstance& inst : data) {
        std::fill(local.begin(), local.end(), 0.0);
        value += log_likelihood(inst.features, weights, inst.truth, local);
        for (std::size_t k = 0; k < grad.size(); ++k) grad[k] += local[k];
    }
    return add_penalty(weights, l2_lambda, value, grad);
}

double objective_parallel(std::span<const TrainingInstance> data, std::span<const double> weights,
                          double l2_lambda, std::span<double> grad, int threads) {
    const std::size_t dim = grad.size();
    const auto n = static_cast<std::ptrdiff_t>(data.size());
    std::vector<double> values(data.size(), 0.0);
    std::vector<double> grads(data.size() * dim, 0.0);
    const int nthreads = threads > 0 ? threads : omp_get_max_threads();

    // Exceptions must not escape the parallel region; the first is rethrown.
    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 4) num_threads(nthreads)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        try {
            const auto idx = static_cast<std::size_t>(i);
            values[idx] = log_likelihood(data[idx].features, weights, data[idx].truth,
                                         std::span<double>(grads).subspan(idx * dim, dim));
        } catch (...) {
#pragma omp critical(crfmm_objective_failure)
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);

    std::fill(grad.begin(), grad.end(), 0.0);
    double value = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        value += values[i];
        for (std::size_t k = 0; k < dim; ++k) grad[k] += grads[i * dim + k];
    }
    return add_penalty(weights, l2_lambda, value, grad);
}

} // namespace crfmm
