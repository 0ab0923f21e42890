#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace crfmm {

/// Smooth objective to minimize; writes the gradient and returns the value.
using SmoothObjective = std::function<double(std::span<const double> x, std::span<double> grad)>;

struct OptimizerConfig {
    double l1 = 0.0;  // weight of the non-smooth l1 term added to the objective
    double grad_tolerance = 1e-5;
    int max_iterations = 500;
    int memory = 10;
    int max_backtracks = 60;
};

struct OptimizerResult {
    std::vector<double> x;
    double value = 0.0;           // smooth value + l1 * ||x||_1
    double grad_norm_inf = 0.0;   // of the (pseudo-)gradient at x
    int iterations = 0;
    int evaluations = 0;
    bool converged = false;
    bool monotone = true;         // every accepted step did not increase the objective
    std::string stop_reason;
    std::vector<double> trace;    // objective after each accepted step
};

/// Limited-memory quasi-Newton minimization. With l1 > 0 this is the
/// orthant-wise variant: the quasi-Newton direction is projected onto the
/// descent orthant of the pseudo-gradient and every trial point onto the
/// current orthant, so coordinates can land exactly on zero.
OptimizerResult minimize_lbfgs(const SmoothObjective& f, std::vector<double> x0, const OptimizerConfig& cfg);

/// Minimum-norm subgradient of f(x) + l1 * ||x||_1.
std::vector<double> pseudo_gradient(std::span<const double> x, std::span<const double> grad, double l1);

} // namespace crfmm
