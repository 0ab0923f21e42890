#include "crfmm/error.hpp"
#include "crfmm/optimizer.hpp"
#include "crfmm/trainer.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace crfmm;
using namespace crfmm::testing;

namespace {

SmoothObjective quadratic(std::vector<double> c) {
    return [c](std::span<const double> x, std::span<double> g) {
        double v = 0.0;
        for (std::size_t i = 0; i < c.size(); ++i) {
            v += 0.5 * (x[i] - c[i]) * (x[i] - c[i]);
            g[i] = x[i] - c[i];
        }
        return v;
    };
}

std::vector<LabeledInstance> random_labeled(std::mt19937_64& rng, std::size_t n, std::size_t pd, std::size_t qd) {
    std::vector<LabeledInstance> out;
    for (std::size_t i = 0; i < n; ++i) {
        FeatureLattice fl = random_lattice(rng, 4, 3, 3, pd, qd);
        std::vector<Assignment> all;
        enumerate(fl, [&](const Assignment& a) { all.push_back(a); });
        const Assignment& a = all[std::uniform_int_distribution<std::size_t>(0, all.size() - 1)(rng)];
        LatticeLabels labels;
        for (std::size_t c : a.candidates) labels.point.push_back(c);
        for (std::size_t p : a.paths) labels.path.push_back(p);
        out.push_back({std::move(fl), std::move(labels), i});
    }
    return out;
}

std::vector<TrainingInstance> as_training(const std::vector<LabeledInstance>& data) {
    std::vector<TrainingInstance> out;
    for (const auto& d : data) out.push_back({d.features, truth_assignment(d.labels), d.group});
    return out;
}

} // namespace

TEST_CASE("quasi-Newton solves a quadratic") {
    OptimizerConfig cfg;
    const auto r = minimize_lbfgs(quadratic({1.0, -2.0, 0.5}), {0, 0, 0}, cfg);
    CHECK(r.converged);
    CHECK(r.monotone);
    CHECK(r.grad_norm_inf <= cfg.grad_tolerance);
    CHECK(r.x[0] == doctest::Approx(1.0));
    CHECK(r.x[1] == doctest::Approx(-2.0));
    for (std::size_t i = 1; i < r.trace.size(); ++i) CHECK(r.trace[i] <= r.trace[i - 1]);
}

TEST_CASE("quasi-Newton handles a curved valley") {
    const SmoothObjective rosen = [](std::span<const double> x, std::span<double> g) {
        const double a = 1.0 - x[0], b = x[1] - x[0] * x[0];
        g[0] = -2.0 * a - 400.0 * x[0] * b;
        g[1] = 200.0 * b;
        return a * a + 100.0 * b * b;
    };
    OptimizerConfig cfg;
    cfg.max_iterations = 2000;
    const auto r = minimize_lbfgs(rosen, {-1.2, 1.0}, cfg);
    CHECK(r.converged);
    CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(r.x[1] == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("orthant-wise steps reach exact zeros") {
    OptimizerConfig cfg;
    cfg.l1 = 1.0;
    // argmin 0.5 (x - c)^2 + |x| is soft thresholding of c at 1.
    const auto r = minimize_lbfgs(quadratic({0.3, 2.0, -3.0, -0.9}), {0, 0, 0, 0}, cfg);
    CHECK(r.converged);
    CHECK(r.x[0] == 0.0);
    CHECK(r.x[1] == doctest::Approx(1.0));
    CHECK(r.x[2] == doctest::Approx(-2.0));
    CHECK(r.x[3] == 0.0);
    const auto pg = pseudo_gradient(std::vector<double>{0.0}, std::vector<double>{0.5}, 1.0);
    CHECK(pg[0] == 0.0);
}

TEST_CASE("heavy penalties shrink weights to zero") {
    std::mt19937_64 rng(21);
    const auto data = as_training(random_labeled(rng, 20, 2, 2));
    TrainConfig cfg;
    const auto l2 = fit_weights(data, 4, Regularizer::L2, 1e6, cfg);
    for (double w : l2.weights) CHECK(std::fabs(w) <= 1e-3);
    const auto l1 = fit_weights(data, 4, Regularizer::L1, 1e6, cfg);
    for (double w : l1.weights) CHECK(w == 0.0);
    CHECK(l1.report.nonzero_weights == 0);
}

TEST_CASE("training reports convergence either way") {
    std::mt19937_64 rng(22);
    const auto data = as_training(random_labeled(rng, 30, 3, 3));
    TrainConfig cfg;
    const auto ok = fit_weights(data, 6, Regularizer::L2, 0.1, cfg);
    CHECK(ok.report.converged);
    CHECK(ok.report.grad_norm_inf <= cfg.grad_tolerance);
    CHECK(ok.report.monotone);
    cfg.max_iterations = 1;
    const auto capped = fit_weights(data, 6, Regularizer::L2, 0.1, cfg);
    CHECK_FALSE(capped.report.converged);
    CHECK(capped.report.iterations == 1);
    CHECK_FALSE(capped.report.stop_reason.empty());
}

TEST_CASE("instances with missing labels are excluded") {
    std::mt19937_64 rng(23);
    auto data = random_labeled(rng, 12, 2, 2);
    data[3].labels.point[0].reset();
    data[7].labels.point[0].reset();
    TrainConfig cfg;
    const auto r = train(data, 4, cfg);
    CHECK(r.report.excluded_lattices == 2);
    CHECK(r.report.usable_lattices == 10);
    CHECK(r.report.holdout.size() == cfg.lambda_grid.size());

    for (auto& d : data) d.labels.point[0].reset();
    CHECK_THROWS_AS(train(data, 4, cfg), Error);
}

TEST_CASE("training is reproducible") {
    std::mt19937_64 rng(24);
    const auto data = random_labeled(rng, 15, 2, 2);
    TrainConfig cfg;
    cfg.regularizer = Regularizer::L1;
    const auto a = train(data, 4, cfg);
    const auto b = train(data, 4, cfg);
    CHECK(a.weights == b.weights);
    CHECK(a.report.to_json() == b.report.to_json());
}
