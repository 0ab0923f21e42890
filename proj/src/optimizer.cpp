#include "crfmm/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

namespace crfmm {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

double norm_inf(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::fabs(x));
    return m;
}

double l1_norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += std::fabs(x);
    return s;
}

int sign(double v) { return (v > 0.0) - (v < 0.0); }

struct Correction {
    std::vector<double> s;
    std::vector<double> y;
    double rho;
};

// Two-loop recursion: returns -H * g.
std::vector<double> quasi_newton_direction(const std::deque<Correction>& mem, std::span<const double> g) {
    std::vector<double> q(g.begin(), g.end());
    std::vector<double> alpha(mem.size());
    for (std::size_t k = mem.size(); k-- > 0;) {
        alpha[k] = mem[k].rho * dot(mem[k].s, q);
        for (std::size_t i = 0; i < q.size(); ++i) q[i] -= alpha[k] * mem[k].y[i];
    }
    if (!mem.empty()) {
        const auto& last = mem.back();
        const double gamma = dot(last.s, last.y) / dot(last.y, last.y);
        for (double& v : q) v *= gamma;
    }
    for (std::size_t k = 0; k < mem.size(); ++k) {
        const double beta = mem[k].rho * dot(mem[k].y, q);
        for (std::size_t i = 0; i < q.size(); ++i) q[i] += (alpha[k] - beta) * mem[k].s[i];
    }
    for (double& v : q) v = -v;
    return q;
}

} // namespace

std::vector<double> pseudo_gradient(std::span<const double> x, std::span<const double> grad, double l1) {
    std::vector<double> pg(grad.begin(), grad.end());
    if (l1 <= 0.0) return pg;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] > 0.0) {
            pg[i] = grad[i] + l1;
        } else if (x[i] < 0.0) {
            pg[i] = grad[i] - l1;
        } else if (grad[i] + l1 < 0.0) {
            pg[i] = grad[i] + l1;
        } else if (grad[i] - l1 > 0.0) {
            pg[i] = grad[i] - l1;
        } else {
            pg[i] = 0.0;
        }
    }
    return pg;
}

OptimizerResult minimize_lbfgs(const SmoothObjective& f, std::vector<double> x0, const OptimizerConfig& cfg) {
    const std::size_t n = x0.size();
    const bool orthant = cfg.l1 > 0.0;
    OptimizerResult res;
    std::vector<double> x = std::move(x0);
    std::vector<double> g(n);
    double smooth = f(x, g);
    ++res.evaluations;
    double value = smooth + cfg.l1 * l1_norm(x);
    std::deque<Correction> memory;

    std::vector<double> x_new(n), g_new(n);
    for (;;) {
        const std::vector<double> pg = pseudo_gradient(x, g, cfg.l1);
        res.grad_norm_inf = norm_inf(pg);
        if (res.grad_norm_inf <= cfg.grad_tolerance) {
            res.converged = true;
            res.stop_reason = "gradient tolerance reached";
            break;
        }
        if (res.iterations >= cfg.max_iterations) {
            res.stop_reason = "iteration cap reached";
            break;
        }

        std::vector<double> d = quasi_newton_direction(memory, pg);
        if (orthant) {
            for (std::size_t i = 0; i < n; ++i)
                if (d[i] * pg[i] >= 0.0) d[i] = 0.0;
        }
        double slope = dot(pg, d);
        if (!(slope < 0.0)) {
            memory.clear();
            for (std::size_t i = 0; i < n; ++i) d[i] = -pg[i];
            slope = dot(pg, d);
        }

        std::vector<int> xi(n);
        for (std::size_t i = 0; i < n; ++i) xi[i] = x[i] != 0.0 ? sign(x[i]) : sign(-pg[i]);

        double step = memory.empty() ? 1.0 / std::max(1.0, std::sqrt(dot(pg, pg))) : 1.0;
        bool accepted = false;
        double new_smooth = 0.0;
        double new_value = 0.0;
        for (int bt = 0; bt < cfg.max_backtracks; ++bt, step *= 0.5) {
            for (std::size_t i = 0; i < n; ++i) {
                x_new[i] = x[i] + step * d[i];
                if (orthant && sign(x_new[i]) != xi[i]) x_new[i] = 0.0;
            }
            new_smooth = f(x_new, g_new);
            ++res.evaluations;
            new_value = new_smooth + cfg.l1 * l1_norm(x_new);
            double decrease = 0.0;
            for (std::size_t i = 0; i < n; ++i) decrease += pg[i] * (x_new[i] - x[i]);
            if (std::isfinite(new_value) && new_value <= value + 1e-4 * decrease) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            res.stop_reason = "line search made no progress";
            break;
        }

        Correction c{std::vector<double>(n), std::vector<double>(n), 0.0};
        for (std::size_t i = 0; i < n; ++i) {
            c.s[i] = x_new[i] - x[i];
            c.y[i] = g_new[i] - g[i];
        }
        const double sy = dot(c.s, c.y);
        if (sy > 1e-12 * std::sqrt(dot(c.s, c.s) * dot(c.y, c.y))) {
            c.rho = 1.0 / sy;
            memory.push_back(std::move(c));
            if (memory.size() > static_cast<std::size_t>(std::max(1, cfg.memory))) memory.pop_front();
        }
        if (new_value > value) res.monotone = false;
        x.swap(x_new);
        g.swap(g_new);
        smooth = new_smooth;
        value = new_value;
        ++res.iterations;
        res.trace.push_back(value);
    }
    res.x = std::move(x);
    res.value = value;
    return res;
}

} // namespace crfmm
