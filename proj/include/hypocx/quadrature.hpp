#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "hypocx/common.hpp"

namespace hypocx {

struct QuadratureConfig {
    int max_depth = 12;        // subdivision / refinement limit
    double rel_tol = 1e-9;     // stopping tolerance
    int rule_order = 4;        // Gauss points per piece
    double edge_grading = 0.0; // 0 selects 1/(1-tau)

    void validate() const {
        require(max_depth >= 1, "QuadratureConfig: max_depth >= 1 required");
        require(rel_tol > 0.0 && rel_tol < 1.0, "QuadratureConfig: 0 < rel_tol < 1 required");
        require(rule_order >= 2, "QuadratureConfig: rule_order >= 2 required");
        require(edge_grading == 0.0 || edge_grading >= 1.0, "QuadratureConfig: edge_grading must be 0 (auto) or >= 1");
    }

    [[nodiscard]] double grading_for(double tau) const noexcept {
        return edge_grading > 0.0 ? edge_grading : 1.0 / (1.0 - tau);
    }
};

struct QuadResult {
    double value = 0.0;
    double error = 0.0;
    bool converged = true;
};

struct GaussRule {
    std::vector<double> nodes;   // on [0, 1]
    std::vector<double> weights; // sum to 1
};

/// Gauss-Legendre rule mapped to [0, 1], by Newton iteration on the
/// three-term recurrence.
[[nodiscard]] inline GaussRule gauss_legendre(int n) {
    require(n >= 1, "gauss_legendre: n >= 1");
    GaussRule r;
    r.nodes.resize(static_cast<std::size_t>(n));
    r.weights.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        double x = std::cos(pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0;
            double p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) { p1 = x; p0 = 1.0; }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        double p0 = 1.0;
        double p1 = x;
        for (int k = 2; k <= n; ++k) {
            const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        const auto k = static_cast<std::size_t>(n - 1 - i);
        r.nodes[k] = 0.5 * (1.0 + x);
        r.weights[k] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    return r;
}

/// Tanh-sinh integration of f(x, xc) over [a, b], where xc is the signed
/// distance to the nearer endpoint (a - x below the midpoint, b - x above).
/// The complement lets integrands with endpoint singularities evaluate their
/// singular factor without cancellation.
template <class F>
[[nodiscard]] QuadResult tanh_sinh_integrate(const F& f, double a, double b, const QuadratureConfig& cfg) {
    if (!(b > a)) return {};
    boost::math::quadrature::tanh_sinh<double> ts(static_cast<std::size_t>(cfg.max_depth));
    double err = 0.0;
    double l1 = 0.0;
    std::size_t levels = 0;
    const double v = ts.integrate(f, a, b, cfg.rel_tol, &err, &l1, &levels);
    QuadResult r;
    r.value = v;
    r.error = err * std::max(std::abs(v), l1);
    r.converged = std::isfinite(v) && err <= cfg.rel_tol * 10.0;
    return r;
}

} // namespace hypocx
