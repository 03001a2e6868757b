#pragma once

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <span>
#include <vector>

#include "hypocx/common.hpp"
#include "hypocx/grid.hpp"
#include "hypocx/quadrature.hpp"
#include "hypocx/summation.hpp"

namespace hypocx {

namespace detail {

/// Graded coordinate s on the eta axis: eta = sign(s)|s|^g, so that
/// |eta|^{-tau} d eta = jac(s) ds. With g = 1/(1-tau) the Jacobian is the
/// constant g and the power weight disappears.
struct GradedAxis {
    double tau = 0.0;
    double g = 1.0;

    [[nodiscard]] double eta(double s) const noexcept {
        return g == 1.0 ? s : std::copysign(std::pow(std::abs(s), g), s);
    }
    [[nodiscard]] double s_of(double eta) const noexcept {
        return g == 1.0 ? eta : std::copysign(std::pow(std::abs(eta), 1.0 / g), eta);
    }
    [[nodiscard]] double jac(double s) const noexcept {
        const double e = g * (1.0 - tau) - 1.0;
        if (std::abs(e) < 1e-12) return g;
        return g * std::pow(std::abs(s), e);
    }
};

struct RowPoint {
    double s;
    double weight;  // includes the Jacobian
    double lambda;  // position inside the row, 0 at the lower node
    bool near;
};

struct RowRule {
    std::vector<RowPoint> points;
    std::vector<RowPoint> check;  // higher-order rule on the near pieces
    std::size_t pieces = 0;
    bool converged = true;
};

/// Builds the t-direction rule for one cell row [sa, sb] and one target at
/// graded coordinate s0 (eta0 = eta(s0)). Pieces are bisected until their
/// eta-extent does not exceed their eta-distance to the target; pieces that
/// end at the target are cut geometrically toward it.
class RowRuleBuilder {
public:
    RowRuleBuilder() = default;
    RowRuleBuilder(GradedAxis ax, const QuadratureConfig& cfg)
        : ax_(ax), lo_(gauss_legendre(cfg.rule_order)), hi_(gauss_legendre(cfg.rule_order + 2)),
          max_depth_(cfg.max_depth), geometric_levels_(4 * cfg.max_depth) {}

    [[nodiscard]] const GradedAxis& axis() const noexcept { return ax_; }

    [[nodiscard]] RowRule build(double sa, double sb, double s0, double eta0) const {
        RowRule rule;
        double cuts[4] = {sa, 0.0, 0.0, sb};
        std::size_t nc = 1;
        if (sa < 0.0 && 0.0 < sb) cuts[nc++] = 0.0;
        if (sa < s0 && s0 < sb && s0 != 0.0) cuts[nc++] = s0;
        cuts[nc++] = sb;
        std::sort(cuts + 1, cuts + nc - 1);
        for (std::size_t k = 0; k + 1 < nc; ++k) {
            const double a = cuts[k];
            const double b = cuts[k + 1];
            if (a == s0) {
                singular_piece(rule, sa, sb, a, b, true, eta0);
            } else if (b == s0) {
                singular_piece(rule, sa, sb, a, b, false, eta0);
            } else {
                refine(rule, sa, sb, a, b, eta0, 0, false);
            }
        }
        return rule;
    }

private:
    [[nodiscard]] bool admissible(double a, double b, double eta0) const noexcept {
        const double ea = ax_.eta(a);
        const double eb = ax_.eta(b);
        const double lo = std::min(ea, eb);
        const double hi = std::max(ea, eb);
        const double dist = eta0 < lo ? lo - eta0 : (eta0 > hi ? eta0 - hi : 0.0);
        return dist >= hi - lo;
    }

    void emit(RowRule& rule, double sa, double sb, double a, double b, bool near) const {
        const double len = b - a;
        const double row = sb - sa;
        for (std::size_t i = 0; i < lo_.nodes.size(); ++i) {
            const double s = a + len * lo_.nodes[i];
            rule.points.push_back({s, len * lo_.weights[i] * ax_.jac(s), (s - sa) / row, near});
        }
        if (near) {
            for (std::size_t i = 0; i < hi_.nodes.size(); ++i) {
                const double s = a + len * hi_.nodes[i];
                rule.check.push_back({s, len * hi_.weights[i] * ax_.jac(s), (s - sa) / row, true});
            }
        }
        ++rule.pieces;
    }

    void refine(RowRule& rule, double sa, double sb, double a, double b, double eta0, int depth, bool near) const {
        const bool ok = admissible(a, b, eta0);
        if (ok || depth >= max_depth_) {
            if (!ok) rule.converged = false;
            emit(rule, sa, sb, a, b, near || depth > 0);
            return;
        }
        const double m = 0.5 * (a + b);
        refine(rule, sa, sb, a, m, eta0, depth + 1, true);
        refine(rule, sa, sb, m, b, eta0, depth + 1, true);
    }

    void singular_piece(RowRule& rule, double sa, double sb, double a, double b, bool at_left, double eta0) const {
        const double s0 = at_left ? a : b;
        double len = b - a;
        const double floor_len = 1e3 * DBL_EPSILON * (std::abs(s0) + (b - a));
        for (int k = 0; k < geometric_levels_ && 0.5 * len > floor_len; ++k) {
            const double half = 0.5 * len;
            if (at_left) {
                refine(rule, sa, sb, s0 + half, s0 + len, eta0, 1, true);
            } else {
                refine(rule, sa, sb, s0 - len, s0 - half, eta0, 1, true);
            }
            len = half;
        }
        if (at_left) {
            emit(rule, sa, sb, s0, s0 + len, true);
        } else {
            emit(rule, sa, sb, s0 - len, s0, true);
        }
    }

    GradedAxis ax_{};
    GaussRule lo_{};
    GaussRule hi_{};
    int max_depth_ = 1;
    int geometric_levels_ = 4;
};

/// Exact moments of the two hat halves on one cell [u0, u0 + h] against
/// 1/(u - i*Delta): `left` belongs to the node at u0, `right` to u0 + h.
struct CellMoments {
    cplx left;
    cplx right;
};

[[nodiscard]] inline CellMoments cell_moments(double u0, double h, double delta) noexcept {
    const cplx m{u0 + 0.5 * h, -delta};
    const cplx v = h / (2.0 * m);
    if (std::norm(v) <= 0.04) {
        // U = atanh(v)/v - 1 = sum_{k>=1} v^{2k}/(2k+1)
        const cplx v2 = v * v;
        cplx u = 1.0 / 25.0;
        for (int k = 11; k >= 1; --k) u = 1.0 / (2.0 * k + 1.0) + v2 * u;
        u *= v2;
        return {v + (1.0 + v) * u, v - (1.0 - v) * u};
    }
    const cplx z0{u0, -delta};
    const cplx z1{u0 + h, -delta};
    const cplx a = std::log(z1) - std::log(z0);
    const cplx right = 1.0 - z0 * a / h;
    return {a - right, right};
}

/// N_i = int hat_i(xi) / (xi - x0 - i*Delta) dxi for the piecewise-linear
/// hats on `xs`.
inline void x_node_weights(std::span<const double> xs, double x0, double delta, std::span<cplx> out) noexcept {
    std::fill(out.begin(), out.end(), cplx{});
    for (std::size_t e = 0; e + 1 < xs.size(); ++e) {
        const double u0 = xs[e] - x0;
        const CellMoments cm = cell_moments(u0, xs[e + 1] - xs[e], delta);
        out[e] += cm.left;
        out[e + 1] += cm.right;
    }
}

[[nodiscard]] inline double safe_delta(double eta0, double eta_s, double s, double s0) noexcept {
    const double d = eta0 - eta_s;
    if (d != 0.0) return d;
    return s > s0 ? -DBL_MIN : DBL_MIN;
}

struct RawCauchy {
    cplx value;
    double error = 0.0;
    std::size_t cells = 0;
    bool converged = true;
};

/// raw = int int w(xi, s) / (xi + i eta(s) - z) dxi jac(s) ds with w bilinear
/// in (xi, s) on the nodes (xs, ss); `w(i, j)` returns the node value.
template <class W>
[[nodiscard]] RawCauchy weighted_cauchy_raw(std::span<const double> xs, std::span<const double> ss, const W& w,
                                            const RowRuleBuilder& rb, double x0, double s0) {
    const double eta0 = rb.axis().eta(s0);
    std::vector<cplx> n(xs.size());
    CompensatedComplexSum total;
    RawCauchy out;
    double err = 0.0;
    auto eval = [&](const RowPoint& p, std::size_t b) {
        const double delta = safe_delta(eta0, rb.axis().eta(p.s), p.s, s0);
        x_node_weights(xs, x0, delta, n);
        CompensatedComplexSum row;
        for (std::size_t i = 0; i < xs.size(); ++i) row.add(n[i] * ((1.0 - p.lambda) * w(i, b) + p.lambda * w(i, b + 1)));
        return p.weight * row.value();
    };
    for (std::size_t b = 0; b + 1 < ss.size(); ++b) {
        const RowRule rule = rb.build(ss[b], ss[b + 1], s0, eta0);
        cplx near_lo{};
        cplx near_hi{};
        for (const auto& p : rule.points) {
            const cplx c = eval(p, b);
            total.add(c);
            if (p.near) near_lo += c;
        }
        for (const auto& p : rule.check) near_hi += eval(p, b);
        err += std::abs(near_hi - near_lo);
        out.cells += rule.pieces * (xs.size() - 1);
        out.converged = out.converged && rule.converged;
    }
    out.value = total.value();
    out.error = err;
    return out;
}

} // namespace detail

struct WeightedCauchyResult {
    cplx value;
    double error = 0.0;
    std::size_t cells = 0;
    bool converged = true;
};

/// int int w(zeta) |eta|^{-tau} / (zeta - z) d xi d eta over the Z-plane
/// rectangle spanned by `w`'s grid, reading the grid's first axis as xi and
/// its second as eta. Values are interpolated linearly in xi and in the
/// graded coordinate s = sign(eta)|eta|^{1/g}, g = cfg.grading_for(tau).
[[nodiscard]] inline WeightedCauchyResult integrate_weighted_cauchy(const GridFunction& w, cplx z, double tau,
                                                                    const QuadratureConfig& cfg = {}) {
    cfg.validate();
    require(tau >= 0.0 && tau < 1.0, "integrate_weighted_cauchy: tau in [0,1) required");
    const auto& g = *w.grid();
    const detail::GradedAxis ax{tau, cfg.grading_for(tau)};
    const detail::RowRuleBuilder rb(ax, cfg);
    std::vector<double> ss(g.nt());
    for (std::size_t j = 0; j < g.nt(); ++j) ss[j] = ax.s_of(g.t()[j]);
    const auto raw = detail::weighted_cauchy_raw(
        g.x(), ss, [&](std::size_t i, std::size_t j) { return w.at(i, j); }, rb, z.real(), ax.s_of(z.imag()));
    const double scale = std::max(1.0, std::abs(raw.value));
    return {raw.value, raw.error, raw.cells, raw.converged && raw.error <= cfg.rel_tol * scale * 1e3};
}

} // namespace hypocx
