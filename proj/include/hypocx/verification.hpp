#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "hypocx/catalog.hpp"
#include "hypocx/cauchy_op.hpp"
#include "hypocx/exponents.hpp"
#include "hypocx/grid.hpp"
#include "hypocx/operators.hpp"
#include "hypocx/summation.hpp"
#include "hypocx/vector_field.hpp"

namespace hypocx {

/// Node selection for pointwise residuals: nodes at least margin_fraction of
/// the shorter domain side away from the boundary, minus a `band`-node strip
/// around each listed discontinuity.
struct ResidualMaskOptions {
    double margin_fraction = 0.05;
    std::size_t band = 3;
};

[[nodiscard]] inline NodeMask residual_mask(const Grid& g, std::span<const LevelFunction> jumps,
                                            const ResidualMaskOptions& opt = {}) {
    const auto& d = g.domain();
    NodeMask m = interior_mask(g, opt.margin_fraction * std::min(d.width(), d.height()));
    for (const auto& j : jumps) exclude_level_set_band(g, m, j, opt.band);
    return m;
}

/// Observed order of a quantity that behaves like C n^{-order}; NaN when
/// either value is zero.
[[nodiscard]] inline double observed_order(double coarse, double fine, double n_coarse, double n_fine) {
    if (!(coarse > 0.0) || !(fine > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    return std::log(coarse / fine) / std::log(n_fine / n_coarse);
}

struct ResidualLevel {
    std::size_t n = 0;
    double max_residual = 0.0;
    double l2_residual = 0.0;
    std::size_t nodes = 0;
    bool converged = true;
};

struct ResidualReport {
    std::vector<ResidualLevel> levels;
    double order_max = std::numeric_limits<double>::quiet_NaN();  // between the last two levels
    double order_l2 = std::numeric_limits<double>::quiet_NaN();
};

/// Residual of apply_L(T_Z f) - f on masked interior nodes of one grid.
[[nodiscard]] inline ResidualLevel solution_residual(const CauchyOperator& op, const CatalogFunction& f,
                                                     const ResidualMaskOptions& opt = {}) {
    const auto& g = op.grid();
    const auto fg = GridFunction::sample(g, f.eval);
    const auto u = op.apply(fg);
    const auto r = apply_L(op.spec(), u.values) - fg;
    std::vector<LevelFunction> jumps;
    if (f.jump) jumps.push_back(*f.jump);
    const auto mask = residual_mask(*g, jumps, opt);
    ResidualLevel lv;
    lv.n = g->nx() - 1;
    lv.max_residual = sup_norm(r, &mask);
    lv.l2_residual = l2_mean(r, mask);
    lv.nodes = static_cast<std::size_t>(std::count(mask.begin(), mask.end(), 1));
    lv.converged = u.all_converged();
    return lv;
}

/// Solves with T_Z on n x n cell grids for each n in `levels` and reports the
/// interior residual of L(T_Z f) = f with the observed order between the two
/// finest levels. grading <= 0 selects default_grading.
[[nodiscard]] inline ResidualReport verify_solution(const CatalogFunction& f, const VectorFieldSpec& spec,
                                                    const Domain& dom, std::span<const std::size_t> levels,
                                                    double grading = 0.0, const QuadratureConfig& cfg = {},
                                                    const ResidualMaskOptions& opt = {}) {
    require(!levels.empty(), "verify_solution: at least one level required");
    require(std::is_sorted(levels.begin(), levels.end()) &&
                std::adjacent_find(levels.begin(), levels.end()) == levels.end(),
            "verify_solution: levels must be strictly increasing");
    const double gr = grading > 0.0 ? grading : default_grading(spec.sigma());
    ResidualReport rep;
    for (std::size_t n : levels) {
        const auto g = Grid::make(dom, n, n, gr);
        rep.levels.push_back(solution_residual(CauchyOperator(spec, g, cfg), f, opt));
    }
    if (rep.levels.size() >= 2) {
        const auto& a = rep.levels[rep.levels.size() - 2];
        const auto& b = rep.levels.back();
        rep.order_max = observed_order(a.max_residual, b.max_residual, double(a.n), double(b.n));
        rep.order_l2 = observed_order(a.l2_residual, b.l2_residual, double(a.n), double(b.n));
    }
    return rep;
}

struct SupBound {
    double sup = 0.0;
    double lp = 0.0;
    double ratio = 0.0;  // 0 when f = 0
    bool converged = true;
};

/// sup|T_Z f| / ||f||_p on f's grid.
[[nodiscard]] inline SupBound sup_bound_check(const CauchyOperator& op, const GridFunction& f,
                                              const ExponentSet& exps) {
    require(std::abs(exps.sigma - op.spec().sigma()) <= 1e-12 * std::max(1.0, exps.sigma),
            "sup_bound_check: exponent set and vector field disagree on sigma");
    SupBound b;
    const auto u = op.apply(f);
    b.sup = sup_norm(u.values);
    b.lp = lp_norm(f, exps.p);
    b.ratio = b.lp > 0.0 ? b.sup / b.lp : 0.0;
    b.converged = u.all_converged();
    return b;
}

/// Largest sup_bound_check ratio over a probe family on one grid.
[[nodiscard]] inline double empirical_bound(const CauchyOperator& op, std::span<const CatalogFunction> family,
                                            const ExponentSet& exps) {
    double m = 0.0;
    for (const auto& f : family) m = std::max(m, sup_bound_check(op, GridFunction::sample(op.grid(), f.eval), exps).ratio);
    return m;
}

/// Probe family {1, x, sign(t), |t|^{-1/(2p)}}.
[[nodiscard]] inline std::vector<CatalogFunction> default_probe_family(const VectorFieldSpec& spec,
                                                                       const ExponentSet& exps) {
    CatalogParams pw;
    pw.exponent = -1.0 / (2.0 * exps.p);
    return {catalog_function("constant", spec), catalog_function("x", spec), catalog_function("sign_t", spec),
            catalog_function("abs_t_pow", spec, pw)};
}

namespace detail {

/// Trapezoid coefficients c_n with  oint F dZ ~ sum_n F(node n) c_n over the
/// counterclockwise grid boundary, dZ = Z_x dx + Z_t dt evaluated in closed
/// form at the nodes.
struct BoundaryRule {
    std::vector<std::size_t> nodes;
    std::vector<cplx> coeffs;
};

[[nodiscard]] inline BoundaryRule boundary_rule(const Grid& g, const VectorFieldSpec& spec) {
    BoundaryRule br;
    const auto xs = g.x();
    const auto ts = g.t();
    const auto wx = g.weights_x();
    const auto wt = g.weights_t();
    const std::size_t nx = g.nx();
    const std::size_t nt = g.nt();
    std::vector<cplx> c(g.size(), cplx{});
    for (std::size_t i = 0; i < nx; ++i) {
        c[g.index(i, 0)] += wx[i] * spec.dZ_dx(xs[i], ts[0]);
        c[g.index(i, nt - 1)] -= wx[i] * spec.dZ_dx(xs[i], ts[nt - 1]);
    }
    for (std::size_t j = 0; j < nt; ++j) {
        c[g.index(nx - 1, j)] += wt[j] * spec.dZ_dt(xs[nx - 1], ts[j]);
        c[g.index(0, j)] -= wt[j] * spec.dZ_dt(xs[0], ts[j]);
    }
    for (std::size_t n = 0; n < g.size(); ++n) {
        if (c[n] != cplx(0.0)) {
            br.nodes.push_back(n);
            br.coeffs.push_back(c[n]);
        }
    }
    return br;
}

} // namespace detail

struct GreenCheck {
    cplx lhs;  // int L w
    cplx rhs;  // -oint w dZ
    double mismatch = 0.0;
};

/// int_Omega L w dx dt against -oint_{dOmega} w dZ.
[[nodiscard]] inline GreenCheck green_identity_check(const GridFunction& w, const VectorFieldSpec& spec) {
    const auto& g = *w.grid();
    GreenCheck gc;
    gc.lhs = integrate_area(apply_L(spec, w));
    const auto br = detail::boundary_rule(g, spec);
    CompensatedComplexSum s;
    for (std::size_t k = 0; k < br.nodes.size(); ++k) s.add(w[br.nodes[k]] * br.coeffs[k]);
    gc.rhs = -s.value();
    gc.mismatch = std::abs(gc.lhs - gc.rhs);
    return gc;
}

/// Node indices of a k x k lattice inset by `inset` of each side, used as
/// targets where the boundary Cauchy integral is well resolved.
[[nodiscard]] inline std::vector<std::size_t> interior_lattice(const Grid& g, std::size_t k = 5, double inset = 0.25) {
    require(k >= 1, "interior_lattice: k >= 1");
    const auto& d = g.domain();
    auto nearest = [](std::span<const double> nodes, double v) {
        const auto it = std::lower_bound(nodes.begin(), nodes.end(), v);
        std::size_t i = static_cast<std::size_t>(it - nodes.begin());
        if (i == nodes.size()) return nodes.size() - 1;
        if (i > 0 && v - nodes[i - 1] < nodes[i] - v) --i;
        return i;
    };
    std::vector<std::size_t> out;
    for (std::size_t b = 0; b < k; ++b) {
        for (std::size_t a = 0; a < k; ++a) {
            const double fx = k == 1 ? 0.5 : inset + (1.0 - 2.0 * inset) * double(a) / double(k - 1);
            const double ft = k == 1 ? 0.5 : inset + (1.0 - 2.0 * inset) * double(b) / double(k - 1);
            out.push_back(g.index(nearest(g.x(), d.x_min + fx * d.width()), nearest(g.t(), d.t_min + ft * d.height())));
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

struct PompeiuResult {
    std::vector<std::size_t> targets;
    std::vector<cplx> boundary_term;
    std::vector<cplx> area_term;
    double max_error = 0.0;  // max |boundary + area - w|
    bool converged = true;
};

/// w = (1/2 pi i) oint w dZ / (Z - z) + T_Z(L w) at the given nodes.
[[nodiscard]] inline PompeiuResult pompeiu_reconstruct(const GridFunction& w, const VectorFieldSpec& spec,
                                                       std::span<const std::size_t> node_targets,
                                                       const QuadratureConfig& cfg = {}) {
    const auto& gp = w.grid();
    const auto& g = *gp;
    PompeiuResult res;
    res.targets.assign(node_targets.begin(), node_targets.end());
    std::vector<Target> pts;
    for (std::size_t n : node_targets) {
        require(n < g.size(), "pompeiu_reconstruct: target out of range");
        pts.push_back({g.x()[n % g.nx()], g.t()[n / g.nx()]});
    }
    const auto lw = apply_L(spec, w);
    const auto area = CauchyOperator(spec, gp, cfg).apply(lw, pts);
    res.converged = area.all_converged();
    const auto br = detail::boundary_rule(g, spec);
    std::vector<cplx> zb(br.nodes.size());
    for (std::size_t k = 0; k < br.nodes.size(); ++k) {
        const std::size_t n = br.nodes[k];
        zb[k] = spec.eval_Z(g.x()[n % g.nx()], g.t()[n / g.nx()]);
    }
    for (std::size_t m = 0; m < pts.size(); ++m) {
        const cplx z = spec.eval_Z(pts[m].x, pts[m].t);
        CompensatedComplexSum s;
        for (std::size_t k = 0; k < br.nodes.size(); ++k) s.add(w[br.nodes[k]] * br.coeffs[k] / (zb[k] - z));
        const cplx b = s.value() / (2.0 * pi * I);
        res.boundary_term.push_back(b);
        res.area_term.push_back(area.values[m]);
        res.max_error = std::max(res.max_error, std::abs(b + area.values[m] - w[node_targets[m]]));
    }
    return res;
}

struct LqRow {
    std::size_t n = 0;
    double q = 0.0;
    double norm = 0.0;
    bool converged = true;
};

/// ||T_Z f||_q on n x n grids for each n in `levels` and each exponent in `qs`.
/// Rows are ordered by q, then by level.
[[nodiscard]] inline std::vector<LqRow> lq_membership(const CatalogFunction& f, const VectorFieldSpec& spec,
                                                      const Domain& dom, std::span<const std::size_t> levels,
                                                      std::span<const double> qs, double grading = 0.0,
                                                      const QuadratureConfig& cfg = {}) {
    const double limit = 2.0 - spec.tau();
    for (double q : qs) require(q >= 1.0 && q < limit, "lq_membership: 1 <= q < 2 - tau required");
    const double gr = grading > 0.0 ? grading : default_grading(spec.sigma());
    std::vector<std::vector<LqRow>> by_level;
    for (std::size_t n : levels) {
        const auto g = Grid::make(dom, n, n, gr);
        const auto u = CauchyOperator(spec, g, cfg).apply(GridFunction::sample(g, f.eval));
        std::vector<LqRow> rows;
        for (double q : qs) rows.push_back({n, q, lp_norm(u.values, q), u.all_converged()});
        by_level.push_back(std::move(rows));
    }
    std::vector<LqRow> out;
    for (std::size_t k = 0; k < qs.size(); ++k)
        for (const auto& lv : by_level) out.push_back(lv[k]);
    return out;
}

} // namespace hypocx
