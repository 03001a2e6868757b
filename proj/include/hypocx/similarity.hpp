#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "hypocx/cauchy_op.hpp"
#include "hypocx/operators.hpp"
#include "hypocx/semilinear.hpp"
#include "hypocx/vector_field.hpp"
#include "hypocx/verification.hpp"

namespace hypocx {

/// Interior max |L v| / sup |v| (0 when v = 0).
[[nodiscard]] inline double holomorphy_witness(const GridFunction& v, const VectorFieldSpec& spec,
                                               const ResidualMaskOptions& opt = {}) {
    const double sup = sup_norm(v);
    if (sup == 0.0) return 0.0;
    const auto mask = residual_mask(*v.grid(), {}, opt);
    return sup_norm(apply_L(spec, v), &mask) / sup;
}

struct Decomposition {
    GridFunction phi;  // conj(u)/u, 0 at thresholded nodes and on t = 0
    GridFunction s;    // T_Z(-(a + b phi))
    GridFunction v;    // u e^s
    double residual_Lv = 0.0;  // interior max |L v|
    double witness = 0.0;      // residual_Lv / sup |v|
    double thresholded_fraction = 0.0;
    bool many_thresholded = false;  // more than 20% of nodes thresholded
    bool quadrature_converged = true;
};

/// u = h(Z) e^s for a solution u of L u = a u + b conj(u). zero_tol < 0
/// selects 1e-6 sup |u|.
[[nodiscard]] inline Decomposition decompose(const GridFunction& u, const GridFunction& a, const GridFunction& b,
                                             const CauchyOperator& op, double zero_tol = -1.0,
                                             const ResidualMaskOptions& opt = {}) {
    const auto& g = *op.grid();
    require(u.size() == g.size() && a.size() == g.size() && b.size() == g.size(), "decompose: size mismatch");
    const double tol = zero_tol >= 0.0 ? zero_tol : 1e-6 * sup_norm(u);
    Decomposition d;
    d.phi = GridFunction(op.grid());
    std::size_t cut = 0;
    for (std::size_t j = 0; j < g.nt(); ++j) {
        for (std::size_t i = 0; i < g.nx(); ++i) {
            const std::size_t n = g.index(i, j);
            if (std::abs(u[n]) <= tol) ++cut;
            if (std::abs(u[n]) <= tol || g.t()[j] == 0.0) continue;
            d.phi[n] = std::conj(u[n]) / u[n];
        }
    }
    d.thresholded_fraction = double(cut) / double(g.size());
    d.many_thresholded = d.thresholded_fraction > 0.2;
    GridFunction rhs(op.grid());
    for (std::size_t n = 0; n < rhs.size(); ++n) rhs[n] = -(a[n] + b[n] * d.phi[n]);
    const auto s = op.apply(rhs);
    d.quadrature_converged = s.all_converged();
    d.s = s.values;
    d.v = GridFunction(op.grid());
    for (std::size_t n = 0; n < d.v.size(); ++n) d.v[n] = u[n] * std::exp(d.s[n]);
    const auto mask = residual_mask(g, {}, opt);
    d.residual_Lv = sup_norm(apply_L(op.spec(), d.v), &mask);
    const double sv = sup_norm(d.v);
    d.witness = sv > 0.0 ? d.residual_Lv / sv : 0.0;
    return d;
}

struct Construction {
    GridFunction s;
    GridFunction u;          // h(Z) e^s
    double residual = 0.0;   // interior max |L u - a u - b conj(u)|
    double unimodular_error = 0.0;  // max | |e^{conj(s) - s}| - 1 |
    SolveOutcome solve;
};

/// Solves L s = a + b phi e^{conj(s) - s}, phi = conj(h(Z))/h(Z) (0 where
/// h(Z) = 0), by relaxed Picard and returns u = h(Z) e^s, a solution of
/// L u = a u + b conj(u).
[[nodiscard]] inline Construction construct(const Polynomial& h, const GridFunction& a, const GridFunction& b,
                                            const CauchyOperator& op, const PicardOptions& opt = {}) {
    require(!h.is_zero(), "construct: h must not vanish identically");
    const auto& gp = op.grid();
    const auto& g = *gp;
    require(a.size() == g.size() && b.size() == g.size(), "construct: size mismatch");
    const auto& spec = op.spec();
    GridFunction hz(gp);
    GridFunction phi(gp);
    for (std::size_t j = 0; j < g.nt(); ++j) {
        for (std::size_t i = 0; i < g.nx(); ++i) {
            const std::size_t n = g.index(i, j);
            hz[n] = h(spec.eval_Z(g.x()[i], g.t()[j]));
            if (hz[n] != cplx(0.0)) phi[n] = std::conj(hz[n]) / hz[n];
        }
    }
    // conj(s) - s = -2i Im s, kept purely imaginary.
    NodeMap F = [&](std::size_t n, cplx s) { return a[n] + b[n] * phi[n] * std::exp(cplx(0.0, -2.0 * s.imag())); };
    Construction c;
    c.solve = detail::picard(F, op, opt);
    c.s = c.solve.u;
    c.u = GridFunction(gp);
    for (std::size_t n = 0; n < c.u.size(); ++n) {
        c.u[n] = hz[n] * std::exp(c.s[n]);
        c.unimodular_error =
            std::max(c.unimodular_error, std::abs(std::abs(std::exp(cplx(0.0, -2.0 * c.s[n].imag()))) - 1.0));
    }
    GridFunction r = apply_L(spec, c.u);
    for (std::size_t n = 0; n < r.size(); ++n) r[n] -= a[n] * c.u[n] + b[n] * std::conj(c.u[n]);
    const auto mask = residual_mask(g, {}, opt.mask);
    c.residual = sup_norm(r, &mask);
    return c;
}

} // namespace hypocx
