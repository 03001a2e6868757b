#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "hypocx/catalog.hpp"
#include "hypocx/cauchy_op.hpp"
#include "hypocx/exponents.hpp"
#include "hypocx/operators.hpp"
#include "hypocx/verification.hpp"

namespace hypocx {

/// F(node, u) for the node index of the solver's grid.
using NodeMap = std::function<cplx(std::size_t, cplx)>;

/// A right-hand side F(x, t, u) of class F_Psi^alpha on a fixed grid:
/// |F(., z1) - F(., z2)| <= Psi |z1 - z2|^alpha_F.
class NonlinearRHS {
public:
    /// Spot-checks the Hoelder condition on `probes` random (node, z1, z2)
    /// triples with |z| <= probe_radius and caches ||F(., 0)||_p.
    static NonlinearRHS make(GridPtr grid, NodeMap F, GridFunction psi, double alpha_F, double p,
                             std::uint64_t seed = 7, std::size_t probes = 2000, double probe_radius = 4.0) {
        require(alpha_F > 0.0 && alpha_F <= 1.0, "NonlinearRHS: alpha_F in (0,1] required");
        require(psi.grid()->size() == grid->size(), "NonlinearRHS: psi must live on the solver grid");
        for (const auto& v : psi.values())
            require(v.imag() == 0.0 && v.real() >= 0.0, "NonlinearRHS: psi must be real and >= 0");
        NonlinearRHS r;
        r.grid_ = std::move(grid);
        r.F_ = std::move(F);
        r.psi_ = std::move(psi);
        r.alpha_ = alpha_F;
        r.p_ = p;
        std::mt19937_64 rng(seed);
        std::uniform_int_distribution<std::size_t> node(0, r.grid_->size() - 1);
        std::uniform_real_distribution<double> coord(-probe_radius, probe_radius);
        for (std::size_t k = 0; k < probes; ++k) {
            const std::size_t n = node(rng);
            const cplx z1{coord(rng), coord(rng)};
            const cplx z2{coord(rng), coord(rng)};
            const double lhs = std::abs(r.F_(n, z1) - r.F_(n, z2));
            const double rhs = r.psi_[n].real() * std::pow(std::abs(z1 - z2), alpha_F);
            require(lhs <= rhs * (1.0 + 1e-9) + 1e-12 * (1.0 + std::abs(r.F_(n, z1))),
                    "NonlinearRHS: Hoelder condition fails at a probe");
        }
        GridFunction f0(r.grid_);
        for (std::size_t n = 0; n < f0.size(); ++n) f0[n] = r.F_(n, cplx{});
        r.f0_norm_ = lp_norm(f0, p);
        return r;
    }

    [[nodiscard]] cplx operator()(std::size_t node, cplx u) const { return F_(node, u); }
    [[nodiscard]] const NodeMap& map() const noexcept { return F_; }
    [[nodiscard]] const GridFunction& psi() const noexcept { return psi_; }
    [[nodiscard]] double alpha_F() const noexcept { return alpha_; }
    [[nodiscard]] double p() const noexcept { return p_; }
    [[nodiscard]] double F0_pnorm() const noexcept { return f0_norm_; }
    [[nodiscard]] double psi_pnorm() const { return lp_norm(psi_, p_); }

private:
    GridPtr grid_;
    NodeMap F_;
    GridFunction psi_;
    double alpha_ = 1.0;
    double p_ = 2.0;
    double f0_norm_ = 0.0;
};

struct PicardOptions {
    double relax = 1.0;
    double tol = 1e-8;
    std::size_t max_iter = 200;
    bool auto_halve = true;   // halve relax after two consecutive update increases
    double m_emp = 0.0;       // > 0 enables the per-iteration a priori bound check
    ResidualMaskOptions mask{};
    std::vector<LevelFunction> jumps;  // discontinuities excluded from the residual
};

struct SolveOutcome {
    GridFunction u;
    std::size_t iterations = 0;
    double final_update = 0.0;  // sup |u_k - u_{k-1}|
    double residual = 0.0;      // interior max |L u - F(., u)|
    bool converged = false;
    double relax = 1.0;         // value in force at exit
    std::vector<double> updates;
    std::size_t bound_violations = 0;  // only counted when m_emp > 0
    bool quadrature_converged = true;
};

namespace detail {

[[nodiscard]] inline GridFunction apply_map(const NodeMap& F, const GridFunction& u) {
    GridFunction out(u.grid());
    for (std::size_t n = 0; n < u.size(); ++n) out[n] = F(n, u[n]);
    return out;
}

/// Relaxed Picard u <- (1 - w) u + w T_Z F(., u) from u = 0. psi_norm and
/// f0_norm feed the bound check when opt.m_emp > 0.
[[nodiscard]] inline SolveOutcome picard(const NodeMap& F, const CauchyOperator& op, const PicardOptions& opt,
                                         double alpha_F = 1.0, double psi_norm = 0.0, double f0_norm = 0.0) {
    require(opt.relax > 0.0 && opt.relax <= 1.0, "picard_solve: relax in (0,1] required");
    require(opt.tol > 0.0, "picard_solve: tol > 0 required");
    require(opt.max_iter >= 1, "picard_solve: max_iter >= 1 required");
    SolveOutcome out;
    out.u = GridFunction(op.grid());
    double w = opt.relax;
    int increases = 0;
    for (std::size_t k = 0; k < opt.max_iter; ++k) {
        const auto Fu = apply_map(F, out.u);
        const auto pu = op.apply(Fu);
        out.quadrature_converged = out.quadrature_converged && pu.all_converged();
        if (opt.m_emp > 0.0) {
            const double bound = opt.m_emp * (psi_norm * std::pow(sup_norm(out.u), alpha_F) + f0_norm);
            if (sup_norm(pu.values) > bound * (1.0 + 1e-9) + 1e-14) ++out.bound_violations;
        }
        GridFunction next(op.grid());
        double upd = 0.0;
        for (std::size_t n = 0; n < next.size(); ++n) {
            next[n] = (1.0 - w) * out.u[n] + w * pu.values[n];
            upd = std::max(upd, std::abs(next[n] - out.u[n]));
        }
        out.u = std::move(next);
        out.iterations = k + 1;
        out.final_update = upd;
        if (!out.updates.empty() && upd > out.updates.back()) {
            if (++increases >= 2 && opt.auto_halve) {
                w *= 0.5;
                increases = 0;
            }
        } else {
            increases = 0;
        }
        out.updates.push_back(upd);
        if (!std::isfinite(upd)) break;
        if (upd < opt.tol) {
            out.converged = true;
            break;
        }
    }
    out.relax = w;
    const auto r = apply_L(op.spec(), out.u) - apply_map(F, out.u);
    const auto mask = residual_mask(*op.grid(), opt.jumps, opt.mask);
    out.residual = sup_norm(r, &mask);
    return out;
}

} // namespace detail

/// Relaxed Picard iteration for L u = F(x, t, u).
[[nodiscard]] inline SolveOutcome picard_solve(const NonlinearRHS& F, const CauchyOperator& op,
                                               const ExponentSet& exps, const PicardOptions& opt = {}) {
    require(std::abs(exps.p - F.p()) <= 1e-12 * exps.p, "picard_solve: exponent set and RHS disagree on p");
    return detail::picard(F.map(), op, opt, F.alpha_F(), F.psi_pnorm(), F.F0_pnorm());
}

struct ContractionCertificate {
    double m_emp = 0.0;
    double psi_norm = 0.0;
    double product = 0.0;
    bool certified = false;  // empirical: m_emp comes from a probe family
};

[[nodiscard]] inline ContractionCertificate contraction_certificate(const NonlinearRHS& F, const CauchyOperator& op,
                                                                    const ExponentSet& exps,
                                                                    std::span<const CatalogFunction> probes = {}) {
    require(F.alpha_F() == 1.0, "contraction_certificate: alpha_F = 1 required");
    ContractionCertificate c;
    const auto family = probes.empty() ? default_probe_family(op.spec(), exps)
                                       : std::vector<CatalogFunction>(probes.begin(), probes.end());
    c.m_emp = empirical_bound(op, family, exps);
    c.psi_norm = F.psi_pnorm();
    c.product = c.m_emp * c.psi_norm;
    c.certified = c.product < 1.0;
    return c;
}

/// F = a u + b conj(u) + f with Psi = |a| + |b|.
[[nodiscard]] inline NonlinearRHS linear_rhs(const GridFunction& a, const GridFunction& b, const GridFunction& f,
                                             const ExponentSet& exps) {
    const auto grid = f.grid();
    require(a.size() == f.size() && b.size() == f.size(), "linear_rhs: coefficient size mismatch");
    GridFunction psi(grid);
    for (std::size_t n = 0; n < psi.size(); ++n) psi[n] = std::abs(a[n]) + std::abs(b[n]);
    NodeMap F = [a, b, f](std::size_t n, cplx u) { return a[n] * u + b[n] * std::conj(u) + f[n]; };
    return NonlinearRHS::make(grid, std::move(F), std::move(psi), 1.0, exps.p);
}

[[nodiscard]] inline SolveOutcome linear_solve(const GridFunction& a, const GridFunction& b, const GridFunction& f,
                                               const CauchyOperator& op, const ExponentSet& exps,
                                               const PicardOptions& opt = {}) {
    return picard_solve(linear_rhs(a, b, f, exps), op, exps, opt);
}

using BoundedMap = std::function<cplx(double, double, cplx)>;

/// L u = g H(x, t, u) + f with sup |H| < K checked on `probes` random
/// (node, u) pairs with |u| <= probe_radius. Convergence is not guaranteed.
[[nodiscard]] inline SolveOutcome bounded_rhs_solve(const GridFunction& g, const GridFunction& f, const BoundedMap& H,
                                                    double K, const CauchyOperator& op, const PicardOptions& opt = {},
                                                    std::uint64_t seed = 11, std::size_t probes = 2000,
                                                    double probe_radius = 10.0) {
    const auto& grid = *op.grid();
    require(g.size() == grid.size() && f.size() == grid.size(), "bounded_rhs_solve: size mismatch");
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> node(0, grid.size() - 1);
    std::uniform_real_distribution<double> coord(-probe_radius, probe_radius);
    for (std::size_t k = 0; k < probes; ++k) {
        const std::size_t n = node(rng);
        const cplx z{coord(rng), coord(rng)};
        require(std::abs(H(grid.x()[n % grid.nx()], grid.t()[n / grid.nx()], z)) < K,
                "bounded_rhs_solve: |H| >= K at a probe");
    }
    const auto gp = op.grid();
    NodeMap F = [&, gp](std::size_t n, cplx u) {
        return g[n] * H(gp->x()[n % gp->nx()], gp->t()[n / gp->nx()], u) + f[n];
    };
    return detail::picard(F, op, opt);
}

} // namespace hypocx
