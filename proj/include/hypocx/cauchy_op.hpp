#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "hypocx/cauchy_kernel.hpp"
#include "hypocx/cauchy_plan.hpp"
#include "hypocx/common.hpp"
#include "hypocx/grid.hpp"
#include "hypocx/parallel.hpp"
#include "hypocx/quadrature.hpp"
#include "hypocx/summation.hpp"
#include "hypocx/vector_field.hpp"

namespace hypocx {

struct TargetDiagnostics {
    std::size_t cells = 0;
    double error = 0.0;  // estimated absolute error of T_Z f
    bool converged = true;
};

struct Target {
    double x;
    double t;
};

/// T_Z f at an explicit target list.
struct TargetResult {
    std::vector<cplx> values;
    std::vector<TargetDiagnostics> diagnostics;
    [[nodiscard]] bool all_converged() const noexcept {
        return std::all_of(diagnostics.begin(), diagnostics.end(), [](const auto& d) { return d.converged; });
    }
};

/// T_Z f on every node of f's grid.
struct OperatorResult {
    GridFunction values;
    std::vector<TargetDiagnostics> diagnostics;  // one per node
    [[nodiscard]] bool all_converged() const noexcept {
        return std::all_of(diagnostics.begin(), diagnostics.end(), [](const auto& d) { return d.converged; });
    }
    [[nodiscard]] double max_error() const noexcept {
        double e = 0.0;
        for (const auto& d : diagnostics) e = std::max(e, d.error);
        return e;
    }
};

namespace detail {

/// Coefficients of (P(z) - P(z0)) / (z - z0).
[[nodiscard]] inline Polynomial divided_difference(const Polynomial& p, cplx z0) {
    const auto& c = p.coefficients();
    if (c.size() <= 1) return Polynomial({0.0});
    std::vector<cplx> b(c.size() - 1);
    cplx acc = 0.0;
    for (std::size_t k = c.size() - 1; k >= 1; --k) {
        acc = acc * z0 + c[k];
        b[k - 1] = acc;
    }
    return Polynomial(std::move(b));
}

} // namespace detail

/// Discrete T_Z f = (1/2 pi i) int int f / (Z - Z(x,t)) dxi dt over the grid
/// rectangle, f interpolated bilinearly in (x, s) with s the graded
/// coordinate of eta = Im Z_sigma.
///
/// In the model case the substitution eta = t|t|^sigma/(sigma+1) leaves the
/// weight ((1+sigma)|eta|)^{-tau}. With a post map H the kernel splits as
/// 1/(H'(zeta0)(zeta - zeta0)) plus the bounded remainder
/// -H[zeta0,zeta0,zeta] / (H[zeta0,zeta] H'(zeta0)), integrated by the
/// trapezoid rule. The split assumes H is injective on Z_sigma(Omega).
class CauchyOperator {
public:
    static constexpr std::size_t default_plan_limit = std::size_t{2500} << 20;

    CauchyOperator(VectorFieldSpec spec, GridPtr grid, QuadratureConfig cfg = {},
                   std::size_t plan_memory_limit = default_plan_limit)
        : spec_(std::move(spec)), grid_(std::move(grid)), cfg_(cfg) {
        cfg_.validate();
        const double tau = spec_.tau();
        axis_ = detail::GradedAxis{tau, cfg_.grading_for(tau)};
        rb_ = detail::RowRuleBuilder(axis_, cfg_);
        s_.resize(grid_->nt());
        for (std::size_t j = 0; j < grid_->nt(); ++j) s_[j] = axis_.s_of(spec_.eta(grid_->t()[j]));
        scale_ = std::pow(1.0 + spec_.sigma(), -tau) / (2.0 * pi * I);
        plan_memory_limit_ = plan_memory_limit;
    }

    [[nodiscard]] const VectorFieldSpec& spec() const noexcept { return spec_; }
    [[nodiscard]] const GridPtr& grid() const noexcept { return grid_; }
    [[nodiscard]] const QuadratureConfig& config() const noexcept { return cfg_; }

    /// True when full-grid application goes through the FFT plan.
    [[nodiscard]] bool uses_plan() const {
        return grid_->x_uniform() && CauchyPlan::memory_bytes(*grid_) <= plan_memory_limit_;
    }

    [[nodiscard]] TargetResult apply(const GridFunction& f, std::span<const Target> targets) const {
        check_input(f);
        TargetResult out;
        out.values.resize(targets.size());
        out.diagnostics.resize(targets.size());
        const double fmax = max_abs(f);
        parallel_for(targets.size(), [&](std::size_t k) {
            const auto [x0, t0] = targets[k];
            const auto raw = detail::weighted_cauchy_raw(
                grid_->x(), s_, [&](std::size_t i, std::size_t j) { return f.at(i, j); }, rb_, x0,
                axis_.s_of(spec_.eta(t0)));
            cplx v = scale_ * raw.value;
            TargetDiagnostics d{raw.cells, std::abs(scale_) * raw.error, raw.converged};
            if (spec_.has_post_map()) v = post_map_correction(f, x0, t0, v);
            finish(d, raw.value, raw.error, fmax > 0.0);
            out.values[k] = v;
            out.diagnostics[k] = d;
        });
        return out;
    }

    [[nodiscard]] OperatorResult apply(const GridFunction& f) const {
        check_input(f);
        const auto& g = *grid_;
        OperatorResult out{GridFunction(grid_), std::vector<TargetDiagnostics>(g.size())};
        if (!uses_plan()) {
            std::vector<Target> targets(g.size());
            for (std::size_t j = 0; j < g.nt(); ++j)
                for (std::size_t i = 0; i < g.nx(); ++i) targets[g.index(i, j)] = {g.x()[i], g.t()[j]};
            auto r = apply(f, targets);
            std::copy(r.values.begin(), r.values.end(), out.values.values().begin());
            out.diagnostics = std::move(r.diagnostics);
            return out;
        }
        const auto& plan = ensure_plan();
        const auto raw = plan.apply_raw(f.values());
        const double fmax = max_abs(f);
        parallel_for(g.nt(), [&](std::size_t j) {
            const auto& rd = plan.row_diagnostics(j);
            for (std::size_t i = 0; i < g.nx(); ++i) {
                const std::size_t n = g.index(i, j);
                cplx v = scale_ * raw[n];
                const double err = rd.weight_error * fmax;
                TargetDiagnostics d{rd.cells, std::abs(scale_) * err, rd.converged};
                if (spec_.has_post_map()) v = post_map_correction(f, g.x()[i], g.t()[j], v);
                finish(d, raw[n], err, fmax > 0.0);
                out.values[n] = v;
                out.diagnostics[n] = d;
            }
        });
        return out;
    }

private:
    void check_input(const GridFunction& f) const {
        require(f.grid() == grid_ || (f.grid()->nx() == grid_->nx() && f.grid()->nt() == grid_->nt() &&
                                      std::equal(f.grid()->x().begin(), f.grid()->x().end(), grid_->x().begin()) &&
                                      std::equal(f.grid()->t().begin(), f.grid()->t().end(), grid_->t().begin())),
                "CauchyOperator: f must be sampled on the operator's grid");
    }

    [[nodiscard]] static double max_abs(const GridFunction& f) {
        double m = 0.0;
        for (const auto& v : f.values()) m = std::max(m, std::abs(v));
        return m;
    }

    void finish(TargetDiagnostics& d, cplx raw_value, double raw_error, bool nonzero) const {
        const double tol = cfg_.rel_tol * std::max(1.0, std::abs(raw_value)) * 1e3;
        d.converged = d.converged && (!nonzero || raw_error <= tol);
    }

    [[nodiscard]] cplx post_map_correction(const GridFunction& f, double x0, double t0, cplx model_value) const {
        const Polynomial& h = *spec_.post_map();
        const cplx z0 = spec_.z_sigma(x0, t0);
        const cplx hp = h.derivative(z0);
        const Polynomial q = detail::divided_difference(h, z0);
        const Polynomial q2 = detail::divided_difference(q, z0);
        const auto& g = *grid_;
        CompensatedComplexSum acc;
        for (std::size_t j = 0; j < g.nt(); ++j) {
            const double wt = g.weights_t()[j];
            for (std::size_t i = 0; i < g.nx(); ++i) {
                const cplx fv = f.at(i, j);
                if (fv == cplx(0.0)) continue;
                const cplx z = spec_.z_sigma(g.x()[i], g.t()[j]);
                acc.add(wt * g.weights_x()[i] * fv * (-q2(z) / (q(z) * hp)));
            }
        }
        return model_value / hp + acc.value() / (2.0 * pi * I);
    }

    const CauchyPlan& ensure_plan() const {
        std::call_once(*plan_once_, [&] { plan_ = CauchyPlan::build(grid_, spec_.sigma(), cfg_); });
        return *plan_;
    }

    VectorFieldSpec spec_;
    GridPtr grid_;
    QuadratureConfig cfg_;
    detail::GradedAxis axis_{};
    detail::RowRuleBuilder rb_{};
    std::vector<double> s_;
    cplx scale_{};
    std::size_t plan_memory_limit_ = default_plan_limit;
    mutable std::shared_ptr<std::once_flag> plan_once_ = std::make_shared<std::once_flag>();
    mutable std::shared_ptr<const CauchyPlan> plan_;
};

/// T_Z f at explicit targets.
[[nodiscard]] inline TargetResult apply_TZ(const GridFunction& f, const VectorFieldSpec& spec,
                                           std::span<const Target> targets, const QuadratureConfig& cfg = {}) {
    return CauchyOperator(spec, f.grid(), cfg).apply(f, targets);
}

/// T_Z f on every node of f's grid.
[[nodiscard]] inline OperatorResult apply_TZ(const GridFunction& f, const VectorFieldSpec& spec,
                                             const QuadratureConfig& cfg = {}) {
    return CauchyOperator(spec, f.grid(), cfg).apply(f);
}

} // namespace hypocx
