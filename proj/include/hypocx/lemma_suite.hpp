#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "hypocx/catalog.hpp"
#include "hypocx/grid.hpp"
#include "hypocx/lemma_integrals.hpp"
#include "hypocx/operators.hpp"
#include "hypocx/parallel.hpp"
#include "hypocx/quadrature.hpp"
#include "hypocx/vector_field.hpp"

namespace hypocx {

enum class Lemma { I, H, delta };

[[nodiscard]] inline std::string lemma_name(Lemma w) {
    switch (w) {
    case Lemma::I: return "I";
    case Lemma::H: return "H";
    case Lemma::delta: return "delta";
    }
    return "?";
}

[[nodiscard]] inline Lemma parse_lemma(const std::string& s) {
    if (s == "I") return Lemma::I;
    if (s == "H") return Lemma::H;
    if (s == "delta") return Lemma::delta;
    throw InvalidArgument("unknown lemma '" + s + "' (expected I, H or delta)");
}

/// One parameter tuple. Fields a lemma does not use are ignored: I uses
/// (R, gamma, tau, q), H adds phi, delta uses (delta, R, gamma, tau, m).
struct LemmaTuple {
    double R = 1.0;
    double gamma = 0.0;
    double tau = 0.5;
    double q = 4.0 / 3.0;
    double phi = 0.0;
    double delta = 0.25;
    double m = 1.0;
};

struct ScanRow {
    LemmaTuple params;
    double value = 0.0;
    double error = 0.0;
    double bound = 0.0;   // fitted constant times the lemma's scale factor
    double margin = 0.0;  // bound / value
    bool converged = true;
    bool pass = false;    // never true for an inconclusive row
};

/// The fitted constant of one (tau, q) or (tau, m) group.
struct FittedConstant {
    double tau = 0.0;
    double exponent = 0.0;  // q for I and H, m for delta
    double value = 0.0;
};

struct ScanReport {
    Lemma lemma = Lemma::I;
    std::vector<ScanRow> rows;
    std::vector<FittedConstant> constants;
    [[nodiscard]] bool all_pass() const noexcept {
        return std::all_of(rows.begin(), rows.end(), [](const ScanRow& r) { return r.pass; });
    }
    [[nodiscard]] const FittedConstant* constant_for(double tau, double exponent) const noexcept {
        for (const auto& c : constants)
            if (c.tau == tau && c.exponent == exponent) return &c;
        return nullptr;
    }
};

/// Scale factor of the bound: R^{2-tau-q} for I, delta^{-(m+tau)} for delta,
/// 1 for H.
[[nodiscard]] inline double lemma_scale(Lemma w, const LemmaTuple& t) {
    switch (w) {
    case Lemma::I: return std::pow(t.R, 2.0 - t.tau - t.q);
    case Lemma::H: return 1.0;
    case Lemma::delta: return std::pow(t.delta, -(t.m + t.tau));
    }
    return 1.0;
}

[[nodiscard]] inline QuadResult evaluate_lemma(Lemma w, const LemmaTuple& t, const QuadratureConfig& cfg) {
    switch (w) {
    case Lemma::I: return integrate_I(t.R, t.gamma, t.tau, t.q, cfg);
    case Lemma::H: return integrate_H(t.R, t.gamma, t.tau, t.q, t.phi, cfg);
    case Lemma::delta: return integrate_delta(t.delta, t.R, t.gamma, t.tau, t.m, cfg);
    }
    return {};
}

/// Tensor grids used when no scan grid is configured (at least 50 tuples each).
[[nodiscard]] inline std::vector<LemmaTuple> default_scan_grid(Lemma w) {
    std::vector<LemmaTuple> out;
    switch (w) {
    case Lemma::I:
        for (auto [tau, q] : {std::pair{0.5, 4.0 / 3.0}, std::pair{1.0 / 3.0, 1.5}, std::pair{2.0 / 3.0, 1.25}})
            for (double R : {0.5, 1.0, 2.0, 4.0})
                for (double g : {0.0, 0.01, 0.1, 0.5, 1.0, 10.0}) out.push_back({R, g, tau, q, 0.0, 0.0, 0.0});
        break;
    case Lemma::H:
        for (double R : {0.5, 1.0, 10.0, 100.0})
            for (double g : {0.0, 0.5, 2.0})
                for (double phi : {0.0, pi / 4.0, pi / 2.0, 3.0 * pi / 4.0, pi})
                    out.push_back({R, g, 0.5, 4.0 / 3.0, phi, 0.0, 0.0});
        break;
    case Lemma::delta:
        for (auto [tau, m] : {std::pair{0.5, 1.0}, std::pair{1.0 / 3.0, 0.5}, std::pair{2.0 / 3.0, 1.0}})
            for (double d : {0.05, 0.1, 0.2, 0.4})
                for (double g : {0.0, 0.1, 0.3, 0.6, 0.9}) out.push_back({1.0, g, tau, 0.0, 0.0, d, m});
        break;
    }
    return out;
}

/// Evaluates every tuple, fits the constant of each group as the largest
/// value / scale over its converged rows, and marks rows against the fitted
/// bound. Rows are evaluated in parallel and kept in input order.
[[nodiscard]] inline ScanReport scan_lemma(Lemma w, const std::vector<LemmaTuple>& grid, const QuadratureConfig& cfg = {}) {
    ScanReport rep;
    rep.lemma = w;
    rep.rows.resize(grid.size());
    parallel_for(grid.size(), [&](std::size_t k) {
        const auto r = evaluate_lemma(w, grid[k], cfg);
        rep.rows[k].params = grid[k];
        rep.rows[k].value = r.value;
        rep.rows[k].error = r.error;
        rep.rows[k].converged = r.converged && std::isfinite(r.value);
    });
    auto group_exp = [w](const LemmaTuple& t) { return w == Lemma::delta ? t.m : t.q; };
    std::map<std::pair<double, double>, double> fit;
    for (const auto& row : rep.rows) {
        auto& c = fit[{row.params.tau, group_exp(row.params)}];
        if (row.converged) c = std::max(c, row.value / lemma_scale(w, row.params));
    }
    for (const auto& [key, c] : fit) rep.constants.push_back({key.first, key.second, c});
    for (auto& row : rep.rows) {
        const double c = fit[{row.params.tau, group_exp(row.params)}];
        row.bound = c * lemma_scale(w, row.params);
        row.margin = row.value > 0.0 ? row.bound / row.value : std::numeric_limits<double>::infinity();
        row.pass = row.converged && row.value <= row.bound * (1.0 + cfg.rel_tol);
    }
    return rep;
}

/// Largest relative change of the fitted constants between two scans of the
/// same grid.
[[nodiscard]] inline double fitted_constant_drift(const ScanReport& a, const ScanReport& b) {
    require(a.constants.size() == b.constants.size(), "fitted_constant_drift: scans differ");
    double d = 0.0;
    for (std::size_t k = 0; k < a.constants.size(); ++k) {
        const double x = a.constants[k].value;
        const double y = b.constants[k].value;
        d = std::max(d, std::abs(x - y) / std::max(std::abs(x), std::abs(y)));
    }
    return d;
}

/// Sampled counterexample v = ln|ln|Z|| and f = -i|t|^sigma / (conj(Z) ln|Z|)
/// with L v = f, masked where |Z| <= puncture or ||Z| - 1| <= puncture.
/// Masked nodes hold 0.
struct CounterexamplePair {
    double sigma = 1.0;
    double puncture = 0.0;
    GridFunction v;
    GridFunction f;
    NodeMask mask;  // 1 = retained
    [[nodiscard]] std::size_t retained() const {
        return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), 1));
    }
};

[[nodiscard]] inline CounterexamplePair make_counterexample(double sigma, const GridPtr& grid, double puncture) {
    require(sigma > 0.0, "make_counterexample: sigma > 0 required");
    require(puncture > 0.0, "make_counterexample: puncture > 0 required");
    const auto& d = grid->domain();
    require(d.x_min <= 0.0 && 0.0 <= d.x_max, "make_counterexample: domain must contain Z = 0");
    const auto spec = VectorFieldSpec::model(sigma);
    const auto vf = catalog_function("counterexample_v", spec);
    const auto ff = catalog_function("counterexample_f", spec);
    CounterexamplePair cp;
    cp.sigma = sigma;
    cp.puncture = puncture;
    cp.v = GridFunction(grid);
    cp.f = GridFunction(grid);
    cp.mask.assign(grid->size(), 0);
    for (std::size_t j = 0; j < grid->nt(); ++j) {
        for (std::size_t i = 0; i < grid->nx(); ++i) {
            const double x = grid->x()[i];
            const double t = grid->t()[j];
            const double a = std::abs(spec.eval_Z(x, t));
            if (a <= puncture || std::abs(a - 1.0) <= puncture) continue;
            const std::size_t n = grid->index(i, j);
            cp.mask[n] = 1;
            cp.v[n] = vf.eval(x, t);
            cp.f[n] = ff.eval(x, t);
        }
    }
    require(cp.retained() * 10 >= grid->size(), "make_counterexample: puncture leaves fewer than 10% of nodes");
    return cp;
}

/// Retained nodes whose x- and t-stencils (as used by apply_L) touch only
/// retained nodes.
[[nodiscard]] inline NodeMask stencil_mask(const Grid& g, const NodeMask& mask) {
    NodeMask out(g.size(), 0);
    std::vector<detail::Stencil3> sx(g.nx());
    std::vector<detail::Stencil3> st(g.nt());
    for (std::size_t i = 0; i < g.nx(); ++i) sx[i] = detail::derivative_stencil(g.x(), i);
    for (std::size_t j = 0; j < g.nt(); ++j) st[j] = detail::derivative_stencil(g.t(), j);
    for (std::size_t j = 0; j < g.nt(); ++j) {
        for (std::size_t i = 0; i < g.nx(); ++i) {
            bool ok = mask[g.index(i, j)] != 0;
            for (std::size_t k = 0; ok && k < 3; ++k) {
                ok = mask[g.index(sx[i].first + k, j)] && mask[g.index(i, st[j].first + k)];
            }
            out[g.index(i, j)] = ok ? 1 : 0;
        }
    }
    return out;
}

/// max |L v - f| over retained nodes with a fully retained stencil.
[[nodiscard]] inline double counterexample_residual(const CounterexamplePair& cp) {
    const auto spec = VectorFieldSpec::model(cp.sigma);
    const auto r = apply_L(spec, cp.v) - cp.f;
    const auto m = stencil_mask(*cp.v.grid(), cp.mask);
    return sup_norm(r, &m);
}

struct CounterexampleNormRow {
    double p = 0.0;
    double puncture = 0.0;
    double f_norm = 0.0;      // discrete ||f||_p over retained nodes
    double relative_change = 0.0;  // against the previous (larger) puncture, 0 on the first
    double sup_v = 0.0;
};

/// Norm table over punctures (sorted decreasing) for each p on one grid.
[[nodiscard]] inline std::vector<CounterexampleNormRow> counterexample_norms(double sigma, const GridPtr& grid,
                                                                             std::vector<double> punctures,
                                                                             const std::vector<double>& p_list) {
    for (double p : p_list) require(p >= 1.0, "counterexample_norms: p >= 1 required");
    std::sort(punctures.begin(), punctures.end(), std::greater<>());
    std::vector<CounterexamplePair> pairs;
    for (double e : punctures) pairs.push_back(make_counterexample(sigma, grid, e));
    std::vector<CounterexampleNormRow> out;
    for (double p : p_list) {
        double prev = 0.0;
        for (std::size_t k = 0; k < pairs.size(); ++k) {
            CounterexampleNormRow row;
            row.p = p;
            row.puncture = pairs[k].puncture;
            row.f_norm = lp_norm(pairs[k].f, p, &pairs[k].mask);
            row.sup_v = sup_norm(pairs[k].v, &pairs[k].mask);
            row.relative_change = k == 0 ? 0.0 : std::abs(row.f_norm - prev) / prev;
            prev = row.f_norm;
            out.push_back(row);
        }
    }
    return out;
}

} // namespace hypocx
