#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "hypocx/grid.hpp"
#include "hypocx/summation.hpp"
#include "hypocx/vector_field.hpp"

namespace hypocx {

namespace detail {

// Three-point first-derivative weights at nodes[k] on a nonuniform axis:
// central in the interior, one-sided second order at the two ends.
struct Stencil3 {
    std::size_t first;  // index of the first of three consecutive nodes
    double w[3];
};

inline Stencil3 derivative_stencil(std::span<const double> nodes, std::size_t k) {
    const std::size_t n = nodes.size();
    if (k == 0) {
        const double h1 = nodes[1] - nodes[0];
        const double h2 = nodes[2] - nodes[1];
        return {0, {-(2.0 * h1 + h2) / (h1 * (h1 + h2)), (h1 + h2) / (h1 * h2), -h1 / (h2 * (h1 + h2))}};
    }
    if (k + 1 == n) {
        const double h1 = nodes[n - 1] - nodes[n - 2];
        const double h2 = nodes[n - 2] - nodes[n - 3];
        return {n - 3, {h1 / (h2 * (h1 + h2)), -(h1 + h2) / (h1 * h2), (2.0 * h1 + h2) / (h1 * (h1 + h2))}};
    }
    const double hm = nodes[k] - nodes[k - 1];
    const double hp = nodes[k + 1] - nodes[k];
    return {k - 1, {-hp / (hm * (hm + hp)), (hp - hm) / (hm * hp), hm / (hp * (hm + hp))}};
}

} // namespace detail

/// Discrete L = H'(Z_sigma) (d/dt - i|t|^sigma d/dx) with nonuniform
/// three-point stencils (one-sided second order on the boundary).
[[nodiscard]] inline GridFunction apply_L(const VectorFieldSpec& spec, const GridFunction& u) {
    const auto& g = *u.grid();
    require(g.nx() >= 3 && g.nt() >= 3, "apply_L: need >= 3 nodes per axis");
    const auto xs = g.x();
    const auto ts = g.t();
    GridFunction out(u.grid());
    std::vector<detail::Stencil3> sx(g.nx());
    for (std::size_t i = 0; i < g.nx(); ++i) sx[i] = detail::derivative_stencil(xs, i);
    for (std::size_t j = 0; j < g.nt(); ++j) {
        const auto st = detail::derivative_stencil(ts, j);
        const double deg = spec.degeneracy(ts[j]);
        for (std::size_t i = 0; i < g.nx(); ++i) {
            const auto& s = sx[i];
            // Weights sum to zero, so difference against the middle node.
            const cplx xm = u.at(s.first + 1, j);
            const cplx ux = s.w[0] * (u.at(s.first, j) - xm) + s.w[2] * (u.at(s.first + 2, j) - xm);
            const cplx tm = u.at(i, st.first + 1);
            const cplx ut = st.w[0] * (u.at(i, st.first) - tm) + st.w[2] * (u.at(i, st.first + 2) - tm);
            cplx lu = ut - I * deg * ux;
            if (spec.has_post_map()) lu *= spec.hprime(xs[i], ts[j]);
            out.at(i, j) = lu;
        }
    }
    return out;
}

/// Trapezoidal integral of a grid function over the domain.
[[nodiscard]] inline cplx integrate_area(const GridFunction& u) {
    const auto& g = *u.grid();
    const auto wx = g.weights_x();
    const auto wt = g.weights_t();
    CompensatedComplexSum acc;
    for (std::size_t j = 0; j < g.nt(); ++j)
        for (std::size_t i = 0; i < g.nx(); ++i) acc.add(wx[i] * wt[j] * u.at(i, j));
    return acc.value();
}

/// Discrete L^p norm with trapezoidal weights; nodes outside `mask` (when
/// given) are skipped. p = infinity gives the sup norm.
[[nodiscard]] inline double lp_norm(const GridFunction& u, double p, const NodeMask* mask = nullptr) {
    require(p >= 1.0, "lp_norm: p >= 1 required");
    const auto& g = *u.grid();
    const auto wx = g.weights_x();
    const auto wt = g.weights_t();
    if (std::isinf(p)) {
        double m = 0.0;
        for (std::size_t k = 0; k < u.size(); ++k)
            if (!mask || (*mask)[k]) m = std::max(m, std::abs(u[k]));
        return m;
    }
    CompensatedSum acc;
    for (std::size_t j = 0; j < g.nt(); ++j) {
        for (std::size_t i = 0; i < g.nx(); ++i) {
            const std::size_t k = g.index(i, j);
            if (mask && !(*mask)[k]) continue;
            const double a = std::abs(u[k]);
            if (a == 0.0) continue;
            acc.add(wx[i] * wt[j] * std::pow(a, p));
        }
    }
    return std::pow(acc.value(), 1.0 / p);
}

[[nodiscard]] inline double sup_norm(const GridFunction& u, const NodeMask* mask = nullptr) {
    return lp_norm(u, std::numeric_limits<double>::infinity(), mask);
}

/// Discrete L^2 mean over the selected nodes, sqrt(sum w|u|^2 / sum w).
[[nodiscard]] inline double l2_mean(const GridFunction& u, const NodeMask& mask) {
    const auto& g = *u.grid();
    const auto wx = g.weights_x();
    const auto wt = g.weights_t();
    CompensatedSum num;
    CompensatedSum den;
    for (std::size_t j = 0; j < g.nt(); ++j) {
        for (std::size_t i = 0; i < g.nx(); ++i) {
            const std::size_t k = g.index(i, j);
            if (!mask[k]) continue;
            const double w = wx[i] * wt[j];
            num.add(w * std::norm(u[k]));
            den.add(w);
        }
    }
    return den.value() > 0.0 ? std::sqrt(num.value() / den.value()) : 0.0;
}

/// Nodes whose distance to the boundary is at least `margin` in both the x and
/// t directions (margin = 0 keeps all non-boundary nodes).
[[nodiscard]] inline NodeMask interior_mask(const Grid& g, double margin = 0.0) {
    NodeMask m(g.size(), 0);
    const auto& d = g.domain();
    const auto xs = g.x();
    const auto ts = g.t();
    for (std::size_t j = 0; j < g.nt(); ++j) {
        for (std::size_t i = 0; i < g.nx(); ++i) {
            if (g.on_boundary(i, j)) continue;
            const bool inside = xs[i] - d.x_min >= margin && d.x_max - xs[i] >= margin &&
                                ts[j] - d.t_min >= margin && d.t_max - ts[j] >= margin;
            if (inside) m[g.index(i, j)] = 1;
        }
    }
    return m;
}

/// Removes every node within `band` index steps (in either axis) of a sign
/// change of `level` between neighbouring nodes.
inline void exclude_level_set_band(const Grid& g, NodeMask& mask, const std::function<double(double, double)>& level,
                                   std::size_t band = 3) {
    const auto xs = g.x();
    const auto ts = g.t();
    std::vector<double> phi(g.size());
    for (std::size_t j = 0; j < g.nt(); ++j)
        for (std::size_t i = 0; i < g.nx(); ++i) phi[g.index(i, j)] = level(xs[i], ts[j]);
    NodeMask touched(g.size(), 0);
    auto mark = [&](std::size_t i, std::size_t j) {
        const std::size_t i0 = i >= band ? i - band : 0;
        const std::size_t j0 = j >= band ? j - band : 0;
        const std::size_t i1 = std::min(g.nx() - 1, i + band + 1);
        const std::size_t j1 = std::min(g.nt() - 1, j + band + 1);
        for (std::size_t jj = j0; jj <= j1; ++jj)
            for (std::size_t ii = i0; ii <= i1; ++ii) touched[g.index(ii, jj)] = 1;
    };
    for (std::size_t j = 0; j < g.nt(); ++j) {
        for (std::size_t i = 0; i < g.nx(); ++i) {
            const double a = phi[g.index(i, j)];
            if (a == 0.0) { mark(i, j); continue; }
            if (i + 1 < g.nx() && (a > 0.0) != (phi[g.index(i + 1, j)] > 0.0)) mark(i, j);
            if (j + 1 < g.nt() && (a > 0.0) != (phi[g.index(i, j + 1)] > 0.0)) mark(i, j);
        }
    }
    for (std::size_t k = 0; k < mask.size(); ++k)
        if (touched[k]) mask[k] = 0;
}

} // namespace hypocx
