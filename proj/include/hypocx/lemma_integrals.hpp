#pragma once

#include <algorithm>
#include <cmath>
#include <exception>
#include <vector>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "hypocx/common.hpp"
#include "hypocx/quadrature.hpp"

namespace hypocx {

namespace detail {

using TanhSinh = boost::math::quadrature::tanh_sinh<double>;

// A point of a segment [a, b] as handed out by tanh-sinh: the nearer endpoint
// and the exact signed offset from it.
struct SegmentPoint {
    double x;
    double anchor;
    double offset;

    // Signed distance x - p for a breakpoint p that may coincide with the
    // anchor modulo `period` (0 for no periodicity).
    [[nodiscard]] double distance_to(double p, double period = 0.0) const noexcept {
        double base = anchor - p;
        if (period > 0.0) base -= period * std::round(base / period);
        return base + offset;
    }
};

struct NestedStatus {
    bool converged = true;
    double error = 0.0;
};

// Integrates g(SegmentPoint) over consecutive breakpoints.
template <class G>
double integrate_segments(TanhSinh& ts, const std::vector<double>& pts, double tol, NestedStatus& st, G&& g) {
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
        const double a = pts[k];
        const double b = pts[k + 1];
        if (!(b > a)) continue;
        auto f = [&](double x, double xc) {
            const SegmentPoint sp{x, xc < 0.0 ? a : b, -xc};
            return g(sp);
        };
        double err = 0.0;
        double l1 = 0.0;
        std::size_t levels = 0;
        double v = 0.0;
        try {
            v = ts.integrate(f, a, b, tol, &err, &l1, &levels);
        } catch (const std::exception&) {
            st.converged = false;
            v = 0.0;
        }
        // Boost leaves the absolute error in unit-interval scale.
        err *= 0.5 * (b - a);
        st.error += err;
        total += v;
    }
    return total;
}

inline std::vector<double> sorted_breaks(std::vector<double> pts, double lo, double hi) {
    std::vector<double> out{lo, hi};
    for (double p : pts)
        if (p > lo && p < hi) out.push_back(p);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

// Theta(r) = int_0^{2pi} |g + r sin th|^{-tau} dth = 2 int_0^pi |g - r cos ph|^{-tau} dph,
// with g = |gamma|. `dg` is r - g computed without cancellation. The factor
// r^{-tau} is pulled out so that tiny radii do not underflow.
inline double line_theta_integral(TanhSinh& ts, double r, double g, double dg, double tau, double tol,
                                  NestedStatus& st) {
    if (r == 0.0) return 2.0 * pi * std::pow(g, -tau);
    const double rt = std::pow(r, -tau);
    if (dg > 0.0) {
        const double root = 2.0 * std::asin(std::sqrt(dg / (2.0 * r)));
        const std::vector<double> pts{0.0, root, pi};
        return 2.0 * rt * integrate_segments(ts, pts, tol, st, [&](const SegmentPoint& sp) {
                   const double e = sp.distance_to(root);
                   return std::pow(2.0 * std::abs(std::sin(0.5 * (sp.x + root))), -tau) *
                          std::pow(std::abs(std::sin(0.5 * e)), -tau);
               });
    }
    const std::vector<double> pts{0.0, pi};
    const double gap = -dg / r;
    return 2.0 * rt * integrate_segments(ts, pts, tol, st, [&](const SegmentPoint& sp) {
               const double s = std::sin(0.5 * sp.x);
               return std::pow(gap + 2.0 * s * s, -tau);
           });
}

inline void check_tau(double tau) { require(tau > 0.0 && tau < 1.0, "tau must lie in (0,1)"); }

} // namespace detail

/// I = int_0^{2pi} int_0^R dr dth / (|gamma + r sin th|^tau r^{q-1}).
[[nodiscard]] inline QuadResult integrate_I(double R, double gamma, double tau, double q,
                                            const QuadratureConfig& cfg = {}) {
    cfg.validate();
    require(R > 0.0, "integrate_I: R > 0 required");
    detail::check_tau(tau);
    require(q > 1.0 && q < 2.0 - tau, "integrate_I: 1 < q < 2 - tau required");
    const auto depth = static_cast<std::size_t>(cfg.max_depth);
    detail::TanhSinh outer(depth, 1e-150);
    detail::TanhSinh inner(depth, 1e-200);
    const double g = std::abs(gamma);
    detail::NestedStatus st;
    const auto pts = detail::sorted_breaks({g}, 0.0, R);
    const double v = detail::integrate_segments(outer, pts, cfg.rel_tol, st, [&](const detail::SegmentPoint& sp) {
        const double r = sp.anchor == 0.0 ? sp.offset : sp.x;
        const double dg = sp.distance_to(g);
        return detail::line_theta_integral(inner, r, g, dg, tau, cfg.rel_tol, st) * std::pow(r, 1.0 - q);
    });
    return {v, st.error, st.converged};
}

/// int_delta^R int_0^{2pi} dth dr / (|gamma + r sin th|^tau r^{m+1}).
[[nodiscard]] inline QuadResult integrate_delta(double delta, double R, double gamma, double tau, double m,
                                                const QuadratureConfig& cfg = {}) {
    cfg.validate();
    require(delta > 0.0 && delta < R, "integrate_delta: 0 < delta < R required");
    detail::check_tau(tau);
    require(m > 0.0, "integrate_delta: m > 0 required");
    require(gamma >= 0.0 && gamma < R, "integrate_delta: 0 <= gamma < R required");
    const auto depth = static_cast<std::size_t>(cfg.max_depth);
    detail::TanhSinh outer(depth, 1e-150);
    detail::TanhSinh inner(depth, 1e-200);
    detail::NestedStatus st;
    const auto pts = detail::sorted_breaks({gamma}, delta, R);
    const double v = detail::integrate_segments(outer, pts, cfg.rel_tol, st, [&](const detail::SegmentPoint& sp) {
        const double r = sp.x;
        const double dg = sp.distance_to(gamma);
        return detail::line_theta_integral(inner, r, gamma, dg, tau, cfg.rel_tol, st) * std::pow(r, -m - 1.0);
    });
    return {v, st.error, st.converged};
}

namespace detail {

// A singular angle of the H-kernel's inner integrand, located at
// center + off with `scale` the width of the nearby feature.
struct AngleMark {
    double center;
    double off;
    double scale;
    std::size_t cluster = 0;
    double local = 0.0;
};

struct AngleCluster {
    double center;
    double lo;
    double hi;
    std::vector<double> breaks;
};

// Groups the marks into clusters (centers closer than 1e-3 merge), assigns
// each cluster an arc of the circle and lists breakpoints in local
// coordinates. Integrating in local coordinates keeps breakpoints at tiny
// distances from a singular angle representable.
inline std::vector<AngleCluster> build_clusters(std::vector<AngleMark>& marks) {
    const double two_pi = 2.0 * pi;
    std::vector<AngleCluster> cl;
    for (auto& m : marks) {
        std::size_t k = 0;
        for (; k < cl.size(); ++k)
            if (std::abs(std::remainder(m.center - cl[k].center, two_pi)) < 1e-3) break;
        if (k == cl.size()) cl.push_back({m.center, 0.0, 0.0, {}});
        m.cluster = k;
        m.local = std::remainder(m.center - cl[k].center, two_pi) + m.off;
    }
    std::vector<std::size_t> order(cl.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    auto pos = [&](std::size_t k) { return std::remainder(cl[k].center, two_pi); };
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return pos(a) < pos(b); });
    const std::size_t n = order.size();
    for (std::size_t idx = 0; idx < n; ++idx) {
        auto& c = cl[order[idx]];
        if (n == 1) {
            c.lo = -pi;
            c.hi = pi;
        } else {
            const double prev = pos(order[(idx + n - 1) % n]);
            const double next = pos(order[(idx + 1) % n]);
            const double here = pos(order[idx]);
            double gap_prev = here - prev;
            if (gap_prev <= 0.0) gap_prev += two_pi;
            double gap_next = next - here;
            if (gap_next <= 0.0) gap_next += two_pi;
            c.lo = -0.5 * gap_prev;
            c.hi = 0.5 * gap_next;
        }
    }
    for (const auto& m : marks) {
        auto& c = cl[m.cluster];
        c.breaks.push_back(m.local);
        for (double x = m.scale; x > 0.0 && x < 0.5; x *= 1e4) {
            c.breaks.push_back(m.local + x);
            c.breaks.push_back(m.local - x);
        }
    }
    for (auto& c : cl) c.breaks = sorted_breaks(c.breaks, c.lo, c.hi);
    return cl;
}

} // namespace detail

/// H = int_0^{2pi} int_0^R r dr dth / (|gamma + r sin(th+phi)|^tau r^q |r e^{i th} - 1|^q).
[[nodiscard]] inline QuadResult integrate_H(double R, double gamma, double tau, double q, double phi,
                                            const QuadratureConfig& cfg = {}) {
    cfg.validate();
    require(R > 0.0, "integrate_H: R > 0 required");
    require(gamma >= 0.0, "integrate_H: gamma >= 0 required");
    detail::check_tau(tau);
    require(q >= 1.0 && q < 2.0 - tau, "integrate_H: 1 <= q < 2 - tau required");
    require(phi >= 0.0 && phi <= pi, "integrate_H: 0 <= phi <= pi required");
    const auto depth = static_cast<std::size_t>(cfg.max_depth);
    detail::TanhSinh outer(depth, 1e-150);
    detail::TanhSinh inner(depth, 1e-200);
    const double two_pi = 2.0 * pi;
    const double line_center = std::remainder(1.5 * pi - phi, two_pi);
    detail::NestedStatus st;
    const auto rpts = detail::sorted_breaks({gamma, 1.0}, 0.0, R);
    const double v = detail::integrate_segments(outer, rpts, cfg.rel_tol, st, [&](const detail::SegmentPoint& rp) {
        const double r = rp.anchor == 0.0 ? rp.offset : rp.x;
        const double dg = rp.distance_to(gamma);
        const double d1 = rp.distance_to(1.0);
        const bool roots = dg > 0.0;
        // Marks: [0] point singularity, [1] (and [2]) the line's roots or apex.
        std::vector<detail::AngleMark> marks{{0.0, 0.0, std::abs(d1)}};
        if (roots) {
            const double hw = 2.0 * std::asin(std::sqrt(dg / (2.0 * r)));  // acos(gamma / r)
            if (hw < 1e-3) {
                marks.push_back({line_center, -hw, 1e4 * hw});
                marks.push_back({line_center, hw, 1e4 * hw});
            } else {
                marks.push_back({line_center - hw, 0.0, 0.0});
                marks.push_back({line_center + hw, 0.0, 0.0});
            }
        } else {
            marks.push_back({line_center, 0.0, std::sqrt(-dg / r)});
        }
        const auto clusters = detail::build_clusters(marks);
        auto dist = [&](std::size_t k, const detail::SegmentPoint& sp, const detail::AngleMark& m) {
            const double shift = std::remainder(clusters[k].center - clusters[m.cluster].center, two_pi);
            return (shift + sp.anchor - m.local) + sp.offset;
        };
        double inner_val = 0.0;
        for (std::size_t k = 0; k < clusters.size(); ++k) {
            inner_val += detail::integrate_segments(inner, clusters[k].breaks, cfg.rel_tol, st,
                                                    [&](const detail::SegmentPoint& tp) {
                double line_w = 0.0;
                if (roots) {
                    const double ea = dist(k, tp, marks[1]);
                    const double eb = dist(k, tp, marks[2]);
                    line_w = std::pow(2.0 * std::abs(std::sin(0.5 * ea)), -tau) *
                             std::pow(std::abs(std::sin(0.5 * eb)), -tau);
                } else {
                    const double s = std::sin(0.5 * dist(k, tp, marks[1]));
                    line_w = std::pow(-dg / r + 2.0 * s * s, -tau);
                }
                const double s0 = std::sin(0.5 * dist(k, tp, marks[0]));
                const double point = std::hypot(d1, 2.0 * std::sqrt(r) * s0);  // |r e^{i th} - 1|
                return line_w * std::pow(point, -q);
            });
        }
        return inner_val * std::pow(r, 1.0 - q - tau);
    });
    return {v, st.error, st.converged};
}

/// C(tau) = int_0^{2pi} |sin th|^{-tau} dth in closed form.
[[nodiscard]] inline double line_constant(double tau) {
    detail::check_tau(tau);
    return 2.0 * std::beta(0.5, 0.5 * (1.0 - tau));
}

} // namespace hypocx
