#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "hypocx/exponents.hpp"
#include "hypocx/grid.hpp"
#include "hypocx/summation.hpp"
#include "hypocx/vector_field.hpp"

namespace hypocx {

struct HolderStratum {
    double dz_lo = 0.0;  // [dz_lo, 10 dz_lo)
    std::size_t pairs = 0;
    double max_ratio = 0.0;
};

struct HolderReport {
    double alpha = 0.0;
    double max_ratio = 0.0;  // max |du| / |dZ|^alpha
    double slope = 0.0;      // least squares of log|du| on log|dZ|; NaN without pairs with du != 0
    std::size_t pairs = 0;
    std::vector<HolderStratum> strata;
};

struct HolderOptions {
    std::size_t pair_budget = 4000;
    std::uint64_t seed = 1;
    std::size_t max_decades = 8;
};

/// Samples node pairs stratified by the decade of |Z(p1) - Z(p0)| and
/// reports the Hoelder quotient at exponent exps.alpha. Pairs are drawn as a
/// random node plus an index offset of random dyadic size, and each decade
/// keeps at most pair_budget / decades pairs. `mask` (optional) restricts
/// both nodes.
[[nodiscard]] inline HolderReport holder_scan(const GridFunction& u, const VectorFieldSpec& spec,
                                              const ExponentSet& exps, const HolderOptions& opt = {},
                                              const NodeMask* mask = nullptr) {
    require(opt.pair_budget >= 1000, "holder_scan: pair_budget >= 1000 required");
    require(opt.max_decades >= 1, "holder_scan: max_decades >= 1 required");
    const auto& g = *u.grid();
    require(!mask || mask->size() == g.size(), "holder_scan: mask size mismatch");
    std::vector<std::size_t> nodes;
    for (std::size_t n = 0; n < g.size(); ++n)
        if (!mask || (*mask)[n]) nodes.push_back(n);
    HolderReport rep;
    rep.alpha = exps.alpha;
    if (nodes.size() < 2) return rep;

    std::vector<cplx> z(g.size());
    for (std::size_t j = 0; j < g.nt(); ++j)
        for (std::size_t i = 0; i < g.nx(); ++i) z[g.index(i, j)] = spec.eval_Z(g.x()[i], g.t()[j]);
    double re0 = std::numeric_limits<double>::infinity(), re1 = -re0, im0 = re0, im1 = -re0;
    for (std::size_t n : nodes) {
        re0 = std::min(re0, z[n].real());
        re1 = std::max(re1, z[n].real());
        im0 = std::min(im0, z[n].imag());
        im1 = std::max(im1, z[n].imag());
    }
    const double diam = std::hypot(re1 - re0, im1 - im0);
    const double top = std::floor(std::log10(diam));
    const std::size_t nd = opt.max_decades;
    const std::size_t cap = std::max<std::size_t>(1, opt.pair_budget / nd);
    rep.strata.resize(nd);
    for (std::size_t k = 0; k < nd; ++k) rep.strata[k].dz_lo = std::pow(10.0, top - double(nd - 1 - k));

    std::mt19937_64 rng(opt.seed);
    std::uniform_int_distribution<std::size_t> pick(0, nodes.size() - 1);
    const double max_level = std::log2(double(std::max(g.nx(), g.nt())));
    std::uniform_real_distribution<double> level(0.0, max_level);
    CompensatedSum sx, sy, sxx, sxy;
    std::size_t reg = 0;
    std::size_t filled = 0;
    const std::size_t attempts = 50 * opt.pair_budget;
    for (std::size_t a = 0; a < attempts && filled < nd; ++a) {
        const std::size_t n0 = nodes[pick(rng)];
        const auto m = static_cast<long>(std::lround(std::exp2(level(rng))));
        std::uniform_int_distribution<long> off(-m, m);
        const long i1 = long(n0 % g.nx()) + off(rng);
        const long j1 = long(n0 / g.nx()) + off(rng);
        if (i1 < 0 || j1 < 0 || i1 >= long(g.nx()) || j1 >= long(g.nt())) continue;
        const std::size_t n1 = g.index(std::size_t(i1), std::size_t(j1));
        if (n1 == n0 || (mask && !(*mask)[n1])) continue;
        const double dz = std::abs(z[n1] - z[n0]);
        if (!(dz > 0.0)) continue;
        const double dec = std::floor(std::log10(dz));
        const double k = dec - (top - double(nd - 1));
        if (k < 0.0 || k >= double(nd)) continue;
        auto& st = rep.strata[std::size_t(k)];
        if (st.pairs >= cap) continue;
        if (++st.pairs == cap) ++filled;
        const double du = std::abs(u[n1] - u[n0]);
        const double ratio = du / std::pow(dz, exps.alpha);
        st.max_ratio = std::max(st.max_ratio, ratio);
        rep.max_ratio = std::max(rep.max_ratio, ratio);
        ++rep.pairs;
        if (du > 0.0) {
            const double lx = std::log(dz);
            const double ly = std::log(du);
            sx.add(lx);
            sy.add(ly);
            sxx.add(lx * lx);
            sxy.add(lx * ly);
            ++reg;
        }
    }
    if (reg >= 2) {
        const double nn = double(reg);
        const double den = sxx.value() - sx.value() * sx.value() / nn;
        rep.slope = den > 0.0 ? (sxy.value() - sx.value() * sy.value() / nn) / den : std::numeric_limits<double>::quiet_NaN();
    } else {
        rep.slope = std::numeric_limits<double>::quiet_NaN();
    }
    return rep;
}

} // namespace hypocx
