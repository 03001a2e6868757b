#include <gtest/gtest.h>

#include <cmath>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "hypocx/lemma_integrals.hpp"
#include "hypocx/lemma_suite.hpp"

using namespace hypocx;

namespace {

// Independent nested tanh-sinh for I. The inner r integral is split at the
// singular radius r* = -gamma / sin(th); near r* the endpoint complement
// supplies |r - r*| without cancellation.
double oracle_I(double R, double gamma, double tau, double q) {
    boost::math::quadrature::tanh_sinh<double> ts(15);
    auto inner = [&](double th) {
        const double s = std::sin(th);
        const double rs = s != 0.0 ? -gamma / s : -1.0;
        auto plain = [&](double r) { return std::pow(std::abs(gamma + r * s), -tau) * std::pow(r, 1.0 - q); };
        if (!(rs > 0.0 && rs < R)) return ts.integrate(plain, 0.0, R, 1e-11);
        auto below = [&](double r, double rc) {
            const double d = rc > 0.0 ? rc : rs - r;
            return std::pow(std::abs(s) * d, -tau) * std::pow(r, 1.0 - q);
        };
        auto above = [&](double r, double rc) {
            const double d = rc < 0.0 ? -rc : r - rs;
            return std::pow(std::abs(s) * d, -tau) * std::pow(r, 1.0 - q);
        };
        return ts.integrate(below, 0.0, rs, 1e-11) + ts.integrate(above, rs, R, 1e-11);
    };
    double total = ts.integrate(inner, 0.0, pi, 1e-10);
    if (gamma > 0.0 && gamma < R) {
        // r* = R at these angles.
        const double a = pi + std::asin(gamma / R);
        const double b = 2.0 * pi - std::asin(gamma / R);
        total += ts.integrate(inner, pi, a, 1e-10) + ts.integrate(inner, a, b, 1e-10) +
                 ts.integrate(inner, b, 2.0 * pi, 1e-10);
    } else {
        total += ts.integrate(inner, pi, 2.0 * pi, 1e-10);
    }
    return total;
}

} // namespace

TEST(LemmaI, GammaZeroClosedForm) {
    for (auto [tau, q] : {std::pair{0.5, 4.0 / 3.0}, std::pair{1.0 / 3.0, 1.5}, std::pair{2.0 / 3.0, 1.25}})
        for (double R : {0.5, 1.0, 3.0}) {
            const auto r = integrate_I(R, 0.0, tau, q);
            const double e = 2.0 - tau - q;
            const double exact = line_constant(tau) * std::pow(R, e) / e;
            ASSERT_TRUE(r.converged);
            EXPECT_NEAR(r.value, exact, 1e-9 * exact);
        }
}

TEST(LemmaI, MatchesIndependentNestedQuadrature) {
    for (double gamma : {0.1, 0.5, 2.0}) {
        const auto r = integrate_I(1.0, gamma, 0.5, 4.0 / 3.0);
        const double o = oracle_I(1.0, gamma, 0.5, 4.0 / 3.0);
        EXPECT_NEAR(r.value, o, 1e-5 * o) << gamma;
    }
}

TEST(LemmaI, ScalingHomogeneity) {
    // I(2R, 2 gamma) = 2^{2 - tau - q} I(R, gamma).
    for (double gamma : {0.0, 0.3, 1.0}) {
        const double a = integrate_I(1.0, gamma, 0.5, 1.4).value;
        const double b = integrate_I(2.0, 2.0 * gamma, 0.5, 1.4).value;
        EXPECT_NEAR(b / a, std::pow(2.0, 2.0 - 0.5 - 1.4), 1e-8);
    }
}

TEST(LemmaI, DecreasesInGamma) {
    double prev = integrate_I(1.0, 0.0, 0.5, 4.0 / 3.0).value;
    for (double g : {0.2, 0.8, 3.0, 10.0}) {
        const double v = integrate_I(1.0, g, 0.5, 4.0 / 3.0).value;
        EXPECT_LT(v, prev);
        prev = v;
    }
}

TEST(LemmaI, RejectsOutOfRange) {
    EXPECT_THROW((void)integrate_I(1.0, 0.0, 0.5, 1.6), InvalidArgument);
    EXPECT_THROW((void)integrate_I(-1.0, 0.0, 0.5, 1.3), InvalidArgument);
    EXPECT_THROW((void)integrate_I(1.0, 0.0, 1.0, 1.3), InvalidArgument);
}

TEST(LemmaH, HalfTurnInvariantAtGammaZero) {
    // |sin(th + phi + pi)| = |sin(th + phi)|.
    for (double R : {0.5, 2.0}) {
        const double v0 = integrate_H(R, 0.0, 0.5, 4.0 / 3.0, 0.0).value;
        EXPECT_NEAR(integrate_H(R, 0.0, 0.5, 4.0 / 3.0, pi).value, v0, 1e-7 * v0);
    }
    EXPECT_THROW((void)integrate_H(1.0, 0.0, 0.5, 4.0 / 3.0, 4.0), InvalidArgument);
}

TEST(LemmaH, ReflectionSymmetryInPhi) {
    // th -> -th maps phi to pi - phi.
    for (double gamma : {0.5, 2.0}) {
        const double a = integrate_H(10.0, gamma, 0.5, 4.0 / 3.0, pi / 4.0).value;
        const double b = integrate_H(10.0, gamma, 0.5, 4.0 / 3.0, 3.0 * pi / 4.0).value;
        EXPECT_NEAR(a, b, 1e-7 * a);
    }
}

TEST(LemmaH, BoundedUniformlyInR) {
    double prev = 0.0;
    for (double R : {0.5, 1.0, 10.0, 100.0, 1000.0}) {
        const auto r = integrate_H(R, 0.5, 0.5, 4.0 / 3.0, 0.3);
        ASSERT_TRUE(r.converged);
        EXPECT_GT(r.value, prev);
        prev = r.value;
    }
    // Converges as R grows: the tail beyond 100 is O(R^{2 - tau - 2q}).
    const double a = integrate_H(100.0, 0.5, 0.5, 4.0 / 3.0, 0.3).value;
    const double b = integrate_H(1000.0, 0.5, 0.5, 4.0 / 3.0, 0.3).value;
    EXPECT_LT((b - a) / b, 0.05);
}

TEST(LemmaDelta, GammaZeroClosedForm) {
    for (auto [tau, m] : {std::pair{0.5, 1.0}, std::pair{1.0 / 3.0, 0.5}})
        for (double d : {0.05, 0.2}) {
            const double e = m + tau;
            const double exact = line_constant(tau) * (std::pow(d, -e) - 1.0) / e;
            EXPECT_NEAR(integrate_delta(d, 1.0, 0.0, tau, m).value, exact, 1e-9 * exact);
        }
}

TEST(LemmaDelta, HalvingDeltaScalesByPowerAndEmptyRangeVanishes) {
    const double a = integrate_delta(0.002, 1.0, 0.0, 0.5, 1.0).value;
    const double b = integrate_delta(0.001, 1.0, 0.0, 0.5, 1.0).value;
    EXPECT_NEAR(b / a, std::pow(2.0, 1.5), 1e-3);
    EXPECT_LT(integrate_delta(0.999999, 1.0, 0.0, 0.5, 1.0).value, 1e-4);
}

TEST(LemmaH, SmallRadiusAndLargeGamma) {
    const auto r = integrate_H(0.4, 0.0, 0.5, 4.0 / 3.0, 0.0);
    EXPECT_TRUE(r.converged);
    EXPECT_TRUE(std::isfinite(r.value));
    // r < 1/2 gives |r e^{i th} - 1| >= 1/2, so H <= 2^q I.
    EXPECT_LT(r.value, std::pow(2.0, 4.0 / 3.0) * integrate_I(0.4, 0.0, 0.5, 4.0 / 3.0).value);
    const double far = integrate_H(1.0, 100.0, 0.5, 4.0 / 3.0, 0.0).value;
    EXPECT_LT(far, 0.05 * integrate_H(1.0, 0.0, 0.5, 4.0 / 3.0, 0.0).value);
}

TEST(Lemmas, NonincreasingInGamma) {
    EXPECT_GT(integrate_H(10.0, 0.0, 0.5, 4.0 / 3.0, 0.5).value, integrate_H(10.0, 5.0, 0.5, 4.0 / 3.0, 0.5).value);
    EXPECT_GT(integrate_delta(0.1, 1.0, 0.0, 0.5, 1.0).value, integrate_delta(0.1, 1.0, 0.9, 0.5, 1.0).value);
}

TEST(Lemmas, DepthRefinementConsistency) {
    QuadratureConfig a, b;
    b.max_depth = 2 * a.max_depth;
    for (double g : {0.0, 0.3}) {
        const double x = integrate_I(1.0, g, 0.5, 4.0 / 3.0, a).value;
        const double y = integrate_I(1.0, g, 0.5, 4.0 / 3.0, b).value;
        EXPECT_LE(std::abs(x - y), a.rel_tol * std::abs(x));
    }
}

TEST(ScanLemma, BitwiseReproducible) {
    const auto grid = default_scan_grid(Lemma::delta);
    const auto a = scan_lemma(Lemma::delta, grid);
    const auto b = scan_lemma(Lemma::delta, grid);
    for (std::size_t k = 0; k < a.rows.size(); ++k) EXPECT_EQ(a.rows[k].value, b.rows[k].value);
}

TEST(LemmaDelta, ScaledValueBounded) {
    for (double g : {0.0, 0.3, 0.9})
        for (double d : {0.01, 0.05, 0.2}) {
            const double v = integrate_delta(d, 1.0, g, 0.5, 1.0).value * std::pow(d, 1.5);
            EXPECT_LT(v, line_constant(0.5) / 1.5 * 1.0001);
        }
}

TEST(ScanLemma, DefaultGridsAreLargeEnough) {
    for (Lemma w : {Lemma::I, Lemma::H, Lemma::delta}) EXPECT_GE(default_scan_grid(w).size(), 50u);
    EXPECT_EQ(parse_lemma("delta"), Lemma::delta);
    EXPECT_THROW((void)parse_lemma("J"), InvalidArgument);
}

TEST(ScanLemma, FittedConstantBoundsEveryRowAndIsStable) {
    std::vector<LemmaTuple> grid;
    for (double R : {0.5, 1.0, 2.0})
        for (double g : {0.0, 0.1, 1.0}) grid.push_back({R, g, 0.5, 4.0 / 3.0, 0.0, 0.25, 1.0});
    QuadratureConfig a, b;
    b.max_depth = a.max_depth + 2;
    const auto ra = scan_lemma(Lemma::I, grid, a);
    const auto rb = scan_lemma(Lemma::I, grid, b);
    EXPECT_TRUE(ra.all_pass());
    ASSERT_EQ(ra.constants.size(), 1u);
    // gamma = 0 attains the constant C(tau) / (2 - tau - q).
    EXPECT_NEAR(ra.constants[0].value, line_constant(0.5) / (2.0 - 0.5 - 4.0 / 3.0), 1e-8);
    EXPECT_LT(fitted_constant_drift(ra, rb), 0.05);
}

TEST(Counterexample, FieldsAndMask) {
    const auto g = Grid::make(Domain::make(-0.125, 0.125, -1, 1), 64, 64, 2.0);
    const auto cp = make_counterexample(1.0, g, 1e-2);
    EXPECT_GT(cp.retained(), g->size() / 2);
    const auto spec = VectorFieldSpec::model(1.0);
    for (std::size_t n = 0; n < g->size(); ++n) {
        const cplx z = spec.eval_Z(g->x()[n % g->nx()], g->t()[n / g->nx()]);
        if (!cp.mask[n]) {
            EXPECT_EQ(cp.v[n], cplx(0.0));
            continue;
        }
        EXPECT_NEAR(cp.v[n].real(), std::log(std::abs(std::log(std::abs(z)))), 1e-12);
    }
    EXPECT_THROW((void)make_counterexample(1.0, Grid::make(Domain::make(0.5, 1, -1, 1), 8, 8, 2.0), 1e-2),
                 InvalidArgument);
}

TEST(Counterexample, NodeValueOnSigma) {
    // At (0.1, 0): f = 0 and v = ln ln 10.
    const auto g = Grid::make(Domain::make(-0.2, 0.2, -1, 1), 4, 8, 2.0);
    const auto cp = make_counterexample(1.0, g, 1e-2);
    const std::size_t n = g->index(3, g->sigma_row());
    ASSERT_NEAR(g->x()[3], 0.1, 1e-15);
    EXPECT_NEAR(cp.v[n].real(), std::log(std::log(10.0)), 1e-12);
    EXPECT_EQ(cp.f[n], cplx(0.0));
    EXPECT_FALSE(cp.mask[g->index(2, g->sigma_row())]);  // Z = 0
}

TEST(Counterexample, SupIncreasesAsPunctureShrinks) {
    const auto g = Grid::make(Domain::make(-0.125, 0.125, -1, 1), 128, 128, 2.0);
    const std::vector<double> ps{1e-2, 1e-3, 1e-4};
    const std::vector<double> pl{1.0, 3.0};
    const auto rows = counterexample_norms(1.0, g, ps, pl);
    for (std::size_t k = 1; k < 3; ++k) EXPECT_GT(rows[k].sup_v, rows[k - 1].sup_v);
    for (const auto& r : rows) EXPECT_LT(r.relative_change, 0.05);
}

TEST(Counterexample, ResidualDecreasesUnderRefinement) {
    double prev = 1e300;
    for (std::size_t n : {32u, 64u, 128u}) {
        const auto g = Grid::make(Domain::make(-0.125, 0.125, -1, 1), n, n, 2.0);
        const double r = counterexample_residual(make_counterexample(1.0, g, 1e-2));
        EXPECT_LT(r, prev);
        prev = r;
    }
}
