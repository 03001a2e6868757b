#include <gtest/gtest.h>

#include <cmath>
#include <cstring>

#include "hypocx/catalog.hpp"
#include "hypocx/cauchy_op.hpp"
#include "hypocx/operators.hpp"
#include "hypocx/parallel.hpp"
#include "hypocx/verification.hpp"

using namespace hypocx;

namespace {

GridPtr square(std::size_t n, double sigma, double half = 1.0) {
    return Grid::make(Domain::make(-half, half, -half, half), n, n, default_grading(sigma));
}

bool bitwise_equal(const GridFunction& a, const GridFunction& b) {
    return a.size() == b.size() && std::memcmp(a.values().data(), b.values().data(), a.size() * sizeof(cplx)) == 0;
}

} // namespace

TEST(CauchyOperator, DiskIndicatorClosedFormAtSigmaZero) {
    // (1/pi) int_D dA / (z - zeta) is conj(z) inside and 1/z outside, so T 1_D = i conj(z)/2 and i/(2z).
    const auto spec = VectorFieldSpec::model(0.0);
    const auto g = Grid::make(Domain::make(-1.5, 1.5, -1.5, 1.5), 192, 192, 1.0);
    const auto f = GridFunction::sample(g, catalog_function("disk_indicator", spec).eval);
    const CauchyOperator op(spec, g);
    const std::vector<Target> tg{{0.0, 0.0}, {0.5, 0.0}, {0.0, 0.5}, {-0.3, 0.4}, {1.2, 0.3}};
    const auto r = op.apply(f, tg);
    for (std::size_t k = 0; k < tg.size(); ++k) {
        const cplx z{tg[k].x, tg[k].t};
        const cplx exact = std::abs(z) < 1.0 ? I * std::conj(z) / 2.0 : I / (2.0 * z);
        EXPECT_LT(std::abs(r.values[k] - exact), 0.02 * std::max(std::abs(exact), 0.25)) << k;
    }
    EXPECT_TRUE(r.all_converged());
}

TEST(CauchyOperator, PlanAgreesWithPerTargetPath) {
    for (double sigma : {0.5, 1.0, 2.0}) {
        const auto spec = VectorFieldSpec::model(sigma);
        const auto g = square(24, sigma);
        const CauchyOperator op(spec, g);
        ASSERT_TRUE(op.uses_plan());
        const auto f = GridFunction::sample(g, [](double x, double t) { return cplx(1.0 + x, t * t - 0.3 * x); });
        const auto full = op.apply(f);
        std::vector<Target> tg;
        for (std::size_t j = 0; j < g->nt(); j += 5)
            for (std::size_t i = 0; i < g->nx(); i += 3) tg.push_back({g->x()[i], g->t()[j]});
        const auto pt = op.apply(f, tg);
        std::size_t k = 0;
        for (std::size_t j = 0; j < g->nt(); j += 5)
            for (std::size_t i = 0; i < g->nx(); i += 3, ++k)
                EXPECT_LT(std::abs(full.values.at(i, j) - pt.values[k]), 1e-8 * (1.0 + std::abs(pt.values[k])))
                    << sigma << " " << i << " " << j;
    }
}

TEST(CauchyOperator, Linearity) {
    const auto spec = VectorFieldSpec::model(1.0);
    const auto g = square(32, 1.0);
    const CauchyOperator op(spec, g);
    const auto f1 = GridFunction::sample(g, [](double x, double t) { return cplx(std::cos(x), t); });
    const auto f2 = GridFunction::sample(g, [](double x, double t) { return cplx(x * t, 1.0); });
    const cplx a{0.7, -1.2}, b{-2.0, 0.4};
    GridFunction mix(g);
    for (std::size_t n = 0; n < mix.size(); ++n) mix[n] = a * f1[n] + b * f2[n];
    const auto u1 = op.apply(f1).values, u2 = op.apply(f2).values, um = op.apply(mix).values;
    double worst = 0.0;
    for (std::size_t n = 0; n < um.size(); ++n)
        worst = std::max(worst, std::abs(um[n] - (a * u1[n] + b * u2[n])) / (1.0 + std::abs(um[n])));
    EXPECT_LT(worst, 1e-12);
}

TEST(CauchyOperator, TranslationInX) {
    const auto spec = VectorFieldSpec::model(1.0);
    const auto g0 = Grid::make(Domain::make(-1, 1, -1, 1), 32, 32, 2.0);
    const auto g1 = Grid::make(Domain::make(2, 4, -1, 1), 32, 32, 2.0);
    auto fx = [](double x) { return [x](double xx, double t) { return cplx(std::sin(3.0 * (xx - x)), t); }; };
    const auto u0 = CauchyOperator(spec, g0).apply(GridFunction::sample(g0, fx(0.0))).values;
    const auto u1 = CauchyOperator(spec, g1).apply(GridFunction::sample(g1, fx(3.0))).values;
    for (std::size_t n = 0; n < u0.size(); ++n) EXPECT_LT(std::abs(u0[n] - u1[n]), 1e-10 * (1.0 + std::abs(u0[n])));
}

TEST(CauchyOperator, ReflectionSymmetryForEvenRealData) {
    // Z(x, -t) = conj Z(x, t) gives T f(x, -t) = -conj T f(x, t) for real f even in t.
    const auto spec = VectorFieldSpec::model(1.0);
    const auto g = square(32, 1.0);
    const auto f = GridFunction::sample(g, [](double x, double t) { return 1.0 + x * x + t * t; });
    const auto u = CauchyOperator(spec, g).apply(f).values;
    for (std::size_t j = 0; j < g->nt(); ++j)
        for (std::size_t i = 0; i < g->nx(); ++i)
            EXPECT_LT(std::abs(u.at(i, j) + std::conj(u.at(i, g->mirror_row(j)))), 1e-10 * (1.0 + std::abs(u.at(i, j))));
}

TEST(CauchyOperator, TargetOnCharacteristicLineStable) {
    const auto spec = VectorFieldSpec::model(1.0);
    std::vector<cplx> v;
    for (std::size_t n : {32u, 64u, 128u}) {
        const auto g = square(n, 1.0);
        const Target tg[] = {{0.2, 0.0}};
        const auto r = CauchyOperator(spec, g).apply(GridFunction(g, 1.0), tg);
        ASSERT_TRUE(r.all_converged());
        v.push_back(r.values[0]);
    }
    EXPECT_TRUE(std::isfinite(v[2].real()) && std::isfinite(v[2].imag()));
    EXPECT_LT(std::abs(v[2] - v[1]), std::abs(v[1] - v[0]));
    EXPECT_LT(std::abs(v[2] - v[1]), 1e-3 * std::abs(v[2]));
}

TEST(CauchyOperator, ZeroInZeroOut) {
    const auto spec = VectorFieldSpec::model(1.0);
    const auto g = square(16, 1.0);
    const auto r = CauchyOperator(spec, g).apply(GridFunction(g));
    EXPECT_EQ(sup_norm(r.values), 0.0);
    EXPECT_TRUE(r.all_converged());
}

TEST(CauchyOperator, RightInverseOfL) {
    for (double sigma : {0.5, 1.0, 2.0}) {
        const auto spec = VectorFieldSpec::model(sigma);
        const std::size_t levels[] = {48, 96};
        for (const char* name : {"constant", "x"}) {
            const auto rep = verify_solution(catalog_function(name, spec), spec, Domain::make(-1, 1, -1, 1), levels);
            EXPECT_LT(rep.levels.back().max_residual, rep.levels.front().max_residual) << sigma << name;
            EXPECT_LT(rep.levels.back().max_residual, 2e-2) << sigma << name;
            EXPECT_GT(rep.order_max, 1.0) << sigma << name;
        }
    }
}

TEST(CauchyOperator, PostMapRightInverse) {
    const auto g = square(64, 1.0);
    const auto spec = VectorFieldSpec::with_post_map(1.0, Polynomial({0.0, 1.0, 0.2}), *g);
    const CauchyOperator op(spec, g);
    const auto f = GridFunction::sample(g, [](double, double) { return 1.0; });
    const auto u = op.apply(f).values;
    const auto r = apply_L(spec, u) - f;
    const auto mask = residual_mask(*g, {});
    EXPECT_LT(sup_norm(r, &mask), 2e-2);
}

TEST(CauchyOperator, BitwiseDeterministicAcrossThreadCounts) {
    const auto spec = VectorFieldSpec::model(1.0);
    const auto g = square(32, 1.0);
    const auto f = GridFunction::sample(g, [](double x, double t) { return cplx(x, std::abs(t)); });
    std::vector<Target> tg{{0.1, 0.2}, {-0.5, 0.0}, {0.9, -0.7}};
    set_thread_count(1);
    const CauchyOperator op1(spec, g);
    const auto a = op1.apply(f);
    const auto at = op1.apply(f, tg);
    set_thread_count(3);
    const CauchyOperator op3(spec, g);
    const auto b = op3.apply(f);
    const auto bt = op3.apply(f, tg);
    set_thread_count(0);
    EXPECT_TRUE(bitwise_equal(a.values, b.values));
    for (std::size_t k = 0; k < tg.size(); ++k) EXPECT_EQ(std::memcmp(&at.values[k], &bt.values[k], sizeof(cplx)), 0);
}

TEST(CauchyOperator, PerTargetFallbackWhenPlanTooLarge) {
    const auto spec = VectorFieldSpec::model(1.0);
    const auto g = square(16, 1.0);
    const CauchyOperator small(spec, g, {}, 1);
    EXPECT_FALSE(small.uses_plan());
    const CauchyOperator big(spec, g);
    const auto f = GridFunction::sample(g, [](double x, double) { return cplx(x); });
    const auto a = small.apply(f).values, b = big.apply(f).values;
    for (std::size_t n = 0; n < a.size(); ++n) EXPECT_LT(std::abs(a[n] - b[n]), 1e-8 * (1.0 + std::abs(a[n])));
}

TEST(CauchyOperator, RejectsForeignGrid) {
    const auto spec = VectorFieldSpec::model(1.0);
    const CauchyOperator op(spec, square(16, 1.0));
    EXPECT_THROW((void)op.apply(GridFunction(square(8, 1.0))), InvalidArgument);
}
