#include <gtest/gtest.h>

#include <cmath>

#include "hypocx/semilinear.hpp"

using namespace hypocx;

namespace {

GridPtr square(std::size_t n) { return Grid::make(Domain::make(-1, 1, -1, 1), n, n, 2.0); }

} // namespace

TEST(Picard, ZeroCoefficientsGiveCauchyTransformExactly) {
    const auto g = square(32);
    const auto exps = make_exponents(1.0, 4.0);
    const CauchyOperator op(VectorFieldSpec::model(1.0), g);
    const GridFunction f(g, 1.0);
    const auto out = linear_solve(GridFunction(g), GridFunction(g), f, op, exps);
    const auto tf = op.apply(f).values;
    EXPECT_TRUE(out.converged);
    EXPECT_EQ(out.iterations, 2u);
    for (std::size_t n = 0; n < tf.size(); ++n) EXPECT_EQ(out.u[n], tf[n]);
}

TEST(Picard, CertifiedLinearProblemContracts) {
    const auto g = square(64);
    const auto exps = make_exponents(1.0, 4.0);
    const auto spec = VectorFieldSpec::model(1.0);
    const CauchyOperator op(spec, g);
    const auto F = linear_rhs(GridFunction(g, 0.1), GridFunction(g), GridFunction(g, 1.0), exps);
    EXPECT_NEAR(F.psi_pnorm(), 0.1 * std::pow(4.0, 0.25), 1e-12);
    const auto cert = contraction_certificate(F, op, exps);
    EXPECT_TRUE(cert.certified);
    PicardOptions opt;
    opt.m_emp = cert.m_emp;
    const auto out = picard_solve(F, op, exps, opt);
    ASSERT_TRUE(out.converged);
    EXPECT_LT(out.iterations, 30u);
    for (std::size_t k = 2; k < out.updates.size(); ++k)
        if (out.updates[k - 1] > 1e-13) {
            EXPECT_LE(out.updates[k] / out.updates[k - 1], cert.product + 1e-3);
        }
    EXPECT_EQ(out.bound_violations, 0u);
    EXPECT_LT(out.residual, 1e-2);
    // Fixed point: u = T(0.1 u + 1).
    GridFunction rhs(g);
    for (std::size_t n = 0; n < rhs.size(); ++n) rhs[n] = 0.1 * out.u[n] + 1.0;
    const auto tu = op.apply(rhs).values;
    EXPECT_LT(sup_norm(tu - out.u), 1e-7);
}

TEST(Picard, ConjugateCoefficient) {
    const auto g = square(48);
    const auto exps = make_exponents(1.0, 4.0);
    const CauchyOperator op(VectorFieldSpec::model(1.0), g);
    const auto out = linear_solve(GridFunction(g), GridFunction(g, cplx(0.0, 0.1)), GridFunction(g, 1.0), op, exps);
    ASSERT_TRUE(out.converged);
    GridFunction rhs(g);
    for (std::size_t n = 0; n < rhs.size(); ++n) rhs[n] = cplx(0.0, 0.1) * std::conj(out.u[n]) + 1.0;
    EXPECT_LT(sup_norm(op.apply(rhs).values - out.u), 1e-7);
}

TEST(Picard, HolderRhsBelowOne) {
    const auto g = square(32);
    const auto exps = make_exponents(1.0, 4.0);
    const CauchyOperator op(VectorFieldSpec::model(1.0), g);
    NodeMap F = [](std::size_t, cplx u) { return 1.0 + 0.1 * std::sqrt(std::abs(u)); };
    const auto rhs = NonlinearRHS::make(g, F, GridFunction(g, 0.1), 0.5, exps.p);
    const auto out = picard_solve(rhs, op, exps);
    EXPECT_TRUE(out.converged);
    EXPECT_THROW((void)contraction_certificate(rhs, op, exps), InvalidArgument);
}

TEST(NonlinearRHS, RejectsViolations) {
    const auto g = square(8);
    NodeMap sq = [](std::size_t, cplx u) { return u * u; };
    EXPECT_THROW((void)NonlinearRHS::make(g, sq, GridFunction(g, 1.0), 1.0, 4.0), InvalidArgument);
    NodeMap lin = [](std::size_t, cplx u) { return u; };
    EXPECT_THROW((void)NonlinearRHS::make(g, lin, GridFunction(g, -1.0), 1.0, 4.0), InvalidArgument);
    EXPECT_THROW((void)NonlinearRHS::make(g, lin, GridFunction(g, 1.0), 1.5, 4.0), InvalidArgument);
    EXPECT_NO_THROW((void)NonlinearRHS::make(g, lin, GridFunction(g, 1.0), 1.0, 4.0));
}

TEST(Picard, OptionValidation) {
    const auto g = square(8);
    const auto exps = make_exponents(1.0, 4.0);
    const CauchyOperator op(VectorFieldSpec::model(1.0), g);
    PicardOptions o;
    o.relax = 0.0;
    EXPECT_THROW((void)linear_solve(GridFunction(g), GridFunction(g), GridFunction(g), op, exps, o), InvalidArgument);
}

TEST(BoundedRhs, SolvesAndChecksBound) {
    const auto g = square(32);
    const CauchyOperator op(VectorFieldSpec::model(1.0), g);
    BoundedMap H = [](double, double, cplx u) { return cplx(std::sin(u.real()), 0.0); };
    const auto out = bounded_rhs_solve(GridFunction(g, 0.1), GridFunction(g, 1.0), H, 2.0, op);
    EXPECT_TRUE(out.converged);
    EXPECT_THROW((void)bounded_rhs_solve(GridFunction(g, 0.1), GridFunction(g, 1.0), H, 0.5, op), InvalidArgument);
}

TEST(Picard, ZeroMapGivesZero) {
    const auto g = square(16);
    const CauchyOperator op(VectorFieldSpec::model(1.0), g);
    const auto out = linear_solve(GridFunction(g), GridFunction(g), GridFunction(g), op, make_exponents(1.0, 4.0));
    EXPECT_TRUE(out.converged);
    EXPECT_EQ(sup_norm(out.u), 0.0);
}

TEST(Picard, RelaxationDoesNotChangeTheSolution) {
    const auto g = square(32);
    const auto exps = make_exponents(1.0, 4.0);
    const CauchyOperator op(VectorFieldSpec::model(1.0), g);
    PicardOptions half;
    half.relax = 0.5;
    const auto a = linear_solve(GridFunction(g, 0.1), GridFunction(g), GridFunction(g, 1.0), op, exps);
    const auto b = linear_solve(GridFunction(g, 0.1), GridFunction(g), GridFunction(g, 1.0), op, exps, half);
    ASSERT_TRUE(a.converged && b.converged);
    EXPECT_LT(sup_norm(a.u - b.u), 1e-7);
    EXPECT_NEAR(a.residual, b.residual, 1e-7);
}

TEST(Certificate, HomogeneousInPsi) {
    const auto g = square(24);
    const auto exps = make_exponents(1.0, 4.0);
    const CauchyOperator op(VectorFieldSpec::model(1.0), g);
    const auto c1 = contraction_certificate(linear_rhs(GridFunction(g, 0.01), GridFunction(g), GridFunction(g), exps), op, exps);
    const auto c10 = contraction_certificate(linear_rhs(GridFunction(g, 0.1), GridFunction(g), GridFunction(g), exps), op, exps);
    EXPECT_NEAR(c10.product, 10.0 * c1.product, 1e-12 * c10.product);
    const auto c0 = contraction_certificate(linear_rhs(GridFunction(g), GridFunction(g), GridFunction(g), exps), op, exps);
    EXPECT_EQ(c0.product, 0.0);
    EXPECT_TRUE(c0.certified);
}

TEST(BoundedRhs, TrivialFactorsAndRefinement) {
    const auto spec = VectorFieldSpec::model(1.0);
    BoundedMap H = [](double, double, cplx u) { return u / (1.0 + std::abs(u)); };
    BoundedMap zero = [](double, double, cplx) { return cplx(0.0); };
    std::vector<double> res;
    for (std::size_t n : {32u, 64u}) {
        const auto g = square(n);
        const CauchyOperator op(spec, g);
        const GridFunction f(g, 1.0);
        const auto tf = op.apply(f).values;
        const auto z = bounded_rhs_solve(GridFunction(g, 0.3), f, zero, 1.0, op);
        const auto gz = bounded_rhs_solve(GridFunction(g), f, H, 1.0, op);
        EXPECT_LT(sup_norm(z.u - tf), 1e-14);
        EXPECT_LT(sup_norm(gz.u - tf), 1e-14);
        const auto out = bounded_rhs_solve(GridFunction(g, 0.2), f, H, 1.0, op);
        EXPECT_TRUE(out.converged);
        res.push_back(out.residual);
    }
    EXPECT_LT(res[1], res[0]);
}
