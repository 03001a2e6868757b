#include <gtest/gtest.h>

#include <cmath>

#include "hypocx/catalog.hpp"
#include "hypocx/similarity.hpp"

using namespace hypocx;

namespace {

GridPtr square(std::size_t n) { return Grid::make(Domain::make(-1, 1, -1, 1), n, n, 2.0); }

} // namespace

TEST(Witness, SeparatesHolomorphicFromNot) {
    const auto spec = VectorFieldSpec::model(1.0);
    const auto g = square(64);
    EXPECT_LT(holomorphy_witness(GridFunction::sample(g, catalog_function("Z_cubed", spec).eval), spec), 1e-2);
    EXPECT_GT(holomorphy_witness(GridFunction::sample(g, catalog_function("conj_Z", spec).eval), spec), 0.5);
    EXPECT_EQ(holomorphy_witness(GridFunction(g), spec), 0.0);
}

TEST(Decompose, ExponentialSolution) {
    // u = e^t solves L u = u.
    const auto spec = VectorFieldSpec::model(1.0);
    const auto g = square(96);
    const CauchyOperator op(spec, g);
    const auto u = GridFunction::sample(g, catalog_function("exp_t", spec).eval);
    const auto d = decompose(u, GridFunction(g, 1.0), GridFunction(g), op);
    EXPECT_LT(d.witness, 1e-2);
    EXPECT_EQ(d.thresholded_fraction, 0.0);
    EXPECT_FALSE(d.many_thresholded);
}

TEST(Decompose, HolomorphicInputIsItsOwnFactor) {
    const auto spec = VectorFieldSpec::model(1.0);
    const auto g = square(32);
    const CauchyOperator op(spec, g);
    const auto u = GridFunction::sample(g, catalog_function("Z", spec).eval);
    const auto d = decompose(u, GridFunction(g), GridFunction(g), op);
    EXPECT_EQ(sup_norm(d.s), 0.0);
    EXPECT_EQ(sup_norm(d.v - u), 0.0);
    EXPECT_GT(d.thresholded_fraction, 0.0);  // Z vanishes at the origin node
}

TEST(Construct, UnimodularFactorAndResidual) {
    const auto spec = VectorFieldSpec::model(1.0);
    const auto g = square(64);
    const CauchyOperator op(spec, g);
    const auto c = construct(Polynomial::identity(), GridFunction(g), GridFunction(g, 0.1), op);
    EXPECT_TRUE(c.solve.converged);
    EXPECT_LE(c.unimodular_error, 1e-12);
    EXPECT_LT(c.residual, 3e-2);
}

TEST(Construct, RoundTripThroughDecompose) {
    const auto spec = VectorFieldSpec::model(1.0);
    const auto g = square(64);
    const CauchyOperator op(spec, g);
    const GridFunction a(g, 0.2), b(g, 0.1);
    const auto c = construct(Polynomial({1.0, 0.5}), a, b, op);
    ASSERT_TRUE(c.solve.converged);
    const auto d = decompose(c.u, a, b, op);
    // phi = 0 on the t = 0 row leaves L v = O(|b|) there; away from it v is holomorphic in Z.
    const LevelFunction sigma_line[] = {[](double, double t) { return t; }};
    const auto mask = residual_mask(*g, sigma_line);
    EXPECT_LT(sup_norm(apply_L(spec, d.v), &mask) / sup_norm(d.v), 1e-4);
    EXPECT_LT(d.witness, 0.1 * sup_norm(c.u) / sup_norm(d.v) * 1.1);
}

TEST(Construct, RejectsZeroPolynomial) {
    const auto g = square(8);
    const CauchyOperator op(VectorFieldSpec::model(1.0), g);
    EXPECT_THROW((void)construct(Polynomial({0.0}), GridFunction(g), GridFunction(g), op), InvalidArgument);
}

namespace {

// Least-squares polynomial in Z through sampled values (modified Gram-Schmidt).
Polynomial fit_in_Z(const std::vector<cplx>& z, const std::vector<cplx>& v, std::size_t degree) {
    const std::size_t m = z.size(), k = degree + 1;
    std::vector<std::vector<cplx>> q(k, std::vector<cplx>(m));
    std::vector<std::vector<cplx>> r(k, std::vector<cplx>(k));
    for (std::size_t j = 0; j < k; ++j)
        for (std::size_t i = 0; i < m; ++i) q[j][i] = std::pow(z[i], static_cast<int>(j));
    for (std::size_t j = 0; j < k; ++j) {
        for (std::size_t l = 0; l < j; ++l) {
            cplx d = 0.0;
            for (std::size_t i = 0; i < m; ++i) d += std::conj(q[l][i]) * q[j][i];
            r[l][j] = d;
            for (std::size_t i = 0; i < m; ++i) q[j][i] -= d * q[l][i];
        }
        double nn = 0.0;
        for (const auto& x : q[j]) nn += std::norm(x);
        r[j][j] = std::sqrt(nn);
        for (auto& x : q[j]) x /= r[j][j];
    }
    std::vector<cplx> c(k), y(k);
    for (std::size_t j = 0; j < k; ++j)
        for (std::size_t i = 0; i < m; ++i) y[j] += std::conj(q[j][i]) * v[i];
    for (std::size_t j = k; j-- > 0;) {
        cplx s = y[j];
        for (std::size_t l = j + 1; l < k; ++l) s -= r[j][l] * c[l];
        c[j] = s / r[j][j];
    }
    return Polynomial(std::move(c));
}

} // namespace

TEST(RoundTrip, DecomposeThenConstructReproducesSolution) {
    const auto spec = VectorFieldSpec::model(1.0);
    const auto g = square(48);
    const CauchyOperator op(spec, g);
    const GridFunction a(g, 0.2), b(g, 0.1);
    const auto u = construct(Polynomial({1.0, 0.5}), a, b, op).u;
    const auto d = decompose(u, a, b, op);
    std::vector<cplx> z, v;
    for (std::size_t j = 0; j < g->nt(); ++j)
        for (std::size_t i = 0; i < g->nx(); ++i) {
            z.push_back(spec.eval_Z(g->x()[i], g->t()[j]));
            v.push_back(d.v.at(i, j));
        }
    const auto rt = construct(fit_in_Z(z, v, 6), a, b, op).u;
    cplx ip = 0.0;
    double n1 = 0.0, n2 = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        ip += std::conj(rt[k]) * u[k];
        n1 += std::norm(rt[k]);
        n2 += std::norm(u[k]);
    }
    EXPECT_GT(std::abs(ip) / std::sqrt(n1 * n2), 1.0 - 1e-6);
}

TEST(Decompose, ZeroSolution) {
    const auto spec = VectorFieldSpec::model(1.0);
    const auto g = square(24);
    const CauchyOperator op(spec, g);
    const GridFunction a(g, 0.3);
    const auto d = decompose(GridFunction(g), a, GridFunction(g, 0.2), op);
    EXPECT_EQ(sup_norm(d.v), 0.0);
    EXPECT_EQ(d.residual_Lv, 0.0);
    EXPECT_EQ(sup_norm(d.phi), 0.0);
    GridFunction minus_a(g, -0.3);
    EXPECT_EQ(sup_norm(d.s - op.apply(minus_a).values), 0.0);
}

TEST(Decompose, NonzeroWhereInputNonzero) {
    const auto spec = VectorFieldSpec::model(1.0);
    const auto g = square(32);
    const CauchyOperator op(spec, g);
    const auto u = GridFunction::sample(g, catalog_function("Z", spec).eval);
    const auto d = decompose(u, GridFunction(g, 0.5), GridFunction(g, 0.1), op);
    const double tol = 1e-6 * sup_norm(u);
    for (std::size_t n = 0; n < u.size(); ++n)
        if (std::abs(u[n]) > tol) EXPECT_GT(std::abs(d.v[n]), 0.0);
}

TEST(Construct, LinearCaseIsSingleStep) {
    const auto spec = VectorFieldSpec::model(1.0);
    const auto g = square(32);
    const CauchyOperator op(spec, g);
    const GridFunction a(g, 0.4);
    const auto c = construct(Polynomial({1.0}), a, GridFunction(g), op);
    for (std::size_t n = 0; n < a.size(); ++n) EXPECT_EQ(c.s[n], op.apply(a).values[n]);
    const auto one = construct(Polynomial({1.0}), GridFunction(g), GridFunction(g), op);
    for (std::size_t n = 0; n < a.size(); ++n) EXPECT_EQ(one.u[n], cplx(1.0));
}

TEST(Witness, ConstantIsHolomorphic) {
    const auto spec = VectorFieldSpec::model(1.0);
    EXPECT_EQ(holomorphy_witness(GridFunction(square(16), 5.0), spec), 0.0);
}
