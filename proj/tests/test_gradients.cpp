#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <gtest/gtest.h>

#include "support.hpp"

using namespace dssmor;
using dssmor::test::random_mimo;
using dssmor::test::random_model;
using dssmor::test::scalar;

namespace
{

const Horizon horizons[] = {Horizon::finite(1.0), Horizon::finite(20.48),
                            Horizon::infinite()};

} // namespace

TEST(Frechet, ZeroEigenvaluesLeaveTheDirectionUnchanged)
{
    CMatrix s(2, 2);
    s << Complex(1, 2), Complex(3, -1), Complex(0.5, 0), Complex(-2, 4);
    const CMatrix l = frechet_expm_diag(CVector::Zero(2), s, 1.0);
    EXPECT_NEAR((l - s).norm(), 0.0, 1e-15);
}

TEST(Frechet, DividedDifferenceEntry)
{
    CVector lam(2);
    lam << 1.0, 0.0;
    CMatrix s = CMatrix::Zero(2, 2);
    s(0, 1) = 1.0;
    const CMatrix l = frechet_expm_diag(lam, s, 1.0);
    EXPECT_NEAR(std::abs(l(0, 1) - (std::exp(1.0) - 1.0)), 0.0, 1e-15);
    EXPECT_EQ(l(0, 0), Complex(0.0));
}

TEST(Frechet, MatchesQuadratureOfTheDefiningIntegral)
{
    for (std::uint64_t seed = 0; seed < 10; ++seed)
    {
        const DssModel m = random_mimo(3, 3, 3, seed);
        const CVector lam = m.lambda();
        const CMatrix s = m.b();
        const double scale = 0.5 + seed;
        const CMatrix l = frechet_expm_diag(lam, s, scale);
        for (Eigen::Index i = 0; i < 3; ++i)
        {
            for (Eigen::Index j = 0; j < 3; ++j)
            {
                const Complex a = lam[i] * scale;
                const Complex b = lam[j] * scale;
                const auto part = [&](bool imag) {
                    return boost::math::quadrature::gauss_kronrod<double, 61>::
                        integrate(
                            [&](double u) {
                                const Complex v = std::exp(a * (1.0 - u) + b * u);
                                return imag ? v.imag() : v.real();
                            },
                            0.0, 1.0, 15, 1e-14);
                };
                const Complex ref = s(i, j) * Complex(part(false), part(true));
                EXPECT_LE(std::abs(l(i, j) - ref), 1e-8 * (1.0 + std::abs(ref)));
            }
        }
    }
}

TEST(Frechet, CoincidentEigenvaluesUseTheLimit)
{
    CVector lam(2);
    lam << Complex(-0.3, 1.0), Complex(-0.3, 1.0 + 1e-12);
    const CMatrix l = frechet_expm_diag(lam, CMatrix::Ones(2, 2), 2.0);
    const Complex ref = std::exp(lam[0] * 2.0);
    EXPECT_NEAR(std::abs(l(0, 1) - ref), 0.0, 1e-11);
    EXPECT_NEAR(std::abs(l(0, 0) - ref), 0.0, 1e-15);
}

TEST(Frechet, LinearInDirection)
{
    const DssModel m = random_mimo(4, 4, 1, 3);
    const CMatrix s1 = m.b();
    const CMatrix s2 = m.b().adjoint() * m.b() * 0.1;
    const CVector lam = m.lambda();
    const CMatrix lhs = frechet_expm_diag(lam, 2.0 * s1 - s2.topLeftCorner(4, 4), 3.0);
    const CMatrix rhs = 2.0 * frechet_expm_diag(lam, s1, 3.0) -
                        frechet_expm_diag(lam, s2.topLeftCorner(4, 4), 3.0);
    EXPECT_LE((lhs - rhs).norm(), 1e-13 * (1.0 + rhs.norm()));
    EXPECT_EQ(frechet_expm_diag(lam, CMatrix::Zero(4, 4), 3.0).norm(), 0.0);
}

TEST(Theorem1, VanishingReducedModelHasZeroInputAndOutputGradients)
{
    const DssModel full = random_model(6, 2);
    const DssModel rom(random_model(2, 3).lambda(), CMatrix::Zero(2, 1),
                       CMatrix::Zero(1, 2));
    for (const Horizon& h : horizons)
    {
        const GradientSet g = analytic_gradients(full, rom, h);
        EXPECT_EQ(g.grad_c.norm(), 0.0);
        EXPECT_EQ(g.grad_b.norm(), 0.0);
    }
}

TEST(Theorem1, MatchesFiniteDifferencesSiso)
{
    const DssModel full = random_model(6, 100);
    const DssModel rom = random_model(2, 101);
    for (const Horizon& h : horizons)
    {
        const GradientComparison c = compare_gradients(
            analytic_gradients(full, rom, h), fd_gradient_oracle(full, rom, h));
        EXPECT_TRUE(c.passed()) << "tau " << h.tau() << " max " << c.max_error();
    }
}

TEST(Theorem1, MatchesFiniteDifferencesMimo)
{
    for (std::uint64_t seed = 0; seed < 6; ++seed)
    {
        const DssModel full = random_mimo(10, 2, 3, seed);
        const DssModel rom = random_mimo(3, 2, 3, seed + 50);
        for (const Horizon& h : horizons)
        {
            const GradientComparison c =
                compare_gradients(analytic_gradients(full, rom, h),
                                  fd_gradient_oracle(full, rom, h));
            EXPECT_TRUE(c.passed())
                << "seed " << seed << " tau " << h.tau() << " max "
                << c.max_error();
        }
    }
}

TEST(Theorem1, ScalarStationaryPoint)
{
    const DssModel m = scalar(-1.0);
    const GradientSet g = analytic_gradients(m, m, Horizon::infinite());
    EXPECT_NEAR(std::abs(g.grad_c(0, 0)), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(g.grad_lambda[0]), 0.0, 1e-15);
    const GradientSet fd = fd_gradient_oracle(m, m, Horizon::infinite());
    EXPECT_NEAR(std::abs(fd.grad_c(0, 0)), 0.0, 1e-8);
}

TEST(Theorem1, MismatchedGramiansAreRejected)
{
    const DssModel full = random_model(6, 1);
    const DssModel rom = random_model(2, 2);
    const GramianSet g = objective_f(full, rom, Horizon::infinite()).gramians;
    try
    {
        theorem1_gradients(full, rom, Horizon::finite(1.0), g);
        FAIL();
    }
    catch (const Error& e)
    {
        EXPECT_EQ(e.kind(), ErrorKind::consistency);
    }
    const DssModel other = random_model(3, 2);
    EXPECT_THROW(theorem1_gradients(full, other, Horizon::infinite(), g), Error);
}

TEST(Theorem1, DescentDirectionDecreasesTheObjective)
{
    for (std::uint64_t seed = 0; seed < 10; ++seed)
    {
        const DssModel full = random_model(12, seed);
        const DssModel rom = random_model(3, seed + 77);
        const Horizon h = Horizon::finite(5.0);
        const GradientSet g = analytic_gradients(full, rom, h);
        const double delta = 1e-8;
        const DssModel moved(rom.lambda() - delta * g.grad_lambda,
                             rom.b() - delta * g.grad_b,
                             rom.c() - delta * g.grad_c);
        EXPECT_LT(objective_value(full, moved, h), objective_value(full, rom, h));
    }
}

TEST(ExpChainRule, UnitExponentNegatesTheRealPartGradient)
{
    GradientSet g;
    g.grad_lambda = CVector::Constant(1, Complex(0.7, -0.2));
    g.grad_b = CMatrix::Constant(1, 1, Complex(5.0, 5.0));
    g.grad_c = CMatrix::Constant(1, 1, Complex(0.1, 0.3));
    DssExpParams p;
    p.lambda_re = RVector::Zero(1);
    p.lambda_im = RVector::Ones(1);
    p.w_re = RVector::Ones(1);
    p.w_im = RVector::Zero(1);
    const ExpGradients e = *exp_chain_rule(g, p).exp;
    EXPECT_EQ(e.lambda_re[0], -0.7);
    EXPECT_EQ(e.lambda_im[0], -0.2);
    EXPECT_EQ(e.w_re[0], 0.1);
    EXPECT_EQ(e.w_im[0], 0.3);

    g.grad_lambda[0] = Complex(0.0, -0.2);
    EXPECT_EQ(exp_chain_rule(g, p).exp->lambda_re[0], 0.0);

    GradientSet shifted = g;
    shifted.grad_b.array() += Complex(0.0, 9.0);
    const ExpGradients e1 = *exp_chain_rule(g, p).exp;
    const ExpGradients e2 = *exp_chain_rule(shifted, p).exp;
    EXPECT_EQ(e1.lambda_re, e2.lambda_re);
    EXPECT_EQ(e1.w_im, e2.w_im);
}

TEST(ExpChainRule, RejectsMimoGradients)
{
    const DssModel full = random_mimo(5, 2, 1, 1);
    const DssModel rom = random_mimo(2, 2, 1, 2);
    const GradientSet g = analytic_gradients(full, rom, Horizon::infinite());
    try
    {
        exp_chain_rule(g, random_stable_model(2, 3));
        FAIL();
    }
    catch (const Error& e)
    {
        EXPECT_EQ(e.kind(), ErrorKind::structure);
    }
}

TEST(ExpChainRule, MatchesDirectFiniteDifferences)
{
    for (std::uint64_t seed = 0; seed < 8; ++seed)
    {
        const DssModel full = random_model(16, seed);
        const DssExpParams p = random_stable_model(4, seed + 900);
        const DssModel rom = exp_params_to_model(p);
        for (const Horizon& h : horizons)
        {
            GradientComparison c;
            compare_exp_gradients(
                c, *exp_chain_rule(analytic_gradients(full, rom, h), p).exp,
                fd_exp_gradient_oracle(full, p, h));
            EXPECT_TRUE(c.passed()) << "seed " << seed << " max " << c.max_error();
        }
    }
}

TEST(ExpChainRule, LiteralPositiveExponentialMultiplierDisagrees)
{
    // The alternative reading "-grad_Re * exp(Re(lambda))" is refuted by the
    // difference quotient in lambda_re.
    const DssModel full = random_model(8, 5);
    const DssExpParams p = random_stable_model(3, 6);
    const DssModel rom = exp_params_to_model(p);
    const Horizon h = Horizon::finite(2.0);
    const GradientSet g = analytic_gradients(full, rom, h);
    const ExpGradients fd = fd_exp_gradient_oracle(full, p, h);
    const RVector literal =
        -g.grad_lambda.real().cwiseProduct(rom.lambda().real().array().exp().matrix());
    EXPECT_GT((literal - fd.lambda_re).norm(), 1e-2 * fd.lambda_re.norm());
    const RVector adopted = exp_chain_rule(g, p).exp->lambda_re;
    EXPECT_LE((adopted - fd.lambda_re).norm(), 1e-5 * fd.lambda_re.norm());
}

TEST(FdOracle, ConstantCoordinatesVanish)
{
    // f does not depend on B_r when C_r = 0.
    const DssModel full = random_model(6, 1);
    const DssModel rom(random_model(2, 2).lambda(), CMatrix::Ones(2, 1),
                       CMatrix::Zero(1, 2));
    const GradientSet fd = fd_gradient_oracle(full, rom, Horizon::finite(1.0));
    EXPECT_LE(fd.grad_b.norm(), 10.0 * 1e-12);
}

TEST(FdOracle, StepAndMarginChecks)
{
    const DssModel full = random_model(4, 1);
    const DssModel rom = random_model(2, 2);
    try
    {
        fd_gradient_oracle(full, rom, Horizon::infinite(), 1e-2);
        FAIL();
    }
    catch (const Error& e)
    {
        EXPECT_EQ(e.kind(), ErrorKind::configuration);
    }
    try
    {
        fd_gradient_oracle(full, scalar(Complex(-1e-7, 1.0)),
                           Horizon::infinite(), 1e-6);
        FAIL();
    }
    catch (const Error& e)
    {
        EXPECT_EQ(e.kind(), ErrorKind::stability_margin);
    }
}
