// Shared fixtures for the unit tests.
#ifndef DSSMOR_TESTS_SUPPORT_HPP
#define DSSMOR_TESTS_SUPPORT_HPP

#include <cmath>
#include <cstdint>

#include <dssmor/dssmor.hpp>

namespace dssmor::test
{

inline DssModel scalar(Complex lambda, Complex b = 1.0, Complex c = 1.0,
                       std::optional<double> delta = std::nullopt)
{
    return DssModel(CVector::Constant(1, lambda), CMatrix::Constant(1, 1, b),
                    CMatrix::Constant(1, 1, c), delta);
}

inline DssModel random_model(Eigen::Index n, std::uint64_t seed,
                             double delta = 0.01)
{
    return exp_params_to_model(random_stable_model(n, seed, delta));
}

/// Random stable MIMO model with Gaussian B and C.
inline DssModel random_mimo(Eigen::Index n, Eigen::Index m, Eigen::Index p,
                            std::uint64_t seed)
{
    NormalStream rng(seed);
    CVector lam(n);
    for (Eigen::Index i = 0; i < n; ++i)
    {
        const double re = -std::exp(rng.next_normal());
        lam[i] = Complex(re, rng.next_normal());
    }
    CMatrix b(n, m);
    CMatrix c(p, n);
    for (Eigen::Index i = 0; i < b.size(); ++i)
    {
        const double re = rng.next_normal();
        b(i) = Complex(re, rng.next_normal());
    }
    for (Eigen::Index i = 0; i < c.size(); ++i)
    {
        const double re = rng.next_normal();
        c(i) = Complex(re, rng.next_normal());
    }
    return DssModel(lam, b, c);
}

inline double rel(double a, double b)
{
    return std::abs(a - b) / std::max(std::abs(b), 1e-300);
}

} // namespace dssmor::test

#endif
