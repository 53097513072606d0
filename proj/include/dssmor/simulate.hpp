///
/// \file simulate.hpp
///
/// Discrete-time simulation of diagonal models and an empirical check of the
/// output-error bound `max_k ||y_k - y_r,k|| <= ||G - G_r||_{H2,tau} *
/// sqrt(int_0^tau ||u||^2 dt)` with `tau = L * delta`.
///
#ifndef DSSMOR_SIMULATE_HPP
#define DSSMOR_SIMULATE_HPP

#include <cmath>
#include <cstdint>

#include <dssmor/gramians.hpp>
#include <dssmor/model.hpp>

namespace dssmor
{

///
/// ### SequenceSignal
///
/// `samples` holds one column per time step `k = 1..L`.
///
struct SequenceSignal
{
    CMatrix samples;
    double delta = 1.0;

    Eigen::Index length() const noexcept
    {
        return samples.cols();
    }
    Eigen::Index channels() const noexcept
    {
        return samples.rows();
    }

    /// `delta * sum_k ||u_k||^2`, exact for zero-order-hold signals.
    double energy() const
    {
        return delta * samples.squaredNorm();
    }
};

inline SequenceSignal impulse_signal(Eigen::Index length, double delta,
                                     Eigen::Index channels = 1)
{
    SequenceSignal u{CMatrix::Zero(channels, length), delta};
    if (length > 0)
    {
        u.samples.col(0).setOnes();
    }
    return u;
}

/// Seeded Gaussian white sequence; complex samples when `complex_valued`.
inline SequenceSignal white_signal(Eigen::Index length, double delta,
                                   std::uint64_t seed,
                                   bool complex_valued = false,
                                   Eigen::Index channels = 1)
{
    NormalStream rng(seed);
    SequenceSignal u{CMatrix(channels, length), delta};
    for (Eigen::Index k = 0; k < length; ++k)
    {
        for (Eigen::Index i = 0; i < channels; ++i)
        {
            const double re = rng.next_normal();
            const double im = complex_valued ? rng.next_normal() : 0.0;
            u.samples(i, k) = Complex(re, im);
        }
    }
    return u;
}

/// `x_k = diag(a) x_{k-1} + B u_k`, `y_k = C x_k`, `x_0 = 0`.
inline SequenceSignal run_recurrence(const DiscreteSystem& sys,
                                     const SequenceSignal& u)
{
    if (u.channels() != sys.b_bar.cols())
    {
        throw Error(ErrorKind::dimension,
                    "input has " + std::to_string(u.channels()) +
                        " channels, system expects " +
                        std::to_string(sys.b_bar.cols()));
    }
    SequenceSignal y{CMatrix(sys.c_bar.rows(), u.length()), u.delta};
    CVector x = CVector::Zero(sys.a_bar.size());
    for (Eigen::Index k = 0; k < u.length(); ++k)
    {
        x = sys.a_bar.cwiseProduct(x) + sys.b_bar * u.samples.col(k);
        y.samples.col(k) = sys.c_bar * x;
    }
    return y;
}

struct ErrorBoundReport
{
    /// Relative slack for the sampled comparison.
    static constexpr double discretization_slack = 1e-2;

    double lhs = 0.0;
    double rhs = 0.0;
    bool satisfied = false;
};

///
/// Simulates both models on `u` and compares the worst sampled output error
/// with the H2 bound on horizon `L * delta`.
///
inline ErrorBoundReport check_error_bound(const DssModel& full,
                                          const DssModel& rom,
                                          const SequenceSignal& u)
{
    const auto same = [](double a, double b) {
        return std::abs(a - b) <= 1e-12 * std::max(std::abs(a), std::abs(b));
    };
    if (!full.delta() || !rom.delta() || !same(*full.delta(), *rom.delta()) ||
        !same(*full.delta(), u.delta))
    {
        throw Error(ErrorKind::configuration,
                    "full model, reduced model and signal must share delta");
    }
    if (u.length() < 1)
    {
        throw Error(ErrorKind::dimension, "signal must have at least one sample");
    }
    const SequenceSignal y = run_recurrence(discretize(full), u);
    const SequenceSignal y_r = run_recurrence(discretize(rom), u);

    ErrorBoundReport rep;
    rep.lhs = (y.samples - y_r.samples).colwise().norm().maxCoeff();
    const Horizon h = Horizon::finite(static_cast<double>(u.length()) * u.delta);
    rep.rhs = std::sqrt(error_h2_norm_sq(full, rom, h)) * std::sqrt(u.energy());
    rep.satisfied =
        rep.lhs <= rep.rhs * (1.0 + ErrorBoundReport::discretization_slack);
    return rep;
}

} // namespace dssmor

#endif /* DSSMOR_SIMULATE_HPP */
