///
/// \file types.hpp
///
/// Scalar and matrix aliases, the error type, and the evaluation horizon.
///
#ifndef DSSMOR_TYPES_HPP
#define DSSMOR_TYPES_HPP

#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace dssmor
{

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;

namespace detail
{

/// `exp(z) - 1` without cancellation for small |z|.
inline Complex expm1(Complex z)
{
    const double x = z.real();
    const double y = z.imag();
    const double s = std::sin(0.5 * y);
    return Complex(std::expm1(x) * std::cos(y) - 2.0 * s * s,
                   std::exp(x) * std::sin(y));
}

} // namespace detail

///
/// Failure categories reported through `Error::kind()`.
///
enum class ErrorKind
{
    dimension,
    not_stable,
    degenerate_input,
    configuration,
    singular,
    divergent_integral,
    numeric,
    structure,
    consistency,
    stability_margin,
    rank_deficient,
    io,
};

inline const char* to_string(ErrorKind kind)
{
    switch (kind)
    {
        case ErrorKind::dimension:
            return "dimension";
        case ErrorKind::not_stable:
            return "not-stable";
        case ErrorKind::degenerate_input:
            return "degenerate-input";
        case ErrorKind::configuration:
            return "configuration";
        case ErrorKind::singular:
            return "singular";
        case ErrorKind::divergent_integral:
            return "divergent-integral";
        case ErrorKind::numeric:
            return "numeric";
        case ErrorKind::structure:
            return "structure";
        case ErrorKind::consistency:
            return "consistency";
        case ErrorKind::stability_margin:
            return "stability-margin";
        case ErrorKind::rank_deficient:
            return "rank-deficient";
        case ErrorKind::io:
            return "io";
    }
    return "unknown";
}

class Error : public std::runtime_error
{
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + " error: " + what),
          kind_(kind)
    {
    }

    ErrorKind kind() const noexcept
    {
        return kind_;
    }

private:
    ErrorKind kind_;
};

///
/// Time horizon of the H2 norm: the interval [0, tau] or [0, infinity).
///
class Horizon
{
public:
    static Horizon infinite() noexcept
    {
        return Horizon();
    }

    static Horizon finite(double tau)
    {
        if (!(tau > 0.0) || !std::isfinite(tau))
        {
            throw Error(ErrorKind::configuration,
                        "finite horizon requires 0 < tau < inf");
        }
        return Horizon(tau);
    }

    bool is_finite() const noexcept
    {
        return finite_;
    }

    bool is_infinite() const noexcept
    {
        return !finite_;
    }

    /// Horizon length; +inf for the infinite horizon.
    double tau() const noexcept
    {
        return finite_ ? tau_ : std::numeric_limits<double>::infinity();
    }

    friend bool operator==(const Horizon& a, const Horizon& b) noexcept
    {
        return a.finite_ == b.finite_ && (!a.finite_ || a.tau_ == b.tau_);
    }

private:
    Horizon() = default;
    explicit Horizon(double tau) : finite_(true), tau_(tau) {}

    bool finite_ = false;
    double tau_ = 0.0;
};

} // namespace dssmor

#endif /* DSSMOR_TYPES_HPP */
