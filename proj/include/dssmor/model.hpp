///
/// \file model.hpp
///
/// Complex diagonal state-space models, the exponential (DSS_EXP)
/// parameterization, seeded random generation, and zero-order-hold
/// discretization.
///
#ifndef DSSMOR_MODEL_HPP
#define DSSMOR_MODEL_HPP

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>

#include <dssmor/types.hpp>

namespace dssmor
{

///
/// ### DssModel
///
/// Continuous-time system `x' = diag(lambda) x + B u`, `y = C x` with
/// `x(0) = 0`. The state matrix is stored as its diagonal only; `delta` is the
/// optional sampling time used by discretization.
///
class DssModel
{
public:
    DssModel(CVector lambda, CMatrix b, CMatrix c,
             std::optional<double> delta = std::nullopt)
        : lambda_(std::move(lambda)),
          b_(std::move(b)),
          c_(std::move(c)),
          delta_(delta)
    {
        const auto n = lambda_.size();
        if (n < 1 || b_.cols() < 1 || c_.rows() < 1)
        {
            throw Error(ErrorKind::dimension,
                        "model needs N >= 1, m >= 1, p >= 1");
        }
        if (b_.rows() != n || c_.cols() != n)
        {
            throw Error(ErrorKind::dimension,
                        "B must be N x m and C must be p x N (N = " +
                            std::to_string(n) + ")");
        }
        if (delta_ && !(*delta_ > 0.0))
        {
            throw Error(ErrorKind::configuration,
                        "sampling time must be positive");
        }
    }

    const CVector& lambda() const noexcept
    {
        return lambda_;
    }
    const CMatrix& b() const noexcept
    {
        return b_;
    }
    const CMatrix& c() const noexcept
    {
        return c_;
    }
    const std::optional<double>& delta() const noexcept
    {
        return delta_;
    }

    Eigen::Index order() const noexcept
    {
        return lambda_.size();
    }
    Eigen::Index inputs() const noexcept
    {
        return b_.cols();
    }
    Eigen::Index outputs() const noexcept
    {
        return c_.rows();
    }

    bool is_siso() const noexcept
    {
        return inputs() == 1 && outputs() == 1;
    }

    /// Largest real part of the eigenvalues (spectral abscissa).
    double abscissa() const
    {
        return lambda_.real().maxCoeff();
    }

    bool is_stable() const
    {
        return abscissa() < 0.0;
    }

    DssModel with_delta(std::optional<double> delta) const
    {
        return DssModel(lambda_, b_, c_, delta);
    }

private:
    CVector lambda_;
    CMatrix b_;
    CMatrix c_;
    std::optional<double> delta_;
};

///
/// ### DssExpParams
///
/// SISO parameterization `lambda = -exp(lambda_re) + i lambda_im`, `B = 1`,
/// `C = (w_re + i w_im)^T`. Every parameter vector describes a stable model.
///
struct DssExpParams
{
    RVector lambda_re;
    RVector lambda_im;
    RVector w_re;
    RVector w_im;
    double delta = 1.0;

    Eigen::Index size() const noexcept
    {
        return lambda_re.size();
    }

    void validate() const
    {
        const auto n = lambda_re.size();
        if (n < 1 || lambda_im.size() != n || w_re.size() != n ||
            w_im.size() != n)
        {
            throw Error(ErrorKind::dimension,
                        "exp parameters need four vectors of equal length >= 1");
        }
        if (!(delta > 0.0))
        {
            throw Error(ErrorKind::configuration,
                        "sampling time must be positive");
        }
    }
};

inline CVector exp_eigenvalues(const DssExpParams& p)
{
    CVector lambda(p.size());
    for (Eigen::Index i = 0; i < p.size(); ++i)
    {
        lambda[i] = Complex(-std::exp(p.lambda_re[i]), p.lambda_im[i]);
    }
    return lambda;
}

inline DssModel exp_params_to_model(const DssExpParams& p)
{
    p.validate();
    const auto n = p.size();
    CMatrix c(1, n);
    for (Eigen::Index i = 0; i < n; ++i)
    {
        c(0, i) = Complex(p.w_re[i], p.w_im[i]);
    }
    return DssModel(exp_eigenvalues(p), CMatrix::Ones(n, 1), std::move(c),
                    p.delta);
}

///
/// Inverse of `exp_params_to_model` up to a diagonal state rescaling.
///
/// The input map is folded into the output map (`c_i <- c_i b_i`), which
/// leaves every pole and every residue `c_i b_i` unchanged. A zero entry of
/// `b` marks an unreachable mode and is rejected.
///
inline DssExpParams model_to_exp_params(const DssModel& m)
{
    if (!m.is_siso())
    {
        throw Error(ErrorKind::structure, "exp parameterization is SISO only");
    }
    const auto n = m.order();
    DssExpParams p;
    p.lambda_re.resize(n);
    p.lambda_im.resize(n);
    p.w_re.resize(n);
    p.w_im.resize(n);
    p.delta = m.delta().value_or(1.0);
    for (Eigen::Index i = 0; i < n; ++i)
    {
        const Complex lam = m.lambda()[i];
        if (!(lam.real() < 0.0))
        {
            throw Error(ErrorKind::not_stable,
                        "eigenvalue " + std::to_string(i) +
                            " has nonnegative real part");
        }
        const Complex bi = m.b()(i, 0);
        if (bi == Complex(0.0, 0.0))
        {
            throw Error(ErrorKind::degenerate_input,
                        "input entry " + std::to_string(i) + " is zero");
        }
        const Complex w = m.c()(0, i) * bi;
        p.lambda_re[i] = std::log(-lam.real());
        p.lambda_im[i] = lam.imag();
        p.w_re[i] = w.real();
        p.w_im[i] = w.imag();
    }
    return p;
}

///
/// ### NormalStream
///
/// Seeded standard-normal generator with a fixed, platform-independent bit
/// stream: xoshiro256** seeded through SplitMix64, uniforms built from the top
/// 53 bits, and the Box-Muller transform. Each uniform pair `(u1, u2)` yields
/// `sqrt(-2 log u1) cos(2 pi u2)` followed by `sqrt(-2 log u1) sin(2 pi u2)`.
///
class NormalStream
{
public:
    explicit NormalStream(std::uint64_t seed)
    {
        std::uint64_t sm = seed;
        for (auto& word : state_)
        {
            word = splitmix64(sm);
        }
    }

    std::uint64_t next_u64() noexcept
    {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform in (0, 1].
    double next_uniform() noexcept
    {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    }

    double next_normal() noexcept
    {
        if (cached_)
        {
            cached_ = false;
            return spare_;
        }
        const double u1 = next_uniform();
        const double u2 = next_uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        cached_ = true;
        return radius * std::cos(angle);
    }

    RVector normal_vector(Eigen::Index n)
    {
        RVector v(n);
        for (Eigen::Index i = 0; i < n; ++i)
        {
            v[i] = next_normal();
        }
        return v;
    }

    static std::uint64_t splitmix64(std::uint64_t& x) noexcept
    {
        std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) noexcept
    {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t state_[4];
    double spare_ = 0.0;
    bool cached_ = false;
};

/// Mixes several integers into one seed (used for per-model streams).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a,
                                 std::uint64_t b = 0)
{
    std::uint64_t x = base;
    std::uint64_t h = NormalStream::splitmix64(x);
    x = h ^ a;
    h = NormalStream::splitmix64(x);
    x = h ^ b;
    return NormalStream::splitmix64(x);
}

///
/// Random stable model with i.i.d. standard normal `lambda_re`, `lambda_im`,
/// `w_re`, `w_im` (drawn in that order).
///
inline DssExpParams random_stable_model(Eigen::Index n, std::uint64_t seed,
                                        double delta = 1.0)
{
    if (n < 1)
    {
        throw Error(ErrorKind::dimension, "random model order must be >= 1");
    }
    NormalStream rng(seed);
    DssExpParams p;
    p.lambda_re = rng.normal_vector(n);
    p.lambda_im = rng.normal_vector(n);
    p.w_re = rng.normal_vector(n);
    p.w_im = rng.normal_vector(n);
    p.delta = delta;
    p.validate();
    return p;
}

///
/// ### DiscreteSystem
///
/// Zero-order-hold discretization `x_k = diag(a) x_{k-1} + B u_k`,
/// `y_k = C x_k`.
///
struct DiscreteSystem
{
    CVector a_bar;
    CMatrix b_bar;
    CMatrix c_bar;
    double delta = 0.0;
};

inline DiscreteSystem discretize(const DssModel& m)
{
    if (!m.delta())
    {
        throw Error(ErrorKind::configuration,
                    "discretization requires a sampling time");
    }
    const double delta = *m.delta();
    DiscreteSystem d;
    d.delta = delta;
    d.a_bar.resize(m.order());
    d.b_bar.resize(m.order(), m.inputs());
    d.c_bar = m.c();
    for (Eigen::Index i = 0; i < m.order(); ++i)
    {
        const Complex lam = m.lambda()[i];
        if (lam == Complex(0.0, 0.0))
        {
            throw Error(ErrorKind::singular,
                        "zero eigenvalue makes A singular");
        }
        const Complex am1 = detail::expm1(lam * delta);
        d.a_bar[i] = am1 + 1.0;
        d.b_bar.row(i) = (am1 / lam) * m.b().row(i);
    }
    return d;
}

} // namespace dssmor

#endif /* DSSMOR_MODEL_HPP */
