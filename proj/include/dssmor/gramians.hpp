///
/// \file gramians.hpp
///
/// Closed-form solutions of the diagonal Lyapunov and Sylvester equations on
/// finite and infinite horizons, the (finite-time) H2 norm, and the reduced
/// objective `f` whose minimizer is the H2-optimal reduced model.
///
/// With `A = diag(mu)` and `B = diag(nu)` the equation
///
///   A M + M B + R - e^{A tau} R e^{B tau} = 0
///
/// decouples entrywise: `M_ij = R_ij * (e^{(mu_i + nu_j) tau} - 1) / (mu_i +
/// nu_j)`. On the infinite horizon the exponential term drops and
/// `M_ij = -R_ij / (mu_i + nu_j)`. Every Gramian below is an entrywise product
/// of its right-hand side with this Cauchy-like kernel, so an `a x b` solve
/// costs `O(ab)`.
///
#ifndef DSSMOR_GRAMIANS_HPP
#define DSSMOR_GRAMIANS_HPP

#include <algorithm>
#include <cmath>
#include <string>

#include <dssmor/model.hpp>
#include <dssmor/types.hpp>

namespace dssmor
{

namespace detail
{

/// |z tau| below which the kernel switches to its Taylor series.
inline constexpr double kernel_series_threshold = 1e-6;

/// `int_0^tau e^{z t} dt` (finite) or `-1/z` (infinite, requires Re z < 0).
inline Complex kernel_entry(Complex z, const Horizon& h)
{
    if (h.is_infinite())
    {
        if (!(z.real() < 0.0))
        {
            throw Error(ErrorKind::divergent_integral,
                        "infinite-horizon kernel needs Re(mu_i + nu_j) < 0");
        }
        return -1.0 / z;
    }
    const double tau = h.tau();
    const Complex w = z * tau;
    if (std::abs(w) < kernel_series_threshold)
    {
        return tau * (1.0 + w * (0.5 + w * (1.0 / 6.0 + w * (1.0 / 24.0))));
    }
    return expm1(w) / z;
}

inline void hermitianize(CMatrix& m)
{
    m = (0.5 * (m + m.adjoint())).eval();
}

} // namespace detail

///
/// Kernel matrix `K_ij = int_0^tau e^{(mu_i + nu_j) t} dt` (or its infinite
/// counterpart `-1/(mu_i + nu_j)`).
///
inline CMatrix cauchy_kernel(const CVector& mu, const CVector& nu,
                             const Horizon& h)
{
    CMatrix k(mu.size(), nu.size());
    for (Eigen::Index j = 0; j < nu.size(); ++j)
    {
        for (Eigen::Index i = 0; i < mu.size(); ++i)
        {
            k(i, j) = detail::kernel_entry(mu[i] + nu[j], h);
        }
    }
    return k;
}

///
/// Solves `diag(l) M + M diag(r) + rhs - e^{diag(l) tau} rhs e^{diag(r) tau}
/// = 0` (or the infinite-horizon form without the exponential term).
///
/// Every Gramian in the toolchain is one call:
///
///   - `P_tau`   : (lambda,       conj(lambda),  B B^*)
///   - `Q_tau`   : (conj(lambda), lambda,        C^* C)
///   - `X_tau`   : (lambda,       conj(lambda_r), B B_r^*)
///   - `Y_tau`   : (conj(lambda), lambda_r,     -C^* C_r)
///
inline CMatrix solve_sylvester(const CVector& lambda_left,
                               const CVector& lambda_right, const CMatrix& rhs,
                               const Horizon& h)
{
    if (rhs.rows() != lambda_left.size() || rhs.cols() != lambda_right.size())
    {
        throw Error(ErrorKind::dimension, "Sylvester right-hand side is " +
                                              std::to_string(rhs.rows()) + "x" +
                                              std::to_string(rhs.cols()));
    }
    return rhs.cwiseProduct(cauchy_kernel(lambda_left, lambda_right, h));
}

/// Frobenius norm of the defining residual, relative to `1 + ||rhs||`.
inline double sylvester_residual(const CVector& lambda_left,
                                 const CVector& lambda_right,
                                 const CMatrix& rhs, const CMatrix& solution,
                                 const Horizon& h)
{
    CMatrix res = lambda_left.asDiagonal() * solution +
                  solution * lambda_right.asDiagonal() + rhs;
    if (h.is_finite())
    {
        const CVector el = (lambda_left * h.tau()).array().exp();
        const CVector er = (lambda_right * h.tau()).array().exp();
        res -= el.asDiagonal() * rhs * er.asDiagonal();
    }
    return res.norm() / (1.0 + rhs.norm());
}

///
/// ### GramianSet
///
/// Gramians of a (full, reduced) pair on horizon `h`. The `_tau` members are
/// the horizon solutions; `p_hat_inf` and `x_inf` are always the
/// infinite-horizon solutions. On the infinite horizon both groups coincide.
///
struct GramianSet
{
    Horizon horizon = Horizon::infinite();
    CMatrix p_hat_tau; // r x r
    CMatrix q_hat_tau; // r x r
    CMatrix x_tau;     // N x r
    CMatrix y_tau;     // N x r
    CMatrix p_hat_inf; // r x r
    CMatrix x_inf;     // N x r
};

struct H2Terms
{
    double b_form = 0.0; // tr(B^* Q B)
    double c_form = 0.0; // tr(C P C^*)
    double scale = 0.0;  // sum of absolute entrywise contributions
};

namespace detail
{

inline H2Terms h2_terms(const DssModel& m, const Horizon& h)
{
    if (h.is_infinite() && !m.is_stable())
    {
        throw Error(ErrorKind::divergent_integral,
                    "infinite-horizon H2 norm of an unstable model");
    }
    const CVector& lam = m.lambda();
    const CMatrix bb = m.b() * m.b().adjoint();
    const CMatrix cc = m.c().adjoint() * m.c();
    const CMatrix p = solve_sylvester(lam, lam.conjugate(), bb, h);
    const CMatrix q = solve_sylvester(lam.conjugate(), lam, cc, h);

    H2Terms t;
    t.b_form = (m.b().adjoint() * q * m.b()).trace().real();
    t.c_form = (m.c() * p * m.c().adjoint()).trace().real();
    t.scale = (p.cwiseAbs().cwiseProduct(cc.transpose().cwiseAbs())).sum();
    return t;
}

inline void check_forms(double a, double b, double scale, const char* what)
{
    const double tol =
        1e-9 * std::max(std::abs(a), std::abs(b)) + 1e-12 * scale + 1e-300;
    if (!std::isfinite(a) || !std::isfinite(b))
    {
        throw Error(ErrorKind::numeric, std::string(what) + " is not finite");
    }
    if (std::abs(a - b) > tol)
    {
        throw Error(ErrorKind::numeric,
                    std::string(what) + ": trace forms disagree");
    }
}

} // namespace detail

///
/// Squared H2 norm `int_0^tau tr(B^* e^{A^* t} C^* C e^{A t} B) dt`.
///
/// Both trace forms `tr(B^* Q B)` and `tr(C P C^*)` are evaluated and must
/// agree to relative 1e-9.
///
inline double h2_norm_sq(const DssModel& m, const Horizon& h)
{
    const H2Terms t = detail::h2_terms(m, h);
    detail::check_forms(t.b_form, t.c_form, t.scale, "H2 norm");
    return std::max(t.b_form, 0.0);
}

/// Diagonal realization of `G - G_r`.
inline DssModel error_system(const DssModel& full, const DssModel& rom)
{
    if (full.inputs() != rom.inputs() || full.outputs() != rom.outputs())
    {
        throw Error(ErrorKind::dimension,
                    "full and reduced models differ in inputs or outputs");
    }
    const auto n = full.order();
    const auto r = rom.order();
    CVector lam(n + r);
    lam << full.lambda(), rom.lambda();
    CMatrix b(n + r, full.inputs());
    b << full.b(), rom.b();
    CMatrix c(full.outputs(), n + r);
    c << full.c(), -rom.c();
    return DssModel(std::move(lam), std::move(b), std::move(c), full.delta());
}

/// `||G - G_r||^2` on horizon `h`, computed on the augmented error system.
inline double error_h2_norm_sq(const DssModel& full, const DssModel& rom,
                               const Horizon& h)
{
    const H2Terms t = detail::h2_terms(error_system(full, rom), h);
    detail::check_forms(t.b_form, t.c_form, t.scale, "error H2 norm");
    if (t.b_form < -1e-12 * (1.0 + t.scale))
    {
        throw Error(ErrorKind::numeric, "error H2 norm is negative");
    }
    return std::max(t.b_form, 0.0);
}

struct ObjectiveResult
{
    double f = 0.0;   // C-form value (identical to `objective_value`)
    double f_b = 0.0; // tr(B_r^* Q_r B_r + 2 Re(B_r^* Y^* B))
    double f_c = 0.0; // tr(C_r P_r C_r^* - 2 Re(C_r X^* C^*))
    GramianSet gramians;
};

namespace detail
{

inline void check_pair(const DssModel& full, const DssModel& rom)
{
    if (full.inputs() != rom.inputs() || full.outputs() != rom.outputs())
    {
        throw Error(ErrorKind::dimension,
                    "full and reduced models differ in inputs or outputs");
    }
    if (!rom.is_stable())
    {
        throw Error(ErrorKind::not_stable, "reduced model is not stable");
    }
}

struct CForm
{
    CMatrix p_hat; // unsymmetrized
    CMatrix x;
    double quad = 0.0;
    double cross = 0.0;
};

inline CForm c_form(const DssModel& full, const DssModel& rom, const Horizon& h)
{
    const CVector& lam_r = rom.lambda();
    CForm out;
    out.p_hat = solve_sylvester(lam_r, lam_r.conjugate(),
                                rom.b() * rom.b().adjoint(), h);
    out.x = solve_sylvester(full.lambda(), lam_r.conjugate(),
                            full.b() * rom.b().adjoint(), h);
    out.quad = (rom.c() * out.p_hat * rom.c().adjoint()).trace().real();
    out.cross =
        2.0 * (rom.c() * out.x.adjoint() * full.c().adjoint()).trace().real();
    return out;
}

} // namespace detail

///
/// Objective `f = ||G - G_r||^2 - ||G||^2` and the Gramians it is built from.
///
/// `f` omits the constant `tr(B^* Q B)` and may be negative. It is returned in
/// both the B-form and the C-form, which are cross-checked to relative 1e-9.
///
inline ObjectiveResult objective_f(const DssModel& full, const DssModel& rom,
                                   const Horizon& h)
{
    detail::check_pair(full, rom);
    const CVector& lam = full.lambda();
    const CVector& lam_r = rom.lambda();
    const CMatrix& b = full.b();
    const CMatrix& b_r = rom.b();
    const CMatrix& c_r = rom.c();

    detail::CForm cf = detail::c_form(full, rom, h);

    ObjectiveResult out;
    GramianSet& g = out.gramians;
    g.horizon = h;
    g.p_hat_tau = std::move(cf.p_hat);
    g.x_tau = std::move(cf.x);
    g.q_hat_tau =
        solve_sylvester(lam_r.conjugate(), lam_r, c_r.adjoint() * c_r, h);
    g.y_tau = solve_sylvester(lam.conjugate(), lam_r,
                              -(full.c().adjoint() * c_r), h);
    detail::hermitianize(g.p_hat_tau);
    detail::hermitianize(g.q_hat_tau);
    if (h.is_infinite())
    {
        g.p_hat_inf = g.p_hat_tau;
        g.x_inf = g.x_tau;
    }
    else
    {
        const Horizon inf = Horizon::infinite();
        g.p_hat_inf =
            solve_sylvester(lam_r, lam_r.conjugate(), b_r * b_r.adjoint(), inf);
        g.x_inf = solve_sylvester(lam, lam_r.conjugate(), b * b_r.adjoint(),
                                  inf);
        detail::hermitianize(g.p_hat_inf);
    }

    const double quad_b = (b_r.adjoint() * g.q_hat_tau * b_r).trace().real();
    const double cross_b =
        2.0 * (b_r.adjoint() * g.y_tau.adjoint() * b).trace().real();

    out.f_b = quad_b + cross_b;
    out.f_c = cf.quad - cf.cross;
    out.f = out.f_c;
    detail::check_forms(out.f_b, out.f_c,
                        std::abs(quad_b) + std::abs(cross_b) +
                            std::abs(cf.quad) + std::abs(cf.cross),
                        "objective");
    return out;
}

///
/// Objective value only, for line-search trials. Bitwise equal to
/// `objective_f(full, rom, h).f`.
///
inline double objective_value(const DssModel& full, const DssModel& rom,
                              const Horizon& h)
{
    detail::check_pair(full, rom);
    const detail::CForm cf = detail::c_form(full, rom, h);
    return cf.quad - cf.cross;
}

} // namespace dssmor

#endif /* DSSMOR_GRAMIANS_HPP */
