///
/// \file gradients.hpp
///
/// Gradients of the reduced objective `f` with respect to the reduced
/// parameters, the Frechet derivative of the exponential of a diagonal
/// matrix, the chain rule for the exponential parameterization, and a
/// central-difference oracle.
///
/// Complex gradients follow `grad_x f = d f / d Re(x) + i d f / d Im(x)`, so a
/// step `x - alpha * grad_x f` is steepest descent in the real coordinates.
///
#ifndef DSSMOR_GRADIENTS_HPP
#define DSSMOR_GRADIENTS_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>

#include <dssmor/gramians.hpp>
#include <dssmor/model.hpp>

namespace dssmor
{

/// Real gradients with respect to `(lambda_re, lambda_im, w_re, w_im)`.
struct ExpGradients
{
    RVector lambda_re;
    RVector lambda_im;
    RVector w_re;
    RVector w_im;
};

struct GradientSet
{
    CVector grad_lambda; // r
    CMatrix grad_b;      // r x m
    CMatrix grad_c;      // p x r
    std::optional<ExpGradients> exp;
};

namespace detail
{

/// |a - b| below which the divided difference uses its midpoint series.
inline constexpr double divided_difference_threshold = 1e-7;

/// `(e^a - e^b) / (a - b)`, with `phi(a, a) = e^a`.
inline Complex exp_divided_difference(Complex a, Complex b)
{
    const Complex d = a - b;
    if (std::abs(d) < divided_difference_threshold)
    {
        // e^{(a+b)/2} sinh(d/2) / (d/2)
        const Complex h2 = 0.25 * d * d;
        return std::exp(0.5 * (a + b)) *
               (1.0 + h2 * (1.0 / 6.0 + h2 * (1.0 / 120.0)));
    }
    return std::exp(b) * expm1(d) / d;
}

} // namespace detail

///
/// Frechet derivative `L(diag(lambda) scale, S) = int_0^1 e^{A(1-u)} S e^{A u}
/// du` with `A = diag(lambda) * scale`. Entry `(i, j)` equals `S_ij` times the
/// divided difference of `exp` at `lambda_i scale` and `lambda_j scale`.
///
inline CMatrix frechet_expm_diag(const CVector& lambda_hat, const CMatrix& s,
                                 double scale)
{
    if (s.rows() != lambda_hat.size() || s.cols() != lambda_hat.size())
    {
        throw Error(ErrorKind::dimension,
                    "direction must be square with the eigenvalue count");
    }
    CMatrix out(s.rows(), s.cols());
    for (Eigen::Index j = 0; j < s.cols(); ++j)
    {
        for (Eigen::Index i = 0; i < s.rows(); ++i)
        {
            out(i, j) = s(i, j) * detail::exp_divided_difference(
                                      lambda_hat[i] * scale,
                                      lambda_hat[j] * scale);
        }
    }
    return out;
}

///
/// Analytic gradients of `f` at `rom`:
///
///   grad_lambda = 2 diag(Y^* X_inf + Q_r P_inf + tau L(A_r tau, S)^*)
///   grad_b      = 2 (Y^* B + Q_r B_r)
///   grad_c      = 2 (-C X + C_r P_r)
///
/// with `S = X_inf^* e^{A^* tau} C^* C_r - P_inf e^{A_r^* tau} C_r^* C_r`. On
/// the infinite horizon the `L` term is absent. `g` must be the Gramian set
/// returned by `objective_f(full, rom, h)`.
///
inline GradientSet theorem1_gradients(const DssModel& full, const DssModel& rom,
                                      const Horizon& h, const GramianSet& g)
{
    const auto n = full.order();
    const auto r = rom.order();
    const bool shapes_ok =
        g.horizon == h && g.p_hat_tau.rows() == r && g.p_hat_tau.cols() == r &&
        g.q_hat_tau.rows() == r && g.q_hat_tau.cols() == r &&
        g.p_hat_inf.rows() == r && g.x_tau.rows() == n &&
        g.x_tau.cols() == r && g.y_tau.rows() == n && g.y_tau.cols() == r &&
        g.x_inf.rows() == n && g.x_inf.cols() == r;
    if (!shapes_ok)
    {
        throw Error(ErrorKind::consistency,
                    "Gramian set does not belong to this (full, rom, horizon)");
    }

    GradientSet out;
    out.grad_b = 2.0 * (g.y_tau.adjoint() * full.b() + g.q_hat_tau * rom.b());
    out.grad_c = 2.0 * (-full.c() * g.x_tau + rom.c() * g.p_hat_tau);

    // diag(Y^* X) and diag(Q_r P) without forming the products
    CVector diag = (g.y_tau.conjugate().cwiseProduct(g.x_inf))
                       .colwise()
                       .sum()
                       .transpose();
    diag += (g.q_hat_tau.transpose().cwiseProduct(g.p_hat_inf))
                .colwise()
                .sum()
                .transpose();

    if (h.is_finite())
    {
        const double tau = h.tau();
        const CVector e_full = (full.lambda().conjugate() * tau).array().exp();
        const CVector e_rom = (rom.lambda().conjugate() * tau).array().exp();
        const CMatrix c_cr = full.c().adjoint() * rom.c();
        const CMatrix cr_cr = rom.c().adjoint() * rom.c();
        const CMatrix s = g.x_inf.adjoint() * e_full.asDiagonal() * c_cr -
                          g.p_hat_inf * e_rom.asDiagonal() * cr_cr;
        const CMatrix l = frechet_expm_diag(rom.lambda(), s, tau);
        diag += tau * l.diagonal().conjugate();
    }
    out.grad_lambda = 2.0 * diag;
    return out;
}

/// Convenience: objective and analytic gradients in one call.
inline GradientSet analytic_gradients(const DssModel& full, const DssModel& rom,
                                      const Horizon& h)
{
    return theorem1_gradients(full, rom, h, objective_f(full, rom, h).gramians);
}

///
/// Chain rule onto the exponential parameterization. Since
/// `Re(lambda) = -exp(lambda_re)`, the derivative with respect to
/// `lambda_re` is `d f / d Re(lambda) * Re(lambda)`. The B gradient is
/// dropped because B is fixed to the all-ones vector.
///
inline GradientSet exp_chain_rule(GradientSet g, const DssExpParams& rom)
{
    rom.validate();
    const auto r = rom.size();
    if (g.grad_lambda.size() != r || g.grad_b.rows() != r ||
        g.grad_b.cols() != 1 || g.grad_c.rows() != 1 || g.grad_c.cols() != r)
    {
        throw Error(ErrorKind::structure,
                    "exp chain rule needs SISO gradients of matching order");
    }
    ExpGradients e;
    const RVector re_lambda = -rom.lambda_re.array().exp();
    e.lambda_re = g.grad_lambda.real().cwiseProduct(re_lambda);
    e.lambda_im = g.grad_lambda.imag();
    e.w_re = g.grad_c.row(0).real().transpose();
    e.w_im = g.grad_c.row(0).imag().transpose();
    g.exp = std::move(e);
    return g;
}

///
/// Central-difference gradient over every real coordinate of
/// `(Re lambda_r, Im lambda_r, Re B_r, Im B_r, Re C_r, Im C_r)`. Each sample
/// is an independent `objective_f` evaluation.
///
inline GradientSet fd_gradient_oracle(const DssModel& full, const DssModel& rom,
                                      const Horizon& h, double step = 1e-6)
{
    if (!(step >= 1e-8 && step <= 1e-4))
    {
        throw Error(ErrorKind::configuration,
                    "finite-difference step must lie in [1e-8, 1e-4]");
    }
    if (!(rom.abscissa() + step < 0.0))
    {
        throw Error(ErrorKind::stability_margin,
                    "perturbed reduced model would leave the stable region");
    }
    const auto f_at = [&](const CVector& lam, const CMatrix& b,
                          const CMatrix& c) {
        return objective_f(full, DssModel(lam, b, c, rom.delta()), h).f;
    };
    const auto central = [&](auto&& perturbed) {
        return (perturbed(step) - perturbed(-step)) / (2.0 * step);
    };
    const Complex unit_re(1.0, 0.0);
    const Complex unit_im(0.0, 1.0);

    GradientSet g;
    g.grad_lambda.resize(rom.order());
    for (Eigen::Index k = 0; k < rom.order(); ++k)
    {
        Complex d;
        for (const Complex u : {unit_re, unit_im})
        {
            const double part = central([&](double s) {
                CVector lam = rom.lambda();
                lam[k] += s * u;
                return f_at(lam, rom.b(), rom.c());
            });
            d += part * u;
        }
        g.grad_lambda[k] = d;
    }
    const auto matrix_gradient = [&](const CMatrix& base, bool is_b) {
        CMatrix grad(base.rows(), base.cols());
        for (Eigen::Index j = 0; j < base.cols(); ++j)
        {
            for (Eigen::Index i = 0; i < base.rows(); ++i)
            {
                Complex d;
                for (const Complex u : {unit_re, unit_im})
                {
                    const double part = central([&](double s) {
                        CMatrix m = base;
                        m(i, j) += s * u;
                        return is_b ? f_at(rom.lambda(), m, rom.c())
                                    : f_at(rom.lambda(), rom.b(), m);
                    });
                    d += part * u;
                }
                grad(i, j) = d;
            }
        }
        return grad;
    };
    g.grad_b = matrix_gradient(rom.b(), true);
    g.grad_c = matrix_gradient(rom.c(), false);
    return g;
}

/// Central-difference gradient directly in the exponential parameters.
inline ExpGradients fd_exp_gradient_oracle(const DssModel& full,
                                           const DssExpParams& rom,
                                           const Horizon& h,
                                           double step = 1e-6)
{
    if (!(step >= 1e-8 && step <= 1e-4))
    {
        throw Error(ErrorKind::configuration,
                    "finite-difference step must lie in [1e-8, 1e-4]");
    }
    rom.validate();
    const auto diff = [&](RVector DssExpParams::*member) {
        RVector grad(rom.size());
        for (Eigen::Index k = 0; k < rom.size(); ++k)
        {
            DssExpParams plus = rom;
            DssExpParams minus = rom;
            (plus.*member)[k] += step;
            (minus.*member)[k] -= step;
            grad[k] = (objective_f(full, exp_params_to_model(plus), h).f -
                       objective_f(full, exp_params_to_model(minus), h).f) /
                      (2.0 * step);
        }
        return grad;
    };
    ExpGradients e;
    e.lambda_re = diff(&DssExpParams::lambda_re);
    e.lambda_im = diff(&DssExpParams::lambda_im);
    e.w_re = diff(&DssExpParams::w_re);
    e.w_im = diff(&DssExpParams::w_im);
    return e;
}

///
/// ### GradientComparison
///
/// Per-block relative errors `||a - b|| / max(||b||, floor / rel_tol)` of a
/// candidate gradient `a` against a reference `b`. With the defaults a block
/// passes when `||a - b|| <= max(1e-5 ||b||, 1e-8)`.
///
struct GradientComparison
{
    static constexpr double rel_tol = 1e-5;
    static constexpr double abs_floor = 1e-8;

    double re_lambda = 0.0;
    double im_lambda = 0.0;
    double re_b = 0.0;
    double im_b = 0.0;
    double re_c = 0.0;
    double im_c = 0.0;
    std::optional<double> exp_lambda_re;
    std::optional<double> exp_lambda_im;
    std::optional<double> exp_w_re;
    std::optional<double> exp_w_im;

    static double block_error(const Eigen::MatrixXd& a,
                              const Eigen::MatrixXd& b)
    {
        return (a - b).norm() / std::max(b.norm(), abs_floor / rel_tol);
    }

    double max_error() const
    {
        double m = std::max({re_lambda, im_lambda, re_b, im_b, re_c, im_c});
        for (const auto& e : {exp_lambda_re, exp_lambda_im, exp_w_re, exp_w_im})
        {
            if (e)
            {
                m = std::max(m, *e);
            }
        }
        return m;
    }

    bool passed() const
    {
        return max_error() <= rel_tol;
    }
};

inline GradientComparison compare_gradients(const GradientSet& a,
                                            const GradientSet& b)
{
    using M = Eigen::MatrixXd;
    GradientComparison c;
    c.re_lambda = GradientComparison::block_error(M(a.grad_lambda.real()),
                                                  M(b.grad_lambda.real()));
    c.im_lambda = GradientComparison::block_error(M(a.grad_lambda.imag()),
                                                  M(b.grad_lambda.imag()));
    c.re_b = GradientComparison::block_error(M(a.grad_b.real()),
                                             M(b.grad_b.real()));
    c.im_b = GradientComparison::block_error(M(a.grad_b.imag()),
                                             M(b.grad_b.imag()));
    c.re_c = GradientComparison::block_error(M(a.grad_c.real()),
                                             M(b.grad_c.real()));
    c.im_c = GradientComparison::block_error(M(a.grad_c.imag()),
                                             M(b.grad_c.imag()));
    return c;
}

inline void compare_exp_gradients(GradientComparison& c, const ExpGradients& a,
                                  const ExpGradients& b)
{
    using M = Eigen::MatrixXd;
    c.exp_lambda_re =
        GradientComparison::block_error(M(a.lambda_re), M(b.lambda_re));
    c.exp_lambda_im =
        GradientComparison::block_error(M(a.lambda_im), M(b.lambda_im));
    c.exp_w_re = GradientComparison::block_error(M(a.w_re), M(b.w_re));
    c.exp_w_im = GradientComparison::block_error(M(a.w_im), M(b.w_im));
}

} // namespace dssmor

#endif /* DSSMOR_GRADIENTS_HPP */
