///
/// \file reducer.hpp
///
/// Gradient descent with Armijo backtracking and a stability gate for the
/// H2-optimal reduced model, over raw complex parameters `(lambda, B, C)` or
/// the exponential parameters `(lambda_re, lambda_im, w_re, w_im)`.
///
#ifndef DSSMOR_REDUCER_HPP
#define DSSMOR_REDUCER_HPP

#include <cmath>
#include <optional>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include <dssmor/gradients.hpp>
#include <dssmor/gramians.hpp>
#include <dssmor/model.hpp>

namespace dssmor
{

enum class Parameterization
{
    raw_complex,
    dss_exp,
};

inline const char* to_string(Parameterization p)
{
    return p == Parameterization::raw_complex ? "raw-complex" : "dss-exp";
}

struct ReducerConfig
{
    double tol = 1e-3;
    double c1 = 1e-4;
    double alpha_ini = 1.0;
    double rho = 0.5;
    int k_max = 100;
    int max_backtracks = 60;
    Parameterization parameterization = Parameterization::dss_exp;

    void validate() const
    {
        if (!(tol > 0.0) || !(c1 > 0.0 && c1 < 1.0) || !(alpha_ini > 0.0) ||
            !(rho > 0.0 && rho < 1.0) || k_max < 1 || max_backtracks < 1)
        {
            throw Error(ErrorKind::configuration,
                        "reducer needs tol > 0, 0 < c1 < 1, alpha_ini > 0, "
                        "0 < rho < 1, k_max >= 1, max_backtracks >= 1");
        }
    }
};

struct TraceRow
{
    int k = 0;
    double f = 0.0;
    double d = 0.0;
    std::optional<double> alpha; // absent on the terminating row
    int backtracks = 0;
    bool stable = true;
};

struct ReductionTrace
{
    std::vector<TraceRow> rows;

    double initial_f() const
    {
        return rows.front().f;
    }
    double final_f() const
    {
        return rows.back().f;
    }
    /// Number of accepted steps.
    int iterations() const
    {
        return static_cast<int>(rows.size()) - 1;
    }
};

enum class Termination
{
    converged,
    max_iterations,
    line_search_stalled,
};

inline const char* to_string(Termination t)
{
    switch (t)
    {
        case Termination::converged:
            return "converged";
        case Termination::max_iterations:
            return "max_iterations";
        case Termination::line_search_stalled:
            return "line_search_stalled";
    }
    return "unknown";
}

//------------------------------------------------------------------------------
// Parameter points and the descent update
//------------------------------------------------------------------------------

struct RawPoint
{
    CVector lambda;
    CMatrix b;
    CMatrix c;
};

inline double descend(double x, double grad, double alpha)
{
    return x - alpha * grad;
}

inline RawPoint descend(const RawPoint& x, const GradientSet& grad,
                        double alpha)
{
    return RawPoint{x.lambda - alpha * grad.grad_lambda,
                    x.b - alpha * grad.grad_b, x.c - alpha * grad.grad_c};
}

inline DssExpParams descend(const DssExpParams& x, const ExpGradients& grad,
                            double alpha)
{
    DssExpParams y = x;
    y.lambda_re -= alpha * grad.lambda_re;
    y.lambda_im -= alpha * grad.lambda_im;
    y.w_re -= alpha * grad.w_re;
    y.w_im -= alpha * grad.w_im;
    return y;
}

template <typename Point>
struct ArmijoStep
{
    Point point;
    double alpha = 0.0;
    int backtracks = 0;
    double f = 0.0;
};

///
/// Backtracking line search. Tries `alpha = alpha_ini * rho^j` for
/// `j = 0..max_backtracks` and accepts the first trial with
/// `f(trial) <= f_k - c1 * alpha * d_k`. `eval` returns `std::nullopt` for an
/// infeasible (unstable or non-finite) trial, which is rejected regardless of
/// its objective. Returns `std::nullopt` when every trial fails.
///
template <typename Point, typename Direction, typename Eval>
std::optional<ArmijoStep<Point>>
armijo_step(const Point& phi, const Direction& grad, double f_k, double d_k,
            const ReducerConfig& cfg, Eval&& eval)
{
    if (!(d_k > 0.0))
    {
        throw Error(ErrorKind::configuration,
                    "line search called with a zero gradient measure");
    }
    double alpha = cfg.alpha_ini;
    for (int j = 0; j <= cfg.max_backtracks; ++j, alpha *= cfg.rho)
    {
        Point trial = descend(phi, grad, alpha);
        const std::optional<double> f_trial = eval(trial);
        if (f_trial && std::isfinite(*f_trial) &&
            *f_trial <= f_k - cfg.c1 * alpha * d_k)
        {
            return ArmijoStep<Point>{std::move(trial), alpha, j, *f_trial};
        }
    }
    return std::nullopt;
}

//------------------------------------------------------------------------------
// Reduction driver
//------------------------------------------------------------------------------

struct ReductionResult
{
    DssModel rom;
    std::optional<DssExpParams> rom_params; // set in dss-exp mode
    ReductionTrace trace;
    Termination termination = Termination::max_iterations;
    std::vector<std::string> warnings;
};

using InitialRom = std::variant<DssModel, DssExpParams>;

inline double gradient_measure(const GradientSet& g)
{
    return g.grad_lambda.norm() + g.grad_b.norm() + g.grad_c.norm();
}

/// `||grad_lambda_re + i grad_lambda_im|| + ||grad_w_re + i grad_w_im||`.
inline double gradient_measure(const ExpGradients& g)
{
    return std::sqrt(g.lambda_re.squaredNorm() + g.lambda_im.squaredNorm()) +
           std::sqrt(g.w_re.squaredNorm() + g.w_im.squaredNorm());
}

namespace detail
{

template <typename Point>
struct DescentOutcome
{
    Point point;
    ReductionTrace trace;
    Termination termination;
};

template <typename Point, typename Model, typename Gradient, typename Measure,
          typename Feasible>
DescentOutcome<Point> run_descent(const DssModel& full, Point phi, const Horizon& h,
                            const ReducerConfig& cfg, Model&& to_model,
                            Gradient&& gradient, Measure&& measure,
                            Feasible&& feasible)
{
    ReductionTrace trace;
    Termination termination = Termination::max_iterations;
    for (int k = 0;; ++k)
    {
        const DssModel rom = to_model(phi);
        const ObjectiveResult obj = objective_f(full, rom, h);
        if (!std::isfinite(obj.f))
        {
            throw Error(ErrorKind::numeric, "objective is not finite");
        }
        const auto grad = gradient(rom, phi, obj);
        const double d_k = measure(grad);

        TraceRow row;
        row.k = k;
        row.f = obj.f;
        row.d = d_k;
        row.stable = rom.is_stable();
        if (!(d_k >= cfg.tol) && std::isfinite(d_k))
        {
            termination = Termination::converged;
            trace.rows.push_back(row);
            break;
        }
        if (k >= cfg.k_max)
        {
            termination = Termination::max_iterations;
            trace.rows.push_back(row);
            break;
        }
        auto step = armijo_step(
            phi, grad, obj.f, d_k, cfg,
            [&](const Point& trial) -> std::optional<double> {
                if (!feasible(trial))
                {
                    return std::nullopt;
                }
                try
                {
                    return objective_value(full, to_model(trial), h);
                }
                catch (const Error&)
                {
                    return std::nullopt;
                }
            });
        if (!step)
        {
            termination = Termination::line_search_stalled;
            row.backtracks = cfg.max_backtracks + 1;
            trace.rows.push_back(row);
            break;
        }
        row.alpha = step->alpha;
        row.backtracks = step->backtracks;
        trace.rows.push_back(row);
        phi = std::move(step->point);
    }
    return DescentOutcome<Point>{std::move(phi), std::move(trace),
                                 termination};
}

} // namespace detail

///
/// Reduces `full` from `init` by gradient descent on the objective `f` over
/// horizon `h`.
///
/// Each iteration records `(k, f_k, D_k)`, stops when `D_k < tol` or after
/// `k_max` accepted steps, and otherwise takes the first backtracking step
/// that satisfies the Armijo condition with a stable trial model. In dss-exp
/// mode stability holds by construction and `B` stays fixed.
///
inline ReductionResult reduce(const DssModel& full, const InitialRom& init,
                              const Horizon& h, const ReducerConfig& cfg)
{
    cfg.validate();
    const DssModel init_model = std::visit(
        [](const auto& x) -> DssModel {
            if constexpr (std::is_same_v<std::decay_t<decltype(x)>, DssModel>)
            {
                return x;
            }
            else
            {
                return exp_params_to_model(x);
            }
        },
        init);
    if (!init_model.is_stable())
    {
        throw Error(ErrorKind::not_stable, "initial reduced model is unstable");
    }
    if (init_model.inputs() != full.inputs() ||
        init_model.outputs() != full.outputs())
    {
        throw Error(ErrorKind::dimension,
                    "initial reduced model differs in inputs or outputs");
    }
    std::vector<std::string> warnings;
    if (init_model.order() > full.order())
    {
        warnings.push_back("reduced order " +
                           std::to_string(init_model.order()) +
                           " exceeds full order " +
                           std::to_string(full.order()));
    }
    const std::optional<double> delta =
        init_model.delta() ? init_model.delta() : full.delta();

    if (cfg.parameterization == Parameterization::raw_complex)
    {
        RawPoint start{init_model.lambda(), init_model.b(), init_model.c()};
        const auto to_model = [&](const RawPoint& p) {
            return DssModel(p.lambda, p.b, p.c, delta);
        };
        auto out = detail::run_descent(
            full, std::move(start), h, cfg, to_model,
            [&](const DssModel& rom, const RawPoint&, const ObjectiveResult& obj) {
                return theorem1_gradients(full, rom, h, obj.gramians);
            },
            [](const GradientSet& g) { return gradient_measure(g); },
            [](const RawPoint& p) {
                return p.lambda.real().maxCoeff() < 0.0 && p.lambda.allFinite() &&
                       p.b.allFinite() && p.c.allFinite();
            });
        return ReductionResult{to_model(out.point), std::nullopt,
                               std::move(out.trace), out.termination,
                               std::move(warnings)};
    }

    if (!full.is_siso())
    {
        throw Error(ErrorKind::structure,
                    "dss-exp parameterization needs a SISO full model");
    }
    DssExpParams start = std::holds_alternative<DssExpParams>(init)
                             ? std::get<DssExpParams>(init)
                             : model_to_exp_params(init_model);
    start.delta = delta.value_or(1.0);
    auto out = detail::run_descent(
        full, std::move(start), h, cfg,
        [](const DssExpParams& p) { return exp_params_to_model(p); },
        [&](const DssModel& rom, const DssExpParams& p,
            const ObjectiveResult& obj) {
            return *exp_chain_rule(
                        theorem1_gradients(full, rom, h, obj.gramians), p)
                        .exp;
        },
        [](const ExpGradients& g) { return gradient_measure(g); },
        [](const DssExpParams& p) {
            return p.lambda_re.allFinite() && p.lambda_im.allFinite() &&
                   p.w_re.allFinite() && p.w_im.allFinite();
        });
    DssModel rom = exp_params_to_model(out.point);
    return ReductionResult{std::move(rom), std::move(out.point),
                           std::move(out.trace), out.termination,
                           std::move(warnings)};
}

} // namespace dssmor

#endif /* DSSMOR_REDUCER_HPP */
