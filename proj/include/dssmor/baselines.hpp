///
/// \file baselines.hpp
///
/// Balanced truncation on infinite and finite horizons, Hankel singular
/// values, a sampled H-infinity estimate, and the initializer policy used by
/// the reducer (balanced truncation first, random stable model otherwise).
///
#ifndef DSSMOR_BASELINES_HPP
#define DSSMOR_BASELINES_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

#include <dssmor/gramians.hpp>
#include <dssmor/model.hpp>

namespace dssmor
{

enum class BtMethod
{
    ibt,
    fbt,
};

struct BtResult
{
    DssModel rom;
    RVector hankel_sv; // length N, nonincreasing
    bool stable = false;
    bool diagonalizable = true;
    double eigvec_condition = 1.0;
    BtMethod method = BtMethod::ibt;
    Horizon horizon = Horizon::infinite();
};

namespace detail
{

/// Relative eigenvalue cutoff for Gramian square roots.
inline constexpr double gramian_rank_tol = 1e-12;
/// Eigenvector condition number above which the reduced `A` counts as
/// defective.
inline constexpr double defective_condition = 1e12;

/// Returns `L` with `G = L L^*`, dropping eigenvalues below the rank cutoff.
inline CMatrix hermitian_root(const CMatrix& g)
{
    Eigen::SelfAdjointEigenSolver<CMatrix> eig(g);
    const RVector mu = eig.eigenvalues().cwiseMax(0.0);
    const double mu_max = mu.size() > 0 ? mu.maxCoeff() : 0.0;
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = mu.size(); i-- > 0;)
    {
        if (mu_max > 0.0 && mu[i] > gramian_rank_tol * mu_max)
        {
            keep.push_back(i);
        }
    }
    CMatrix root(g.rows(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k)
    {
        const auto i = keep[k];
        root.col(static_cast<Eigen::Index>(k)) =
            eig.eigenvectors().col(i) * std::sqrt(mu[i]);
    }
    return root;
}

struct BalancingFactors
{
    CMatrix p_root;
    CMatrix q_root;
    Eigen::JacobiSVD<CMatrix> svd;
    RVector hankel_sv;
};

inline BalancingFactors balancing_factors(const DssModel& full,
                                          const Horizon& h)
{
    if (h.is_infinite() && !full.is_stable())
    {
        throw Error(ErrorKind::not_stable,
                    "infinite-horizon balancing needs a stable model");
    }
    const CVector& lam = full.lambda();
    CMatrix p = solve_sylvester(lam, lam.conjugate(),
                                full.b() * full.b().adjoint(), h);
    CMatrix q = solve_sylvester(lam.conjugate(), lam,
                                full.c().adjoint() * full.c(), h);
    hermitianize(p);
    hermitianize(q);

    BalancingFactors f;
    f.p_root = hermitian_root(p);
    f.q_root = hermitian_root(q);
    f.hankel_sv = RVector::Zero(full.order());
    if (f.p_root.cols() > 0 && f.q_root.cols() > 0)
    {
        f.svd.compute(f.q_root.adjoint() * f.p_root,
                      Eigen::ComputeThinU | Eigen::ComputeThinV);
        const RVector& s = f.svd.singularValues();
        f.hankel_sv.head(s.size()) = s;
    }
    return f;
}

} // namespace detail

/// Square roots of the eigenvalues of `P Q`, nonincreasing, length N.
inline RVector hankel_singular_values(const DssModel& full, const Horizon& h)
{
    return detail::balancing_factors(full, h).hankel_sv;
}

///
/// Square-root balanced truncation to order `r`, followed by an
/// eigendecomposition of the truncated state matrix so the result is again a
/// diagonal model. The finite-horizon variant may return an unstable model;
/// this is reported through `stable`, not as an error.
///
inline BtResult balanced_truncation(const DssModel& full, Eigen::Index r,
                                    const Horizon& h)
{
    if (r < 1 || r > full.order())
    {
        throw Error(ErrorKind::dimension,
                    "truncation order must satisfy 1 <= r <= N");
    }
    detail::BalancingFactors f = detail::balancing_factors(full, h);
    const RVector& sv = f.hankel_sv;
    if (!(sv[0] > 0.0) || !(sv[r - 1] > detail::gramian_rank_tol * sv[0]) ||
        f.svd.singularValues().size() < r)
    {
        throw Error(ErrorKind::rank_deficient,
                    "fewer than r nonzero Hankel singular values");
    }

    const RVector inv_sqrt = sv.head(r).cwiseSqrt().cwiseInverse();
    const CMatrix t =
        f.p_root * f.svd.matrixV().leftCols(r) * inv_sqrt.asDiagonal();
    const CMatrix w =
        f.q_root * f.svd.matrixU().leftCols(r) * inv_sqrt.asDiagonal();

    const CMatrix a_r = w.adjoint() * full.lambda().asDiagonal() * t;
    const CMatrix b_r = w.adjoint() * full.b();
    const CMatrix c_r = full.c() * t;

    Eigen::ComplexEigenSolver<CMatrix> eig(a_r);
    const CMatrix& v = eig.eigenvectors();
    const RVector v_sv = Eigen::JacobiSVD<CMatrix>(v).singularValues();
    const double cond = v_sv[v_sv.size() - 1] > 0.0
                            ? v_sv[0] / v_sv[v_sv.size() - 1]
                            : std::numeric_limits<double>::infinity();

    const CMatrix b_diag = v.partialPivLu().solve(b_r);
    const CMatrix c_diag = c_r * v;
    const CVector mu = eig.eigenvalues();

    BtResult out{DssModel(mu, b_diag, c_diag, full.delta()), sv};
    out.stable = mu.real().maxCoeff() < 0.0;
    out.eigvec_condition = cond;
    out.diagonalizable =
        std::isfinite(cond) && cond <= detail::defective_condition;
    out.method = h.is_infinite() ? BtMethod::ibt : BtMethod::fbt;
    out.horizon = h;
    return out;
}

///
/// ### FrequencyGrid
///
/// Sample points for the H-infinity estimate: `points` logarithmically spaced
/// magnitudes in `[omega_min, omega_max]`, mirrored to negative frequencies
/// (complex systems are not conjugate-symmetric), plus `omega = 0` and the
/// imaginary parts of the poles.
///
struct FrequencyGrid
{
    double omega_min = 1e-4;
    double omega_max = 1e4;
    int points = 2001;

    static FrequencyGrid default_for(const DssModel& sys)
    {
        const double scale = sys.lambda().cwiseAbs().maxCoeff();
        const double s = scale > 0.0 ? scale : 1.0;
        return FrequencyGrid{1e-4 * s, 1e4 * s, 2001};
    }

    std::vector<double> frequencies(const DssModel& sys) const
    {
        std::vector<double> w;
        w.reserve(2 * static_cast<std::size_t>(points) + 1 +
                  static_cast<std::size_t>(sys.order()));
        w.push_back(0.0);
        const double lo = std::log10(omega_min);
        const double hi = std::log10(omega_max);
        for (int k = 0; k < points; ++k)
        {
            const double e =
                points == 1 ? lo : lo + (hi - lo) * k / (points - 1);
            const double omega = std::pow(10.0, e);
            w.push_back(omega);
            w.push_back(-omega);
        }
        for (Eigen::Index i = 0; i < sys.order(); ++i)
        {
            w.push_back(sys.lambda()[i].imag());
        }
        return w;
    }
};

/// Frequency response `G(i omega) = C diag(1 / (i omega - lambda)) B`.
inline CMatrix frequency_response(const DssModel& sys, double omega)
{
    const CVector d =
        (Complex(0.0, omega) - sys.lambda().array()).inverse().matrix();
    return sys.c() * d.asDiagonal() * sys.b();
}

///
/// Largest singular value of `G(i omega)` over the grid. A lower bound on the
/// true H-infinity norm.
///
inline double hinf_estimate(const DssModel& sys, const FrequencyGrid& grid)
{
    if (!sys.is_stable())
    {
        throw Error(ErrorKind::not_stable,
                    "H-infinity estimate needs a stable model");
    }
    double best = 0.0;
    for (const double omega : grid.frequencies(sys))
    {
        const CMatrix g = frequency_response(sys, omega);
        const double gain =
            g.size() == 1
                ? std::abs(g(0, 0))
                : Eigen::JacobiSVD<CMatrix>(g).singularValues()[0];
        best = std::max(best, gain);
    }
    return best;
}

inline double hinf_estimate(const DssModel& sys)
{
    return hinf_estimate(sys, FrequencyGrid::default_for(sys));
}

//------------------------------------------------------------------------------
// Initializer policy
//------------------------------------------------------------------------------

enum class Provenance
{
    ibt,
    fbt,
    random,
};

inline const char* to_string(Provenance p)
{
    switch (p)
    {
        case Provenance::ibt:
            return "ibt";
        case Provenance::fbt:
            return "fbt";
        case Provenance::random:
            return "random";
    }
    return "unknown";
}

struct InitializerChoice
{
    DssExpParams init;
    Provenance provenance = Provenance::random;
    bool bt_stable = false;   // false also when BT failed outright
    std::string bt_rejection; // why BT was not used (empty when it was)
};

///
/// Horizon-matched balanced truncation converted to exponential parameters;
/// falls back to `random_stable_model(r, fallback_seed)` when the truncated
/// model is unstable, defective, rank deficient, or has a zero input entry.
///
inline InitializerChoice select_initializer(const DssModel& full,
                                            Eigen::Index r, const Horizon& h,
                                            std::uint64_t fallback_seed)
{
    if (!full.is_siso() || !full.is_stable())
    {
        throw Error(ErrorKind::structure,
                    "initializer needs a stable SISO full model");
    }
    const double delta = full.delta().value_or(1.0);
    InitializerChoice out;
    try
    {
        const BtResult bt = balanced_truncation(full, r, h);
        out.bt_stable = bt.stable;
        if (!bt.stable)
        {
            out.bt_rejection = "unstable";
        }
        else if (!bt.diagonalizable)
        {
            out.bt_rejection = "defective";
        }
        else
        {
            out.init = model_to_exp_params(bt.rom.with_delta(delta));
            out.provenance = bt.method == BtMethod::ibt ? Provenance::ibt
                                                        : Provenance::fbt;
            return out;
        }
    }
    catch (const Error& e)
    {
        out.bt_rejection = to_string(e.kind());
    }
    out.init = random_stable_model(r, fallback_seed, delta);
    out.provenance = Provenance::random;
    return out;
}

} // namespace dssmor

#endif /* DSSMOR_BASELINES_HPP */
