/*
 * Gridless sparse parameter estimation via covariance fitting
 * Copyright (c) 2026 The gridless-doa authors
 * SPDX-License-Identifier: MIT
 *
 * Pipeline:
 *   1. fit_covariance / fit_single_snapshot - semidefinite covariance
 *      fitting. The source covariance is parametrized as a Hermitian
 *      Toeplitz matrix T(u) >= 0 compressed onto the physical sensors,
 *      plus per-sensor (or tied) noise variances. Two fitting criteria:
 *
 *        weighted:   tr(X) + tr(Rtilde^{-1} R),  X >= R Rtilde^{-1} R
 *                    (epigraph of tr(Rtilde^{1/2} R^{-1} Rtilde^{1/2})),
 *        unweighted: tr(X) + tr(R),              X >= Rtilde R^{-1} Rtilde.
 *
 *      The weighted criterion needs an invertible sample covariance, so it
 *      is used when the snapshot count reaches the sensor count and the
 *      sample covariance is numerically invertible; otherwise the
 *      unweighted criterion is used (diagnostics record the fallback).
 *
 *   2. postprocess - shift u by the smallest eigenvalue of T(u) so the
 *      fitted Toeplitz factor becomes singular PSD (rank <= M-1), moving
 *      the shifted mass into the noise estimate. Leaves the total fitted
 *      covariance unchanged.
 *
 *   3. vandermonde_decompose - recover frequencies from the annihilating
 *      polynomial of the singular Toeplitz matrix (null-space vector at
 *      full deficient rank, otherwise an SVD of the Hankel matrix of the
 *      conjugate-extended sequence), then powers by nonnegative least
 *      squares on the moment equations.
 *
 * spa_estimate chains the three stages and tags errors with the stage name.
 */

#ifndef GRIDLESS_SPA_HPP
#define GRIDLESS_SPA_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "gridless/array.hpp"
#include "gridless/errors.hpp"
#include "gridless/hermitian.hpp"
#include "gridless/nnls.hpp"
#include "gridless/sdp.hpp"
#include "gridless/simulate.hpp"
#include "gridless/toeplitz.hpp"

namespace gridless {

/// Noise model used by the covariance fit.
enum class NoiseMode {
    distinct, ///< one variance per sensor
    equal,    ///< common variance, absorbed into the Toeplitz factor
};

/// Which fitting criterion a solve actually used.
enum class FitObjective { weighted, unweighted };

inline const char* to_string(NoiseMode m)
{
    return m == NoiseMode::distinct ? "distinct" : "equal";
}

inline const char* to_string(FitObjective f)
{
    return f == FitObjective::weighted ? "weighted" : "unweighted";
}

/// Solver outcome attached to every fit.
struct SdpDiagnostics {
    SdpStatus status = SdpStatus::numerical_failure;
    double rel_gap = 0.0;
    double primal_infeas = 0.0;
    double dual_infeas = 0.0;
    int iterations = 0;
    bool fallback_used = false; ///< weighted criterion requested but unusable
};

/// Result of the covariance-fitting stage.
struct CovarianceFit {
    Eigen::VectorXcd u_star;    ///< fitted Toeplitz sequence, length M
    Eigen::VectorXd sigma_star; ///< fitted noise variances, length L (zeros in equal mode)
    Eigen::MatrixXcd r_fit;     ///< compress(T(u*)) + diag(sigma*)
    double objective = 0.0;     ///< optimal value of the solved program
    FitObjective criterion = FitObjective::unweighted;
    SdpDiagnostics diagnostics;
};

/// Frequencies/powers recovered from a singular Toeplitz sequence.
struct Decomposition {
    Eigen::VectorXd thetas; ///< ascending, in [0,1)
    Eigen::VectorXd powers; ///< positive, same length
    int rank = 0;           ///< number of retained components
};

/// Common shape of a parametric estimate: recovered frequencies, their
/// powers, per-sensor noise variances, and the retained model order.
struct ParamEstimate {
    Eigen::VectorXd thetas;
    Eigen::VectorXd powers;
    Eigen::VectorXd sigma; ///< per-sensor noise variances, length L
    int rank = 0;
};

/// Full pipeline output.
struct SpaEstimate : ParamEstimate {
    FitObjective criterion = FitObjective::unweighted;
    SdpDiagnostics diagnostics;
};

namespace detail {

struct SpaProgram {
    SdpProblem problem;
    int corner_offset = 0;       ///< start of the covariance corner in block 0
    int corner_dim = 0;          ///< corner order (L, or M for full-aperture fits)
    int t_block = -1;            ///< separate Toeplitz block, -1 if the corner is Toeplitz
    std::vector<int> sigma_blocks;
};

/// Chain of equalities forcing Hermitian Toeplitz structure on an
/// order x order corner starting at `offset` inside block `blk`: every
/// entry on an upper diagonal equals its neighbour one step down it.
inline void add_toeplitz_rows(SdpProblem& prob, int blk, int offset, int order)
{
    for (int d = 0; d < order - 1; ++d)
        for (int i = 0; i + d + 1 < order; ++i)
            prob.equate_entries(blk, offset + i, offset + i + d,
                                blk, offset + i + 1, offset + i + d + 1);
}

/// Assemble the fitting program
///
///   minimize  tr(X) + tr(H * corner)
///   s.t.      [[X, W], [W^H, corner]] >= 0,
///             corner == compress(T) (+ diag(sigma) in distinct mode),
///             T Toeplitz >= 0,  sigma >= 0.
///
/// `top` is the order of X (the sensor count, or 1 for the single-snapshot
/// program); `w` is top x corner_dim. For a full-aperture fit without noise
/// variables the corner itself carries the Toeplitz structure and no
/// separate T block is created.
inline SpaProgram build_fit_program(const ArrayGeometry& geom, int top,
                                    const Eigen::MatrixXcd& w, const Eigen::MatrixXcd& h,
                                    bool sigma_vars)
{
    const int l = geom.sensors();
    const int m = geom.aperture();
    const int corner = static_cast<int>(w.cols());
    const bool corner_is_t = geom.is_ula() && !sigma_vars && corner == m;

    std::vector<int> orders;
    orders.push_back(top + corner);
    int t_blk = -1;
    if (!corner_is_t) {
        t_blk = static_cast<int>(orders.size());
        orders.push_back(m);
    }
    std::vector<int> sig_blocks;
    if (sigma_vars)
        for (int j = 0; j < l; ++j) {
            sig_blocks.push_back(static_cast<int>(orders.size()));
            orders.push_back(1);
        }

    int total = 0;
    for (int o : orders)
        total += o;
    if (total > 512)
        throw UnsupportedError("fit program exceeds the supported problem size");

    SdpProblem prob(orders);

    for (int i = 0; i < top; ++i)
        prob.add_objective(0, i, i, 1.0);
    for (int i = 0; i < corner; ++i)
        for (int j = i; j < corner; ++j)
            prob.add_objective(0, top + i, top + j, h(i, j));

    for (int i = 0; i < top; ++i)
        for (int j = 0; j < corner; ++j)
            prob.pin_entry(0, i, top + j, w(i, j));

    if (corner_is_t) {
        add_toeplitz_rows(prob, 0, top, m);
    }

    if (t_blk >= 0) {
        add_toeplitz_rows(prob, t_blk, 0, m);
        const auto& omega = geom.omega();
        for (int j = 0; j < l; ++j)
            for (int k = j; k < l; ++k) {
                const int tj = omega[static_cast<std::size_t>(j)] - 1;
                const int tk = omega[static_cast<std::size_t>(k)] - 1;
                if (j == k && sigma_vars) {
                    const int row = prob.add_constraint(0.0);
                    prob.add_term(row, 0, top + j, top + j, 1.0);
                    prob.add_term(row, t_blk, tj, tj, -1.0);
                    prob.add_term(row, sig_blocks[static_cast<std::size_t>(j)], 0, 0, -1.0);
                } else {
                    prob.equate_entries(0, top + j, top + k, t_blk, tj, tk);
                }
            }
    }

    SpaProgram out{std::move(prob), top, corner, t_blk, std::move(sig_blocks)};
    return out;
}

} // namespace detail

namespace detail {

/// Hermitian Toeplitz basis matrix for one real parameter: the zero lag,
/// or the real/imaginary part of lag d >= 1.
inline Eigen::MatrixXcd toeplitz_basis(int m, int d, bool imag)
{
    Eigen::MatrixXcd e = Eigen::MatrixXcd::Zero(m, m);
    const std::complex<double> v = imag ? std::complex<double>(0.0, 1.0) : 1.0;
    for (int i = 0; i + d < m; ++i) {
        e(i, i + d) = v;
        e(i + d, i) = std::conj(v);
    }
    return e;
}

/// Terminal refinement for full-aperture equal-noise fits. Both criteria
/// reduce to the smooth strictly convex functional
///
///     g(u) = tr(A T(u)^{-1}) + tr(L T(u)),
///
/// with A = S, L = S^{-1} for the weighted criterion and A = S^2, L = I
/// for the unweighted one (S the sample covariance). When the optimal
/// T(u) is positive definite the interior-point answer can be sharpened
/// to machine precision by a few damped Newton steps on g; the refinement
/// is skipped whenever T(u) is close to singular (the smooth model breaks
/// down on the cone boundary) or the steps fail to decrease g.
inline Eigen::VectorXcd polish_full_aperture_fit(const Eigen::VectorXcd& u0,
                                                 const Eigen::MatrixXcd& a,
                                                 const Eigen::MatrixXcd& lin)
{
    const int m = static_cast<int>(u0.size());
    const int np = 2 * m - 1;

    std::vector<Eigen::MatrixXcd> basis;
    basis.reserve(static_cast<std::size_t>(np));
    basis.push_back(toeplitz_basis(m, 0, false));
    for (int d = 1; d < m; ++d) {
        basis.push_back(toeplitz_basis(m, d, false));
        basis.push_back(toeplitz_basis(m, d, true));
    }

    const auto pack = [m, np](const Eigen::VectorXcd& u) {
        Eigen::VectorXd v(np);
        v(0) = u(0).real();
        for (int d = 1; d < m; ++d) {
            v(2 * d - 1) = u(d).real();
            v(2 * d) = u(d).imag();
        }
        return v;
    };
    const auto unpack = [m](const Eigen::VectorXd& v) {
        Eigen::VectorXcd u(m);
        u(0) = v(0);
        for (int d = 1; d < m; ++d)
            u(d) = std::complex<double>(v(2 * d - 1), v(2 * d));
        return u;
    };

    const auto value = [&](const Eigen::VectorXcd& u, bool& pd) -> double {
        const Eigen::MatrixXcd t = toeplitz(u);
        Eigen::LLT<Eigen::MatrixXcd> llt(t);
        if (llt.info() != Eigen::Success) {
            pd = false;
            return std::numeric_limits<double>::infinity();
        }
        pd = true;
        const Eigen::MatrixXcd tinv =
            llt.solve(Eigen::MatrixXcd::Identity(m, m));
        return (a * tinv).trace().real() + (lin * t).trace().real();
    };

    Eigen::VectorXd v = pack(u0);
    bool pd = false;
    double g = value(u0, pd);
    if (!pd)
        return u0;
    {
        const Eigen::MatrixXcd t0 = toeplitz(u0);
        const HermitianEig e0 = eig_hermitian(t0);
        if (!(e0.values(0) > 1e-8 * std::max(e0.values(m - 1), 0.0)))
            return u0; // boundary optimum; the smooth model does not apply
    }

    const double step_cap = 1e-2 * (1.0 + v.norm());
    for (int it = 0; it < 4; ++it) {
        const Eigen::MatrixXcd t = toeplitz(unpack(v));
        Eigen::LLT<Eigen::MatrixXcd> llt(t);
        if (llt.info() != Eigen::Success)
            break;
        const Eigen::MatrixXcd tinv = llt.solve(Eigen::MatrixXcd::Identity(m, m));
        const Eigen::MatrixXcd inner = tinv * a * tinv; // d tr(A T^{-1}) = -tr(inner E)
        const Eigen::MatrixXcd residual = lin - inner;

        Eigen::VectorXd grad(np);
        std::vector<Eigen::MatrixXcd> tie(static_cast<std::size_t>(np));
        for (int k = 0; k < np; ++k) {
            grad(k) = (residual * basis[static_cast<std::size_t>(k)]).trace().real();
            tie[static_cast<std::size_t>(k)] = tinv * basis[static_cast<std::size_t>(k)];
        }
        Eigen::MatrixXd hess(np, np);
        for (int r = 0; r < np; ++r)
            for (int c = r; c < np; ++c) {
                const double h =
                    2.0 * (tie[static_cast<std::size_t>(r)] * a * tinv *
                           basis[static_cast<std::size_t>(c)] * tinv)
                              .trace()
                              .real();
                hess(r, c) = h;
                hess(c, r) = h;
            }
        hess.diagonal().array() += 1e-13 * std::max(1.0, hess.trace() / np);

        Eigen::LDLT<Eigen::MatrixXd> hl(hess);
        if (hl.info() != Eigen::Success)
            break;
        Eigen::VectorXd dv = hl.solve(-grad);
        if (!dv.allFinite())
            break;
        if (dv.norm() > step_cap)
            dv *= step_cap / dv.norm();

        double tstep = 1.0;
        bool accepted = false;
        for (int half = 0; half < 12; ++half) {
            const Eigen::VectorXcd cand = unpack(v + tstep * dv);
            bool cand_pd = false;
            const double gc = value(cand, cand_pd);
            if (cand_pd && gc <= g) {
                if (g - gc <= 1e-15 * (std::abs(g) + 1.0) && half == 0) {
                    v += tstep * dv;
                    g = gc;
                    accepted = false; // converged
                    break;
                }
                v += tstep * dv;
                g = gc;
                accepted = true;
                break;
            }
            tstep *= 0.5;
        }
        if (!accepted)
            break;
    }
    return unpack(v);
}

inline SdpDiagnostics make_diagnostics(const SdpSolution& sol, bool fallback)
{
    SdpDiagnostics d;
    d.status = sol.status;
    d.rel_gap = sol.rel_gap;
    d.primal_infeas = sol.primal_infeas;
    d.dual_infeas = sol.dual_infeas;
    d.iterations = sol.iterations;
    d.fallback_used = fallback;
    return d;
}

/// Extract the fitted Toeplitz sequence from the solved program.
inline Eigen::VectorXcd extract_u(const SpaProgram& prog, const SdpSolution& sol, int m)
{
    if (prog.t_block >= 0)
        return diagonal_average(sol.x[static_cast<std::size_t>(prog.t_block)]);
    const auto& big = sol.x[0];
    return diagonal_average(
        big.block(prog.corner_offset, prog.corner_offset, m, m));
}

} // namespace detail

/// Covariance-fitting stage. `n` is the snapshot count behind `r_sample`
/// (it selects the fitting criterion). The fit is solved on the
/// trace-normalized sample covariance and rescaled afterwards.
inline CovarianceFit fit_covariance(const Eigen::MatrixXcd& r_sample, const ArrayGeometry& geom,
                                    int n, NoiseMode mode, const SdpTolerances& tols = {})
{
    const int l = geom.sensors();
    const int m = geom.aperture();
    if (r_sample.rows() != l || r_sample.cols() != l)
        throw DomainError("fit_covariance: sample covariance must be L x L");
    if (n < 1)
        throw DomainError("fit_covariance: snapshot count must be positive");
    if (!r_sample.allFinite())
        throw DomainError("fit_covariance: sample covariance has non-finite entries");
    if (!is_hermitian(r_sample, 1e-10))
        throw DomainError("fit_covariance: sample covariance must be Hermitian");

    const Eigen::MatrixXcd rsym = symmetrize(r_sample);
    const double scale = rsym.real().trace() / l;
    if (!(scale > 0.0))
        throw DomainError("fit_covariance: sample covariance must have positive trace");
    const Eigen::MatrixXcd rn = rsym / scale;

    const HermitianEig eig = eig_hermitian(rn);
    const double lam_min = eig.values(0);
    const double lam_max = eig.values(l - 1);
    if (lam_min < -1e-8 * std::max(lam_max, 1.0))
        throw DomainError("fit_covariance: sample covariance must be positive semidefinite");

    const bool invertible = lam_min > 0.0 && lam_max <= 1e12 * lam_min;
    const bool want_weighted = n >= l;
    const bool weighted = want_weighted && invertible;
    const bool fallback = want_weighted && !invertible;

    Eigen::MatrixXcd w, h;
    if (weighted) {
        w = matrix_sqrt_psd(rn);
        // H = Rn^{-1} from the eigendecomposition already at hand.
        h = eig.vectors * eig.values.cwiseInverse().asDiagonal() *
            eig.vectors.adjoint();
        h = symmetrize(h);
    } else {
        w = rn;
        h = Eigen::MatrixXcd::Identity(l, l);
    }

    const bool sigma_vars = mode == NoiseMode::distinct;
    detail::SpaProgram prog = detail::build_fit_program(geom, l, w, h, sigma_vars);
    const SdpSolution sol = solve_sdp(prog.problem, tols);

    CovarianceFit fit;
    fit.criterion = weighted ? FitObjective::weighted : FitObjective::unweighted;
    fit.diagnostics = detail::make_diagnostics(sol, fallback);
    if (!sol.x.empty()) {
        Eigen::VectorXcd u = detail::extract_u(prog, sol, m);
        double objective = sol.objective;
        bool snapped = false;
        {
            // Certificate snap: when the input already belongs to the model
            // family {Gamma T(u) Gamma^T + diag(sigma) : T(u) psd, sigma >= 0}
            // the optimum is analytic. Both criteria obey trace bounds with
            // equality exactly at R = Rtilde (weighted: tr(X) +
            // tr(Rtilde^{-1} R) >= 2L; unweighted: tr(X) + tr(R) >=
            // 2 tr|Rtilde|), so the lag-averaged candidate with sigma = 0 is
            // an exact solution whenever it reproduces the input and extends
            // to a psd Toeplitz matrix. Interior-point iterates lose digits
            // near these rank-deficient optima; the snap restores them
            // without touching the solver diagnostics.
            const std::optional<Eigen::VectorXcd> cand = coarray_average(rn, geom);
            if (cand) {
                const HermitianEig ec = eig_hermitian(toeplitz(*cand));
                const bool consistent =
                    (compress_toeplitz(*cand, geom) - rn).norm() <= 1e-10 * rn.norm();
                const bool psd =
                    ec.values(0) >= -1e-10 * std::max(ec.values(m - 1), 0.0);
                const double value = weighted ? 2.0 * l : 2.0 * rn.real().trace();
                const bool agrees = sol.status != SdpStatus::optimal ||
                                    value <= sol.objective + 1e-4 * (1.0 + std::abs(value));
                if (consistent && psd && agrees) {
                    u = *cand;
                    objective = value;
                    snapped = true;
                }
            }
        }
        if (!snapped && geom.is_ula() && !sigma_vars && sol.status == SdpStatus::optimal) {
            const HermitianEig e0 = eig_hermitian(toeplitz(u));
            // Newton refinement and the smooth objective reevaluation both
            // require an interior optimum: near the cone boundary T^{-1}
            // is unreliable and would corrupt a perfectly good iterate.
            if (e0.values(0) > 1e-6 * std::max(e0.values(m - 1), 0.0)) {
                const Eigen::MatrixXcd aa = weighted ? rn : Eigen::MatrixXcd(rn * rn);
                const Eigen::MatrixXcd ll = weighted ? h : Eigen::MatrixXcd::Identity(l, l);
                u = detail::polish_full_aperture_fit(u, aa, ll);
                const Eigen::MatrixXcd t = toeplitz(u);
                Eigen::LLT<Eigen::MatrixXcd> llt(t);
                if (llt.info() == Eigen::Success)
                    objective = (aa * llt.solve(Eigen::MatrixXcd::Identity(m, m))).trace().real() +
                                (ll * t).trace().real();
            }
        }
        Eigen::VectorXd sigma = Eigen::VectorXd::Zero(l);
        if (!snapped)
            for (int j = 0; j < static_cast<int>(prog.sigma_blocks.size()); ++j)
                sigma(j) = std::max(
                    0.0,
                    sol.x[static_cast<std::size_t>(prog.sigma_blocks[static_cast<std::size_t>(j)])](0, 0).real());
        u *= scale;
        sigma *= scale;
        fit.u_star = u;
        fit.sigma_star = sigma;
        fit.r_fit = compress_toeplitz(u, geom);
        fit.r_fit.diagonal() += sigma.cast<std::complex<double>>();
        fit.objective = weighted ? objective : scale * objective;
    }
    return fit;
}

/// Single-snapshot fitting stage:
///
///   minimize x + tr(corner)  s.t.  [[x, (||y|| y)^H], [||y|| y, corner]] >= 0
///
/// with the corner a PSD Toeplitz matrix (compressed onto the sensors when
/// the array is sparse). Solved on y/||y||, rescaled by ||y||^2 afterwards.
inline CovarianceFit fit_single_snapshot(const Eigen::VectorXcd& y, const ArrayGeometry& geom,
                                         const SdpTolerances& tols = {})
{
    const int l = geom.sensors();
    const int m = geom.aperture();
    if (y.size() != l)
        throw DomainError("fit_single_snapshot: snapshot length must equal the sensor count");
    if (!y.allFinite())
        throw DomainError("fit_single_snapshot: snapshot has non-finite entries");
    const double energy = y.squaredNorm();
    if (energy < 1e-300)
        throw DomainError("fit_single_snapshot: snapshot is zero");

    const Eigen::VectorXcd yn = y / std::sqrt(energy);
    // Corner entry (0, 1+j) of the PSD block is the j-th entry of
    // (||yn|| yn)^H = yn^H.
    const Eigen::MatrixXcd w = yn.adjoint();
    const int corner = geom.is_ula() ? m : l;
    const Eigen::MatrixXcd h = Eigen::MatrixXcd::Identity(corner, corner);

    detail::SpaProgram prog = detail::build_fit_program(geom, 1, w, h, false);
    const SdpSolution sol = solve_sdp(prog.problem, tols);

    CovarianceFit fit;
    fit.criterion = FitObjective::unweighted;
    fit.diagnostics = detail::make_diagnostics(sol, false);
    if (!sol.x.empty()) {
        Eigen::VectorXcd u = detail::extract_u(prog, sol, m) * energy;
        fit.u_star = u;
        fit.sigma_star = Eigen::VectorXd::Zero(l);
        fit.r_fit = compress_toeplitz(u, geom);
        fit.objective = energy * sol.objective;
    }
    return fit;
}

/// Rank-restoring shift: subtract the smallest eigenvalue of T(u*) from the
/// zero lag and move it into every noise variance. Leaves
/// compress(T(u)) + diag(sigma) unchanged and makes T(u_hat) singular PSD.
inline std::pair<Eigen::VectorXcd, Eigen::VectorXd>
postprocess(const Eigen::VectorXcd& u_star, const Eigen::VectorXd& sigma_star)
{
    const Eigen::MatrixXcd t = toeplitz(u_star);
    const double delta = min_eigenvalue(t);
    Eigen::VectorXcd u_hat = u_star;
    u_hat(0) = std::complex<double>(u_star(0).real() - delta, 0.0);
    Eigen::VectorXd sigma_hat = (sigma_star.array() + delta).cwiseMax(0.0);
    return {u_hat, sigma_hat};
}

inline std::pair<Eigen::VectorXcd, Eigen::VectorXd> postprocess(const CovarianceFit& fit)
{
    return postprocess(fit.u_star, fit.sigma_star);
}

/// Recover {theta_k, p_k} from a singular PSD Toeplitz sequence
/// u_m = sum_k p_k e^{-i 2 pi (m-1) theta_k}.
///
/// The linear algebra runs in extended precision: clusters of nearby
/// frequencies push the smallest signal eigenvalue of T(u) (and the
/// matching Hankel singular value) toward the double-precision noise
/// floor, where the annihilating polynomial - and hence the roots -
/// would lose several digits. The matrices involved are at most
/// (2m-1) x m, so the extra cost is negligible.
inline Decomposition vandermonde_decompose(const Eigen::VectorXcd& u, double rank_tol = 1e-8)
{
    using ld = long double;
    using cld = std::complex<long double>;
    using MatX = Eigen::Matrix<cld, Eigen::Dynamic, Eigen::Dynamic>;
    using VecX = Eigen::Matrix<cld, Eigen::Dynamic, 1>;
    using RMatX = Eigen::Matrix<ld, Eigen::Dynamic, Eigen::Dynamic>;
    using RVecX = Eigen::Matrix<ld, Eigen::Dynamic, 1>;
    constexpr ld pi = std::numbers::pi_v<ld>;

    require_real_leading(u, "vandermonde_decompose");
    const int m = static_cast<int>(u.size());
    const VecX uld = u.cast<cld>();
    MatX t(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            t(i, j) = (j >= i) ? uld(j - i) : std::conj(uld(i - j));
    const Eigen::SelfAdjointEigenSolver<MatX> eig(t);
    const ld lam_max = eig.eigenvalues()(m - 1);

    Decomposition dec;
    if (!(lam_max > ld(0)))
        return dec; // zero or negligible sequence
    int r = 0;
    for (int i = 0; i < m; ++i)
        if (eig.eigenvalues()(i) > ld(rank_tol) * lam_max)
            ++r;
    if (r == 0)
        return dec;
    if (r >= m)
        throw DomainError("vandermonde_decompose: Toeplitz matrix must be rank deficient");

    // Conjugate-extended sequence s_n = sum_k p_k e^{i 2 pi n theta_k},
    // n = -(m-1) .. m-1, stored with offset m-1.
    VecX s(2 * m - 1);
    for (int d = 0; d < m; ++d) {
        s(m - 1 - d) = uld(d);
        s(m - 1 + d) = std::conj(uld(d));
    }

    // Annihilating polynomial coefficients c_0..c_r and the root sign:
    // roots are e^{sign * i 2 pi theta}.
    VecX c(r + 1);
    ld sign;
    if (r == m - 1) {
        c = eig.eigenvectors().col(0); // null vector; roots e^{-i 2 pi theta}
        sign = ld(-1);
    } else {
        const int rows = 2 * m - 1 - r;
        MatX hank(rows, r + 1);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j <= r; ++j)
                hank(i, j) = s(i + j);
        Eigen::JacobiSVD<MatX> svd(hank, Eigen::ComputeFullV);
        c = svd.matrixV().col(r); // roots e^{+i 2 pi theta}
        sign = ld(1);
    }

    const ld lead = std::abs(c(r));
    if (lead < ld(1e-8) * c.norm())
        throw NumericalError(
            "vandermonde_decompose: annihilating polynomial is degenerate");
    c /= c(r);

    MatX companion = MatX::Zero(r, r);
    for (int i = 1; i < r; ++i)
        companion(i, i - 1) = cld(1);
    companion.col(r - 1) = -c.head(r);
    Eigen::ComplexEigenSolver<MatX> ces(companion);
    if (ces.info() != Eigen::Success)
        throw NumericalError("vandermonde_decompose: root finding failed");

    std::vector<ld> thetas;
    thetas.reserve(static_cast<std::size_t>(r));
    for (int k = 0; k < r; ++k) {
        const cld root = ces.eigenvalues()(k);
        if (std::abs(std::abs(root) - ld(1)) > ld(0.1))
            throw NumericalError(
                "vandermonde_decompose: annihilating polynomial root is far from the unit circle");
        ld th = sign * std::arg(root) / (ld(2) * pi);
        th -= std::floor(th);
        if (th >= ld(1))
            th = ld(0);
        thetas.push_back(th);
    }
    std::sort(thetas.begin(), thetas.end());

    // Powers from the moment equations s_n = sum_k p_k e^{i 2 pi n theta_k},
    // stacked real/imaginary and solved by least squares; clipping through
    // nonnegative least squares only happens when the plain solution leaves
    // the feasible orthant (noisy inputs).
    const int rows = 2 * m - 1;
    RMatX a(2 * rows, r);
    RVecX b(2 * rows);
    for (int i = 0; i < rows; ++i) {
        const ld nn = static_cast<ld>(i - (m - 1));
        for (int k = 0; k < r; ++k) {
            const cld e = std::polar(ld(1), ld(2) * pi * nn * thetas[static_cast<std::size_t>(k)]);
            a(i, k) = e.real();
            a(rows + i, k) = e.imag();
        }
        b(i) = s(i).real();
        b(rows + i) = s(i).imag();
    }
    const RVecX p_ls = Eigen::ColPivHouseholderQR<RMatX>(a).solve(b);
    Eigen::VectorXd p = p_ls.cast<double>();
    if ((p.array() < 0.0).any())
        p = nnls(a.cast<double>(), b.cast<double>());

    const double p_max = p.size() > 0 ? p.maxCoeff() : 0.0;
    std::vector<std::pair<double, double>> kept;
    for (int k = 0; k < r; ++k)
        if (p(k) > 1e-10 * p_max && p(k) > 0.0)
            kept.emplace_back(static_cast<double>(thetas[static_cast<std::size_t>(k)]), p(k));

    dec.rank = static_cast<int>(kept.size());
    dec.thetas.resize(dec.rank);
    dec.powers.resize(dec.rank);
    for (int k = 0; k < dec.rank; ++k) {
        dec.thetas(k) = kept[static_cast<std::size_t>(k)].first;
        dec.powers(k) = kept[static_cast<std::size_t>(k)].second;
    }
    return dec;
}

namespace detail {

template <typename F>
auto stage_guard(const char* name, F&& f) -> decltype(f())
{
    try {
        return f();
    } catch (const DomainError& e) {
        throw DomainError(std::string(name) + ": " + e.what());
    } catch (const NumericalError& e) {
        throw NumericalError(std::string(name) + ": " + e.what());
    } catch (const UnsupportedError& e) {
        throw UnsupportedError(std::string(name) + ": " + e.what());
    }
}

inline SpaEstimate finish_estimate(const CovarianceFit& fit)
{
    if (fit.diagnostics.status != SdpStatus::optimal)
        throw NumericalError(std::string("covariance fit: solver did not reach optimality (") +
                             to_string(fit.diagnostics.status) + ")");
    const auto shifted = stage_guard("postprocess", [&] { return postprocess(fit); });
    const Decomposition dec =
        stage_guard("retrieval", [&] { return vandermonde_decompose(shifted.first); });
    SpaEstimate est;
    est.thetas = dec.thetas;
    est.powers = dec.powers;
    est.sigma = shifted.second;
    est.rank = dec.rank;
    est.criterion = fit.criterion;
    est.diagnostics = fit.diagnostics;
    return est;
}

} // namespace detail

/// Full pipeline from a snapshot matrix (L x N). A single snapshot routes
/// to the single-snapshot program; otherwise the sample covariance is fit.
inline SpaEstimate spa_estimate(const Eigen::MatrixXcd& y, const ArrayGeometry& geom,
                                NoiseMode mode = NoiseMode::distinct,
                                const SdpTolerances& tols = {})
{
    if (y.rows() != geom.sensors())
        throw DomainError("spa_estimate: snapshot rows must equal the sensor count");
    if (y.cols() < 1)
        throw DomainError("spa_estimate: at least one snapshot required");
    const CovarianceFit fit =
        y.cols() == 1
            ? detail::stage_guard("covariance fit",
                                  [&] { return fit_single_snapshot(y.col(0), geom, tols); })
            : detail::stage_guard("covariance fit", [&] {
                  return fit_covariance(sample_covariance(y), geom,
                                        static_cast<int>(y.cols()), mode, tols);
              });
    return detail::finish_estimate(fit);
}

/// Full pipeline from an externally formed sample covariance.
inline SpaEstimate spa_estimate_from_covariance(const Eigen::MatrixXcd& r_sample,
                                                const ArrayGeometry& geom, int n,
                                                NoiseMode mode = NoiseMode::distinct,
                                                const SdpTolerances& tols = {})
{
    const CovarianceFit fit = detail::stage_guard(
        "covariance fit", [&] { return fit_covariance(r_sample, geom, n, mode, tols); });
    return detail::finish_estimate(fit);
}

} // namespace gridless

#endif // GRIDLESS_SPA_HPP
