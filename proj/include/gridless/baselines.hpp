/*
 * Grid-based and subspace baseline estimators
 * Copyright (c) 2026 The gridless-doa authors
 * SPDX-License-Identifier: MIT
 *
 * Comparison methods operating on a fixed frequency grid:
 *
 *   - spice: covariance fitting over the linear family
 *     R(p, sigma) = A(theta_grid) diag(p) A^H + diag(sigma), minimized by
 *     the classical multiplicative fixed-point updates (majorize-minimize,
 *     so the objective is monotonically non-increasing).
 *   - spice_pp: spice followed by the same rank-restoring shift and
 *     Vandermonde retrieval used by the gridless pipeline, freeing the
 *     frequency estimates from the grid.
 *   - music: subspace pseudospectrum from a known source count.
 *   - iaa: iterative adaptive (amplitude) spectrum estimate from raw
 *     snapshots.
 *   - peak_pick: local-maxima extraction from a spectrum.
 */

#ifndef GRIDLESS_BASELINES_HPP
#define GRIDLESS_BASELINES_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gridless/array.hpp"
#include "gridless/errors.hpp"
#include "gridless/hermitian.hpp"
#include "gridless/spa.hpp"
#include "gridless/toeplitz.hpp"

namespace gridless {

/// Uniform frequency grid theta_j = j / n_tilde, j = 0 .. n_tilde - 1.
class Grid {
  public:
    explicit Grid(int n_tilde) : n_tilde_(n_tilde)
    {
        if (n_tilde < 2)
            throw DomainError("Grid: at least two points required");
    }

    int size() const { return n_tilde_; }

    double point(int j) const { return static_cast<double>(j) / n_tilde_; }

    Eigen::VectorXd points() const
    {
        Eigen::VectorXd p(n_tilde_);
        for (int j = 0; j < n_tilde_; ++j)
            p(j) = point(j);
        return p;
    }

  private:
    int n_tilde_;
};

/// Nonnegative power-per-grid-point estimate.
struct Spectrum {
    Grid grid;
    Eigen::VectorXd values;
};

/// Steering matrix with one column per grid point.
inline Eigen::MatrixXcd grid_steering(const ArrayGeometry& geom, const Grid& grid)
{
    Eigen::MatrixXcd a(geom.sensors(), grid.size());
    for (int j = 0; j < grid.size(); ++j)
        a.col(j) = steering_vector(geom, grid.point(j));
    return a;
}

struct SpiceOptions {
    double tol = 1e-6; ///< relative objective-change stopping threshold
    int max_iter = 500;
};

/// Output of the grid-based covariance fit.
struct SpiceResult {
    Eigen::VectorXd p;      ///< grid powers, length n_tilde
    Eigen::VectorXd sigma;  ///< noise variances, length L
    Eigen::MatrixXcd r_hat; ///< fitted covariance A diag(p) A^H + diag(sigma)
    double objective = 0.0; ///< criterion value at the final iterate
    FitObjective criterion = FitObjective::unweighted;
    int iterations = 0;
    bool converged = false;
    bool fallback_used = false; ///< weighted criterion requested but unusable
    bool ridge_used = false;    ///< R regularized when a solve broke down
    std::vector<double> objective_trace; ///< criterion value per iterate
};

namespace detail {

inline void validate_sample_covariance(const Eigen::MatrixXcd& r, const ArrayGeometry& geom,
                                       const char* who)
{
    const int l = geom.sensors();
    if (r.rows() != l || r.cols() != l)
        throw DomainError(std::string(who) + ": covariance must be " + std::to_string(l) + "x" +
                          std::to_string(l));
    if (!r.allFinite())
        throw DomainError(std::string(who) + ": covariance has non-finite entries");
    if ((r - r.adjoint()).norm() > 1e-8 * std::max(1.0, r.norm()))
        throw DomainError(std::string(who) + ": covariance must be Hermitian");
    if (!(r.real().trace() > 0.0))
        throw DomainError(std::string(who) + ": covariance must have positive trace");
    if (min_eigenvalue(symmetrize(r)) < -1e-8 * r.norm())
        throw DomainError(std::string(who) + ": covariance must be positive semidefinite");
}

} // namespace detail

/// Grid-based covariance fitting by multiplicative fixed-point updates.
///
/// Minimizes, over p >= 0 and sigma >= 0 with
/// R = A diag(p) A^H + diag(sigma),
///
///   n >= L: tr(R_tilde R^{-1} R_tilde) + tr(R_tilde^{-1} R)
///   n <  L: tr(R_tilde R^{-1} R_tilde) + tr(R)
///
/// i.e. the same two criteria as the gridless covariance fit, restricted
/// to the grid parametrization. Each sweep applies the majorize-minimize
/// update q_j <- q_j ||c_j^H R^{-1} R_tilde|| / sqrt(w_j) (c_j the j-th
/// column of [A, I], w_j the linear objective weight), which cannot
/// increase the objective. Stops when the relative objective change in
/// two consecutive iterations falls below `tol` or after `max_iter`
/// updates, whichever comes first; hitting the iteration cap clears the
/// `converged` flag. In equal mode all noise variances share one value.
inline SpiceResult spice(const Eigen::MatrixXcd& r_tilde, const ArrayGeometry& geom, int n,
                         const Grid& grid, NoiseMode mode = NoiseMode::distinct,
                         const SpiceOptions& options = {})
{
    const int l = geom.sensors();
    detail::validate_sample_covariance(r_tilde, geom, "spice");
    if (n < 1)
        throw DomainError("spice: snapshot count must be at least 1");
    if (!(options.tol > 0.0) || options.max_iter < 1)
        throw DomainError("spice: tolerance must be positive and max_iter >= 1");

    const Eigen::MatrixXcd rt = symmetrize(r_tilde);
    const Eigen::MatrixXcd a = grid_steering(geom, grid);
    const int nt = grid.size();
    const bool equal = mode == NoiseMode::equal;

    SpiceResult res;
    // The weighted criterion needs an invertible sample covariance.
    bool weighted = n >= l;
    Eigen::MatrixXcd rt_inv;
    if (weighted) {
        const HermitianEig eig = eig_hermitian(rt);
        if (eig.values(0) <= 1e-12 * eig.values(l - 1)) {
            weighted = false;
            res.fallback_used = true;
        } else {
            rt_inv = eig.vectors * eig.values.cwiseInverse().asDiagonal() *
                     eig.vectors.adjoint();
            rt_inv = symmetrize(rt_inv);
        }
    }
    res.criterion = weighted ? FitObjective::weighted : FitObjective::unweighted;

    // Linear objective weights for the power and noise coordinates.
    Eigen::VectorXd w_p(nt), w_s(l);
    double w_seq = 0.0;
    if (weighted) {
        for (int j = 0; j < nt; ++j)
            w_p(j) = std::max((a.col(j).adjoint() * rt_inv * a.col(j))(0).real(), 0.0);
        w_s = rt_inv.diagonal().real().cwiseMax(0.0);
        w_seq = std::max(rt_inv.real().trace(), 0.0);
    } else {
        w_p.setConstant(static_cast<double>(l));
        w_s.setOnes();
        w_seq = static_cast<double>(l);
    }

    // Strictly positive start: beamformer powers plus a small floor (a
    // multiplicative update can never leave zero), noise at half the
    // per-sensor sample power.
    const double floor = 1e-12 * rt.real().trace() / l;
    Eigen::VectorXd p(nt);
    for (int j = 0; j < nt; ++j)
        p(j) = (a.col(j).adjoint() * rt * a.col(j))(0).real() /
                   static_cast<double>(l * l) +
               floor;
    Eigen::VectorXd sigma = rt.diagonal().real().cwiseMax(floor) / (2.0 * l);
    if (equal)
        sigma.setConstant(sigma.mean());

    const auto build_r = [&](Eigen::MatrixXcd& r) {
        r = a * p.asDiagonal() * a.adjoint();
        r.diagonal() += sigma.cast<std::complex<double>>();
        r = symmetrize(r);
    };

    Eigen::MatrixXcd r(l, l), g(l, l);
    double f_prev = std::numeric_limits<double>::infinity();
    res.objective_trace.reserve(static_cast<std::size_t>(options.max_iter) + 1);
    for (int it = 0;; ++it) {
        build_r(r);
        Eigen::LLT<Eigen::MatrixXcd> llt(r);
        if (llt.info() != Eigen::Success) {
            r.diagonal().array() += 1e-14 * r.real().trace() / l;
            llt.compute(r);
            res.ridge_used = true;
            if (llt.info() != Eigen::Success)
                throw NumericalError("spice: fitted covariance lost positive definiteness");
        }
        g = llt.solve(rt); // R^{-1} R_tilde
        const double data_term = (rt * g).real().trace();
        const double model_term =
            weighted ? (rt_inv * r).real().trace() : r.real().trace();
        const double f = data_term + model_term;
        res.objective_trace.push_back(f);
        res.objective = f;
        if (std::isfinite(f_prev) && std::abs(f_prev - f) <= options.tol * std::abs(f_prev)) {
            res.converged = true;
            break;
        }
        if (it >= options.max_iter)
            break;
        f_prev = f;

        const Eigen::MatrixXcd ag = a.adjoint() * g; // rows: a_j^H R^{-1} R_tilde
        for (int j = 0; j < nt; ++j)
            p(j) *= w_p(j) > 0.0 ? ag.row(j).norm() / std::sqrt(w_p(j)) : 0.0;
        if (equal) {
            sigma.setConstant(w_seq > 0.0 ? sigma(0) * g.norm() / std::sqrt(w_seq) : 0.0);
        } else {
            for (int i = 0; i < l; ++i)
                sigma(i) *= w_s(i) > 0.0 ? g.row(i).norm() / std::sqrt(w_s(i)) : 0.0;
        }
        res.iterations = it + 1;
    }
    build_r(r);
    res.p = p;
    res.sigma = sigma;
    res.r_hat = r;
    return res;
}

/// Grid-free parameter retrieval from a grid-based covariance fit: read
/// the Toeplitz sequence off the fitted covariance (coarray lag averaging,
/// exact here because A diag(p) A^H has Toeplitz structure on the full
/// aperture), shift its smallest eigenvalue into the noise, and decompose.
/// The result carries at most aperture-1 components regardless of how
/// dense the grid spectrum was. Requires every coarray lag to be present
/// (ULA or redundancy array).
inline ParamEstimate spice_pp(const SpiceResult& fit, const ArrayGeometry& geom,
                              double rank_tol = 1e-8)
{
    if (fit.p.size() == 0 || fit.r_hat.rows() != geom.sensors())
        throw DomainError("spice_pp: fit result does not match the geometry");
    Eigen::MatrixXcd r_sig = fit.r_hat;
    r_sig.diagonal() -= fit.sigma.cast<std::complex<double>>();
    const auto u = coarray_average(r_sig, geom);
    if (!u)
        throw DomainError("spice_pp: geometry must cover every coarray lag "
                          "(ULA or redundancy array)");
    const auto shifted = postprocess(*u, fit.sigma);
    const Decomposition dec = vandermonde_decompose(shifted.first, rank_tol);
    ParamEstimate est;
    est.thetas = dec.thetas;
    est.powers = dec.powers;
    est.sigma = shifted.second;
    est.rank = dec.rank;
    return est;
}

/// Subspace pseudospectrum 1 / ||E_n^H a(theta_j)||^2 with E_n spanning
/// the L-K smallest eigenvectors of the covariance. Needs the source
/// count K with 1 <= K < L.
inline Spectrum music(const Eigen::MatrixXcd& r_tilde, const ArrayGeometry& geom, int k,
                      const Grid& grid)
{
    const int l = geom.sensors();
    detail::validate_sample_covariance(r_tilde, geom, "music");
    if (k < 1)
        throw DomainError("music: source count must be at least 1");
    if (k >= l)
        throw DomainError("music: source count must be smaller than the sensor count");

    const HermitianEig eig = eig_hermitian(symmetrize(r_tilde));
    const Eigen::MatrixXcd noise = eig.vectors.leftCols(l - k);
    const Eigen::MatrixXcd a = grid_steering(geom, grid);
    Spectrum spec{grid, Eigen::VectorXd(grid.size())};
    for (int j = 0; j < grid.size(); ++j) {
        const double den = (noise.adjoint() * a.col(j)).squaredNorm();
        spec.values(j) = 1.0 / std::max(den, 1e-300);
    }
    return spec;
}

struct IaaOptions {
    double tol = 1e-6; ///< relative change of ||p||_2 stopping threshold
    int max_iter = 500;
};

/// Iterative adaptive spectrum plus run diagnostics.
struct IaaResult {
    Spectrum spectrum;
    int iterations = 0;
    bool converged = false;
    bool ridge_used = false; ///< R regularized when a solve broke down
};

/// Iterative adaptive approach on raw snapshots: starting from the
/// matched-filter (beamformer) powers p_j = mean_t |a_j^H y_t|^2 / L^2,
/// iterate
///
///   p_j <- mean_t |a_j^H R^{-1} y_t|^2 / (a_j^H R^{-1} a_j)^2,
///   R = A diag(p) A^H,
///
/// stopping when the relative change of the l2 norm of the power vector
/// in two consecutive iterations falls below `tol` or after `max_iter`
/// updates (`max_iter` 0 returns the matched-filter start unchanged).
/// A singular R is regularized by adding 1e-10 tr(R)/L to the
/// diagonal and flagged via `ridge_used`. Power iterates are squares, so
/// the spectrum stays nonnegative throughout.
inline IaaResult iaa(const Eigen::MatrixXcd& y, const ArrayGeometry& geom, const Grid& grid,
                     const IaaOptions& options = {})
{
    const int l = geom.sensors();
    if (y.rows() != l)
        throw DomainError("iaa: snapshot rows must equal the sensor count");
    if (y.cols() < 1)
        throw DomainError("iaa: at least one snapshot required");
    if (!y.allFinite())
        throw DomainError("iaa: snapshots have non-finite entries");
    if (!(options.tol > 0.0) || options.max_iter < 0)
        throw DomainError("iaa: tolerance must be positive and max_iter >= 0");

    const int n = static_cast<int>(y.cols());
    const int nt = grid.size();
    const Eigen::MatrixXcd a = grid_steering(geom, grid);

    // Matched-filter initialization.
    Eigen::VectorXd p(nt);
    {
        const Eigen::MatrixXcd ay = a.adjoint() * y; // nt x n
        p = ay.cwiseAbs2().rowwise().mean() / static_cast<double>(l * l);
    }

    IaaResult res{Spectrum{grid, p}, 0, false, false};
    for (int it = 0; it < options.max_iter; ++it) {
        Eigen::MatrixXcd r = a * p.asDiagonal() * a.adjoint();
        Eigen::LLT<Eigen::MatrixXcd> llt(symmetrize(r));
        if (llt.info() != Eigen::Success) {
            r.diagonal().array() += 1e-10 * r.real().trace() / l;
            llt.compute(symmetrize(r));
            res.ridge_used = true;
            if (llt.info() != Eigen::Success)
                throw NumericalError("iaa: covariance model lost positive definiteness");
        }
        const Eigen::MatrixXcd riy = llt.solve(y); // L x n
        const Eigen::MatrixXcd ria = llt.solve(a); // L x nt
        Eigen::VectorXd p_next(nt);
        for (int j = 0; j < nt; ++j) {
            const double num = (a.col(j).adjoint() * riy).squaredNorm() / n;
            const double den = (a.col(j).adjoint() * ria.col(j))(0).real();
            p_next(j) = den > 0.0 ? num / (den * den) : 0.0;
        }
        res.iterations = it + 1;
        const double change = std::abs(p_next.norm() - p.norm());
        p = p_next;
        if (change <= options.tol * std::max(p.norm(), 1e-300)) {
            res.converged = true;
            break;
        }
    }
    res.spectrum.values = p;
    return res;
}

/// Grid frequencies of the k largest spectrum peaks, plus a flag telling
/// whether non-peak values were needed to reach k.
struct PeakPickResult {
    Eigen::VectorXd thetas; ///< ascending
    bool filled = false;    ///< fewer than k local maxima existed
};

/// Locations of the k largest strict local maxima (circular neighbors).
/// Ties break toward the lower grid index. When fewer than k strict
/// maxima exist the remaining slots are filled with the largest leftover
/// spectrum values and the result is flagged.
inline PeakPickResult peak_pick(const Spectrum& spectrum, int k)
{
    const int nt = spectrum.grid.size();
    if (static_cast<int>(spectrum.values.size()) != nt)
        throw DomainError("peak_pick: spectrum length must match its grid");
    if (k < 1)
        throw DomainError("peak_pick: need at least one peak");
    if (k > nt)
        throw DomainError("peak_pick: cannot pick more peaks than grid points");

    const Eigen::VectorXd& v = spectrum.values;
    std::vector<int> peaks, rest;
    for (int j = 0; j < nt; ++j) {
        const double prev = v((j + nt - 1) % nt);
        const double next = v((j + 1) % nt);
        (v(j) > prev && v(j) > next ? peaks : rest).push_back(j);
    }
    const auto by_value = [&](int lhs, int rhs) {
        return v(lhs) != v(rhs) ? v(lhs) > v(rhs) : lhs < rhs;
    };
    std::sort(peaks.begin(), peaks.end(), by_value);
    std::sort(rest.begin(), rest.end(), by_value);

    PeakPickResult out;
    std::vector<int> chosen;
    for (int j : peaks) {
        if (static_cast<int>(chosen.size()) == k)
            break;
        chosen.push_back(j);
    }
    if (static_cast<int>(chosen.size()) < k) {
        out.filled = true;
        for (int j : rest) {
            if (static_cast<int>(chosen.size()) == k)
                break;
            chosen.push_back(j);
        }
    }
    std::sort(chosen.begin(), chosen.end());
    out.thetas.resize(k);
    for (int i = 0; i < k; ++i)
        out.thetas(i) = spectrum.grid.point(chosen[static_cast<std::size_t>(i)]);
    return out;
}

} // namespace gridless

#endif // GRIDLESS_BASELINES_HPP
