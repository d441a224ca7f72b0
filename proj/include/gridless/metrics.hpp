/*
 * Evaluation metrics: estimate matching, MSE, grid bound, CRLB
 * Copyright (c) 2026 The gridless-doa authors
 * SPDX-License-Identifier: MIT
 *
 * Scoring utilities for Monte-Carlo studies:
 *
 *   - top_k: strongest components of a parametric estimate.
 *   - mse_frequency: mean squared circular frequency error under the
 *     minimal-cost assignment between estimate and truth.
 *   - grid_lower_bound: deterministic floor for any grid-constrained
 *     frequency estimator.
 *   - crlb_stochastic: frequency block of the Cramer-Rao lower bound for
 *     the stochastic (unconditional) Gaussian snapshot model.
 */

#ifndef GRIDLESS_METRICS_HPP
#define GRIDLESS_METRICS_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gridless/array.hpp"
#include "gridless/errors.hpp"
#include "gridless/simulate.hpp"
#include "gridless/spa.hpp"

namespace gridless {

/// One Monte-Carlo trial of one method, as appended to result tables.
struct TrialResult {
    std::string method;
    std::uint64_t seed = 0;
    double snr_db = 0.0;
    int n_snapshots = 0;
    double mse = 0.0; ///< nonnegative
    double runtime_s = 0.0;
    bool converged = true;
};

/// Circular distance on the frequency torus [0,1).
inline double circular_distance(double a, double b)
{
    if (!std::isfinite(a) || !std::isfinite(b))
        throw DomainError("circular_distance: arguments must be finite");
    double d = std::fmod(std::abs(a - b), 1.0);
    return std::min(d, 1.0 - d);
}

/// Frequencies of the k strongest components, ascending.
struct TopKResult {
    Eigen::VectorXd thetas;
    bool short_count = false; ///< estimate had fewer than k components
};

/// Keep the k components with the largest powers. When the estimate
/// carries fewer than k components all of them are returned and the
/// result is flagged short.
inline TopKResult top_k(const ParamEstimate& est, int k)
{
    if (k < 1)
        throw DomainError("top_k: need at least one component");
    if (est.thetas.size() != est.powers.size())
        throw DomainError("top_k: estimate frequencies and powers disagree in length");
    const int r = static_cast<int>(est.thetas.size());
    std::vector<int> idx(static_cast<std::size_t>(r));
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int lhs, int rhs) {
        return est.powers(lhs) != est.powers(rhs) ? est.powers(lhs) > est.powers(rhs)
                                                  : lhs < rhs;
    });
    TopKResult out;
    const int kept = std::min(k, r);
    out.short_count = kept < k;
    out.thetas.resize(kept);
    for (int i = 0; i < kept; ++i)
        out.thetas(i) = est.thetas(idx[static_cast<std::size_t>(i)]);
    std::sort(out.thetas.data(), out.thetas.data() + kept);
    return out;
}

/// Mean squared circular frequency error under the minimal-cost
/// assignment of estimated to true frequencies:
///
///   (1/K) min_pi sum_i d(theta_est_i, theta_true_pi(i))^2,
///
/// d the circular distance. Inputs are wrapped modulo 1 first, so the
/// score is invariant to permutations and to circular relabeling. When
/// the estimate has fewer components than the truth, each missing one
/// scores the worst-case distance 0.5 (squared: 0.25) and `*padded` is
/// set. The assignment is evaluated exhaustively; truths of more than
/// nine components are rejected.
inline double mse_frequency(const Eigen::VectorXd& theta_est, const Eigen::VectorXd& theta_true,
                            bool* padded = nullptr)
{
    const int k = static_cast<int>(theta_true.size());
    const int r = static_cast<int>(theta_est.size());
    if (k < 1)
        throw DomainError("mse_frequency: truth must be non-empty");
    if (k > 9)
        throw DomainError("mse_frequency: exhaustive assignment supports at most 9 sources");
    if (r > k)
        throw DomainError("mse_frequency: estimate has more components than the truth; "
                          "reduce it with top_k first");
    if (padded)
        *padded = r < k;

    std::vector<int> perm(static_cast<std::size_t>(k));
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double cost = 0.25 * (k - r);
        for (int i = 0; i < r && cost < best; ++i) {
            const double d =
                circular_distance(theta_est(i), theta_true(perm[static_cast<std::size_t>(i)]));
            cost += d * d;
        }
        best = std::min(best, cost);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best / k;
}

/// Squared frequency error that a grid-constrained estimator cannot beat
/// when the true frequency sits `offset_fraction` of a grid interval away
/// from the nearest grid point: (offset_fraction / n_tilde)^2. A third of
/// an interval gives 1 / (9 n_tilde^2). Independent of the noise level.
inline double grid_lower_bound(double offset_fraction, int n_tilde)
{
    if (!(offset_fraction >= 0.0) || offset_fraction > 0.5)
        throw DomainError("grid_lower_bound: offset fraction must lie in [0, 0.5]");
    if (n_tilde < 1)
        throw DomainError("grid_lower_bound: grid size must be positive");
    const double off = offset_fraction / n_tilde;
    return off * off;
}

namespace detail {

/// Covariance of the snapshot model at parameters (thetas, powers, noise).
inline Eigen::MatrixXcd crlb_model_covariance(const Eigen::VectorXd& thetas,
                                              const Eigen::VectorXd& powers,
                                              const Eigen::VectorXd& noise,
                                              const ArrayGeometry& geom)
{
    Eigen::MatrixXcd r = noise.cast<std::complex<double>>().asDiagonal();
    for (int j = 0; j < thetas.size(); ++j) {
        double th = std::fmod(thetas(j), 1.0);
        if (th < 0.0)
            th += 1.0;
        const Eigen::VectorXcd a = steering_vector(geom, th);
        r += powers(j) * (a * a.adjoint());
    }
    return Eigen::MatrixXcd(((r + r.adjoint()) / 2.0));
}

} // namespace detail

/// Per-frequency Cramer-Rao lower bounds for the stochastic
/// (unconditional) Gaussian model y_t ~ CN(0, R) with
/// R = A(theta) diag(p) A^H + noise, estimated from n snapshots. The
/// parameter vector stacks the K frequencies, the K powers, and the
/// noise variances (a single shared one in equal mode, one per sensor
/// in distinct mode); the Fisher information
///
///   F_ij = n tr(R^{-1} dR/d eta_i R^{-1} dR/d eta_j)
///
/// is assembled from central finite differences (absolute step 1e-6 on
/// frequencies, relative step 1e-6 on powers and variances) and the
/// frequency block of its inverse is returned. A numerically singular
/// Fisher matrix (unidentifiable scene) raises an error naming the
/// dominant parameter of the null direction.
inline Eigen::VectorXd crlb_stochastic(const SourceScene& scene, const ArrayGeometry& geom,
                                       double sigma, int n, NoiseMode mode)
{
    scene.validate();
    if (!scene.coherence.empty())
        throw UnsupportedError("crlb_stochastic: coherent scenes are not supported");
    if (!(sigma > 0.0))
        throw DomainError("crlb_stochastic: noise variance must be positive");
    if (n < 1)
        throw DomainError("crlb_stochastic: snapshot count must be at least 1");

    const int k = scene.size();
    const int l = geom.sensors();
    const int nsig = mode == NoiseMode::equal ? 1 : l;
    const int dim = 2 * k + nsig;

    Eigen::VectorXd thetas(k), powers(k);
    for (int j = 0; j < k; ++j) {
        thetas(j) = scene.thetas[static_cast<std::size_t>(j)];
        powers(j) = scene.powers[static_cast<std::size_t>(j)];
    }
    const auto noise_vec = [&](double shared, int which, double value) {
        Eigen::VectorXd v = Eigen::VectorXd::Constant(l, shared);
        if (which >= 0)
            v(which) = value;
        return v;
    };

    const Eigen::MatrixXcd r0 =
        detail::crlb_model_covariance(thetas, powers, noise_vec(sigma, -1, 0.0), geom);
    const Eigen::LLT<Eigen::MatrixXcd> llt(r0);
    if (llt.info() != Eigen::Success)
        throw NumericalError("crlb_stochastic: model covariance is not positive definite");

    // Central finite-difference derivatives of R along each parameter.
    std::vector<Eigen::MatrixXcd> deriv;
    std::vector<std::string> labels;
    deriv.reserve(static_cast<std::size_t>(dim));
    const auto push = [&](const Eigen::MatrixXcd& plus, const Eigen::MatrixXcd& minus,
                          double step, const std::string& label) {
        deriv.push_back((plus - minus) / (2.0 * step));
        labels.push_back(label);
    };
    for (int j = 0; j < k; ++j) {
        const double h = 1e-6;
        Eigen::VectorXd tp = thetas, tm = thetas;
        tp(j) += h;
        tm(j) -= h;
        push(detail::crlb_model_covariance(tp, powers, noise_vec(sigma, -1, 0.0), geom),
             detail::crlb_model_covariance(tm, powers, noise_vec(sigma, -1, 0.0), geom), h,
             "theta_" + std::to_string(j + 1));
    }
    for (int j = 0; j < k; ++j) {
        const double h = 1e-6 * powers(j);
        Eigen::VectorXd pp = powers, pm = powers;
        pp(j) += h;
        pm(j) -= h;
        push(detail::crlb_model_covariance(thetas, pp, noise_vec(sigma, -1, 0.0), geom),
             detail::crlb_model_covariance(thetas, pm, noise_vec(sigma, -1, 0.0), geom), h,
             "p_" + std::to_string(j + 1));
    }
    const double hs = 1e-6 * sigma;
    if (mode == NoiseMode::equal) {
        push(detail::crlb_model_covariance(thetas, powers, noise_vec(sigma + hs, -1, 0.0), geom),
             detail::crlb_model_covariance(thetas, powers, noise_vec(sigma - hs, -1, 0.0), geom),
             hs, "sigma");
    } else {
        for (int s = 0; s < l; ++s)
            push(detail::crlb_model_covariance(thetas, powers, noise_vec(sigma, s, sigma + hs),
                                               geom),
                 detail::crlb_model_covariance(thetas, powers, noise_vec(sigma, s, sigma - hs),
                                               geom),
                 hs, "sigma_" + std::to_string(s + 1));
    }

    // F_ij = n tr(R^{-1} D_i R^{-1} D_j), real symmetric.
    std::vector<Eigen::MatrixXcd> whitened(static_cast<std::size_t>(dim));
    for (int i = 0; i < dim; ++i)
        whitened[static_cast<std::size_t>(i)] = llt.solve(deriv[static_cast<std::size_t>(i)]);
    Eigen::MatrixXd fisher(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = i; j < dim; ++j) {
            const double f = static_cast<double>(n) *
                             (whitened[static_cast<std::size_t>(i)] *
                              whitened[static_cast<std::size_t>(j)])
                                 .trace()
                                 .real();
            fisher(i, j) = f;
            fisher(j, i) = f;
        }

    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(fisher);
    const double lam_max = es.eigenvalues()(dim - 1);
    if (!(lam_max > 0.0) || es.eigenvalues()(0) <= 1e-12 * lam_max) {
        Eigen::Index worst = 0;
        es.eigenvectors().col(0).cwiseAbs().maxCoeff(&worst);
        throw NumericalError("crlb_stochastic: Fisher information is singular; the scene is "
                             "unidentifiable along " +
                             labels[static_cast<std::size_t>(worst)]);
    }
    const Eigen::MatrixXd finv = es.eigenvectors() *
                                 es.eigenvalues().cwiseInverse().asDiagonal() *
                                 es.eigenvectors().transpose();
    return finv.diagonal().head(k);
}

} // namespace gridless

#endif // GRIDLESS_METRICS_HPP
