/*
 * Scene description and snapshot simulation
 * Copyright (c) 2026 The gridless-doa authors
 * SPDX-License-Identifier: MIT
 *
 * A scene is a set of K far-field narrowband sources with frequencies
 * theta_k in [0,1) and powers p_k > 0. Snapshots follow the standard
 * observation model
 *
 *     y(t) = A_Omega(theta) s(t) + e(t),   t = 1..N,
 *
 * with uncorrelated circular noise e_j(t) ~ CN(0, sigma_j). Source
 * waveforms are either constant-modulus (s_k(t) = sqrt(p_k) e^{i phi},
 * phi uniform) or circular Gaussian (s_k(t) ~ CN(0, p_k)). A source may
 * be declared a coherent replica of another, in which case it reuses the
 * base waveform scaled by sqrt(p_replica / p_base) with zero phase offset.
 *
 * Draw order (fixed; see rng.hpp for the primitive definitions):
 *   1. waveforms, source-major then snapshot-major, replicas skipped
 *      (constant-modulus: one uniform per sample; Gaussian: one
 *      Box-Muller pair per sample),
 *   2. replicas copied from their bases,
 *   3. noise, snapshot-major then sensor-major, one pair per sample.
 */

#ifndef GRIDLESS_SIMULATE_HPP
#define GRIDLESS_SIMULATE_HPP

#include <cmath>
#include <complex>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "gridless/array.hpp"
#include "gridless/errors.hpp"
#include "gridless/rng.hpp"

namespace gridless {

enum class SourceModel { constant_modulus, gaussian };

struct SourceScene {
    std::vector<double> thetas;
    std::vector<double> powers;
    /// (replica index, base index) pairs, 0-based; bases must not
    /// themselves be replicas and a source may be declared at most once.
    std::vector<std::pair<int, int>> coherence;
    SourceModel model = SourceModel::constant_modulus;

    int size() const { return static_cast<int>(thetas.size()); }

    bool is_replica(int k) const
    {
        for (const auto& [rep, base] : coherence)
            if (rep == k)
                return true;
        return false;
    }

    int base_of(int k) const
    {
        for (const auto& [rep, base] : coherence)
            if (rep == k)
                return base;
        return k;
    }

    void validate() const
    {
        const int k = size();
        if (k < 1)
            throw DomainError("scene: needs at least one source");
        if (static_cast<int>(powers.size()) != k)
            throw DomainError("scene: thetas and powers must have equal length");
        for (int j = 0; j < k; ++j) {
            if (!(thetas[static_cast<std::size_t>(j)] >= 0.0 && thetas[static_cast<std::size_t>(j)] < 1.0))
                throw DomainError("scene: thetas[" + std::to_string(j) + "] must lie in [0,1)");
            if (!(powers[static_cast<std::size_t>(j)] > 0.0))
                throw DomainError("scene: powers[" + std::to_string(j) + "] must be > 0");
        }
        std::vector<bool> declared(static_cast<std::size_t>(k), false);
        for (const auto& [rep, base] : coherence) {
            if (rep < 0 || rep >= k || base < 0 || base >= k)
                throw DomainError("scene: coherence pair references a source out of range");
            if (rep == base)
                throw DomainError("scene: a source cannot be a replica of itself");
            if (declared[static_cast<std::size_t>(rep)])
                throw DomainError("scene: source " + std::to_string(rep) + " declared a replica twice");
            declared[static_cast<std::size_t>(rep)] = true;
        }
        for (const auto& [rep, base] : coherence)
            if (declared[static_cast<std::size_t>(base)])
                throw DomainError("scene: replica chains are not allowed (base " + std::to_string(base) +
                                  " is itself a replica)");
    }
};

/// Per-sensor noise variances; either one shared value or a full vector.
class NoiseSpec {
  public:
    static NoiseSpec equal(double variance)
    {
        if (!(variance >= 0.0))
            throw DomainError("noise: variance must be >= 0");
        NoiseSpec n;
        n.equal_ = true;
        n.vars_ = Eigen::VectorXd::Constant(1, variance);
        return n;
    }

    static NoiseSpec per_sensor(Eigen::VectorXd variances)
    {
        if (variances.size() < 1 || (variances.array() < 0.0).any())
            throw DomainError("noise: variances must be a non-empty vector of values >= 0");
        NoiseSpec n;
        n.equal_ = false;
        n.vars_ = std::move(variances);
        return n;
    }

    bool is_equal() const { return equal_; }

    /// Expand to a length-L vector; per-sensor specs must match L exactly.
    Eigen::VectorXd variances(int sensors) const
    {
        if (equal_)
            return Eigen::VectorXd::Constant(sensors, vars_(0));
        if (vars_.size() != sensors)
            throw DomainError("noise: variance vector has length " + std::to_string(vars_.size()) +
                              " but the array has " + std::to_string(sensors) + " sensors");
        return vars_;
    }

  private:
    bool equal_ = true;
    Eigen::VectorXd vars_;
};

/// Noise variance giving the requested SNR = 10 log10(min p / sigma).
inline double snr_to_sigma(const std::vector<double>& powers, double snr_db)
{
    if (powers.empty())
        throw DomainError("snr_to_sigma: power list must be non-empty");
    double pmin = powers.front();
    for (double p : powers) {
        if (!(p > 0.0))
            throw DomainError("snr_to_sigma: powers must be > 0");
        pmin = std::min(pmin, p);
    }
    return pmin * std::pow(10.0, -snr_db / 10.0);
}

/// Source waveform matrix S (K x N) for the documented draw order.
inline Eigen::MatrixXcd generate_sources(const SourceScene& scene, int snapshots, std::uint64_t seed)
{
    scene.validate();
    if (snapshots < 1)
        throw DomainError("generate_sources: snapshot count must be >= 1");
    const int k = scene.size();
    Eigen::MatrixXcd s(k, snapshots);
    CounterRng rng(seed);
    for (int j = 0; j < k; ++j) {
        if (scene.is_replica(j))
            continue;
        const double p = scene.powers[static_cast<std::size_t>(j)];
        for (int t = 0; t < snapshots; ++t) {
            if (scene.model == SourceModel::constant_modulus)
                s(j, t) = std::polar(std::sqrt(p), 2.0 * std::numbers::pi * rng.uniform());
            else
                s(j, t) = rng.complex_normal(p);
        }
    }
    for (const auto& [rep, base] : scene.coherence) {
        const double scale = std::sqrt(scene.powers[static_cast<std::size_t>(rep)] /
                                       scene.powers[static_cast<std::size_t>(base)]);
        s.row(rep) = scale * s.row(base);
    }
    return s;
}

/// Snapshot matrix Y (L x N); deterministic in (scene, geom, noise, N, seed).
inline Eigen::MatrixXcd generate_snapshots(const SourceScene& scene, const ArrayGeometry& geom,
                                           const NoiseSpec& noise, int snapshots, std::uint64_t seed)
{
    const Eigen::MatrixXcd s = generate_sources(scene, snapshots, seed);
    const int L = geom.sensors();
    const Eigen::VectorXd vars = noise.variances(L);

    Eigen::MatrixXcd a(L, scene.size());
    for (int j = 0; j < scene.size(); ++j)
        a.col(j) = steering_vector(geom, scene.thetas[static_cast<std::size_t>(j)]);

    Eigen::MatrixXcd y = a * s;

    // Noise reuses the same stream; the source stage consumed a
    // scene-determined number of draws, so the full stream layout is fixed.
    CounterRng rng(seed);
    const std::uint64_t skip =
        static_cast<std::uint64_t>(scene.size() - static_cast<int>(scene.coherence.size())) *
        static_cast<std::uint64_t>(snapshots) * (scene.model == SourceModel::constant_modulus ? 1 : 2);
    for (std::uint64_t i = 0; i < skip; ++i)
        rng.next_u64();
    for (int t = 0; t < snapshots; ++t)
        for (int j = 0; j < L; ++j)
            y(j, t) += rng.complex_normal(vars(j));
    return y;
}

/// Sample covariance R_tilde = Y Y^H / N.
inline Eigen::MatrixXcd sample_covariance(const Eigen::MatrixXcd& snapshots)
{
    if (snapshots.cols() < 1 || snapshots.rows() < 1)
        throw DomainError("sample_covariance: snapshot matrix must be non-empty");
    Eigen::MatrixXcd r = snapshots * snapshots.adjoint() / static_cast<double>(snapshots.cols());
    // Symmetrize away round-off so downstream Hermitian checks are exact.
    r = ((r + r.adjoint()) / 2.0).eval();
    return r;
}

/// Exact covariance R = A diag(p) A^H + diag(sigma) of an uncorrelated scene.
inline Eigen::MatrixXcd true_covariance(const SourceScene& scene, const ArrayGeometry& geom,
                                        const NoiseSpec& noise)
{
    scene.validate();
    if (!scene.coherence.empty())
        throw UnsupportedError("true_covariance: coherent scenes have a rank-deficient source "
                               "covariance and are not supported");
    const int L = geom.sensors();
    Eigen::MatrixXcd r = noise.variances(L).asDiagonal().toDenseMatrix().cast<std::complex<double>>();
    for (int j = 0; j < scene.size(); ++j) {
        const Eigen::VectorXcd a = steering_vector(geom, scene.thetas[static_cast<std::size_t>(j)]);
        r += scene.powers[static_cast<std::size_t>(j)] * (a * a.adjoint());
    }
    r = ((r + r.adjoint()) / 2.0).eval();
    return r;
}

} // namespace gridless

#endif // GRIDLESS_SIMULATE_HPP
