/*
 * Hermitian Toeplitz parametrization helpers
 * Copyright (c) 2026 The gridless-doa authors
 * SPDX-License-Identifier: MIT
 *
 * A length-M complex sequence u with real first entry parametrizes the
 * Hermitian Toeplitz matrix T(u) whose first row is u^T:
 *
 *     T(u)_{jl} = u_{l-j+1}  for l >= j,   conjugate below the diagonal.
 *
 * For a sum of sinusoids u_m = sum_k p_k e^{-i 2 pi (m-1) theta_k} this
 * gives T(u) = A diag(p) A^H with A the aperture steering matrix, which is
 * the source-covariance model the fitting pipeline works with. Selecting
 * the rows/columns of the physical sensors compresses T(u) onto a sparse
 * array: (Gamma T(u) Gamma^T)_{jl} = u_{omega_l - omega_j + 1}.
 */

#ifndef GRIDLESS_TOEPLITZ_HPP
#define GRIDLESS_TOEPLITZ_HPP

#include <cmath>
#include <complex>
#include <numbers>
#include <optional>

#include <Eigen/Dense>

#include "gridless/array.hpp"
#include "gridless/errors.hpp"

namespace gridless {

inline void require_real_leading(const Eigen::VectorXcd& u, const char* who)
{
    if (u.size() < 1)
        throw DomainError(std::string(who) + ": sequence must be nonempty");
    const double scale = std::max(1.0, u.cwiseAbs().maxCoeff());
    if (std::abs(u(0).imag()) > 1e-9 * scale)
        throw DomainError(std::string(who) + ": leading entry must be real");
}

/// Hermitian Toeplitz matrix with first row u^T.
inline Eigen::MatrixXcd toeplitz(const Eigen::VectorXcd& u)
{
    require_real_leading(u, "toeplitz");
    const Eigen::Index m = u.size();
    Eigen::MatrixXcd t(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        t(i, i) = u(0).real();
        for (Eigen::Index j = i + 1; j < m; ++j) {
            t(i, j) = u(j - i);
            t(j, i) = std::conj(u(j - i));
        }
    }
    return t;
}

/// Inverse of `toeplitz` for near-Toeplitz input: average each upper
/// diagonal. The leading entry is forced real.
inline Eigen::VectorXcd diagonal_average(const Eigen::MatrixXcd& t)
{
    if (t.rows() != t.cols() || t.rows() < 1)
        throw DomainError("diagonal_average: square nonempty matrix required");
    const Eigen::Index m = t.rows();
    Eigen::VectorXcd u(m);
    for (Eigen::Index d = 0; d < m; ++d) {
        std::complex<double> acc = 0.0;
        for (Eigen::Index i = 0; i + d < m; ++i)
            acc += t(i, i + d);
        u(d) = acc / static_cast<double>(m - d);
    }
    u(0) = u(0).real();
    return u;
}

/// Gamma T(u) Gamma^T without forming the full aperture matrix:
/// entry (j,l) is the coarray lag between sensors j and l.
inline Eigen::MatrixXcd compress_toeplitz(const Eigen::VectorXcd& u, const ArrayGeometry& geom)
{
    require_real_leading(u, "compress_toeplitz");
    if (u.size() != geom.aperture())
        throw DomainError("compress_toeplitz: sequence length must equal the aperture");
    const auto& omega = geom.omega();
    const int l = geom.sensors();
    Eigen::MatrixXcd r(l, l);
    for (int j = 0; j < l; ++j) {
        r(j, j) = u(0).real();
        for (int k = j + 1; k < l; ++k) {
            r(j, k) = u(omega[static_cast<std::size_t>(k)] - omega[static_cast<std::size_t>(j)]);
            r(k, j) = std::conj(r(j, k));
        }
    }
    return r;
}

/// Inverse of `compress_toeplitz` by coarray averaging: entry d of the
/// result is the mean of all matrix entries whose sensor pair spans lag d.
/// Returns an empty optional when some lag below the aperture has no
/// sensor pair (the sequence is not determined by the matrix then).
inline std::optional<Eigen::VectorXcd> coarray_average(const Eigen::MatrixXcd& r,
                                                       const ArrayGeometry& geom)
{
    const int l = geom.sensors();
    if (r.rows() != l || r.cols() != l)
        throw DomainError("coarray_average: matrix must be L x L for the geometry");
    const auto& omega = geom.omega();
    const int m = geom.aperture();
    Eigen::VectorXcd u = Eigen::VectorXcd::Zero(m);
    Eigen::VectorXi count = Eigen::VectorXi::Zero(m);
    for (int j = 0; j < l; ++j)
        for (int k = j; k < l; ++k) {
            const int d = omega[static_cast<std::size_t>(k)] - omega[static_cast<std::size_t>(j)];
            u(d) += r(j, k);
            count(d) += 1;
        }
    if ((count.array() == 0).any())
        return std::nullopt;
    for (int d = 0; d < m; ++d)
        u(d) /= static_cast<double>(count(d));
    u(0) = u(0).real();
    return u;
}

/// Forward model: u_m = sum_k p_k e^{-i 2 pi (m-1) theta_k}.
inline Eigen::VectorXcd sinusoid_sequence(const Eigen::VectorXd& thetas,
                                          const Eigen::VectorXd& powers, int m)
{
    if (thetas.size() != powers.size())
        throw DomainError("sinusoid_sequence: thetas and powers must match in length");
    if (m < 1)
        throw DomainError("sinusoid_sequence: aperture must be positive");
    Eigen::VectorXcd u = Eigen::VectorXcd::Zero(m);
    for (int d = 0; d < m; ++d)
        for (Eigen::Index k = 0; k < thetas.size(); ++k)
            u(d) += powers(k) * std::polar(1.0, -2.0 * std::numbers::pi * d * thetas(k));
    u(0) = u(0).real();
    return u;
}

} // namespace gridless

#endif // GRIDLESS_TOEPLITZ_HPP
