/*
 * Dense Hermitian linear algebra helpers
 * Copyright (c) 2026 The gridless-doa authors
 * SPDX-License-Identifier: MIT
 *
 * Thin, checked wrappers around Eigen for the handful of Hermitian
 * operations the fitting pipeline needs: validation/symmetrization, the
 * real symmetric embedding, eigendecomposition, PSD square root, and a
 * linear solve with an explicit condition estimate. Matrices are plain
 * Eigen::MatrixXcd; Hermitian-ness is a checked precondition rather than
 * a wrapper type.
 */

#ifndef GRIDLESS_HERMITIAN_HPP
#define GRIDLESS_HERMITIAN_HPP

#include <cmath>
#include <complex>
#include <string>

#include <Eigen/Dense>

#include "gridless/errors.hpp"

namespace gridless {

/// Relative Hermitian check: ||A - A^H|| <= tol * max(1, ||A||).
inline bool is_hermitian(const Eigen::MatrixXcd& a, double tol = 1e-12)
{
    if (a.rows() != a.cols())
        return false;
    return (a - a.adjoint()).norm() <= tol * std::max(1.0, a.norm());
}

inline Eigen::MatrixXcd symmetrize(const Eigen::MatrixXcd& a)
{
    return (a + a.adjoint()) / 2.0;
}

inline void require_hermitian(const Eigen::MatrixXcd& a, const char* who)
{
    if (!is_hermitian(a))
        throw DomainError(std::string(who) + ": matrix is not Hermitian");
}

/// Real symmetric embedding [[Re A, -Im A], [Im A, Re A]] (2n x 2n).
/// Traces double and each eigenvalue appears with twice its multiplicity.
inline Eigen::MatrixXd hermitian_to_real(const Eigen::MatrixXcd& a)
{
    require_hermitian(a, "hermitian_to_real");
    const Eigen::Index n = a.rows();
    Eigen::MatrixXd w(2 * n, 2 * n);
    w.topLeftCorner(n, n) = a.real();
    w.bottomRightCorner(n, n) = a.real();
    w.topRightCorner(n, n) = -a.imag();
    w.bottomLeftCorner(n, n) = a.imag();
    return w;
}

/// Inverse of hermitian_to_real; averages the two copies so that small
/// symmetric perturbations of the embedded matrix map back gracefully.
inline Eigen::MatrixXcd real_to_hermitian(const Eigen::MatrixXd& w)
{
    if (w.rows() != w.cols() || w.rows() % 2 != 0)
        throw DomainError("real_to_hermitian: expected an even-order square matrix");
    const Eigen::Index n = w.rows() / 2;
    const Eigen::MatrixXd p = (w.topLeftCorner(n, n) + w.bottomRightCorner(n, n)) / 2.0;
    const Eigen::MatrixXd q = (w.bottomLeftCorner(n, n) - w.topRightCorner(n, n)) / 2.0;
    Eigen::MatrixXcd a = p.cast<std::complex<double>>() + std::complex<double>(0.0, 1.0) * q;
    return symmetrize(a);
}

struct HermitianEig {
    Eigen::VectorXd values;  ///< ascending
    Eigen::MatrixXcd vectors;
};

/// Full eigendecomposition; eigenvalues real and ascending.
inline HermitianEig eig_hermitian(const Eigen::MatrixXcd& a)
{
    require_hermitian(a, "eig_hermitian");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(symmetrize(a));
    if (es.info() != Eigen::Success)
        throw NumericalError("eig_hermitian: eigendecomposition did not converge");
    return {es.eigenvalues(), es.eigenvectors()};
}

inline double min_eigenvalue(const Eigen::MatrixXcd& a)
{
    require_hermitian(a, "min_eigenvalue");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(symmetrize(a),
                                                       Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
        throw NumericalError("min_eigenvalue: eigendecomposition did not converge");
    return es.eigenvalues()(0);
}

/// Hermitian PSD square root. Eigenvalue dust down to -1e-10 * lambda_max
/// is clipped to zero; anything more negative is a domain error.
inline Eigen::MatrixXcd matrix_sqrt_psd(const Eigen::MatrixXcd& a)
{
    const auto ed = eig_hermitian(a);
    const double lmax = std::max(0.0, ed.values.maxCoeff());
    const double floor = -1e-10 * std::max(lmax, 1e-300);
    Eigen::VectorXd roots(ed.values.size());
    for (Eigen::Index i = 0; i < ed.values.size(); ++i) {
        if (ed.values(i) < floor)
            throw DomainError("matrix_sqrt_psd: matrix is not positive semidefinite "
                              "(eigenvalue " + std::to_string(ed.values(i)) + ")");
        roots(i) = std::sqrt(std::max(0.0, ed.values(i)));
    }
    return symmetrize(ed.vectors * roots.asDiagonal() * ed.vectors.adjoint());
}

/// Solve A X = B for Hermitian invertible A via eigendecomposition.
/// Reports the condition estimate and refuses rank-deficient systems.
inline Eigen::MatrixXcd hermitian_solve(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b,
                                        double* condition = nullptr)
{
    if (a.rows() != b.rows())
        throw DomainError("hermitian_solve: dimension mismatch");
    const auto ed = eig_hermitian(a);
    const double amax = ed.values.cwiseAbs().maxCoeff();
    const double amin = ed.values.cwiseAbs().minCoeff();
    const double cond = amin > 0.0 ? amax / amin : std::numeric_limits<double>::infinity();
    if (condition != nullptr)
        *condition = cond;
    if (!(amin > 0.0) || cond > 1e14)
        throw NumericalError("hermitian_solve: matrix is singular to working precision "
                             "(condition estimate " + std::to_string(cond) + ")");
    return ed.vectors * ed.values.cwiseInverse().asDiagonal() *
           (ed.vectors.adjoint() * b);
}

} // namespace gridless

#endif // GRIDLESS_HERMITIAN_HPP
