/*
 * Nonnegative least squares
 * Copyright (c) 2026 The gridless-doa authors
 * SPDX-License-Identifier: MIT
 *
 * Lawson-Hanson active-set method for  min_x ||A x - b||_2  s.t.  x >= 0.
 * Deterministic: ties in the gradient test are broken towards the smallest
 * column index, and the passive-set subproblems are solved with a
 * column-pivoted Householder QR, so repeated runs on identical input give
 * bitwise identical output.
 */

#ifndef GRIDLESS_NNLS_HPP
#define GRIDLESS_NNLS_HPP

#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "gridless/errors.hpp"

namespace gridless {

inline Eigen::VectorXd nnls(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                            int max_outer = -1)
{
    if (a.rows() != b.size())
        throw DomainError("nnls: row count of A must match length of b");
    const Eigen::Index n = a.cols();
    if (n == 0)
        return Eigen::VectorXd();
    if (max_outer < 0)
        max_outer = static_cast<int>(3 * n + 30);

    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    std::vector<bool> passive(static_cast<std::size_t>(n), false);
    Eigen::Index passive_count = 0;

    // Solve the unconstrained subproblem restricted to the passive set.
    const auto subproblem = [&](Eigen::VectorXd& z) {
        Eigen::MatrixXd ap(a.rows(), passive_count);
        Eigen::Index c = 0;
        for (Eigen::Index j = 0; j < n; ++j)
            if (passive[static_cast<std::size_t>(j)])
                ap.col(c++) = a.col(j);
        const Eigen::VectorXd zp = ap.colPivHouseholderQr().solve(b);
        z.setZero(n);
        c = 0;
        for (Eigen::Index j = 0; j < n; ++j)
            if (passive[static_cast<std::size_t>(j)])
                z(j) = zp(c++);
    };

    const double grad_tol = 10.0 * std::numeric_limits<double>::epsilon() *
                            a.cwiseAbs().colwise().sum().maxCoeff() *
                            std::max(1.0, b.cwiseAbs().maxCoeff());

    for (int outer = 0; outer < max_outer; ++outer) {
        const Eigen::VectorXd grad = a.transpose() * (b - a * x);
        Eigen::Index best = -1;
        double best_val = grad_tol;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (!passive[static_cast<std::size_t>(j)] && grad(j) > best_val) {
                best_val = grad(j);
                best = j;
            }
        }
        if (best < 0)
            break; // KKT satisfied: all active gradients nonpositive.

        passive[static_cast<std::size_t>(best)] = true;
        ++passive_count;

        Eigen::VectorXd z(n);
        subproblem(z);

        // Inner loop: walk back towards x until z is feasible on the
        // passive set, moving blocking variables to the active set.
        while (true) {
            double alpha = 1.0;
            Eigen::Index blocker = -1;
            for (Eigen::Index j = 0; j < n; ++j) {
                if (passive[static_cast<std::size_t>(j)] && z(j) <= 0.0) {
                    const double step = x(j) / (x(j) - z(j));
                    if (step < alpha) {
                        alpha = step;
                        blocker = j;
                    }
                }
            }
            if (blocker < 0) {
                x = z;
                break;
            }
            x += alpha * (z - x);
            x(blocker) = 0.0;
            passive[static_cast<std::size_t>(blocker)] = false;
            --passive_count;
            const double floor = 1e-14 * x.cwiseAbs().maxCoeff();
            for (Eigen::Index j = 0; j < n; ++j) {
                if (passive[static_cast<std::size_t>(j)] && x(j) <= floor) {
                    passive[static_cast<std::size_t>(j)] = false;
                    --passive_count;
                    x(j) = 0.0;
                }
            }
            if (passive_count == 0) {
                x.setZero();
                break;
            }
            subproblem(z);
        }
    }

    return x.cwiseMax(0.0);
}

} // namespace gridless

#endif // GRIDLESS_NNLS_HPP
