/*
 * Dense semidefinite programming with Hermitian block variables
 * Copyright (c) 2026 The gridless-doa authors
 * SPDX-License-Identifier: MIT
 *
 * Solves problems of the form
 *
 *     minimize    sum_b <C_b, X_b>
 *     subject to  sum_b <A_{k,b}, X_b> = rhs_k     (k = 1..m)
 *                 X_b Hermitian positive semidefinite
 *
 * where <A, X> = Re tr(A^H X). Constraint and objective coefficients are
 * entered one Hermitian term at a time: a coefficient c at off-diagonal
 * position (i, j) denotes the pair A_ij = c, A_ji = conj(c) and
 * contributes 2 Re(conj(c) X_ij); a diagonal coefficient must be real and
 * contributes c X_ii.
 *
 * Internally each Hermitian block is carried through the real symmetric
 * embedding [[Re, -Im], [Im, Re]] (which doubles inner products, handled
 * transparently) and the problem is solved with an infeasible primal-dual
 * interior-point method using the HKM search direction and a Mehrotra
 * predictor-corrector step. The Schur complement system is formed from
 * sparse constraint entry lists and factored densely with adaptive
 * diagonal regularization plus iterative refinement. The solver is fully
 * deterministic: identical problems yield bitwise identical iterates.
 *
 * The iteration core is generic over the floating-point type. Small
 * problems whose double-precision certificate cannot be driven far below
 * the requested gap are re-solved in extended precision; this matters for
 * weakly identified optima, where the solution error scales like the
 * square root of the duality gap rather than the gap itself.
 *
 * Before iterating, the Gram matrix of the constraint functionals is used
 * to detect linearly inconsistent constraint sets (reported as
 * infeasible) and to tolerate redundant rows.
 */

#ifndef GRIDLESS_SDP_HPP
#define GRIDLESS_SDP_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <map>
#include <ostream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "gridless/errors.hpp"
#include "gridless/hermitian.hpp"

namespace gridless {

enum class SdpStatus {
    optimal,           ///< converged to the requested tolerances
    max_iterations,    ///< iteration cap reached before convergence
    numerical_failure, ///< factorization breakdown or stalled steps
    infeasible,        ///< constraints inconsistent (or strong divergence)
};

inline const char* to_string(SdpStatus s)
{
    switch (s) {
    case SdpStatus::optimal: return "optimal";
    case SdpStatus::max_iterations: return "max_iterations";
    case SdpStatus::numerical_failure: return "numerical_failure";
    case SdpStatus::infeasible: return "infeasible";
    }
    return "unknown";
}

struct SdpTolerances {
    double gap_tol = 1e-8;  ///< relative duality gap target
    double feas_tol = 1e-8; ///< primal/dual feasibility target
    int max_iter = 100;
};

struct SdpSolution {
    SdpStatus status = SdpStatus::numerical_failure;
    std::vector<Eigen::MatrixXcd> x; ///< primal blocks (Hermitian PSD)
    std::vector<Eigen::MatrixXcd> z; ///< dual slack blocks (Hermitian PSD)
    Eigen::VectorXd y;               ///< equality multipliers
    double objective = std::numeric_limits<double>::quiet_NaN();
    double dual_objective = std::numeric_limits<double>::quiet_NaN();
    double rel_gap = std::numeric_limits<double>::infinity();
    double primal_infeas = std::numeric_limits<double>::infinity();
    double dual_infeas = std::numeric_limits<double>::infinity();
    int iterations = 0;
    std::string message;

    bool ok() const { return status == SdpStatus::optimal; }
};

class SdpProblem {
public:
    struct Term {
        int blk;
        int i; ///< row, normalized so that i <= j
        int j;
        std::complex<double> c;
    };

    explicit SdpProblem(std::vector<int> block_orders) : orders_(std::move(block_orders))
    {
        if (orders_.empty())
            throw DomainError("SdpProblem: at least one block is required");
        for (int n : orders_)
            if (n <= 0)
                throw DomainError("SdpProblem: block orders must be positive");
    }

    int block_count() const { return static_cast<int>(orders_.size()); }
    int block_order(int b) const { return orders_.at(static_cast<std::size_t>(b)); }
    const std::vector<int>& block_orders() const { return orders_; }
    int constraint_count() const { return static_cast<int>(rhs_.size()); }
    int total_order() const
    {
        int n = 0;
        for (int v : orders_)
            n += v;
        return n;
    }

    /// Accumulate a Hermitian coefficient into the objective.
    void add_objective(int blk, int i, int j, std::complex<double> coeff)
    {
        objective_.push_back(normalized(blk, i, j, coeff, "add_objective"));
    }

    /// Open a new equality row <A, X> = rhs and return its index.
    int add_constraint(double rhs)
    {
        if (!std::isfinite(rhs))
            throw DomainError("add_constraint: right-hand side must be finite");
        rows_.emplace_back();
        rhs_.push_back(rhs);
        return static_cast<int>(rhs_.size()) - 1;
    }

    /// Accumulate a Hermitian coefficient into constraint row `row`.
    void add_term(int row, int blk, int i, int j, std::complex<double> coeff)
    {
        if (row < 0 || row >= constraint_count())
            throw DomainError("add_term: constraint row out of range");
        rows_[static_cast<std::size_t>(row)].push_back(
            normalized(blk, i, j, coeff, "add_term"));
    }

    /// Pin a single (upper-triangle) complex entry: X_ij = value. Adds one
    /// row for a diagonal entry and two (real and imaginary part) otherwise.
    void pin_entry(int blk, int i, int j, std::complex<double> value)
    {
        check_index(blk, i, j, "pin_entry");
        if (i == j) {
            if (std::abs(value.imag()) > 1e-12 * std::max(1.0, std::abs(value)))
                throw DomainError("pin_entry: diagonal entries are real");
            const int r = add_constraint(value.real());
            add_term(r, blk, i, j, 1.0);
        } else {
            const int r = add_constraint(value.real());
            add_term(r, blk, i, j, 0.5);
            const int s = add_constraint(value.imag());
            add_term(s, blk, i, j, std::complex<double>(0.0, 0.5));
        }
    }

    /// Constrain two (upper-triangle) entries to be equal as complex
    /// numbers. If either entry is off-diagonal this adds a real and an
    /// imaginary row; two diagonal entries need only the real row.
    void equate_entries(int blk1, int i1, int j1, int blk2, int i2, int j2)
    {
        check_index(blk1, i1, j1, "equate_entries");
        check_index(blk2, i2, j2, "equate_entries");
        const int r = add_constraint(0.0);
        add_term(r, blk1, i1, j1, i1 == j1 ? 1.0 : 0.5);
        add_term(r, blk2, i2, j2, i2 == j2 ? -1.0 : -0.5);
        if (i1 != j1 || i2 != j2) {
            const int s = add_constraint(0.0);
            if (i1 != j1)
                add_term(s, blk1, i1, j1, std::complex<double>(0.0, 0.5));
            if (i2 != j2)
                add_term(s, blk2, i2, j2, std::complex<double>(0.0, -0.5));
        }
    }

    const std::vector<Term>& objective_terms() const { return objective_; }
    const std::vector<Term>& constraint_terms(int row) const
    {
        return rows_.at(static_cast<std::size_t>(row));
    }
    double constraint_rhs(int row) const { return rhs_.at(static_cast<std::size_t>(row)); }

    /// Debug dump of the assembled problem (numbers only, no escaping needed).
    void dump_json(std::ostream& os) const
    {
        os << "{\"blocks\":[";
        for (std::size_t b = 0; b < orders_.size(); ++b)
            os << (b ? "," : "") << orders_[b];
        os << "],\"objective\":[";
        for (std::size_t t = 0; t < objective_.size(); ++t) {
            const Term& e = objective_[t];
            os << (t ? "," : "") << "[" << e.blk << "," << e.i << "," << e.j << ","
               << e.c.real() << "," << e.c.imag() << "]";
        }
        os << "],\"constraints\":[";
        for (std::size_t r = 0; r < rows_.size(); ++r) {
            os << (r ? "," : "") << "{\"rhs\":" << rhs_[r] << ",\"terms\":[";
            for (std::size_t t = 0; t < rows_[r].size(); ++t) {
                const Term& e = rows_[r][t];
                os << (t ? "," : "") << "[" << e.blk << "," << e.i << "," << e.j << ","
                   << e.c.real() << "," << e.c.imag() << "]";
            }
            os << "]}";
        }
        os << "]}";
    }

private:
    Term normalized(int blk, int i, int j, std::complex<double> c, const char* who) const
    {
        check_index(blk, i, j, who);
        if (!std::isfinite(c.real()) || !std::isfinite(c.imag()))
            throw DomainError(std::string(who) + ": coefficient must be finite");
        if (i > j) {
            std::swap(i, j);
            c = std::conj(c);
        }
        if (i == j && std::abs(c.imag()) > 1e-12 * std::max(1.0, std::abs(c)))
            throw DomainError(std::string(who) + ": diagonal coefficients are real");
        if (i == j)
            c = std::complex<double>(c.real(), 0.0);
        return Term{blk, i, j, c};
    }

    void check_index(int blk, int i, int j, const char* who) const
    {
        if (blk < 0 || blk >= block_count())
            throw DomainError(std::string(who) + ": block index out of range");
        const int n = orders_[static_cast<std::size_t>(blk)];
        if (i < 0 || i >= n || j < 0 || j >= n)
            throw DomainError(std::string(who) + ": entry index out of range");
    }

    std::vector<int> orders_;
    std::vector<Term> objective_;
    std::vector<std::vector<Term>> rows_;
    std::vector<double> rhs_;
};

namespace detail {

template <typename T>
struct RealEntry {
    int blk;
    int i;
    int j;
    T v;
};

/// One embedded constraint: full (both-triangle) entry list of a symmetric
/// real functional, sorted by (blk, i, j) for Gram intersections.
template <typename T>
struct RealRow {
    std::vector<RealEntry<T>> entries;
    T rhs = T(0);
    T scale = T(1); ///< Frobenius norm before normalization
    int source = -1; ///< original row index (-1 for dropped rows)
};

/// Consolidate a complex Hermitian term list (summing duplicates) and emit
/// the entries of its real symmetric embedding.
template <typename T>
std::vector<RealEntry<T>> embed_terms(const std::vector<SdpProblem::Term>& terms,
                                      const std::vector<int>& orders)
{
    std::map<std::tuple<int, int, int>, std::complex<double>> acc;
    for (const auto& t : terms)
        acc[{t.blk, t.i, t.j}] += t.c;
    std::vector<RealEntry<T>> out;
    out.reserve(acc.size() * 8);
    for (const auto& [key, c] : acc) {
        const auto [blk, i, j] = key;
        const int n = orders[static_cast<std::size_t>(blk)];
        const T x = T(c.real()), y = T(c.imag());
        if (i == j) {
            if (x != T(0)) {
                out.push_back({blk, i, i, x});
                out.push_back({blk, n + i, n + i, x});
            }
        } else {
            if (x != T(0)) {
                out.push_back({blk, i, j, x});
                out.push_back({blk, j, i, x});
                out.push_back({blk, n + i, n + j, x});
                out.push_back({blk, n + j, n + i, x});
            }
            if (y != T(0)) {
                out.push_back({blk, i, n + j, -y});
                out.push_back({blk, n + j, i, -y});
                out.push_back({blk, j, n + i, y});
                out.push_back({blk, n + i, j, y});
            }
        }
    }
    std::sort(out.begin(), out.end(),
              [](const RealEntry<T>& a, const RealEntry<T>& b) {
                  return std::tie(a.blk, a.i, a.j) < std::tie(b.blk, b.i, b.j);
              });
    return out;
}

/// <A, M> over a full entry list; valid for arbitrary (not necessarily
/// symmetric) M because the list stores both triangles of symmetric A.
template <typename T>
T entry_dot(const std::vector<RealEntry<T>>& a,
            const std::vector<Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>>& m)
{
    T s = T(0);
    for (const auto& e : a)
        s += e.v * m[static_cast<std::size_t>(e.blk)](e.i, e.j);
    return s;
}

/// Sparse-sparse inner product of two sorted entry lists.
template <typename T>
T entry_entry_dot(const std::vector<RealEntry<T>>& a, const std::vector<RealEntry<T>>& b)
{
    T s = T(0);
    std::size_t p = 0, q = 0;
    while (p < a.size() && q < b.size()) {
        const auto ka = std::tie(a[p].blk, a[p].i, a[p].j);
        const auto kb = std::tie(b[q].blk, b[q].i, b[q].j);
        if (ka < kb)
            ++p;
        else if (kb < ka)
            ++q;
        else {
            s += a[p].v * b[q].v;
            ++p;
            ++q;
        }
    }
    return s;
}

/// Largest alpha with S + alpha dS > 0, given the Cholesky factor of S.
template <typename T>
T max_step_length(const Eigen::LLT<Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>>& llt,
                  const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>& ds)
{
    using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
    Mat t = ds;
    llt.matrixL().solveInPlace(t);
    Mat b = t.transpose();
    llt.matrixL().solveInPlace(b);
    const Mat sym = T(0.5) * (b + b.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> es(sym, Eigen::EigenvaluesOnly);
    const T lmin = es.eigenvalues()(0);
    if (lmin >= T(-1e-300))
        return std::numeric_limits<T>::infinity();
    return T(-1) / lmin;
}

/// Orthogonal projection onto the complex-embedding subalgebra
/// {[[P, -Q], [Q, P]] : P symmetric, Q antisymmetric}. Keeps refined
/// candidates exactly Hermitian under the embedding.
template <typename T>
Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>
embedding_project(const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>& w)
{
    using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
    const Eigen::Index n = w.rows() / 2;
    Mat p = (w.topLeftCorner(n, n) + w.bottomRightCorner(n, n)) / T(2);
    p = ((p + p.transpose()) / T(2)).eval();
    Mat q = (w.bottomLeftCorner(n, n) - w.topRightCorner(n, n)) / T(2);
    q = ((q - q.transpose()) / T(2)).eval();
    Mat out(2 * n, 2 * n);
    out.topLeftCorner(n, n) = p;
    out.topRightCorner(n, n) = -q;
    out.bottomLeftCorner(n, n) = q;
    out.bottomRightCorner(n, n) = p;
    return out;
}

template <typename T>
class IpmSolver {
public:
    IpmSolver(const SdpProblem& prob, const SdpTolerances& tol) : prob_(prob), tol_(tol)
    {
        trace_ = std::getenv("GRIDLESS_SDP_TRACE") != nullptr;
        for (int n : prob.block_orders())
            orders_.push_back(2 * n);
        nblk_ = static_cast<int>(orders_.size());
        ntot_ = 0;
        for (int n : orders_)
            ntot_ += n;
        build_data();
    }

    SdpSolution run()
    {
        SdpSolution sol;
        sol.y = Eigen::VectorXd::Zero(prob_.constraint_count());
        if (!consistent_) {
            sol.status = SdpStatus::infeasible;
            sol.message = message_;
            extract_blocks(sol, make_identity(T(1)), make_identity(T(1)));
            return sol;
        }
        iterate(sol);
        return sol;
    }

private:
    using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
    using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;
    using BlockMats = std::vector<Mat>;

    static constexpr T eps_ = std::numeric_limits<T>::epsilon();

    const SdpProblem& prob_;
    SdpTolerances tol_;
    std::vector<int> orders_; ///< embedded (real) block orders
    int nblk_ = 0;
    int ntot_ = 0;
    std::vector<RealRow<T>> rows_; ///< normalized, zero rows dropped
    Vec b_;                        ///< normalized embedded right-hand side
    BlockMats c_;                  ///< embedded objective blocks
    T cnorm_ = T(0);
    bool consistent_ = true;
    bool dependent_rows_ = false;
    bool trace_ = false;
    std::string message_;

    BlockMats make_identity(T scale) const
    {
        BlockMats m(static_cast<std::size_t>(nblk_));
        for (int b = 0; b < nblk_; ++b)
            m[static_cast<std::size_t>(b)] =
                scale * Mat::Identity(orders_[static_cast<std::size_t>(b)],
                                      orders_[static_cast<std::size_t>(b)]);
        return m;
    }

    BlockMats make_zero() const
    {
        BlockMats m(static_cast<std::size_t>(nblk_));
        for (int b = 0; b < nblk_; ++b)
            m[static_cast<std::size_t>(b)] =
                Mat::Zero(orders_[static_cast<std::size_t>(b)],
                          orders_[static_cast<std::size_t>(b)]);
        return m;
    }

    void build_data()
    {
        // Objective: dense embedded blocks.
        std::vector<Eigen::MatrixXcd> cblocks(static_cast<std::size_t>(prob_.block_count()));
        for (int b = 0; b < prob_.block_count(); ++b)
            cblocks[static_cast<std::size_t>(b)] =
                Eigen::MatrixXcd::Zero(prob_.block_order(b), prob_.block_order(b));
        for (const auto& t : prob_.objective_terms()) {
            auto& m = cblocks[static_cast<std::size_t>(t.blk)];
            if (t.i == t.j) {
                m(t.i, t.i) += t.c.real();
            } else {
                m(t.i, t.j) += t.c;
                m(t.j, t.i) += std::conj(t.c);
            }
        }
        c_.resize(static_cast<std::size_t>(nblk_));
        cnorm_ = T(0);
        for (int b = 0; b < nblk_; ++b) {
            c_[static_cast<std::size_t>(b)] =
                hermitian_to_real(cblocks[static_cast<std::size_t>(b)]).cast<T>();
            cnorm_ += c_[static_cast<std::size_t>(b)].squaredNorm();
        }
        cnorm_ = std::sqrt(cnorm_);

        // Constraints: embed, normalize to unit Frobenius norm, drop empty.
        const int m = prob_.constraint_count();
        rows_.reserve(static_cast<std::size_t>(m));
        for (int k = 0; k < m; ++k) {
            RealRow<T> row;
            row.entries = embed_terms<T>(prob_.constraint_terms(k), prob_.block_orders());
            row.rhs = T(2) * T(prob_.constraint_rhs(k));
            row.source = k;
            T norm2 = T(0);
            for (const auto& e : row.entries)
                norm2 += e.v * e.v;
            row.scale = std::sqrt(norm2);
            if (row.scale < T(1e-14)) {
                if (std::abs(row.rhs) > T(1e-12)) {
                    consistent_ = false;
                    message_ = "constraint row " + std::to_string(k) +
                               " has no coefficients but a nonzero right-hand side";
                    return;
                }
                continue; // vacuous row
            }
            for (auto& e : row.entries)
                e.v /= row.scale;
            row.rhs /= row.scale;
            rows_.push_back(std::move(row));
        }
        b_.resize(static_cast<Eigen::Index>(rows_.size()));
        for (std::size_t k = 0; k < rows_.size(); ++k)
            b_(static_cast<Eigen::Index>(k)) = rows_[k].rhs;

        gram_check();
    }

    /// Detect linear inconsistency of the equality system via the Gram
    /// matrix of the (normalized) constraint functionals. Redundant but
    /// consistent rows are kept; the regularized Schur factorization and
    /// the range-space structure of the Newton system tolerate them.
    void gram_check()
    {
        const std::size_t m = rows_.size();
        if (m == 0)
            return;
        Mat g(m, m);
        for (std::size_t k = 0; k < m; ++k)
            for (std::size_t l = 0; l <= k; ++l) {
                const T v = entry_entry_dot(rows_[k].entries, rows_[l].entries);
                g(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)) = v;
                g(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(k)) = v;
            }
        const T tol = T(1e-8) * (T(1) + b_.norm());
        T res = std::numeric_limits<T>::infinity();
        Eigen::LLT<Mat> llt(g);
        if (llt.info() == Eigen::Success)
            res = (g * llt.solve(b_) - b_).norm();
        if (res > tol) {
            // Rank-deficient or ill-conditioned Gram matrix: project onto the
            // numerical range before judging consistency.
            Eigen::SelfAdjointEigenSolver<Mat> es(g);
            const Vec& ev = es.eigenvalues();
            const T cut = std::max(ev.maxCoeff(), T(0)) * T(1e-12) * T(m);
            Vec inv = Vec::Zero(ev.size());
            for (Eigen::Index i = 0; i < ev.size(); ++i)
                if (ev(i) > cut)
                    inv(i) = T(1) / ev(i);
            if ((inv.array() == T(0)).any())
                dependent_rows_ = true;
            const Vec w =
                es.eigenvectors() * (inv.asDiagonal() * (es.eigenvectors().transpose() * b_));
            res = (g * w - b_).norm();
        }
        if (res > tol) {
            consistent_ = false;
            message_ = "equality constraints are linearly inconsistent (projection residual " +
                       std::to_string(static_cast<double>(res)) + ")";
        } else if (dependent_rows_) {
            message_ = "constraint set contains linearly dependent rows";
        }
    }

    void extract_blocks(SdpSolution& sol, const BlockMats& x, const BlockMats& z) const
    {
        sol.x.resize(static_cast<std::size_t>(nblk_));
        sol.z.resize(static_cast<std::size_t>(nblk_));
        for (int b = 0; b < nblk_; ++b) {
            const std::size_t sb = static_cast<std::size_t>(b);
            const Eigen::MatrixXd xs =
                (T(0.5) * (x[sb] + x[sb].transpose())).template cast<double>();
            const Eigen::MatrixXd zs =
                (T(0.5) * (z[sb] + z[sb].transpose())).template cast<double>();
            sol.x[sb] = real_to_hermitian(xs);
            sol.z[sb] = real_to_hermitian(zs);
        }
    }

    struct Residuals {
        Vec rp;
        BlockMats rd;
        T mu = T(0);
        T pobj = T(0), dobj = T(0);
        T rel_gap = T(0), pinf = T(0), dinf = T(0);
        T merit(const SdpTolerances& t) const
        {
            return std::max({rel_gap / T(t.gap_tol), pinf / T(t.feas_tol),
                             dinf / T(t.feas_tol)});
        }
    };

    Residuals residuals(const BlockMats& x, const Vec& y, const BlockMats& z) const
    {
        Residuals r;
        const std::size_t m = rows_.size();
        r.rp.resize(static_cast<Eigen::Index>(m));
        for (std::size_t k = 0; k < m; ++k)
            r.rp(static_cast<Eigen::Index>(k)) = rows_[k].rhs - entry_dot(rows_[k].entries, x);
        r.rd = make_zero();
        for (int b = 0; b < nblk_; ++b)
            r.rd[static_cast<std::size_t>(b)] =
                c_[static_cast<std::size_t>(b)] - z[static_cast<std::size_t>(b)];
        for (std::size_t k = 0; k < m; ++k)
            for (const auto& e : rows_[k].entries)
                r.rd[static_cast<std::size_t>(e.blk)](e.i, e.j) -=
                    y(static_cast<Eigen::Index>(k)) * e.v;
        T gap = T(0), dnorm2 = T(0);
        for (int b = 0; b < nblk_; ++b) {
            gap += (x[static_cast<std::size_t>(b)].array() *
                    z[static_cast<std::size_t>(b)].array())
                       .sum();
            dnorm2 += r.rd[static_cast<std::size_t>(b)].squaredNorm();
            r.pobj += (c_[static_cast<std::size_t>(b)].array() *
                       x[static_cast<std::size_t>(b)].array())
                          .sum();
        }
        r.dobj = b_.dot(y);
        r.mu = gap / T(ntot_);
        const T po = r.pobj / T(2);
        const T dd = r.dobj / T(2);
        r.rel_gap = (gap / T(2)) / (T(1) + (std::abs(po) + std::abs(dd)) / T(2));
        r.pinf = r.rp.norm() / (T(1) + b_.norm());
        r.dinf = std::sqrt(dnorm2) / (T(1) + cnorm_);
        return r;
    }

    /// Schur complement M_kl = tr(A_k X A_l Z^{-1}).
    Mat schur(const BlockMats& x, const BlockMats& zinv) const
    {
        const std::size_t m = rows_.size();
        Mat s(m, m);
        for (std::size_t k = 0; k < m; ++k) {
            for (std::size_t l = 0; l <= k; ++l) {
                T acc = T(0);
                for (const auto& e : rows_[k].entries) {
                    const auto& xb = x[static_cast<std::size_t>(e.blk)];
                    const auto& zb = zinv[static_cast<std::size_t>(e.blk)];
                    for (const auto& f : rows_[l].entries) {
                        if (f.blk != e.blk)
                            continue;
                        acc += e.v * f.v * xb(e.j, f.i) * zb(f.j, e.i);
                    }
                }
                s(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)) = acc;
                s(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(k)) = acc;
            }
        }
        return s;
    }

    /// Jacobi-scaled Cholesky of the Schur matrix with escalating diagonal
    /// regularization, plus residual-driven iterative refinement against
    /// the original (unscaled, unregularized) matrix.
    struct SchurSystem {
        const Mat* mat = nullptr;
        Vec d; ///< Jacobi scales (sqrt of diagonal)
        Eigen::LLT<Mat> llt;

        bool factor(const Mat& m)
        {
            mat = &m;
            if (m.rows() == 0)
                return true;
            d = m.diagonal().cwiseMax(T(1e-300)).cwiseSqrt();
            Mat scaled = d.cwiseInverse().asDiagonal() * m * d.cwiseInverse().asDiagonal();
            for (double mult : {0.0, 1e2, 1e4, 1e6, 1e8, 1e10}) {
                Mat reg = scaled;
                reg.diagonal().array() += T(mult) * eps_;
                llt.compute(reg);
                if (llt.info() == Eigen::Success)
                    return true;
            }
            return false;
        }

        Vec base_solve(const Vec& r) const
        {
            return llt.solve((r.array() / d.array()).matrix()).array() / d.array();
        }

        Vec solve(const Vec& rhs) const
        {
            Vec dy = base_solve(rhs);
            T best = (*mat * dy - rhs).norm();
            // Refine while the true residual keeps dropping.
            for (int round = 0; round < 4; ++round) {
                const Vec r = rhs - *mat * dy;
                if (best <= T(64) * eps_ * (T(1) + rhs.norm()))
                    break;
                const Vec cand = dy + base_solve(r);
                const T res = (*mat * cand - rhs).norm();
                if (res >= best)
                    break;
                dy = cand;
                best = res;
            }
            return dy;
        }
    };

    void iterate(SdpSolution& sol)
    {
        const std::size_t m = rows_.size();
        const T bmax = m > 0 ? (T(1) + b_.cwiseAbs().maxCoeff()) : T(1);
        const T nmax = T(*std::max_element(orders_.begin(), orders_.end()));
        const T xi = std::max({T(10), std::sqrt(nmax), nmax * bmax / T(2)});
        const T eta = std::max({T(10), std::sqrt(nmax), T(1) + cnorm_});

        BlockMats x = make_identity(xi);
        BlockMats z = make_identity(eta);
        Vec y = Vec::Zero(static_cast<Eigen::Index>(m));

        BlockMats best_x = x, best_z = z;
        Vec best_y = y;
        Residuals best_res = residuals(x, y, z);
        T best_merit = best_res.merit(tol_);
        int best_iter = 0;

        bool reached = false;
        int polish = 0;
        int centering_left = 3;
        T prev_merit = std::numeric_limits<T>::infinity();
        std::string stop_note;

        int iter = 0;
        for (; iter < tol_.max_iter; ++iter) {
            Residuals res = residuals(x, y, z);
            const T merit = res.merit(tol_);
            if (std::isfinite(static_cast<double>(merit)) && merit < best_merit) {
                best_merit = merit;
                best_res = res;
                best_x = x;
                best_z = z;
                best_y = y;
                best_iter = iter;
            }
            if (merit <= T(1)) {
                reached = true;
                // Keep polishing while cheap progress is available.
                if (merit <= T(1e-4) || ++polish >= 12)
                    break;
                if (merit > T(0.9) * prev_merit && centering_left == 0)
                    break;
            }
            if (iter - best_iter >= 8) {
                stop_note = "no further progress";
                break;
            }
            prev_merit = merit;
            if (!std::isfinite(static_cast<double>(res.mu)) || res.mu <= T(0)) {
                stop_note = "barrier parameter collapsed";
                break;
            }
            if (iter >= 10 && y.template lpNorm<Eigen::Infinity>() > T(1e12) * bmax &&
                res.pinf > T(1e3) * T(tol_.feas_tol)) {
                sol.status = SdpStatus::infeasible;
                sol.message = "diverging multipliers suggest an infeasible constraint set";
                finalize(sol, best_x, best_y, best_z, best_res, iter);
                return;
            }

            // Factor the current iterates.
            std::vector<Eigen::LLT<Mat>> lltx(static_cast<std::size_t>(nblk_)),
                lltz(static_cast<std::size_t>(nblk_));
            BlockMats zinv(static_cast<std::size_t>(nblk_));
            bool factor_ok = true;
            for (int b = 0; b < nblk_ && factor_ok; ++b) {
                const std::size_t sb = static_cast<std::size_t>(b);
                lltx[sb].compute(x[sb]);
                lltz[sb].compute(z[sb]);
                if (lltx[sb].info() != Eigen::Success || lltz[sb].info() != Eigen::Success) {
                    factor_ok = false;
                    break;
                }
                zinv[sb] = lltz[sb].solve(Mat::Identity(orders_[sb], orders_[sb]));
                zinv[sb] = T(0.5) * (zinv[sb] + zinv[sb].transpose());
            }
            if (!factor_ok) {
                stop_note = "iterate lost positive definiteness";
                break;
            }

            const Mat sm = schur(x, zinv);
            SchurSystem ssys;
            if (!ssys.factor(sm)) {
                stop_note = "Schur complement factorization failed";
                break;
            }

            // Predictor (affine scaling) direction.
            BlockMats rc(static_cast<std::size_t>(nblk_));
            for (int b = 0; b < nblk_; ++b) {
                const std::size_t sb = static_cast<std::size_t>(b);
                rc[sb] = -x[sb] * z[sb];
            }
            BlockMats dxa(static_cast<std::size_t>(nblk_)), dza(static_cast<std::size_t>(nblk_));
            Vec dya;
            newton_step(res, rc, x, zinv, ssys, dya, dxa, dza);
            T apa = T(1), ada = T(1);
            for (int b = 0; b < nblk_; ++b) {
                const std::size_t sb = static_cast<std::size_t>(b);
                apa = std::min(apa, max_step_length(lltx[sb], dxa[sb]));
                ada = std::min(ada, max_step_length(lltz[sb], dza[sb]));
            }

            T mu_aff = T(0);
            for (int b = 0; b < nblk_; ++b) {
                const std::size_t sb = static_cast<std::size_t>(b);
                mu_aff += ((x[sb] + apa * dxa[sb]).array() * (z[sb] + ada * dza[sb]).array())
                              .sum();
            }
            mu_aff = std::max(mu_aff / T(ntot_), T(0));
            const T ratio = mu_aff / res.mu;
            const T sigma = std::clamp(ratio * ratio * ratio, T(1e-8), T(1));

            // Corrector direction.
            for (int b = 0; b < nblk_; ++b) {
                const std::size_t sb = static_cast<std::size_t>(b);
                rc[sb] = sigma * res.mu * Mat::Identity(orders_[sb], orders_[sb]) -
                         x[sb] * z[sb] - dxa[sb] * dza[sb];
            }
            BlockMats dx(static_cast<std::size_t>(nblk_)), dz(static_cast<std::size_t>(nblk_));
            Vec dy;
            newton_step(res, rc, x, zinv, ssys, dy, dx, dz);

            T ap = std::numeric_limits<T>::infinity();
            T ad = std::numeric_limits<T>::infinity();
            for (int b = 0; b < nblk_; ++b) {
                const std::size_t sb = static_cast<std::size_t>(b);
                ap = std::min(ap, max_step_length(lltx[sb], dx[sb]));
                ad = std::min(ad, max_step_length(lltz[sb], dz[sb]));
            }
            // Near the optimum the combined direction can lose accuracy and
            // the step lengths collapse; a pure centering direction at the
            // current barrier value is far better conditioned and buys
            // another order of magnitude before stopping.
            if (reached && std::min(ap, ad) < T(0.2) && centering_left > 0) {
                --centering_left;
                for (int b = 0; b < nblk_; ++b) {
                    const std::size_t sb = static_cast<std::size_t>(b);
                    rc[sb] = res.mu * Mat::Identity(orders_[sb], orders_[sb]) - x[sb] * z[sb];
                }
                newton_step(res, rc, x, zinv, ssys, dy, dx, dz);
                ap = std::numeric_limits<T>::infinity();
                ad = std::numeric_limits<T>::infinity();
                for (int b = 0; b < nblk_; ++b) {
                    const std::size_t sb = static_cast<std::size_t>(b);
                    ap = std::min(ap, max_step_length(lltx[sb], dx[sb]));
                    ad = std::min(ad, max_step_length(lltz[sb], dz[sb]));
                }
            }
            const T tau = std::min(T(0.99), T(0.9) + T(0.09) * std::min({T(1), ap, ad}));
            ap = std::min(T(1), tau * ap);
            ad = std::min(T(1), tau * ad);
            if (trace_)
                std::fprintf(stderr,
                             "[sdp] it=%3d mu=%9.3e gap=%9.3e pinf=%9.3e dinf=%9.3e "
                             "sig=%8.2e ap=%6.4f ad=%6.4f\n",
                             iter, static_cast<double>(res.mu),
                             static_cast<double>(res.rel_gap),
                             static_cast<double>(res.pinf), static_cast<double>(res.dinf),
                             static_cast<double>(sigma), static_cast<double>(ap),
                             static_cast<double>(ad));

            // Apply with a positive-definiteness guard.
            bool stepped = false;
            for (int tries = 0; tries < 12; ++tries) {
                BlockMats xn(static_cast<std::size_t>(nblk_)), zn(static_cast<std::size_t>(nblk_));
                bool pd = true;
                for (int b = 0; b < nblk_ && pd; ++b) {
                    const std::size_t sb = static_cast<std::size_t>(b);
                    xn[sb] = x[sb] + ap * dx[sb];
                    xn[sb] = T(0.5) * (xn[sb] + xn[sb].transpose());
                    zn[sb] = z[sb] + ad * dz[sb];
                    zn[sb] = T(0.5) * (zn[sb] + zn[sb].transpose());
                    Eigen::LLT<Mat> chk(xn[sb]);
                    if (chk.info() != Eigen::Success)
                        pd = false;
                    else {
                        chk.compute(zn[sb]);
                        if (chk.info() != Eigen::Success)
                            pd = false;
                    }
                }
                if (pd) {
                    x = std::move(xn);
                    z = std::move(zn);
                    y += ad * dy;
                    stepped = true;
                    break;
                }
                ap *= T(0.8);
                ad *= T(0.8);
            }
            if (!stepped || (ap < T(1e-10) && ad < T(1e-10))) {
                stop_note = "step lengths collapsed";
                break;
            }
        }

        // Account for the final iterate.
        Residuals res = residuals(x, y, z);
        const T merit = res.merit(tol_);
        if (std::isfinite(static_cast<double>(merit)) && merit < best_merit) {
            best_merit = merit;
            best_res = res;
            best_x = x;
            best_z = z;
            best_y = y;
            best_iter = iter;
        }
        // Purify near-optimal iterates: either close under the requested
        // tolerances or close in absolute terms (tight-tolerance runs can
        // stall with an absolutely excellent iterate whose merit is large).
        const bool near_opt = best_res.rel_gap <= T(3e-7) &&
                              best_res.pinf <= T(3e-7) && best_res.dinf <= T(3e-7);
        if ((best_merit <= T(30) || near_opt) && purify(best_x, best_y, best_z, best_res))
            best_merit = best_res.merit(tol_);
        if (best_merit <= T(1))
            reached = true;

        if (reached) {
            sol.status = SdpStatus::optimal;
            sol.message = dependent_rows_ ? message_ : "";
        } else if (iter >= tol_.max_iter) {
            sol.status = SdpStatus::max_iterations;
            sol.message = "iteration cap reached before convergence";
        } else {
            sol.status = SdpStatus::numerical_failure;
            sol.message = stop_note.empty() ? "solver stalled" : stop_note;
        }
        finalize(sol, best_x, best_y, best_z, best_res, std::max(iter, best_iter));
    }

    /// Finite-termination refinement: estimate the optimal face of each
    /// block from the eigenvalue gaps of the best primal iterate, then
    /// solve a least-squares problem for the exact primal on that face.
    /// Interior iterates carry transverse error of order mu (worse on
    /// degenerate faces); when the face estimate is right this projection
    /// removes it in one step. The candidate replaces the iterate only if
    /// it is PSD and does not worsen feasibility or the duality gap.
    bool purify(BlockMats& x, const Vec& y, const BlockMats& z, Residuals& res) const
    {
        const std::size_t m = rows_.size();
        if (m == 0)
            return false;

        // Face estimate per block: X = U S U^T + U E V^T + V E^T U^T with
        // U the dominant eigenvectors, V the transverse ones. The pure
        // transverse part carries the interior-point error and is dropped;
        // the cross coordinates E let the face rotate to first order,
        // which is what the eigenvector estimate gets wrong.
        std::vector<Mat> face(static_cast<std::size_t>(nblk_));
        std::vector<Mat> trans(static_cast<std::size_t>(nblk_));
        std::vector<int> ranks(static_cast<std::size_t>(nblk_), 0);
        int nv = 0;
        bool deficient = false;
        for (int b = 0; b < nblk_; ++b) {
            const std::size_t sb = static_cast<std::size_t>(b);
            Eigen::SelfAdjointEigenSolver<Mat> es(x[sb]);
            const Vec& ev = es.eigenvalues();
            const T lmax = ev(ev.size() - 1);
            int r = 0;
            if (lmax > T(0))
                for (Eigen::Index i = 0; i < ev.size(); ++i)
                    if (ev(i) > T(1e-5) * lmax)
                        ++r;
            ranks[sb] = r;
            face[sb] = es.eigenvectors().rightCols(r);
            trans[sb] = es.eigenvectors().leftCols(orders_[sb] - r);
            nv += r * (r + 1) / 2 + r * (orders_[sb] - r);
            if (r < orders_[sb])
                deficient = true;
        }
        if (trace_) {
            std::fprintf(stderr, "[sdp] purify: nv=%d m=%zu ranks:", nv, m);
            for (int b = 0; b < nblk_; ++b)
                std::fprintf(stderr, " %d/%d", ranks[static_cast<std::size_t>(b)],
                             orders_[static_cast<std::size_t>(b)]);
            std::fprintf(stderr, "\n");
        }
        if (!deficient || nv == 0 || nv > 1200 || m > 3000)
            return false;

        // Per-block coordinate layout: the symmetric face block S
        // (diagonal first, then strict upper pairs), then E column-major.
        std::vector<int> offs(static_cast<std::size_t>(nblk_), 0);
        {
            int acc = 0;
            for (int b = 0; b < nblk_; ++b) {
                const std::size_t sb = static_cast<std::size_t>(b);
                offs[sb] = acc;
                acc += ranks[sb] * (ranks[sb] + 1) / 2 +
                       ranks[sb] * (orders_[sb] - ranks[sb]);
            }
        }
        const auto sidx = [](int r, int p, int q) {
            if (p == q)
                return p;
            const int above = q * (q - 1) / 2; // pairs with second index < q
            return r + above + p;
        };
        const auto eidx = [](int r, int nt, int p, int t) {
            (void)nt;
            return r * (r + 1) / 2 + p + t * r; // column-major over (p, t)
        };

        Mat g = Mat::Zero(static_cast<Eigen::Index>(m), nv);
        for (std::size_t k = 0; k < m; ++k)
            for (const auto& e : rows_[k].entries) {
                const std::size_t sb = static_cast<std::size_t>(e.blk);
                const int r = ranks[sb];
                if (r == 0)
                    continue;
                const int nt = orders_[sb] - r;
                const auto& ub = face[sb];
                const auto& vb = trans[sb];
                const int off = offs[sb];
                for (int p = 0; p < r; ++p) {
                    g(static_cast<Eigen::Index>(k), off + sidx(r, p, p)) +=
                        e.v * ub(e.i, p) * ub(e.j, p);
                    for (int q = p + 1; q < r; ++q)
                        g(static_cast<Eigen::Index>(k), off + sidx(r, p, q)) +=
                            e.v * (ub(e.i, p) * ub(e.j, q) + ub(e.i, q) * ub(e.j, p));
                    for (int t = 0; t < nt; ++t)
                        g(static_cast<Eigen::Index>(k), off + eidx(r, nt, p, t)) +=
                            e.v * (ub(e.i, p) * vb(e.j, t) + vb(e.i, t) * ub(e.j, p));
                }
            }

        // Start from the current face coordinates (the cross coordinates
        // vanish there by eigenvector orthogonality) and move minimally.
        Vec p0 = Vec::Zero(nv);
        for (int b = 0; b < nblk_; ++b) {
            const std::size_t sb = static_cast<std::size_t>(b);
            const int r = ranks[sb];
            if (r == 0)
                continue;
            const Mat s0 = face[sb].transpose() * x[sb] * face[sb];
            for (int p = 0; p < r; ++p) {
                p0(offs[sb] + sidx(r, p, p)) = s0(p, p);
                for (int q = p + 1; q < r; ++q)
                    p0(offs[sb] + sidx(r, p, q)) = T(0.5) * (s0(p, q) + s0(q, p));
            }
        }

        Eigen::CompleteOrthogonalDecomposition<Mat> cod(g);
        const Vec step = cod.solve(b_ - g * p0);
        if (!step.allFinite())
            return false;
        const Vec coords = p0 + step;
        const T new_rp = (g * coords - b_).norm();
        if (trace_)
            std::fprintf(stderr, "[sdp] purify: rp %.3e -> %.3e (step %.3e)\n",
                         static_cast<double>(res.rp.norm()), static_cast<double>(new_rp),
                         static_cast<double>(step.norm()));
        if (new_rp > std::max(T(100) * eps_ * (T(1) + b_.norm()), T(0.5) * res.rp.norm()))
            return false;

        BlockMats xc(static_cast<std::size_t>(nblk_));
        for (int b = 0; b < nblk_; ++b) {
            const std::size_t sb = static_cast<std::size_t>(b);
            const int r = ranks[sb];
            const int n = orders_[sb];
            if (r == 0) {
                xc[sb] = Mat::Zero(n, n);
                continue;
            }
            const int nt = n - r;
            Mat s(r, r);
            for (int p = 0; p < r; ++p) {
                s(p, p) = coords(offs[sb] + sidx(r, p, p));
                for (int q = p + 1; q < r; ++q) {
                    s(p, q) = coords(offs[sb] + sidx(r, p, q));
                    s(q, p) = s(p, q);
                }
            }
            Mat cross(r, nt);
            for (int p = 0; p < r; ++p)
                for (int t = 0; t < nt; ++t)
                    cross(p, t) = coords(offs[sb] + eidx(r, nt, p, t));

            Mat cand = face[sb] * s * face[sb].transpose();
            if (nt > 0) {
                const Mat uev = face[sb] * cross * trans[sb].transpose();
                cand += uev + uev.transpose();
            }
            // The cross terms make the candidate indefinite by a sliver of
            // order ||E||^2; clip it away and keep PSD exactly.
            Eigen::SelfAdjointEigenSolver<Mat> se(cand);
            const T cmax = se.eigenvalues()(n - 1);
            if (!(cmax > T(0)) || se.eigenvalues()(0) < T(-1e-7) * std::max(cmax, T(1)))
                return false; // left the cone by more than round-off
            xc[sb] = se.eigenvectors() * se.eigenvalues().cwiseMax(T(0)).asDiagonal() *
                     se.eigenvectors().transpose();
            // Snap back onto the complex-embedding subalgebra.
            xc[sb] = embedding_project<T>(xc[sb]);
        }

        Residuals rnew = residuals(xc, y, z);
        if (trace_)
            std::fprintf(stderr, "[sdp] purify: merit %.3e -> %.3e (gap %.3e -> %.3e)\n",
                         static_cast<double>(res.merit(tol_)),
                         static_cast<double>(rnew.merit(tol_)),
                         static_cast<double>(res.rel_gap),
                         static_cast<double>(rnew.rel_gap));
        if (!std::isfinite(static_cast<double>(rnew.merit(tol_))) ||
            rnew.merit(tol_) >= res.merit(tol_))
            return false;
        x = std::move(xc);
        res = rnew;
        return true;
    }

    void newton_step(const Residuals& res, const BlockMats& rc, const BlockMats& x,
                     const BlockMats& zinv, const SchurSystem& ssys, Vec& dy, BlockMats& dx,
                     BlockMats& dz) const
    {
        const std::size_t m = rows_.size();
        BlockMats u(static_cast<std::size_t>(nblk_));
        for (int b = 0; b < nblk_; ++b) {
            const std::size_t sb = static_cast<std::size_t>(b);
            u[sb] = (rc[sb] - x[sb] * res.rd[sb]) * zinv[sb];
        }
        Vec rhs(static_cast<Eigen::Index>(m));
        for (std::size_t k = 0; k < m; ++k)
            rhs(static_cast<Eigen::Index>(k)) =
                res.rp(static_cast<Eigen::Index>(k)) - entry_dot(rows_[k].entries, u);
        dy = m > 0 ? ssys.solve(rhs) : Vec();

        dz = make_zero();
        for (int b = 0; b < nblk_; ++b)
            dz[static_cast<std::size_t>(b)] = res.rd[static_cast<std::size_t>(b)];
        for (std::size_t k = 0; k < m; ++k)
            for (const auto& e : rows_[k].entries)
                dz[static_cast<std::size_t>(e.blk)](e.i, e.j) -=
                    dy(static_cast<Eigen::Index>(k)) * e.v;

        dx.resize(static_cast<std::size_t>(nblk_));
        for (int b = 0; b < nblk_; ++b) {
            const std::size_t sb = static_cast<std::size_t>(b);
            Mat raw = (rc[sb] - x[sb] * dz[sb]) * zinv[sb];
            dx[sb] = T(0.5) * (raw + raw.transpose());
        }
    }

    void finalize(SdpSolution& sol, const BlockMats& x, const Vec& y, const BlockMats& z,
                  const Residuals& res, int iterations) const
    {
        extract_blocks(sol, x, z);
        sol.objective = static_cast<double>(res.pobj / T(2));
        sol.dual_objective = static_cast<double>(res.dobj / T(2));
        sol.rel_gap = static_cast<double>(res.rel_gap);
        sol.primal_infeas = static_cast<double>(res.pinf);
        sol.dual_infeas = static_cast<double>(res.dinf);
        sol.iterations = iterations;
        // Undo row normalization and re-insert dropped vacuous rows.
        sol.y = Eigen::VectorXd::Zero(prob_.constraint_count());
        for (std::size_t k = 0; k < rows_.size(); ++k)
            sol.y(rows_[k].source) = static_cast<double>(y(static_cast<Eigen::Index>(k)) /
                                                         rows_[k].scale);
    }
};

} // namespace detail

/// Solve the assembled problem with an HKM predictor-corrector interior
/// point method. Never throws for solver-side trouble; inspect `status`.
///
/// Small problems are automatically re-solved in extended precision when
/// the double-precision certificate leaves room: on weakly identified
/// problems the distance to the optimizer scales like sqrt(gap), so a gap
/// floor near 1e-11 still allows entry errors around 1e-6, and the
/// extended pass pushes the certificate three to four orders further.
inline SdpSolution solve_sdp(const SdpProblem& prob, const SdpTolerances& tol = {})
{
    if (tol.max_iter < 1 || tol.gap_tol <= 0.0 || tol.feas_tol <= 0.0)
        throw DomainError("solve_sdp: tolerances must be positive");
    detail::IpmSolver<double> solver(prob, tol);
    SdpSolution sol = solver.run();

    if constexpr (std::numeric_limits<long double>::epsilon() <
                  std::numeric_limits<double>::epsilon()) {
        const bool small = prob.total_order() <= 16 && prob.constraint_count() <= 400;
        const bool worth_it = sol.status == SdpStatus::optimal
                                  ? sol.rel_gap > 1e-12
                                  : sol.status != SdpStatus::infeasible;
        if (small && worth_it) {
            SdpTolerances tight = tol;
            tight.gap_tol = std::min(tol.gap_tol, 1e-13);
            tight.feas_tol = std::min(tol.feas_tol, 1e-13);
            detail::IpmSolver<long double> refiner(prob, tight);
            SdpSolution refined = refiner.run();
            const auto merit = [&tol](const SdpSolution& s) {
                return std::max({s.rel_gap / tol.gap_tol, s.primal_infeas / tol.feas_tol,
                                 s.dual_infeas / tol.feas_tol});
            };
            const double m_old = merit(sol);
            const double m_new = merit(refined);
            if (refined.status != SdpStatus::infeasible && std::isfinite(m_new) &&
                (m_new < m_old || !std::isfinite(m_old))) {
                if (m_new <= 1.0)
                    refined.status = SdpStatus::optimal;
                const bool keep_old = sol.ok() && !refined.ok();
                if (!keep_old)
                    sol = std::move(refined);
            }
        }
    }
    return sol;
}

} // namespace gridless

#endif // GRIDLESS_SDP_HPP
