/*
 * Array geometry and steering vectors
 * Copyright (c) 2026 The gridless-doa authors
 * SPDX-License-Identifier: MIT
 *
 * Uniform and sparse linear arrays on a half-wavelength lattice. A sparse
 * linear array (SLA) is described by its sensor positions Omega, a strictly
 * increasing list of positive integers normalized so the first sensor sits
 * at position 1; the aperture M is the largest position, and a ULA is the
 * special case Omega = {1, ..., M}.
 *
 * A source is parameterized by its normalized frequency theta in [0,1),
 * related to the physical direction d in [-90, 90) degrees (half-wavelength
 * spacing) by theta = (sin d + 1) / 2. The full-aperture steering vector is
 *
 *     a(theta) = [1, e^{i 2 pi theta}, ..., e^{i 2 (M-1) pi theta}]^T,
 *
 * and the SLA response is a_Omega(theta) = Gamma_Omega a(theta), where
 * Gamma_Omega is the 0/1 selection matrix picking rows Omega.
 */

#ifndef GRIDLESS_ARRAY_HPP
#define GRIDLESS_ARRAY_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gridless/errors.hpp"

namespace gridless {

/// Sensor positions of a (possibly sparse) linear array.
class ArrayGeometry {
  public:
    /// SLA from integer positions; shifted so the first sensor is at 1.
    explicit ArrayGeometry(std::vector<int> positions)
    {
        if (positions.empty())
            throw DomainError("geometry: position list must be non-empty");
        for (std::size_t j = 1; j < positions.size(); ++j)
            if (positions[j] <= positions[j - 1])
                throw DomainError("geometry: positions must be strictly increasing");
        if (positions.front() < 1)
            throw DomainError("geometry: positions must be positive integers");
        const int shift = positions.front() - 1;
        if (shift != 0)
            for (int& p : positions)
                p -= shift;
        omega_ = std::move(positions);
    }

    /// Uniform linear array with m sensors at positions 1..m.
    static ArrayGeometry ula(int m)
    {
        if (m < 1)
            throw DomainError("geometry: ULA needs at least one sensor");
        std::vector<int> pos(static_cast<std::size_t>(m));
        for (int j = 0; j < m; ++j)
            pos[static_cast<std::size_t>(j)] = j + 1;
        return ArrayGeometry(std::move(pos));
    }

    const std::vector<int>& omega() const { return omega_; }

    /// Number of physical sensors L.
    int sensors() const { return static_cast<int>(omega_.size()); }

    /// Aperture M (position of the last sensor).
    int aperture() const { return omega_.back(); }

    bool is_ula() const { return sensors() == aperture(); }

  private:
    std::vector<int> omega_;
};

/// Full-aperture steering vector a(theta) of length m; theta in [0,1).
inline Eigen::VectorXcd steering_vector(double theta, int m)
{
    if (!(theta >= 0.0 && theta < 1.0))
        throw DomainError("steering_vector: theta must lie in [0,1), got " + std::to_string(theta));
    if (m < 1)
        throw DomainError("steering_vector: m must be positive");
    Eigen::VectorXcd a(m);
    for (int j = 0; j < m; ++j)
        a(j) = std::polar(1.0, 2.0 * std::numbers::pi * j * theta);
    return a;
}

/// SLA steering vector a_Omega(theta) = Gamma_Omega a(theta), length L.
inline Eigen::VectorXcd steering_vector(const ArrayGeometry& geom, double theta)
{
    if (!(theta >= 0.0 && theta < 1.0))
        throw DomainError("steering_vector: theta must lie in [0,1), got " + std::to_string(theta));
    const int L = geom.sensors();
    Eigen::VectorXcd a(L);
    for (int j = 0; j < L; ++j)
        a(j) = std::polar(1.0, 2.0 * std::numbers::pi * (geom.omega()[static_cast<std::size_t>(j)] - 1) * theta);
    return a;
}

/// Row-selection matrix Gamma_Omega (L x M, entries 0/1) with
/// Gamma a(theta) = a_Omega(theta).
inline Eigen::MatrixXd selection_matrix(const ArrayGeometry& geom)
{
    Eigen::MatrixXd gamma = Eigen::MatrixXd::Zero(geom.sensors(), geom.aperture());
    for (int j = 0; j < geom.sensors(); ++j)
        gamma(j, geom.omega()[static_cast<std::size_t>(j)] - 1) = 1.0;
    return gamma;
}

/// Difference coarray D = { m1 - m2 + 1 : m1, m2 in Omega, m1 >= m2 },
/// returned sorted ascending. D is a subset of {1, ..., M}.
inline std::vector<int> coarray(const ArrayGeometry& geom)
{
    std::set<int> lags;
    for (int m1 : geom.omega())
        for (int m2 : geom.omega())
            if (m1 >= m2)
                lags.insert(m1 - m2 + 1);
    return {lags.begin(), lags.end()};
}

/// True when the coarray covers every lag 1..M, so that all entries of an
/// aperture-M Toeplitz covariance are observed by the array.
inline bool is_redundancy_array(const ArrayGeometry& geom)
{
    return static_cast<int>(coarray(geom).size()) == geom.aperture();
}

/// Largest source count the decomposition step can certify: M - 1.
inline int max_detectable_sources(const ArrayGeometry& geom)
{
    return geom.aperture() - 1;
}

/// Map a physical direction d in [-90, 90) degrees to theta = (sin d + 1)/2.
inline double theta_from_direction_deg(double direction_deg)
{
    if (!(direction_deg >= -90.0 && direction_deg < 90.0))
        throw DomainError("theta_from_direction_deg: direction must lie in [-90,90) degrees");
    return (std::sin(direction_deg * std::numbers::pi / 180.0) + 1.0) / 2.0;
}

/// Inverse of theta_from_direction_deg.
inline double direction_deg_from_theta(double theta)
{
    if (!(theta >= 0.0 && theta < 1.0))
        throw DomainError("direction_deg_from_theta: theta must lie in [0,1)");
    return std::asin(2.0 * theta - 1.0) * 180.0 / std::numbers::pi;
}

} // namespace gridless

#endif // GRIDLESS_ARRAY_HPP
