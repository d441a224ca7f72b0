/*
 * Deterministic counter-based random number generation
 * Copyright (c) 2026 The gridless-doa authors
 * SPDX-License-Identifier: MIT
 *
 * All randomness in the toolkit flows through CounterRng, a SplitMix64
 * generator (Steele, Lea & Flood, OOPSLA 2014). The n-th raw output is a
 * pure function of the 64-bit seed and the draw counter:
 *
 *     out(n) = mix64(seed + (n+1) * 0x9E3779B97F4A7C15)
 *
 * with the standard SplitMix64 finalizer mix64. Because the stream depends
 * only on (seed, n), any other implementation of the same recipe reproduces
 * it exactly, which is what makes simulation outputs byte-stable across
 * machines, thread counts and language ports.
 *
 * Derived draws are defined on top of the raw stream as follows and must
 * not be reordered:
 *   - uniform():      next raw output, top 53 bits scaled to [0,1)
 *   - normal_pair():  Box-Muller on two uniforms u1, u2 (in that order):
 *                     r = sqrt(-2 ln(1-u1)), phi = 2 pi u2,
 *                     returns (r cos phi, r sin phi)
 *   - complex_normal(v): normal_pair scaled by sqrt(v/2) into (re, im),
 *                     i.e. a circular complex Gaussian with E|z|^2 = v.
 */

#ifndef GRIDLESS_RNG_HPP
#define GRIDLESS_RNG_HPP

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <utility>

namespace gridless {

class CounterRng {
  public:
    explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

    /// Raw 64-bit output for the current counter position.
    std::uint64_t next_u64()
    {
        std::uint64_t z = seed_ + (++counter_) * 0x9E3779B97F4A7C15ULL;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0,1) from the top 53 bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// One Box-Muller pair of independent standard normals.
    std::pair<double, double> normal_pair()
    {
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log1p(-u1));
        const double phi = 2.0 * std::numbers::pi * u2;
        return {r * std::cos(phi), r * std::sin(phi)};
    }

    /// Circular complex Gaussian with E|z|^2 = variance.
    std::complex<double> complex_normal(double variance)
    {
        const auto [x, y] = normal_pair();
        const double s = std::sqrt(variance / 2.0);
        return {s * x, s * y};
    }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t draws() const { return counter_; }

  private:
    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
};

} // namespace gridless

#endif // GRIDLESS_RNG_HPP
