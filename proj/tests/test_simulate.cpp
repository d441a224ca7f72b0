/*
 * RNG and simulation tests
 * Copyright (c) 2026 The gridless-doa authors
 * SPDX-License-Identifier: MIT
 */

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

#include "gridless/rng.hpp"
#include "gridless/simulate.hpp"

using namespace gridless;

namespace {

// Independent restatement of the documented raw-output recipe: the n-th
// output (1-based) is mix64(seed + n * golden), with no sequential state.
std::uint64_t raw_output_oracle(std::uint64_t seed, std::uint64_t n)
{
    std::uint64_t z = seed + n * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

} // namespace

TEST_CASE("raw stream is a pure function of (seed, counter)", "[rng]")
{
    CounterRng rng(0xDEADBEEFCAFEULL);
    for (std::uint64_t n = 1; n <= 64; ++n)
        REQUIRE(rng.next_u64() == raw_output_oracle(0xDEADBEEFCAFEULL, n));

    CounterRng a(7), b(7), c(8);
    CHECK(a.next_u64() == b.next_u64());
    CHECK(a.next_u64() != c.next_u64());
}

TEST_CASE("uniform and normal draws have sane statistics", "[rng]")
{
    CounterRng rng(2026);
    const int n = 200000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
        sumsq += u * u;
    }
    CHECK(sum / n == Catch::Approx(0.5).margin(0.005));
    CHECK(sumsq / n == Catch::Approx(1.0 / 3.0).margin(0.005));

    double nsum = 0.0, nsumsq = 0.0;
    for (int i = 0; i < n / 2; ++i) {
        const auto [x, y] = rng.normal_pair();
        nsum += x + y;
        nsumsq += x * x + y * y;
    }
    CHECK(nsum / n == Catch::Approx(0.0).margin(0.01));
    CHECK(nsumsq / n == Catch::Approx(1.0).margin(0.02));

    double var = 0.0;
    for (int i = 0; i < n / 2; ++i)
        var += std::norm(rng.complex_normal(3.0));
    CHECK(var / (n / 2) == Catch::Approx(3.0).margin(0.05));
}

TEST_CASE("scene validation", "[simulate]")
{
    SourceScene ok{{0.1, 0.4}, {1.0, 2.0}, {}, SourceModel::gaussian};
    REQUIRE_NOTHROW(ok.validate());

    SourceScene empty{{}, {}, {}, SourceModel::gaussian};
    CHECK_THROWS_AS(empty.validate(), DomainError);

    SourceScene badtheta{{0.1, 1.0}, {1.0, 1.0}, {}, SourceModel::gaussian};
    CHECK_THROWS_AS(badtheta.validate(), DomainError);

    SourceScene badpower{{0.1, 0.2}, {1.0, 0.0}, {}, SourceModel::gaussian};
    CHECK_THROWS_AS(badpower.validate(), DomainError);

    SourceScene badpair{{0.1, 0.2}, {1.0, 1.0}, {{2, 0}}, SourceModel::gaussian};
    CHECK_THROWS_AS(badpair.validate(), DomainError);

    SourceScene selfpair{{0.1, 0.2}, {1.0, 1.0}, {{1, 1}}, SourceModel::gaussian};
    CHECK_THROWS_AS(selfpair.validate(), DomainError);

    // Chains (replica of a replica) are rejected.
    SourceScene chain{{0.1, 0.2, 0.3}, {1.0, 1.0, 1.0}, {{1, 0}, {2, 1}}, SourceModel::gaussian};
    CHECK_THROWS_AS(chain.validate(), DomainError);
}

TEST_CASE("constant-modulus waveforms have exact magnitude", "[simulate]")
{
    SourceScene scene{{0.1014, 0.1532, 0.5077}, {5.0, 5.0, 1.0}, {}, SourceModel::constant_modulus};
    const auto s = generate_sources(scene, 64, 99);
    REQUIRE(s.rows() == 3);
    REQUIRE(s.cols() == 64);
    for (int j = 0; j < 3; ++j)
        for (int t = 0; t < 64; ++t)
            CHECK(std::abs(s(j, t)) ==
                  Catch::Approx(std::sqrt(scene.powers[static_cast<std::size_t>(j)])).margin(1e-12));
}

TEST_CASE("coherent replicas share the base waveform exactly", "[simulate]")
{
    SourceScene scene{{0.1, 0.3, 0.6}, {4.0, 2.0, 1.0}, {{2, 0}}, SourceModel::gaussian};
    const auto s = generate_sources(scene, 32, 5);
    const double scale = std::sqrt(1.0 / 4.0);
    for (int t = 0; t < 32; ++t)
        CHECK(std::abs(s(2, t) - scale * s(0, t)) < 1e-15);
}

TEST_CASE("snapshots are bitwise deterministic in the seed", "[simulate]")
{
    SourceScene scene{{0.2, 0.7}, {1.0, 3.0}, {}, SourceModel::gaussian};
    const ArrayGeometry geom({1, 2, 5, 7});
    const auto noise = NoiseSpec::equal(0.5);
    const auto y1 = generate_snapshots(scene, geom, noise, 50, 4242);
    const auto y2 = generate_snapshots(scene, geom, noise, 50, 4242);
    const auto y3 = generate_snapshots(scene, geom, noise, 50, 4243);
    REQUIRE(y1.rows() == 4);
    REQUIRE(y1.cols() == 50);
    CHECK(y1 == y2); // exact, not approximate
    CHECK(y1 != y3);
}

TEST_CASE("sample covariance matches the entrywise oracle", "[simulate]")
{
    SourceScene scene{{0.15, 0.45}, {2.0, 1.0}, {}, SourceModel::constant_modulus};
    const ArrayGeometry geom = ArrayGeometry::ula(5);
    const auto y = generate_snapshots(scene, geom, NoiseSpec::equal(1.0), 17, 7);
    const auto r = sample_covariance(y);

    REQUIRE(r.rows() == 5);
    REQUIRE(r.cols() == 5);
    for (int j = 0; j < 5; ++j)
        for (int l = 0; l < 5; ++l) {
            std::complex<double> acc = 0.0;
            for (int t = 0; t < 17; ++t)
                acc += y(j, t) * std::conj(y(l, t));
            CHECK(std::abs(r(j, l) - acc / 17.0) < 1e-12);
        }
    CHECK((r - r.adjoint()).norm() == 0.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(r);
    CHECK(es.eigenvalues().minCoeff() > -1e-12 * es.eigenvalues().maxCoeff());
}

TEST_CASE("true covariance matches the entrywise oracle and is Toeplitz on ULAs", "[simulate]")
{
    SourceScene scene{{0.1, 0.35, 0.8}, {1.0, 2.0, 0.5}, {}, SourceModel::gaussian};
    const ArrayGeometry geom({1, 2, 5, 7});
    Eigen::VectorXd vars(4);
    vars << 0.1, 0.2, 0.3, 0.4;
    const auto r = true_covariance(scene, geom, NoiseSpec::per_sensor(vars));

    for (int j = 0; j < 4; ++j)
        for (int l = 0; l < 4; ++l) {
            std::complex<double> want = j == l ? vars(j) : 0.0;
            for (int k = 0; k < 3; ++k) {
                const double d = 2.0 * std::numbers::pi *
                                 (geom.omega()[static_cast<std::size_t>(j)] -
                                  geom.omega()[static_cast<std::size_t>(l)]) *
                                 scene.thetas[static_cast<std::size_t>(k)];
                want += scene.powers[static_cast<std::size_t>(k)] * std::complex<double>(std::cos(d), std::sin(d));
            }
            CHECK(std::abs(r(j, l) - want) < 1e-12);
        }

    const auto rula = true_covariance(scene, ArrayGeometry::ula(6), NoiseSpec::equal(0.7));
    for (int j = 0; j < 5; ++j)
        for (int l = 0; l < 5; ++l)
            CHECK(std::abs(rula(j, l) - rula(j + 1, l + 1)) < 1e-12);

    SourceScene coherent{{0.1, 0.2}, {1.0, 1.0}, {{1, 0}}, SourceModel::gaussian};
    CHECK_THROWS_AS(true_covariance(coherent, geom, NoiseSpec::equal(1.0)), UnsupportedError);
}

TEST_CASE("sample covariance approaches the true covariance", "[simulate][slow]")
{
    SourceScene scene{{0.2, 0.55}, {1.0, 2.0}, {}, SourceModel::gaussian};
    const ArrayGeometry geom = ArrayGeometry::ula(4);
    const auto noise = NoiseSpec::equal(0.5);
    const auto y = generate_snapshots(scene, geom, noise, 100000, 31415);
    const auto rt = sample_covariance(y);
    const auto r0 = true_covariance(scene, geom, noise);
    CHECK((rt - r0).norm() / r0.norm() < 0.05);
}

TEST_CASE("noise variance from SNR definition", "[simulate]")
{
    CHECK(snr_to_sigma({5.0, 5.0, 1.0}, 10.0) == Catch::Approx(0.1));
    CHECK(snr_to_sigma({5.0, 6.0}, -20.0) == Catch::Approx(500.0));
    CHECK(snr_to_sigma({1.0}, 0.0) == Catch::Approx(1.0));
    CHECK_THROWS_AS(snr_to_sigma({}, 0.0), DomainError);
    CHECK_THROWS_AS(snr_to_sigma({-1.0}, 0.0), DomainError);
}

TEST_CASE("per-sensor noise must match the array size", "[simulate]")
{
    SourceScene scene{{0.2}, {1.0}, {}, SourceModel::gaussian};
    Eigen::VectorXd vars(3);
    vars << 0.1, 0.2, 0.3;
    CHECK_THROWS_AS(generate_snapshots(scene, ArrayGeometry::ula(4), NoiseSpec::per_sensor(vars), 8, 1),
                    DomainError);
    CHECK_THROWS_AS(NoiseSpec::equal(-0.5), DomainError);
}
