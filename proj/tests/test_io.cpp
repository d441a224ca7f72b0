/*
 * Tests for snapshot file round trips and CSV rendering
 * Copyright (c) 2026 The gridless-doa authors
 * SPDX-License-Identifier: MIT
 */

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <limits>
#include <sstream>
#include <string>

#include <Eigen/Dense>

#include "gridless/errors.hpp"
#include "gridless/io.hpp"
#include "gridless/rng.hpp"

using namespace gridless;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::MessageMatches;

namespace {

Eigen::MatrixXcd random_snapshots(int l, int n, std::uint64_t seed)
{
    CounterRng rng(seed);
    Eigen::MatrixXcd y(l, n);
    for (int t = 0; t < n; ++t)
        for (int j = 0; j < l; ++j)
            y(j, t) = rng.complex_normal(1.0) * std::pow(10.0, 6.0 * (rng.uniform() - 0.5));
    return y;
}

Eigen::MatrixXcd parse(const std::string& text)
{
    std::istringstream in(text);
    return read_snapshots(in);
}

} // namespace

TEST_CASE("snapshot files: write/read round trip is bit-exact")
{
    for (const auto& [l, n, seed] : {std::tuple{1, 1, 11u}, {4, 7, 12u}, {10, 3, 13u}}) {
        const Eigen::MatrixXcd y = random_snapshots(l, n, seed);
        std::stringstream buf;
        write_snapshots(buf, y);
        const Eigen::MatrixXcd back = parse(buf.str());
        REQUIRE(back.rows() == y.rows());
        REQUIRE(back.cols() == y.cols());
        // Shortest round-trip formatting must reproduce every double
        // exactly, not merely approximately.
        REQUIRE(back == y);
    }

    // Signs, zeros, and extreme magnitudes survive.
    Eigen::MatrixXcd y(2, 2);
    y << std::complex<double>(0.0, -0.0), std::complex<double>(-1e-300, 2.5e300),
        std::complex<double>(3.0, -4.0), std::complex<double>(1.0 / 3.0, -1e-17);
    std::stringstream buf;
    write_snapshots(buf, y);
    REQUIRE(parse(buf.str()) == y);
}

TEST_CASE("snapshot files: writer rejects empty or non-finite input")
{
    std::ostringstream out;
    REQUIRE_THROWS_AS(write_snapshots(out, Eigen::MatrixXcd(0, 0)), DomainError);
    Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(2, 2);
    y(1, 1) = std::complex<double>(std::numeric_limits<double>::quiet_NaN(), 0.0);
    REQUIRE_THROWS_AS(write_snapshots(out, y), DomainError);
}

TEST_CASE("snapshot files: parse errors name the line and entry")
{
    REQUIRE_THROWS_MATCHES(parse(""), ParseError, MessageMatches(ContainsSubstring("line 1")));
    REQUIRE_THROWS_MATCHES(parse("3\n"), ParseError,
                           MessageMatches(ContainsSubstring("expected header \"L N\"")));
    REQUIRE_THROWS_MATCHES(parse("2 2 9\n"), ParseError, MessageMatches(ContainsSubstring("line 1")));
    REQUIRE_THROWS_MATCHES(parse("0 5\n"), ParseError, MessageMatches(ContainsSubstring(">= 1")));
    REQUIRE_THROWS_MATCHES(parse("2 -1\n"), ParseError, MessageMatches(ContainsSubstring(">= 1")));

    const std::string header = "2 2\n";
    const std::string good = "1+2j 3-4j\n";

    SECTION("missing snapshot lines")
    {
        REQUIRE_THROWS_MATCHES(parse(header + good), ParseError,
                               MessageMatches(ContainsSubstring("line 3") &&
                                   ContainsSubstring("unexpected end of input")));
    }
    SECTION("short line")
    {
        REQUIRE_THROWS_MATCHES(parse(header + good + "1+2j\n"), ParseError,
                               MessageMatches(ContainsSubstring("line 3") &&
                                   ContainsSubstring("expected 2 entries, found 1")));
    }
    SECTION("extra entry")
    {
        REQUIRE_THROWS_MATCHES(parse(header + "1+2j 3-4j 5+6j\n" + good), ParseError,
                               MessageMatches(ContainsSubstring("line 2") && ContainsSubstring("extra data")));
    }
    SECTION("malformed complex entries")
    {
        REQUIRE_THROWS_MATCHES(parse(header + "1+2k 3-4j\n" + good), ParseError,
                               MessageMatches(ContainsSubstring("line 2, entry 1") &&
                                   ContainsSubstring("trailing \"j\"")));
        REQUIRE_THROWS_MATCHES(parse(header + good + "1+2j 3.5\n"), ParseError,
                               MessageMatches(ContainsSubstring("line 3, entry 2") &&
                                   ContainsSubstring("imaginary part")));
        REQUIRE_THROWS_MATCHES(parse(header + "x+2j 3-4j\n" + good), ParseError,
                               MessageMatches(ContainsSubstring("line 2, entry 1") &&
                                   ContainsSubstring("re+imj")));
        REQUIRE_THROWS_MATCHES(parse(header + "1e+2j 3-4j\n" + good), ParseError,
                               MessageMatches(ContainsSubstring("entry 1")));
    }
    SECTION("non-finite entries rejected")
    {
        REQUIRE_THROWS_MATCHES(parse(header + "nan+2j 3-4j\n" + good), ParseError,
                               MessageMatches(ContainsSubstring("not finite")));
        REQUIRE_THROWS_MATCHES(parse(header + "1+infj 3-4j\n" + good), ParseError,
                               MessageMatches(ContainsSubstring("not finite")));
    }
    SECTION("trailing non-blank data")
    {
        REQUIRE_THROWS_MATCHES(parse(header + good + good + "1+1j 1+1j\n"), ParseError,
                               MessageMatches(ContainsSubstring("line 4") &&
                                   ContainsSubstring("trailing data")));
        // Pure whitespace after the data is tolerated.
        REQUIRE_NOTHROW(parse(header + good + good + "   \n\n"));
    }
    SECTION("scientific notation and tabs parse fine")
    {
        const Eigen::MatrixXcd y = parse(header + "1.5e-3+2E+4j\t-7-8j\n" + good);
        REQUIRE(y(0, 0) == std::complex<double>(1.5e-3, 2e4));
        REQUIRE(y(1, 0) == std::complex<double>(-7.0, -8.0));
    }
}

TEST_CASE("csv rendering: locale-free %.12g-style numbers")
{
    REQUIRE(format_g(0.0) == "0");
    REQUIRE(format_g(1.0) == "1");
    REQUIRE(format_g(0.1) == "0.1");
    REQUIRE(format_g(1.0 / 3.0) == "0.333333333333");
    REQUIRE(format_g(-2.5e-7) == "-2.5e-07");
    REQUIRE(format_g(1.23456789012345e+12) == "1.23456789012e+12");
    REQUIRE(format_g(std::numeric_limits<double>::quiet_NaN()) == "nan");
    REQUIRE(format_g(std::numeric_limits<double>::infinity()) == "inf");

    std::ostringstream out;
    csv_row(out, {"method", "seed", "mse"});
    csv_row(out, {"spa", "7", format_g(0.25)});
    REQUIRE(out.str() == "method,seed,mse\nspa,7,0.25\n");
}
