/*
 * File formats: snapshot matrices, CSV rows, locale-free numbers
 * Copyright (c) 2026 The gridless-doa authors
 * SPDX-License-Identifier: MIT
 *
 * Snapshot files are plain text for diffability and cross-language
 * parsing: a header line "L N" followed by N lines, one per snapshot,
 * each holding L complex entries written as "re+imj" pairs (the
 * imaginary part always carries an explicit sign). Numbers are written
 * in the shortest form that round-trips a double exactly.
 *
 * CSV output uses %.12g-style rendering through std::to_chars, which is
 * locale-independent by construction (always '.' as the decimal point,
 * no digit grouping), so result tables are byte-stable across
 * environments.
 */

#ifndef GRIDLESS_IO_HPP
#define GRIDLESS_IO_HPP

#include <charconv>
#include <cmath>
#include <complex>
#include <cstddef>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <system_error>
#include <vector>

#include <Eigen/Dense>

#include "gridless/errors.hpp"

namespace gridless {

/// Render a double the way printf("%.12g") would, but locale-free.
inline std::string format_g(double v)
{
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 12);
    return std::string(buf, res.ptr);
}

/// One CSV row: fields joined with ',' and terminated by '\n'. Fields
/// are written verbatim; callers only pass numbers and plain words.
inline void csv_row(std::ostream& out, const std::vector<std::string>& fields)
{
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i > 0)
            out << ',';
        out << fields[i];
    }
    out << '\n';
}

namespace detail {

/// Shortest exact decimal form of a double (to_chars round-trip).
inline void append_double(std::string& s, double v)
{
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    s.append(buf, res.ptr);
}

/// Parse a double, allowing one explicit leading '+' (std::from_chars
/// itself rejects it). Returns the position after the number, or
/// `first` on failure.
inline const char* parse_double(const char* first, const char* last, double& value)
{
    const char* p = first;
    if (p < last && *p == '+')
        ++p;
    const auto res = std::from_chars(p, last, value);
    if (res.ec != std::errc{} || res.ptr == p)
        return first;
    return res.ptr;
}

} // namespace detail

/// Write an L x N snapshot matrix as "L N" plus one line per snapshot.
inline void write_snapshots(std::ostream& out, const Eigen::MatrixXcd& y)
{
    const Eigen::Index l = y.rows();
    const Eigen::Index n = y.cols();
    if (l < 1 || n < 1)
        throw DomainError("snapshots: matrix must be non-empty");
    if (!y.allFinite())
        throw DomainError("snapshots: entries must be finite");
    out << l << ' ' << n << '\n';
    std::string line;
    for (Eigen::Index t = 0; t < n; ++t) {
        line.clear();
        for (Eigen::Index j = 0; j < l; ++j) {
            if (j > 0)
                line += ' ';
            const std::complex<double> v = y(j, t);
            detail::append_double(line, v.real());
            if (!std::signbit(v.imag()))
                line += '+';
            detail::append_double(line, v.imag());
            line += 'j';
        }
        line += '\n';
        out << line;
    }
    if (!out)
        throw IoError("snapshots: write failed");
}

/// Parse a snapshot file. Errors name the 1-based line (and entry)
/// where parsing stopped.
inline Eigen::MatrixXcd read_snapshots(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line))
        throw ParseError("snapshots: line 1: empty input, expected header \"L N\"");

    const auto header_error = [&] {
        return ParseError("snapshots: line 1: expected header \"L N\" with two positive "
                          "integers, got \"" +
                          line + "\"");
    };
    long l = 0;
    long n = 0;
    {
        const char* p = line.data();
        const char* const end = p + line.size();
        while (p < end && *p == ' ')
            ++p;
        auto res = std::from_chars(p, end, l);
        if (res.ec != std::errc{})
            throw header_error();
        p = res.ptr;
        while (p < end && *p == ' ')
            ++p;
        res = std::from_chars(p, end, n);
        if (res.ec != std::errc{})
            throw header_error();
        p = res.ptr;
        while (p < end && (*p == ' ' || *p == '\r'))
            ++p;
        if (p != end)
            throw header_error();
    }
    if (l < 1 || n < 1)
        throw ParseError("snapshots: line 1: sensor and snapshot counts must be >= 1, got \"" +
                         line + "\"");

    Eigen::MatrixXcd y(l, n);
    for (long t = 0; t < n; ++t) {
        const long line_no = t + 2;
        if (!std::getline(in, line))
            throw ParseError("snapshots: line " + std::to_string(line_no) +
                             ": unexpected end of input (header promised " + std::to_string(n) +
                             " snapshot lines)");
        const char* p = line.data();
        const char* const end = p + line.size();
        for (long j = 0; j < l; ++j) {
            while (p < end && (*p == ' ' || *p == '\t'))
                ++p;
            const char* const tok = p;
            while (p < end && *p != ' ' && *p != '\t' && *p != '\r')
                ++p;
            const auto entry_error = [&](const std::string& why) {
                return ParseError("snapshots: line " + std::to_string(line_no) + ", entry " +
                                  std::to_string(j + 1) + ": " + why +
                                  (tok == p ? std::string()
                                            : " in \"" + std::string(tok, p) + "\""));
            };
            if (tok == p)
                throw ParseError("snapshots: line " + std::to_string(line_no) + ": expected " +
                                 std::to_string(l) + " entries, found " + std::to_string(j));
            double re = 0.0;
            double im = 0.0;
            const char* q = detail::parse_double(tok, p, re);
            if (q == tok)
                throw entry_error("expected \"re+imj\"");
            if (q == p || (*q != '+' && *q != '-'))
                throw entry_error("expected a signed imaginary part");
            const char* r = detail::parse_double(q, p, im);
            if (r == q)
                throw entry_error("expected a signed imaginary part");
            if (r == p || *r != 'j' || r + 1 != p)
                throw entry_error("expected trailing \"j\"");
            if (!std::isfinite(re) || !std::isfinite(im))
                throw entry_error("entry is not finite");
            y(j, t) = std::complex<double>(re, im);
        }
        while (p < end && (*p == ' ' || *p == '\t' || *p == '\r'))
            ++p;
        if (p != end)
            throw ParseError("snapshots: line " + std::to_string(line_no) + ": expected " +
                             std::to_string(l) + " entries, found extra data \"" +
                             std::string(p, end) + "\"");
    }
    for (long extra = n + 2; std::getline(in, line); ++extra) {
        for (char c : line)
            if (c != ' ' && c != '\t' && c != '\r')
                throw ParseError("snapshots: line " + std::to_string(extra) +
                                 ": unexpected trailing data after " + std::to_string(n) +
                                 " snapshot lines");
    }
    return y;
}

inline void write_snapshots_file(const std::string& path, const Eigen::MatrixXcd& y)
{
    std::ofstream out(path);
    if (!out)
        throw IoError("snapshots: cannot open '" + path + "' for writing");
    write_snapshots(out, y);
}

inline Eigen::MatrixXcd read_snapshots_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("snapshots: cannot open '" + path + "' for reading");
    return read_snapshots(in);
}

} // namespace gridless

#endif // GRIDLESS_IO_HPP
