/*
 * Error types
 * Copyright (c) 2026 The gridless-doa authors
 * SPDX-License-Identifier: MIT
 *
 * Small exception hierarchy shared by all modules. Contract violations
 * (bad arguments, out-of-domain values) throw DomainError; file/config
 * problems throw ConfigError or ParseError; numerical breakdowns that
 * carry diagnostics throw NumericalError; model limitations that are
 * documented rather than worked around throw UnsupportedError.
 */

#ifndef GRIDLESS_ERRORS_HPP
#define GRIDLESS_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace gridless {

class Error : public std::runtime_error {
  public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Argument outside its documented domain (e.g. theta not in [0,1)).
class DomainError : public Error {
  public:
    using Error::Error;
};

/// Invalid configuration value; message names the offending field.
class ConfigError : public Error {
  public:
    using Error::Error;
};

/// Malformed data file; message names the offending line/field.
class ParseError : public Error {
  public:
    using Error::Error;
};

/// File could not be opened or written.
class IoError : public Error {
  public:
    using Error::Error;
};

/// Numerical failure (solver breakdown, rank deficiency, retrieval error).
class NumericalError : public Error {
  public:
    using Error::Error;
};

/// Requested computation is outside the supported model class.
class UnsupportedError : public Error {
  public:
    using Error::Error;
};

} // namespace gridless

#endif // GRIDLESS_ERRORS_HPP
