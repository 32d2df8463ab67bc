#pragma once

#include <stdexcept>
#include <string>

namespace mmq {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid market specification or malformed input data (CLI exit code 2).
class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& what) : Error(what) {}
};

/// Numerical failure: bracketing, factorization, non-finite values (CLI exit code 3).
class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& what) : Error(what) {}
};

/// File or stream I/O failure (CLI exit code 4).
class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(what) {}
};

} // namespace mmq
