#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace comgreen {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

/// A time (or other argument) lies outside the interval where an object is defined.
class DomainError : public Error {
public:
    using Error::Error;
};

/// The momentum block of a constant-of-motion set is singular, or a kernel is
/// evaluated at a time where its amplitude diverges.
class CausticError : public Error {
public:
    CausticError(const std::string& what, double t) : Error(what), t_(t) {}
    double time() const noexcept { return t_; }

private:
    double t_;
};

class QuadratureError : public Error {
public:
    using Error::Error;
};

/// Small-time matching of a derived kernel against the free kernel failed.
class MatchingError : public Error {
public:
    using Error::Error;
};

class GridError : public Error {
public:
    using Error::Error;
};

class ConvergenceError : public Error {
public:
    using Error::Error;
};

/// Syntax error in the model language, positioned by byte offset.
class ParseError : public Error {
public:
    ParseError(const std::string& message, std::size_t offset)
        : Error(message + " at offset " + std::to_string(offset)), message_(message), offset_(offset) {}
    std::size_t offset() const noexcept { return offset_; }
    const std::string& message() const noexcept { return message_; }

private:
    std::string message_;
    std::size_t offset_;
};

/// Semantic error while lowering an expression to an observable or Hamiltonian.
class LoweringError : public Error {
public:
    using Error::Error;
};

}  // namespace comgreen
