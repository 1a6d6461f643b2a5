#pragma once

#include <stdexcept>
#include <string>

namespace bicsim {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Bad input data: malformed scenario files, invalid parameters, broken invariants.
class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& what) : Error(what) {}
};

/// A numerical procedure failed: singular system, divergence, non-convergence.
class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& what) : Error(what) {}
};

/// A controller state left its prescribed interval by more than the clamp tolerance.
class BoundViolationError : public Error {
public:
    explicit BoundViolationError(const std::string& what) : Error(what) {}
};

/// A controller consumed data it is not entitled to (non-neighbor message).
class ProtocolViolationError : public Error {
public:
    explicit ProtocolViolationError(const std::string& what) : Error(what) {}
};

} // namespace bicsim
