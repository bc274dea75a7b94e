#pragma once

#include <stdexcept>
#include <string>

namespace piezoloc {

/// Root of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid user-supplied configuration (bad spacing, out-of-range parameter, unknown key).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Numeric argument outside the domain of a formula.
class DomainError : public Error {
public:
    using Error::Error;
};

class RangeError : public Error {
public:
    using Error::Error;
};

/// Physical model produced an inadmissible state (e.g. non-positive conductance).
class ModelError : public Error {
public:
    using Error::Error;
};

/// Linear system could not be solved (disconnected network, singular matrix).
class SolverError : public Error {
public:
    using Error::Error;
};

class FitError : public Error {
public:
    using Error::Error;
};

/// Malformed or incompatible file contents.
class LoadError : public Error {
public:
    using Error::Error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

} // namespace piezoloc
