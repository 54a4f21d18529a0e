#pragma once

#include <stdexcept>
#include <string>

namespace palpation {

/// Base for every error raised by the library. The CLI maps subclasses onto
/// process exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
public:
    using Error::Error;
};

class DegenerateGeometry : public Error {
public:
    using Error::Error;
};

/// Covariance factorization failed even after jitter escalation.
class NumericalConditioning : public Error {
public:
    using Error::Error;
};

class DegenerateSet : public Error {
public:
    using Error::Error;
};

class InsufficientData : public Error {
public:
    using Error::Error;
};

/// The probe ray did not hit the phantom surface.
class OutOfWorkspace : public Error {
public:
    using Error::Error;
};

/// Every candidate grid location has already been probed.
class ExplorationExhausted : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace palpation
