#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace vpstab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A function was evaluated outside its mathematical domain (e.g. the
/// unsoftened kernel at the origin, or an envelope past its horizon).
class DomainError : public Error {
public:
    using Error::Error;
};

/// A documented precondition on the inputs does not hold.
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// Exact transport solver refused an instance above its size cap.
class SizeError : public Error {
public:
    using Error::Error;
};

/// Adaptive quadrature failed to reach the requested accuracy.
class AccuracyError : public Error {
public:
    using Error::Error;
};

/// Malformed or out-of-range configuration value.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A floating-point quantity attached to one particle left the finite range.
class ParticleError : public Error {
public:
    ParticleError(const std::string& what, std::size_t particle, double time)
        : Error(what), particle_(particle), time_(time) {}

    std::size_t particle() const noexcept { return particle_; }
    double time() const noexcept { return time_; }

private:
    std::size_t particle_;
    double time_;
};

/// Non-finite force or state during time stepping.
class NumericalBlowup : public ParticleError {
public:
    using ParticleError::ParticleError;
};

/// Exponential moment overflowed the double range.
class RangeError : public ParticleError {
public:
    using ParticleError::ParticleError;
};

}  // namespace vpstab
