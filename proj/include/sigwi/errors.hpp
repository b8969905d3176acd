#ifndef SIGWI_ERRORS_HPP
#define SIGWI_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace sigwi {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Vector/mask/model dimensionalities disagree.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// An all-zero feature mask reached an operation that needs >= 1 feature.
class InvalidMaskError : public Error {
public:
    using Error::Error;
};

/// Invalid run parameters or dataset too small for the requested protocol.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A pairing/split protocol invariant was violated (e.g. overlapping writer sets).
class ProtocolError : public Error {
public:
    using Error::Error;
};

class TrainingError : public Error {
public:
    using Error::Error;
};

/// Solver failed to reach the KKT tolerance, or converged to degenerate geometry.
class ConvergenceError : public TrainingError {
public:
    using TrainingError::TrainingError;
};

class MetricError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

} // namespace sigwi

#endif
