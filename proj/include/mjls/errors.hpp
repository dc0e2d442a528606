#pragma once

#include <stdexcept>
#include <string>

namespace mjls {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Matrix shapes do not agree with each other or with the model.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// A model or input file violates one of its invariants.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// The Markov chain is not regular, so no unique limit distribution exists.
class NotRegularError : public Error {
public:
    using Error::Error;
};

/// Closed loop is not mean-square stable (spectral radius of M at least one).
class NotStableError : public Error {
public:
    NotStableError(const std::string& what, double rho) : Error(what), rho_(rho) {}
    double spectral_radius() const noexcept { return rho_; }

private:
    double rho_;
};

class NoConvergenceError : public Error {
public:
    using Error::Error;
};

/// No restart of the gain iteration produced a certified-stable closed loop.
class NoStabilizingGainFound : public Error {
public:
    using Error::Error;
};

/// The mode-observed coupled Riccati recursion diverged or its fixed point does not stabilize.
class NotStabilizableError : public Error {
public:
    using Error::Error;
};

} // namespace mjls
