#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace gpcmom {

/// Numeric failure during a computation (solver breakdown, singular term, ...).
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// An enumeration or allocation would exceed a configured size guard.
struct CapacityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A forward model could not be evaluated; carries the offending input point.
struct ModelEvaluationError : std::runtime_error {
    std::vector<double> point;
    ModelEvaluationError(const std::string& what, std::vector<double> at)
        : std::runtime_error(what), point(std::move(at)) {}
};

/// The simulated system never reached the sought event within the horizon.
struct TimeoutError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A density fit did not converge; carries the last moment residuals.
struct FitError : std::runtime_error {
    std::vector<double> residuals;
    FitError(const std::string& what, std::vector<double> res)
        : std::runtime_error(what), residuals(std::move(res)) {}
};

/// A cache or artifact does not match the configuration it is used with.
struct IncompatibilityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace gpcmom
