// errors.hpp — Exception types carrying the numerical context of a failure

#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace resodyn {

// z landed on (or too close to) the spectrum of a reduced operator.
struct SingularResolventError : std::runtime_error {
    double nearest_eigenvalue;
    SingularResolventError(const std::string& msg, double nearest)
        : std::runtime_error(msg), nearest_eigenvalue(nearest) {}
};

// The Q-complement block of a Feshbach map is not invertible at working precision.
struct SingularBlockError : std::runtime_error {
    double condition_estimate;
    SingularBlockError(const std::string& msg, double cond)
        : std::runtime_error(msg), condition_estimate(cond) {}
};

// An eps -> 0 boundary sequence failed the Cauchy (decreasing increments) test.
struct BoundaryLimitError : std::runtime_error {
    std::vector<double> increments;
    BoundaryLimitError(const std::string& msg, std::vector<double> incr)
        : std::runtime_error(msg), increments(std::move(incr)) {}
};

// Eigenvalue matching across a continuation step was ambiguous.
struct PairingError : std::runtime_error {
    std::vector<std::complex<double>> candidates;
    PairingError(const std::string& msg, std::vector<std::complex<double>> cands)
        : std::runtime_error(msg), candidates(std::move(cands)) {}
};

// Scenario file violates the schema; `path` names the offending field.
struct SchemaError : std::runtime_error {
    std::string path;
    SchemaError(const std::string& field_path, const std::string& msg)
        : std::runtime_error(field_path + ": " + msg), path(field_path) {}
};

} // namespace resodyn
