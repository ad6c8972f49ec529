#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sigma2 {

enum class ErrorKind {
    InvalidArgument,
    InvalidMetric,
    NumericFailure,
    ConeExit,
    Stall,
    NonConvergence,
    ContinuationFailure,
    Unsupported,
    InvalidModel,
    Io,
};

[[nodiscard]] constexpr const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::InvalidArgument: return "invalid-argument";
        case ErrorKind::InvalidMetric: return "invalid-metric";
        case ErrorKind::NumericFailure: return "numeric-failure";
        case ErrorKind::ConeExit: return "cone-exit";
        case ErrorKind::Stall: return "stall";
        case ErrorKind::NonConvergence: return "non-convergence";
        case ErrorKind::ContinuationFailure: return "continuation-failure";
        case ErrorKind::Unsupported: return "unsupported";
        case ErrorKind::InvalidModel: return "invalid-model";
        case ErrorKind::Io: return "io";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Raised when a state leaves the Garding cone; carries (node, margin) pairs.
class ConeExitError : public Error {
public:
    ConeExitError(const std::string& what, std::vector<std::pair<std::size_t, double>> offenders)
        : Error(ErrorKind::ConeExit, what), offenders_(std::move(offenders)) {}

    [[nodiscard]] const std::vector<std::pair<std::size_t, double>>& offenders() const noexcept {
        return offenders_;
    }

private:
    std::vector<std::pair<std::size_t, double>> offenders_;
};

/// Newton failures (stall or iteration cap) keep the last residual and the
/// residual history so callers can report them.
class NewtonError : public Error {
public:
    NewtonError(ErrorKind kind, const std::string& what, int iterations, double last_residual,
                std::vector<double> history)
        : Error(kind, what), iterations_(iterations), last_residual_(last_residual),
          history_(std::move(history)) {}

    [[nodiscard]] int iterations() const noexcept { return iterations_; }
    [[nodiscard]] double last_residual() const noexcept { return last_residual_; }
    [[nodiscard]] const std::vector<double>& history() const noexcept { return history_; }

private:
    int iterations_;
    double last_residual_;
    std::vector<double> history_;
};

}  // namespace sigma2
