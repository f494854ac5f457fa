#pragma once

#include <stdexcept>
#include <string>

namespace liegdt {

/// Base class for every recoverable failure raised by the library.
/// `code()` is the stable machine-readable identifier used in JSON output.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& what)
        : std::runtime_error(what), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

/// Input outside an operation's domain (non-finite entries, not a rotation, ...).
class DomainError : public Error {
public:
    explicit DomainError(const std::string& what) : Error("domain_error", what) {}
};

/// Matrix exponential argument beyond the supported norm bound.
class RangeError : public Error {
public:
    explicit RangeError(const std::string& what) : Error("range_error", what) {}
};

class SingularMatrix : public Error {
public:
    explicit SingularMatrix(const std::string& what) : Error("singular_matrix", what) {}
};

/// The Riemannian-log solver did not reach its tolerance.
class NoConvergence : public Error {
public:
    NoConvergence(const std::string& what, int iterations, double residual)
        : Error("no_convergence", what), iterations_(iterations), residual_(residual) {}

    int iterations() const noexcept { return iterations_; }
    double residual() const noexcept { return residual_; }

private:
    int iterations_;
    double residual_;
};

/// Projection onto SO(3) is not unique for this input.
class DegenerateProjection : public Error {
public:
    explicit DegenerateProjection(const std::string& what)
        : Error("degenerate_projection", what) {}
};

class IllConditioned : public Error {
public:
    explicit IllConditioned(const std::string& what) : Error("ill_conditioned", what) {}
};

}  // namespace liegdt
