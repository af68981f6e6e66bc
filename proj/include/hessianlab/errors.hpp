#pragma once

#include <array>
#include <stdexcept>
#include <string>

namespace hessianlab {

// Base class for all library errors. Subclasses distinguish failure kinds so
// callers (tests, CLI exit codes) can react without string matching.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ArgumentError : Error {
    using Error::Error;
};

struct ValidationError : Error {
    using Error::Error;
};

struct ConfigurationError : Error {
    using Error::Error;
};

struct StencilError : Error {
    using Error::Error;
};

struct ParseError : Error {
    using Error::Error;
};

struct EvaluationError : Error {
    using Error::Error;
};

// Discrete Hessian left the admissible cone; carries the offending grid point.
struct ConeError : Error {
    std::array<int, 6> index{};
    double margin = 0.0;
    ConeError(const std::string& msg, std::array<int, 6> idx, double mrg)
        : Error(msg), index(idx), margin(mrg) {}
};

struct InitializationError : Error {
    using Error::Error;
};

struct ConvergenceError : Error {
    double residual_max = 0.0;
    int iterations = 0;
    ConvergenceError(const std::string& msg, double res, int iters)
        : Error(msg), residual_max(res), iterations(iters) {}
};

struct GluingInfeasibleError : Error {
    double worst_margin = 0.0;
    GluingInfeasibleError(const std::string& msg, double worst)
        : Error(msg), worst_margin(worst) {}
};

struct ModificationError : Error {
    std::string bullet;
    std::array<int, 6> index{};
    ModificationError(const std::string& msg, std::string which, std::array<int, 6> idx)
        : Error(msg), bullet(std::move(which)), index(idx) {}
};

struct CoverError : Error {
    using Error::Error;
};

}  // namespace hessianlab
