#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace deconv {

/// Malformed input file. Carries the 1-based line number of the offending row.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t line)
        : std::runtime_error(what + " (line " + std::to_string(line) + ")"), line_(line) {}

    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

/// Structurally unusable data: empty matrix after filtering, degenerate
/// normalization, duplicate cells, single-class labels.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical failure: non-converged SVD, divergent feedback series.
/// best_residual is meaningful only for convergence failures.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what, double best_residual = 0.0)
        : std::runtime_error(what), best_residual_(best_residual) {}

    double best_residual() const { return best_residual_; }

private:
    double best_residual_;
};

}  // namespace deconv
