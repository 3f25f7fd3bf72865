#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace diffinv {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A query point lies outside the meshed domain.
class OutsideDomainError : public Error {
public:
    OutsideDomainError(const std::string& what, std::size_t index)
        : Error(what), index_(index) {}

    // Position of the offending point in the caller's input list.
    std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

// Linear solve or factorisation failure.
class SolveError : public Error {
public:
    using Error::Error;
};

// Eigensolver gave up before all requested pairs converged.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, std::size_t converged)
        : Error(what), converged_(converged) {}

    std::size_t converged() const noexcept { return converged_; }

private:
    std::size_t converged_;
};

}  // namespace diffinv
