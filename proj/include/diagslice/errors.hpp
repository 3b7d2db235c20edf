#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace diagslice {

/// Argument outside the domain of an operation (bad d, r, V, empty input, ...).
class domain_error : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A computed value left the range in which the result object is valid.
class range_error : public std::range_error {
public:
    using std::range_error::range_error;
};

/// Iterative solver failed to meet its tolerance. Carries the last bracket.
class numeric_error : public std::runtime_error {
public:
    numeric_error(const std::string& what, double lo, double hi)
        : std::runtime_error(what), lo_(lo), hi_(hi) {}

    double bracket_lo() const noexcept { return lo_; }
    double bracket_hi() const noexcept { return hi_; }

private:
    double lo_;
    double hi_;
};

/// Stratified sampling could not fill a stratum (too small or starved).
class sampling_error : public std::runtime_error {
public:
    sampling_error(const std::string& what, std::size_t stratum)
        : std::runtime_error(what), stratum_(stratum) {}

    std::size_t stratum() const noexcept { return stratum_; }

private:
    std::size_t stratum_;
};

} // namespace diagslice
