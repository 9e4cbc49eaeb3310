#pragma once

#include <stdexcept>
#include <string>

namespace nlmod {

/// Argument outside the domain of a formula (negative λ, non-finite input, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A lattice enumeration would exceed the configured point cap.
class ResourceError : public std::runtime_error {
public:
    ResourceError(const std::string& what, double estimated_count)
        : std::runtime_error(what), estimated_count_(estimated_count) {}

    double estimated_count() const noexcept { return estimated_count_; }

private:
    double estimated_count_;
};

/// A requested configuration cannot be realized (codebook too large, M < 2, ...).
class InfeasibleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace nlmod
