#pragma once

#include <cmath>
#include <string>

#include "nlmod/error.hpp"

namespace nlmod {

/// Power-law error cost function rho(t) = |t|^alpha, alpha >= 1.
///
/// For this family the weak-noise exponent map is linear: a cost of
/// rho(exp(-n c)) decays as exp(-n * zeta(c)) with zeta(c) = alpha * c.
class PowerCost {
public:
    explicit PowerCost(double alpha = 2.0) : alpha_(alpha) {
        if (!std::isfinite(alpha) || alpha < 1.0)
            throw DomainError("PowerCost: alpha must be finite and >= 1, got " + std::to_string(alpha));
    }

    double alpha() const noexcept { return alpha_; }

    double rho(double t) const noexcept {
        const double a = std::fabs(t);
        if (alpha_ == 1.0) return a;
        if (alpha_ == 2.0) return a * a;
        return std::pow(a, alpha_);
    }

    double zeta(double cexp) const noexcept { return alpha_ * cexp; }

    double operator()(double t) const noexcept { return rho(t); }

private:
    double alpha_;
};

inline double rho(const PowerCost& c, double t) noexcept { return c.rho(t); }
inline double zeta(const PowerCost& c, double cexp) noexcept { return c.zeta(cexp); }

}  // namespace nlmod
