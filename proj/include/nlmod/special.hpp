#pragma once

#include <cmath>
#include <limits>
#include <string>

#include "nlmod/error.hpp"

namespace nlmod {

/// Gaussian upper tail Q(s) = P(N(0,1) > s).
inline double q_function(double s) noexcept {
    if (std::isnan(s)) return s;
    return 0.5 * std::erfc(s / std::sqrt(2.0));
}

namespace detail {

// ln of the lower-series sum for P(a,x): x^a e^{-x} / Gamma(a+1) * sum x^k / ((a+1)...(a+k))
inline double log_gamma_p_series(double a, double x) {
    double term = 1.0 / a;
    double sum = term;
    for (int k = 1; k < 100000; ++k) {
        term *= x / (a + k);
        sum += term;
        if (std::fabs(term) < std::fabs(sum) * 1e-17) break;
    }
    return std::log(sum) - x + a * std::log(x) - std::lgamma(a);
}

// ln Q(a,x) from the modified Lentz continued fraction, valid for x > a + 1.
inline double log_gamma_q_cf(double a, double x) {
    constexpr double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 100000; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < 1e-16) break;
    }
    return std::log(h) - x + a * std::log(x) - std::lgamma(a);
}

}  // namespace detail

/// ln of the regularized upper incomplete gamma function Q(a, x) = Gamma(a, x) / Gamma(a).
inline double log_gamma_q(double a, double x) {
    if (!(a > 0.0) || !std::isfinite(a))
        throw DomainError("log_gamma_q: shape must be positive and finite");
    if (std::isnan(x)) throw DomainError("log_gamma_q: x is NaN");
    if (x <= 0.0) return 0.0;
    if (std::isinf(x)) return -std::numeric_limits<double>::infinity();
    if (x < a + 1.0) {
        const double p = std::exp(detail::log_gamma_p_series(a, x));
        return std::log1p(-p);
    }
    return detail::log_gamma_q_cf(a, x);
}

inline double gamma_q(double a, double x) { return std::exp(log_gamma_q(a, x)); }

/// ln P(chi-square with dof degrees of freedom > x).
inline double log_chi_square_tail(int dof, double x) {
    if (dof < 1) throw DomainError("chi-square tail: dof must be >= 1, got " + std::to_string(dof));
    return log_gamma_q(0.5 * dof, 0.5 * x);
}

}  // namespace nlmod
