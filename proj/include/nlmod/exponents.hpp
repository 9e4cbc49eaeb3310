#pragma once

// Weak-noise error-cost exponents: the converse exponent E_U, the achievable
// exponent E_L of the quantize-and-lattice-code scheme, the lattice error
// exponents they are built from, and evaluable finite-n bound expressions.
// All rates and exponents are in nats.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <string>

#include "nlmod/cost.hpp"
#include "nlmod/error.hpp"
#include "nlmod/special.hpp"

namespace nlmod {

/// A point (lambda, gamma, alpha) of the trade-off space.
struct TradeoffParams {
    double lambda = 0.0;  ///< outage exponent, nats per channel use
    double gamma = 1.0;   ///< SNR P / sigma^2
    double alpha = 2.0;   ///< power of the error cost function

    void validate() const {
        if (!std::isfinite(lambda) || lambda < 0.0)
            throw DomainError("lambda must be finite and >= 0, got " + std::to_string(lambda));
        if (!std::isfinite(gamma) || gamma <= 0.0)
            throw DomainError("gamma must be finite and > 0, got " + std::to_string(gamma));
        if (!std::isfinite(alpha) || alpha < 1.0)
            throw DomainError("alpha must be finite and >= 1, got " + std::to_string(alpha));
    }
};

/// lambda at which w(lambda) = 1; the upper end of the range where E_L meets E_U.
inline constexpr double kTightLambdaMax = 0.5 * (1.0 - std::numbers::ln2);

/// Solves theta - ln(1 + theta) = 2 lambda for theta >= 0.
///
/// g(theta) = theta - ln(1+theta) is strictly increasing on theta > 0 with
/// g(0) = 0, so the root is unique. A bisection bracket seeded at
/// 2 lambda + 2 sqrt(lambda) is narrowed and then polished by Newton steps.
inline double solve_w(double lambda) {
    if (!std::isfinite(lambda) || lambda < 0.0)
        throw DomainError("solve_w: lambda must be finite and >= 0, got " + std::to_string(lambda));
    if (lambda == 0.0) return 0.0;

    const double target = 2.0 * lambda;
    auto g = [target](double t) { return t - std::log1p(t) - target; };

    double lo = 0.0;
    double hi = target + 2.0 * std::sqrt(lambda);
    while (g(hi) < 0.0) {
        lo = hi;
        hi *= 2.0;
    }
    for (int i = 0; i < 200 && hi - lo > 1e-6 * (1.0 + hi); ++i) {
        const double mid = 0.5 * (lo + hi);
        (g(mid) < 0.0 ? lo : hi) = mid;
    }

    double t = 0.5 * (lo + hi);
    for (int i = 0; i < 50; ++i) {
        const double r = g(t);
        if (std::fabs(r) <= 1e-15 * (1.0 + target)) break;
        double next = t - r * (1.0 + t) / t;  // g'(t) = t / (1 + t)
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        (r < 0.0 ? lo : hi) = t;
        if (next == t) break;
        t = next;
    }
    return t;
}

/// Converse-side rate R(lambda, gamma) = 1/2 ln(gamma / (1 + w(lambda))). May be negative.
inline double rate_converse(const TradeoffParams& p) {
    p.validate();
    return 0.5 * std::log(p.gamma / (1.0 + solve_w(p.lambda)));
}

/// An exponent value together with the rate it was derived from.
///
/// A non-positive rate yields value 0 with `nonpositive_rate` set instead of
/// an error, so trade-off curves stay defined across the whole lambda range.
struct ExponentValue {
    double value = 0.0;
    double rate = 0.0;
    bool nonpositive_rate = false;
};

inline ExponentValue exponent_from_rate(double rate, double alpha) {
    if (!(rate > 0.0)) return {0.0, rate, true};
    return {PowerCost(alpha).zeta(rate), rate, false};
}

/// Upper (converse) weak-noise error-cost exponent zeta(R(lambda, gamma)).
inline ExponentValue exponent_upper(const TradeoffParams& p) {
    return exponent_from_rate(rate_converse(p), p.alpha);
}

namespace detail {
inline void require_finite(double x, const char* what) {
    if (!std::isfinite(x)) throw DomainError(std::string(what) + ": argument must be finite");
}
}  // namespace detail

/// Random-coding error exponent of lattice codes as a function of mu / (2 pi e).
inline double random_coding_exp(double x) {
    detail::require_finite(x, "random_coding_exp");
    if (x <= 1.0) return 0.0;
    if (x <= 2.0) return 0.5 * (x - std::log(x) - 1.0);
    return 0.5 * (1.0 + std::log(x / 4.0));
}

/// Expurgated error exponent of lattice codes as a function of mu / (2 pi e).
inline double expurgated_exp(double x) {
    detail::require_finite(x, "expurgated_exp");
    if (x <= 4.0 / std::numbers::e) return 0.0;
    if (x <= 4.0) return 0.5 * (1.0 + std::log(x / 4.0));
    return x / 8.0;
}

/// Poltyrev exponent: the larger of the random-coding and expurgated exponents.
inline double poltyrev_exp(double x) {
    return std::fmax(random_coding_exp(x), expurgated_exp(x));
}

/// Inverse of poltyrev_exp on x > 1, solved analytically per branch.
inline double poltyrev_inv(double lambda) {
    if (!std::isfinite(lambda) || lambda <= 0.0)
        throw DomainError("poltyrev_inv: lambda must be finite and > 0, got " + std::to_string(lambda));
    if (lambda <= kTightLambdaMax) return 1.0 + solve_w(lambda);
    if (lambda <= 0.5) return 4.0 * std::exp(2.0 * lambda - 1.0);
    return 8.0 * lambda;
}

/// Rate 1/2 ln gamma - 1/2 ln E_P^{-1}(lambda) at which a lattice code meets the outage exponent.
inline double rate_achievable(const TradeoffParams& p) {
    p.validate();
    return 0.5 * std::log(p.gamma) - 0.5 * std::log(poltyrev_inv(p.lambda));
}

/// Achievable weak-noise error-cost exponent of the quantize-and-code scheme.
inline ExponentValue exponent_lower(const TradeoffParams& p) {
    return exponent_from_rate(rate_achievable(p), p.alpha);
}

/// Everything the exponent formulas produce at one (lambda, gamma, alpha).
struct ExponentCurvePoint {
    double lambda = 0.0;
    double w = 0.0;
    double rate_converse = 0.0;
    double e_upper = 0.0;
    double e_lower = 0.0;
    double rate_achievable = 0.0;
    bool upper_flagged = false;
    bool lower_flagged = false;
};

/// Evaluates the full curve point. E_L needs lambda > 0; at lambda = 0 the
/// achievable side uses the zero-exponent limit E_P^{-1}(0+) = 1.
inline ExponentCurvePoint curve_point(const TradeoffParams& p) {
    p.validate();
    ExponentCurvePoint pt;
    pt.lambda = p.lambda;
    pt.w = solve_w(p.lambda);
    const auto up = exponent_upper(p);
    pt.rate_converse = up.rate;
    pt.e_upper = up.value;
    pt.upper_flagged = up.nonpositive_rate;
    const double ra = p.lambda > 0.0 ? rate_achievable(p) : 0.5 * std::log(p.gamma);
    const auto lo = exponent_from_rate(ra, p.alpha);
    pt.rate_achievable = ra;
    pt.e_lower = lo.value;
    pt.lower_flagged = lo.nonpositive_rate;
    return pt;
}

/// P(||Z||^2 > n sigma^2 (1 + theta)) for Z ~ N(0, sigma^2 I_n), natural log.
inline double log_sphere_outage_prob(int n, double theta) {
    if (n < 1) throw DomainError("sphere_outage_prob: n must be >= 1, got " + std::to_string(n));
    if (!std::isfinite(theta) || theta < -1.0)
        throw DomainError("sphere_outage_prob: theta must be finite and >= -1");
    return log_chi_square_tail(n, n * (1.0 + theta));
}

/// Probability that Gaussian noise leaves the sphere of radius sigma sqrt(n (1 + theta)).
inline double sphere_outage_prob(int n, double theta) {
    return std::exp(log_sphere_outage_prob(n, theta));
}

/// Natural log of the converse bound 2 rho(1/2M) (Q(L / 2 sigma M) - e^{-lambda n}),
/// with M given through ln M so that exponentially large budgets stay finite.
/// Returns -inf when the bracket is non-positive (the clamped case).
inline double log_converse_bound(double log_m, double log_l, double sigma, double lambda, int n,
                                 double alpha) {
    if (!(sigma > 0.0)) throw DomainError("converse_bound: sigma must be > 0");
    if (n < 1) throw DomainError("converse_bound: n must be >= 1");
    if (log_m < 0.0) throw DomainError("converse_bound: M must be >= 1");
    const double arg = std::exp(log_l - std::log(2.0 * sigma) - log_m);
    const double bracket = q_function(arg) - std::exp(-lambda * n);
    if (!(bracket > 0.0)) return -std::numeric_limits<double>::infinity();
    return std::log(2.0) - alpha * (std::log(2.0) + log_m) + std::log(bracket);
}

/// ln M for the M = ceil(L / (2 sigma s)) choice; exact ceiling while representable.
inline double log_m_for_spacing(double log_l, double sigma, double s) {
    if (!(s > 0.0)) throw DomainError("converse_bound: s must be > 0");
    const double log_ratio = log_l - std::log(2.0 * sigma * s);
    if (log_ratio < std::log(9007199254740992.0)) {
        const double ratio = std::exp(log_ratio);
        // exp(log(.)) drifts by an ulp or two; do not let that bump an exact integer up
        const double near = std::round(ratio);
        const double m = std::fabs(ratio - near) <= 1e-12 * std::fmax(1.0, ratio) ? near : std::ceil(ratio);
        return std::log(std::fmax(m, 1.0));
    }
    return log_ratio;
}

/// Converse bound max(0, 2 (1/2M)^alpha (Q(L/(2 sigma M)) - e^{-lambda n})).
/// With s_opt, M is replaced by ceil(L / (2 sigma s_opt)).
inline double converse_bound(std::uint64_t m, double l, double sigma, double lambda, int n, double alpha,
                             std::optional<double> s_opt = std::nullopt) {
    if (m < 1) throw DomainError("converse_bound: M must be >= 1");
    if (l < 0.0) throw DomainError("converse_bound: L must be >= 0");
    const double log_l = l > 0.0 ? std::log(l) : -std::numeric_limits<double>::infinity();
    double log_m = std::log(static_cast<double>(m));
    if (s_opt) log_m = l > 0.0 ? log_m_for_spacing(log_l, sigma, *s_opt) : 0.0;
    return std::exp(log_converse_bound(log_m, log_l, sigma, lambda, n, alpha));
}

/// ln of the locus-length budget L_n* = sigma e^{n R(lambda, gamma)}.
inline double log_locus_length_budget(const TradeoffParams& p, double sigma, int n) {
    if (!(sigma > 0.0)) throw DomainError("locus_length_budget: sigma must be > 0");
    if (n < 1) throw DomainError("locus_length_budget: n must be >= 1");
    return std::log(sigma) + n * rate_converse(p);
}

inline double locus_length_budget(const TradeoffParams& p, double sigma, int n) {
    return std::exp(log_locus_length_budget(p, sigma, n));
}

}  // namespace nlmod
