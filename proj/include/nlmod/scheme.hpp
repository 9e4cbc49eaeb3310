#pragma once

// Quantize-and-lattice-code modulation of a scalar parameter u in [0, 1]:
// u is quantized to one of M bins, the bin index selects a codeword, and the
// receiver decodes the codeword and reports the bin midpoint.

#include <cmath>
#include <concepts>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "nlmod/error.hpp"
#include "nlmod/lattice.hpp"

namespace nlmod {

struct Quantized {
    std::size_t index = 0;
    double midpoint = 0.0;
};

/// Uniform M-bin quantizer; u = 1 falls in the top bin.
inline Quantized quantize(double u, std::size_t m) {
    if (m < 1) throw DomainError("quantize: M must be >= 1");
    if (!(u >= 0.0 && u <= 1.0)) throw DomainError(fmt::format("quantize: u = {} outside [0, 1]", u));
    const double md = static_cast<double>(m);
    const auto i = std::min(static_cast<std::size_t>(std::floor(u * md)), m - 1);
    return {i, (static_cast<double>(i) + 0.5) / md};
}

/// Which event excuses the estimator.
struct OutageKind {
    enum class Type { DecodeError, SphereRadius };
    Type type = Type::DecodeError;
    double theta = 0.0;  ///< SphereRadius only: outage iff ||z||^2 > n sigma^2 (1 + theta)

    static OutageKind decode_error() { return {Type::DecodeError, 0.0}; }
    static OutageKind sphere(double theta) { return {Type::SphereRadius, theta}; }
};

/// How a decoding error is judged.
///  Codebook:    the receiver picks the nearest codeword.
///  FullLattice: the receiver decodes over the whole lattice, so leaving the
///               transmitted codeword's Voronoi cell is always an error.
enum class DecodeRule { Codebook, FullLattice };

/// The quantize-and-code modulator/estimator pair.
///
/// With pairing, bins 2j and 2j+1 share codeword j, which makes the
/// modulator piecewise constant over pairs of bins; the receiver then picks
/// one of the two bins with a fair coin.
class ModScheme {
public:
    ModScheme(Codebook codebook, bool pairing, OutageKind outage = OutageKind::decode_error(),
              DecodeRule rule = DecodeRule::Codebook, DecodePath path = DecodePath::LatticeFastPath)
        : codebook_(std::make_shared<const Codebook>(std::move(codebook))),
          bins_(pairing ? 2 * codebook_->size() : codebook_->size()),
          pairing_(pairing),
          outage_(outage),
          rule_(rule),
          path_(path) {
        if (outage_.type == OutageKind::Type::SphereRadius && !(outage_.theta >= 0.0))
            throw DomainError("sphere outage radius parameter theta must be >= 0");
    }

    const Codebook& codebook() const noexcept { return *codebook_; }
    std::size_t bins() const noexcept { return bins_; }
    double bin_width() const noexcept { return 1.0 / static_cast<double>(bins_); }
    bool pairing() const noexcept { return pairing_; }
    const OutageKind& outage() const noexcept { return outage_; }
    DecodeRule decode_rule() const noexcept { return rule_; }
    DecodePath decode_path() const noexcept { return path_; }
    int dimension() const noexcept { return codebook_->dimension(); }

    /// Codeword index carrying parameter u.
    std::size_t codeword_index(double u) const {
        const auto q = quantize(u, bins_);
        return pairing_ ? q.index / 2 : q.index;
    }

private:
    std::shared_ptr<const Codebook> codebook_;
    std::size_t bins_;
    bool pairing_;
    OutageKind outage_;
    DecodeRule rule_;
    DecodePath path_;
};

/// Builds the scheme for M quantizer bins (M/2 codewords when pairing).
inline ModScheme make_scheme(const LatticeDef& lat, int n, double power, std::size_t bins, bool pairing,
                             OutageKind outage = OutageKind::decode_error(), DecodeRule rule = DecodeRule::Codebook,
                             std::size_t cap = kDefaultEnumerationCap) {
    if (pairing && bins % 2 != 0) throw InfeasibleError("pairing requires an even number of bins M");
    const std::size_t words = pairing ? bins / 2 : bins;
    return ModScheme(build_codebook(lat, n, power, words, cap), pairing, outage, rule);
}

inline const Vec& modulate(const ModScheme& s, double u) { return s.codebook()[s.codeword_index(u)]; }

/// Receiver's codeword decision for channel output y.
struct Decision {
    std::size_t index = 0;
    bool lattice_error = false;  ///< FullLattice rule: nearest lattice point is not the codeword at `index`
};

inline Decision decide(const ModScheme& s, std::span<const double> y, std::size_t sent) {
    if (s.decode_rule() == DecodeRule::FullLattice) {
        const Codebook& cb = s.codebook();
        Vec u(y.begin(), y.end());
        for (double& v : u) v /= cb.scale();
        const Vec p = nearest_point(cb.lattice(), u);
        if (auto hit = cb.find_unscaled(p)) return {*hit, *hit != sent};
        return {decode_codebook(cb, y, DecodePath::BruteForce), true};
    }
    return {decode_codebook(s.codebook(), y, s.decode_path()), false};
}

template <typename F>
concept BitSource = std::invocable<F&> && std::convertible_to<std::invoke_result_t<F&>, bool>;

/// Parameter estimate for a decoded codeword index.
template <BitSource Coin>
double estimate_from_index(const ModScheme& s, std::size_t decoded, Coin&& coin) {
    const double m = static_cast<double>(s.bins());
    if (!s.pairing()) return (static_cast<double>(decoded) + 0.5) / m;
    const double bit = coin() ? 1.0 : 0.0;
    return (2.0 * static_cast<double>(decoded) + bit + 0.5) / m;
}

/// Decodes y and maps the decoded codeword back to a bin midpoint.
template <BitSource Coin>
double estimate(const ModScheme& s, std::span<const double> y, Coin&& coin) {
    if (static_cast<int>(y.size()) != s.dimension())
        throw DomainError(fmt::format("estimate: expected dimension {}, got {}", s.dimension(), y.size()));
    return estimate_from_index(s, decode_codebook(s.codebook(), y, s.decode_path()), coin);
}

inline double estimate(const ModScheme& s, std::span<const double> y) {
    if (s.pairing()) throw DomainError("estimate: the pairing variant needs a bit source");
    return estimate(s, y, [] { return false; });
}

/// One channel use: outage indicator and (when not in outage) the estimate.
struct TrialOutcome {
    bool outage = false;
    double estimate = 0.0;
};

/// Sends u through y = f(u) + z and applies the scheme's outage rule.
template <BitSource Coin>
TrialOutcome transmit(const ModScheme& s, double u, std::span<const double> z, double sigma, Coin&& coin) {
    const int n = s.dimension();
    if (static_cast<int>(z.size()) != n)
        throw DomainError(fmt::format("transmit: expected noise dimension {}, got {}", n, z.size()));
    const std::size_t sent = s.codeword_index(u);
    if (s.outage().type == OutageKind::Type::SphereRadius) {
        if (detail::norm2(z) > n * sigma * sigma * (1.0 + s.outage().theta)) return {true, 0.0};
    }
    const Vec& x = s.codebook()[sent];
    Vec y(x);
    for (int i = 0; i < n; ++i) y[static_cast<std::size_t>(i)] += z[static_cast<std::size_t>(i)];
    const Decision d = decide(s, y, sent);
    if (s.outage().type == OutageKind::Type::DecodeError && (d.lattice_error || d.index != sent))
        return {true, 0.0};
    return {false, estimate_from_index(s, d.index, coin)};
}

/// Outage indicator for parameter u under noise z.
inline bool is_outage(const ModScheme& s, double u, std::span<const double> z, double sigma) {
    return transmit(s, u, z, sigma, [] { return false; }).outage;
}

/// A general modulator u -> f(u) in R^n, sampled through a callable.
struct ModulatorFn {
    std::function<Vec(double)> map;
    int dimension = 1;
    double power_limit = 1.0;
    std::string continuity = "continuous";

    Vec operator()(double u) const { return map(u); }

    /// True when ||f(u)||^2 <= n P at every point of a uniform (k+1)-point grid.
    bool meets_power(std::size_t k) const {
        const double limit = dimension * power_limit;
        for (std::size_t j = 0; j <= k; ++j) {
            const Vec x = map(static_cast<double>(j) / static_cast<double>(k));
            if (detail::norm2(x) > limit) return false;
        }
        return true;
    }
};

/// The scheme's modulator as a ModulatorFn (piecewise constant, jumps at bin edges).
inline ModulatorFn as_modulator(const ModScheme& s) {
    return {[s](double u) { return modulate(s, u); }, s.dimension(), s.codebook().power_limit(),
            s.pairing() ? "constant over bin pairs" : "piecewise constant"};
}

/// Polyline approximation of the signal-locus length from k+1 uniform samples of f.
inline double locus_length(const ModulatorFn& f, std::size_t k) {
    if (k < 1) throw DomainError("locus_length: k must be >= 1");
    double total = 0.0;
    Vec prev = f(0.0);
    for (std::size_t j = 1; j <= k; ++j) {
        Vec cur = f(static_cast<double>(j) / static_cast<double>(k));
        total += std::sqrt(detail::dist2(prev, cur));
        prev = std::move(cur);
    }
    return total;
}

}  // namespace nlmod
