#pragma once

// Classical lattices (Z^n, D_n, E8), their nearest-point decoders, sphere
// enumeration, and power-constrained codebooks carved out of a scaled lattice.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <fmt/format.h>

#include "nlmod/error.hpp"
#include "nlmod/special.hpp"

namespace nlmod {

using Vec = std::vector<double>;

enum class LatticeKind { ZN, DN, E8 };

inline std::string_view to_string(LatticeKind k) {
    switch (k) {
        case LatticeKind::ZN: return "Z";
        case LatticeKind::DN: return "D";
        case LatticeKind::E8: return "E8";
    }
    return "?";
}

/// A full-rank lattice in R^n. Rows of the generator are basis vectors, so
/// lattice points are a * G for integer row vectors a.
class LatticeDef {
public:
    static LatticeDef zn(int n) {
        check_dim(n, 1);
        LatticeDef l(LatticeKind::ZN, n);
        for (int i = 0; i < n; ++i) l.at(i, i) = 1.0;
        l.volume_ = 1.0;
        return l;
    }

    /// Checkerboard lattice: integer vectors with even coordinate sum.
    static LatticeDef dn(int n) {
        check_dim(n, 2);
        LatticeDef l(LatticeKind::DN, n);
        l.at(0, 0) = 2.0;
        for (int i = 1; i < n; ++i) {
            l.at(i, i - 1) = -1.0;
            l.at(i, i) = 1.0;
        }
        l.volume_ = 2.0;
        return l;
    }

    /// Gosset lattice D8 u (D8 + (1/2)^8), unit covolume.
    static LatticeDef e8() {
        LatticeDef l(LatticeKind::E8, 8);
        l.at(0, 0) = 2.0;
        for (int i = 1; i < 7; ++i) {
            l.at(i, i - 1) = -1.0;
            l.at(i, i) = 1.0;
        }
        for (int j = 0; j < 8; ++j) l.at(7, j) = 0.5;
        l.volume_ = 1.0;
        return l;
    }

    static LatticeDef make(LatticeKind kind, int n) {
        switch (kind) {
            case LatticeKind::ZN: return zn(n);
            case LatticeKind::DN: return dn(n);
            case LatticeKind::E8:
                if (n != 8) throw DomainError("E8 requires dimension 8, got " + std::to_string(n));
                return e8();
        }
        throw DomainError("unknown lattice kind");
    }

    LatticeKind kind() const noexcept { return kind_; }
    int dimension() const noexcept { return n_; }
    std::string name() const {
        return kind_ == LatticeKind::E8 ? "E8" : fmt::format("{}{}", to_string(kind_), n_);
    }
    double generator(int row, int col) const { return gen_[static_cast<std::size_t>(row * n_ + col)]; }
    /// |det G|; the volume of a Voronoi cell.
    double voronoi_volume() const noexcept { return volume_; }

private:
    LatticeDef(LatticeKind kind, int n)
        : kind_(kind), n_(n), gen_(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0) {}

    static void check_dim(int n, int min) {
        if (n < min) throw DomainError("lattice dimension must be >= " + std::to_string(min));
    }
    double& at(int r, int c) { return gen_[static_cast<std::size_t>(r * n_ + c)]; }

    LatticeKind kind_;
    int n_;
    std::vector<double> gen_;
    double volume_ = 1.0;
};

namespace detail {

// Rounds half-integers downward so ties go to the smaller point.
inline double round_half_down(double x) { return std::ceil(x - 0.5); }

inline double dist2(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

inline double norm2(std::span<const double> a) {
    double s = 0.0;
    for (double v : a) s += v * v;
    return s;
}

inline bool closer_or_tie_smaller(std::span<const double> y, const Vec& a, const Vec& b) {
    const double da = dist2(y, a);
    const double db = dist2(y, b);
    if (da != db) return da < db;
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

inline Vec nearest_zn(std::span<const double> y) {
    Vec p(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) p[i] = round_half_down(y[i]);
    return p;
}

inline Vec nearest_dn(std::span<const double> y) {
    Vec f = nearest_zn(y);
    double sum = 0.0;
    for (double v : f) sum += v;
    if (std::fmod(std::fabs(sum), 2.0) == 0.0) return f;
    // Re-round the coordinate with the largest rounding error the other way.
    std::size_t worst = 0;
    double worst_err = -1.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double e = std::fabs(y[i] - f[i]);
        if (e > worst_err) {
            worst_err = e;
            worst = i;
        }
    }
    f[worst] += (y[worst] > f[worst]) ? 1.0 : -1.0;
    return f;
}

inline Vec nearest_e8(std::span<const double> y) {
    Vec even = nearest_dn(y);
    Vec shifted(y.begin(), y.end());
    for (double& v : shifted) v -= 0.5;
    Vec odd = nearest_dn(shifted);
    for (double& v : odd) v += 0.5;
    return closer_or_tie_smaller(y, even, odd) ? even : odd;
}

}  // namespace detail

/// Closest point of the (unscaled) lattice to y.
inline Vec nearest_point(const LatticeDef& lat, std::span<const double> y) {
    if (static_cast<int>(y.size()) != lat.dimension())
        throw DomainError(fmt::format("nearest_point: expected dimension {}, got {}", lat.dimension(), y.size()));
    for (double v : y)
        if (!std::isfinite(v)) throw DomainError("nearest_point: non-finite input");
    switch (lat.kind()) {
        case LatticeKind::ZN: return detail::nearest_zn(y);
        case LatticeKind::DN: return detail::nearest_dn(y);
        case LatticeKind::E8: return detail::nearest_e8(y);
    }
    return {};
}

/// Closest point of the scaled lattice scale * L to y.
inline Vec nearest_point(const LatticeDef& lat, double scale, std::span<const double> y) {
    if (!(scale > 0.0)) throw DomainError("nearest_point: scale must be > 0");
    Vec u(y.begin(), y.end());
    for (double& v : u) v /= scale;
    Vec p = nearest_point(lat, u);
    for (double& v : p) v *= scale;
    return p;
}

/// Normalized volume-to-noise ratio V(scale * L)^{2/n} / sigma^2.
inline double nvnr(const LatticeDef& lat, double scale, double sigma2) {
    if (!(scale > 0.0) || !(sigma2 > 0.0)) throw DomainError("nvnr: scale and sigma2 must be > 0");
    const double n = lat.dimension();
    return scale * scale * std::pow(lat.voronoi_volume(), 2.0 / n) / sigma2;
}

inline constexpr std::size_t kDefaultEnumerationCap = 1'000'000;

/// Volume of the n-ball of the given radius.
inline double ball_volume(int n, double radius) {
    return std::exp(0.5 * n * std::log(std::numbers::pi) - std::lgamma(0.5 * n + 1.0) + n * std::log(radius));
}

/// Gaussian-heuristic estimate of the number of points of scale * L in a ball.
inline double estimate_ball_count(const LatticeDef& lat, double scale, double radius) {
    const int n = lat.dimension();
    return ball_volume(n, radius) / (std::pow(scale, n) * lat.voronoi_volume());
}

namespace detail {

// Orders unscaled lattice points by squared norm, then lexicographically.
inline bool norm_lex_less(const Vec& a, const Vec& b) {
    const double na = norm2(a);
    const double nb = norm2(b);
    if (na != nb) return na < nb;
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

// Fincke-Pohst enumeration of all unscaled points with ||a G||^2 <= r2.
class BallEnumerator {
public:
    BallEnumerator(const LatticeDef& lat, double r2, std::size_t cap)
        : lat_(lat), n_(lat.dimension()), r2_(r2), cap_(cap), coef_(static_cast<std::size_t>(n_ * n_), 0.0),
          diag_(static_cast<std::size_t>(n_), 0.0), a_(static_cast<std::size_t>(n_), 0.0),
          t_(static_cast<std::size_t>(n_), 0.0), center_(static_cast<std::size_t>(n_), 0.0) {
        factor();
    }

    /// Ball of squared radius r2 around an arbitrary (unscaled) centre.
    BallEnumerator(const LatticeDef& lat, double r2, std::size_t cap, std::span<const double> centre)
        : BallEnumerator(lat, r2, cap) {
        center_.assign(centre.begin(), centre.end());
        // centre = t G with G lower triangular for every supported lattice
        for (int j = n_ - 1; j >= 0; --j) {
            double v = center_[static_cast<std::size_t>(j)];
            for (int i = j + 1; i < n_; ++i) v -= t_[static_cast<std::size_t>(i)] * lat_.generator(i, j);
            t_[static_cast<std::size_t>(j)] = v / lat_.generator(j, j);
        }
    }

    std::vector<Vec> run() {
        recurse(n_ - 1, 0.0);
        return std::move(out_);
    }

private:
    void factor() {
        // Gram = G G^T = R^T R with R upper triangular.
        std::vector<double> gram(static_cast<std::size_t>(n_ * n_), 0.0);
        for (int i = 0; i < n_; ++i)
            for (int j = 0; j < n_; ++j) {
                double s = 0.0;
                for (int k = 0; k < n_; ++k) s += lat_.generator(i, k) * lat_.generator(j, k);
                gram[static_cast<std::size_t>(i * n_ + j)] = s;
            }
        std::vector<double> r(static_cast<std::size_t>(n_ * n_), 0.0);
        auto R = [&](int i, int j) -> double& { return r[static_cast<std::size_t>(i * n_ + j)]; };
        for (int i = 0; i < n_; ++i) {
            double s = gram[static_cast<std::size_t>(i * n_ + i)];
            for (int k = 0; k < i; ++k) s -= R(k, i) * R(k, i);
            R(i, i) = std::sqrt(s);
            for (int j = i + 1; j < n_; ++j) {
                double t = gram[static_cast<std::size_t>(i * n_ + j)];
                for (int k = 0; k < i; ++k) t -= R(k, i) * R(k, j);
                R(i, j) = t / R(i, i);
            }
        }
        for (int i = 0; i < n_; ++i) {
            diag_[static_cast<std::size_t>(i)] = R(i, i) * R(i, i);
            for (int j = i + 1; j < n_; ++j) coef_[static_cast<std::size_t>(i * n_ + j)] = R(i, j) / R(i, i);
        }
    }

    void recurse(int level, double partial) {
        const auto li = static_cast<std::size_t>(level);
        double center = t_[li];
        for (int j = level + 1; j < n_; ++j) {
            const auto lj = static_cast<std::size_t>(j);
            center -= coef_[li * static_cast<std::size_t>(n_) + lj] * (a_[lj] - t_[lj]);
        }
        const double rem = r2_ - partial;
        if (rem < 0.0) return;
        const double half = std::sqrt(rem / diag_[li]);
        const double lo = std::ceil(center - half - 1e-9);
        const double hi = std::floor(center + half + 1e-9);
        for (double v = lo; v <= hi; v += 1.0) {
            const double d = v - center;
            const double next = partial + diag_[li] * d * d;
            if (next > r2_) continue;
            a_[li] = v;
            if (level == 0) {
                emit();
            } else {
                recurse(level - 1, next);
            }
        }
        a_[li] = 0.0;
    }

    double dist2_center(const Vec& x) const {
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - center_[i]) * (x[i] - center_[i]);
        return s;
    }

    void emit() {
        Vec x(static_cast<std::size_t>(n_), 0.0);
        for (int i = 0; i < n_; ++i) {
            const double ai = a_[static_cast<std::size_t>(i)];
            if (ai == 0.0) continue;
            for (int j = 0; j < n_; ++j) x[static_cast<std::size_t>(j)] += ai * lat_.generator(i, j);
        }
        if (dist2_center(x) > r2_) return;
        if (out_.size() >= cap_)
            throw ResourceError(fmt::format("lattice enumeration exceeded cap of {} points", cap_),
                                static_cast<double>(out_.size()));
        out_.push_back(std::move(x));
    }

    const LatticeDef& lat_;
    int n_;
    double r2_;
    std::size_t cap_;
    std::vector<double> coef_;
    std::vector<double> diag_;
    std::vector<double> a_;
    std::vector<double> t_;
    Vec center_;
    std::vector<Vec> out_;
};

inline std::vector<Vec> enumerate_unscaled(const LatticeDef& lat, double r2, std::size_t cap) {
    auto pts = BallEnumerator(lat, r2, cap).run();
    std::sort(pts.begin(), pts.end(), norm_lex_less);
    return pts;
}

}  // namespace detail

/// All points of scale * L with norm <= radius, ordered by norm then lexicographically.
inline std::vector<Vec> enumerate_ball(const LatticeDef& lat, double scale, double radius,
                                       std::size_t cap = kDefaultEnumerationCap) {
    if (!(scale > 0.0) || !(radius > 0.0)) throw DomainError("enumerate_ball: scale and radius must be > 0");
    const double estimate = estimate_ball_count(lat, scale, radius);
    if (estimate > static_cast<double>(cap))
        throw ResourceError(fmt::format("enumerate_ball: estimated {:.4g} points exceeds cap {}", estimate, cap),
                            estimate);
    const double r = radius / scale;
    auto pts = detail::enumerate_unscaled(lat, r * r * (1.0 + 1e-12), cap);
    for (auto& p : pts)
        for (double& v : p) v *= scale;
    return pts;
}

namespace detail {

struct KeyHash {
    std::size_t operator()(const std::vector<std::int64_t>& k) const noexcept {
        std::uint64_t h = 1469598103934665603ULL;
        for (auto v : k) {
            h ^= static_cast<std::uint64_t>(v) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        }
        return static_cast<std::size_t>(h);
    }
};

// Unscaled lattice points have coordinates in (1/2) Z for every supported lattice.
inline std::vector<std::int64_t> point_key(std::span<const double> unscaled) {
    std::vector<std::int64_t> k(unscaled.size());
    for (std::size_t i = 0; i < unscaled.size(); ++i) k[i] = std::llround(2.0 * unscaled[i]);
    return k;
}

}  // namespace detail

/// A finite indexed set of scaled lattice points inside the power sphere.
class Codebook {
public:
    Codebook(LatticeDef lat, double scale, double power_limit, std::vector<Vec> unscaled_points)
        : lattice_(std::move(lat)), scale_(scale), power_limit_(power_limit) {
        points_.reserve(unscaled_points.size());
        for (std::size_t i = 0; i < unscaled_points.size(); ++i) {
            index_.emplace(detail::point_key(unscaled_points[i]), i);
            Vec x = std::move(unscaled_points[i]);
            for (double& v : x) v *= scale_;
            points_.push_back(std::move(x));
        }
    }

    const LatticeDef& lattice() const noexcept { return lattice_; }
    int dimension() const noexcept { return lattice_.dimension(); }
    std::size_t size() const noexcept { return points_.size(); }
    double scale() const noexcept { return scale_; }
    double power_limit() const noexcept { return power_limit_; }
    /// ln(M) / n in nats per channel use.
    double rate() const { return std::log(static_cast<double>(size())) / dimension(); }
    const std::vector<Vec>& points() const noexcept { return points_; }
    const Vec& operator[](std::size_t i) const { return points_.at(i); }

    /// Index of the lattice point scale * unscaled, if it is a codeword.
    std::optional<std::size_t> find_unscaled(std::span<const double> unscaled) const {
        auto it = index_.find(detail::point_key(unscaled));
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

private:
    LatticeDef lattice_;
    double scale_;
    double power_limit_;
    std::vector<Vec> points_;
    std::unordered_map<std::vector<std::int64_t>, std::size_t, detail::KeyHash> index_;
};

/// Builds the M smallest-norm points of beta * L, with beta the largest scale
/// for which at least M points satisfy ||x||^2 <= n P.
inline Codebook build_codebook(const LatticeDef& lat, int n, double power, std::size_t m,
                               std::size_t cap = kDefaultEnumerationCap) {
    if (m < 2) throw InfeasibleError("build_codebook: M must be >= 2");
    if (n != lat.dimension())
        throw DomainError(fmt::format("build_codebook: n = {} but lattice {} has dimension {}", n, lat.name(),
                                      lat.dimension()));
    if (!(power > 0.0) || !std::isfinite(power)) throw DomainError("build_codebook: P must be > 0");
    if (m > cap)
        throw InfeasibleError(fmt::format("build_codebook: M = {} exceeds the enumeration cap {}", m, cap));

    // Unscaled radius whose ball should hold about 2M points, grown until it holds M.
    double r = std::pow(2.0 * static_cast<double>(m) * lat.voronoi_volume() / ball_volume(n, 1.0), 1.0 / n);
    std::vector<Vec> pts;
    for (;;) {
        try {
            pts = detail::enumerate_unscaled(lat, r * r * (1.0 + 1e-12), cap);
        } catch (const ResourceError& e) {
            throw InfeasibleError(fmt::format("build_codebook: M = {} needs more than {} points ({})", m, cap,
                                              e.what()));
        }
        if (pts.size() >= m) break;
        r *= 1.5;
    }
    pts.resize(m);

    const double radius2 = n * power;
    const double max_norm2 = detail::norm2(pts.back());
    double beta = std::sqrt(radius2 / max_norm2);
    auto fits = [&](double b) {
        for (const auto& p : pts) {
            double s = 0.0;
            for (double v : p) s += (b * v) * (b * v);
            if (s > radius2) return false;
        }
        return true;
    };
    while (!fits(beta)) beta = std::nextafter(beta, 0.0);
    return Codebook(lat, beta, power, std::move(pts));
}

enum class DecodePath { BruteForce, LatticeFastPath };

/// Index of the codeword nearest to y; ties go to the smaller index.
namespace detail {

// y decodes to a lattice point outside the codebook. Pull y towards the origin
// until it lands on a codeword; that bounds the distance to the nearest one,
// and a ball enumeration around y of that radius contains it. Same answer
// (ties to the lowest index) as the full scan, or nullopt to fall back to it.
inline std::optional<std::size_t> decode_outside(const Codebook& cb, std::span<const double> y, const Vec& u) {
    const double rmax = std::sqrt(norm2(cb.points().back())) / cb.scale();
    const double ru = std::sqrt(norm2(u));
    if (!(ru > 0.0)) return std::nullopt;
    std::optional<std::size_t> seed;
    Vec v(u.size());
    for (double f = std::min(1.0, rmax / ru); f > 0.0 && !seed; f -= 0.1 * rmax / ru) {
        for (std::size_t i = 0; i < u.size(); ++i) v[i] = f * u[i];
        seed = cb.find_unscaled(nearest_point(cb.lattice(), v));
    }
    if (!seed) return std::nullopt;
    const double r2 = dist2(y, cb[*seed]) / (cb.scale() * cb.scale()) * (1.0 + 1e-9) + 1e-12;
    std::vector<Vec> ball;
    try {
        ball = BallEnumerator(cb.lattice(), r2, 4 * cb.size() + 64, u).run();
    } catch (const ResourceError&) {
        return std::nullopt;
    }
    std::size_t best = *seed;
    double best_d = dist2(y, cb[best]);
    for (const auto& p : ball) {
        const auto hit = cb.find_unscaled(p);
        if (!hit) continue;
        const double d = dist2(y, cb[*hit]);
        if (d < best_d || (d == best_d && *hit < best)) {
            best_d = d;
            best = *hit;
        }
    }
    return best;
}

}  // namespace detail

inline std::size_t decode_codebook(const Codebook& cb, std::span<const double> y,
                                   DecodePath path = DecodePath::BruteForce) {
    if (static_cast<int>(y.size()) != cb.dimension())
        throw DomainError(fmt::format("decode_codebook: expected dimension {}, got {}", cb.dimension(), y.size()));
    if (path == DecodePath::LatticeFastPath) {
        Vec u(y.begin(), y.end());
        for (double& v : u) v /= cb.scale();
        if (auto hit = cb.find_unscaled(nearest_point(cb.lattice(), u))) return *hit;
        if (auto near = detail::decode_outside(cb, y, u)) return *near;
    }
    std::size_t best = 0;
    double best_d = detail::dist2(y, cb[0]);
    for (std::size_t i = 1; i < cb.size(); ++i) {
        const double d = detail::dist2(y, cb.points()[i]);
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

/// Exact probability that N(0, sigma^2 I_n) leaves the Voronoi cell of beta * Z^n.
inline double voronoi_escape_prob_zn(double beta, double sigma, int n) {
    if (!(beta > 0.0) || !(sigma > 0.0) || n < 1) throw DomainError("voronoi_escape_prob_zn: bad arguments");
    const double per_coord = 2.0 * q_function(beta / (2.0 * sigma));
    return -std::expm1(n * std::log1p(-per_coord));
}

/// Writes "index,x0,...,x{n-1}" rows.
inline void write_codebook_csv(std::ostream& os, const Codebook& cb) {
    os << "index";
    for (int j = 0; j < cb.dimension(); ++j) os << ",x" << j;
    os << '\n';
    for (std::size_t i = 0; i < cb.size(); ++i) {
        os << i;
        for (double v : cb[i]) os << fmt::format(",{:.12g}", v);
        os << '\n';
    }
}

}  // namespace nlmod
