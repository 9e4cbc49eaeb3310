#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "nlmod/cost.hpp"
#include "nlmod/scheme.hpp"

using namespace nlmod;

namespace {

ModScheme z2_scheme(std::size_t bins, bool pairing, OutageKind outage = OutageKind::decode_error()) {
    return make_scheme(LatticeDef::zn(2), 2, 4.0, bins, pairing, outage);
}

double norm2(const Vec& v) {
    double s = 0;
    for (double x : v) s += x * x;
    return s;
}

}  // namespace

TEST(Quantize, Examples) {
    auto q = quantize(0.3, 4);
    EXPECT_EQ(q.index, 1u);
    EXPECT_DOUBLE_EQ(q.midpoint, 0.375);
    q = quantize(1.0, 4);
    EXPECT_EQ(q.index, 3u);
    EXPECT_DOUBLE_EQ(q.midpoint, 0.875);
    const double eps = 1e-12;
    q = quantize(0.5 - eps, 2);
    EXPECT_EQ(q.index, 0u);
    EXPECT_DOUBLE_EQ(q.midpoint, 0.25);
    EXPECT_LE(std::fabs(q.midpoint - (0.5 - eps)), 0.25);
    EXPECT_THROW(quantize(-0.1, 4), DomainError);
    EXPECT_THROW(quantize(1.1, 4), DomainError);
}

TEST(Quantize, ErrorBound) {
    for (std::size_t m : {1u, 3u, 8u, 1000u})
        for (int k = 0; k <= 10000; ++k) {
            const double u = k / 10000.0;
            const auto q = quantize(u, m);
            ASSERT_LT(q.index, m);
            ASSERT_LE(std::fabs(q.midpoint - u), 0.5 / static_cast<double>(m) + 1e-15);
        }
}

TEST(Modulate, BinToCodeword) {
    const auto s = z2_scheme(9, false);
    for (std::size_t j = 0; j < 9; ++j) {
        const double u = (j + 0.3) / 9.0;
        EXPECT_EQ(modulate(s, u), s.codebook()[j]);
    }
    const auto p = z2_scheme(10, true);
    EXPECT_EQ(p.codebook().size(), 5u);
    for (std::size_t j = 0; j < 5; ++j) {
        EXPECT_EQ(modulate(p, (2 * j + 0.5) / 10.0), p.codebook()[j]);
        EXPECT_EQ(modulate(p, (2 * j + 1.5) / 10.0), p.codebook()[j]);
    }
    EXPECT_THROW(z2_scheme(9, true), InfeasibleError);
}

TEST(Modulate, PowerOnGrid) {
    for (bool pairing : {false, true}) {
        const auto s = make_scheme(LatticeDef::dn(4), 4, 1.5, 64, pairing);
        for (int k = 0; k <= 10000; ++k) ASSERT_LE(norm2(modulate(s, k / 10000.0)), 4 * 1.5);
        EXPECT_TRUE(as_modulator(s).meets_power(10000));
    }
}

TEST(Estimate, NoiselessAndBounds) {
    const auto s = z2_scheme(9, false);
    for (std::size_t j = 0; j < 9; ++j) EXPECT_DOUBLE_EQ(estimate(s, s.codebook()[j]), (j + 0.5) / 9.0);
    for (int k = 0; k <= 1000; ++k) {
        const double u = k / 1000.0;
        ASSERT_LE(std::fabs(estimate(s, modulate(s, u)) - u), 0.5 / 9.0 + 1e-15);
    }
    std::mt19937_64 rng(1);
    auto coin = [&rng] { return (rng() & 1) != 0; };
    const auto p = z2_scheme(16, true);
    for (int k = 0; k <= 1000; ++k) {
        const double u = k / 1000.0;
        ASSERT_LE(std::fabs(estimate(p, modulate(p, u), coin) - u), 1.5 / 16.0 + 1e-15);
    }
    EXPECT_THROW(estimate(p, modulate(p, 0.2)), DomainError);
    EXPECT_THROW(estimate(s, Vec{0.0, 0.0, 0.0}), DomainError);
}

TEST(Estimate, PairingCoinPicksEitherBin) {
    const auto p = z2_scheme(8, true);
    const Vec& x = p.codebook()[2];
    EXPECT_DOUBLE_EQ(estimate(p, x, [] { return false; }), 4.5 / 8.0);
    EXPECT_DOUBLE_EQ(estimate(p, x, [] { return true; }), 5.5 / 8.0);
}

TEST(IsOutage, ZeroNoiseNeverOutage) {
    const Vec z(2, 0.0);
    for (auto kind : {OutageKind::decode_error(), OutageKind::sphere(0.5)}) {
        const auto s = z2_scheme(9, false, kind);
        for (int k = 0; k <= 100; ++k) EXPECT_FALSE(is_outage(s, k / 100.0, z, 0.3));
    }
}

TEST(IsOutage, SphereBoundary) {
    const auto s = z2_scheme(9, false, OutageKind::sphere(0.0));
    const double sigma = 0.5;
    // ||z||^2 = n sigma^2 exactly is inside; a hair above is outside
    EXPECT_FALSE(is_outage(s, 0.5, Vec{sigma, sigma}, sigma));
    EXPECT_TRUE(is_outage(s, 0.5, Vec{sigma, sigma * (1 + 1e-9)}, sigma));
}

TEST(IsOutage, DecodeErrorAcrossMidpoint) {
    const auto s = z2_scheme(9, false);
    const Vec& x0 = s.codebook()[0];
    const Vec& x1 = s.codebook()[1];
    Vec d{x1[0] - x0[0], x1[1] - x0[1]};
    const double half = 0.5 * std::sqrt(norm2(d));
    for (auto& v : d) v /= 2.0 * half;  // unit vector
    const double u = 0.5 / 9.0;       // bin 0
    EXPECT_FALSE(is_outage(s, u, Vec{0.99 * half * d[0], 0.99 * half * d[1]}, 0.1));
    EXPECT_TRUE(is_outage(s, u, Vec{1.01 * half * d[0], 1.01 * half * d[1]}, 0.1));
}

TEST(IsOutage, FullLatticeRuleCountsExternalErrors) {
    // Outer codeword pushed outward: the codebook decoder still picks it,
    // the full-lattice decoder lands on a non-codeword.
    const auto cb_rule = make_scheme(LatticeDef::zn(2), 2, 1.0, 5, false);
    const auto lat_rule = make_scheme(LatticeDef::zn(2), 2, 1.0, 5, false, OutageKind::decode_error(),
                                      DecodeRule::FullLattice);
    const Vec& outer = cb_rule.codebook()[4];
    Vec z(outer);
    for (auto& v : z) v *= 0.8;  // push 0.8 * |x| further out
    const double u = 4.5 / 5.0;
    EXPECT_FALSE(is_outage(cb_rule, u, z, 0.1));
    EXPECT_TRUE(is_outage(lat_rule, u, z, 0.1));
}

TEST(LocusLength, Examples) {
    const int n = 3;
    const double power = 2.0;
    const double len = std::sqrt(n * power);
    const Vec v{len, 0.0, 0.0};
    ModulatorFn linear{[v](double u) { return Vec{u * v[0], u * v[1], u * v[2]}; }, n, power};
    for (std::size_t k : {1u, 7u, 100u}) EXPECT_NEAR(locus_length(linear, k), len, 1e-12);
    ModulatorFn constant{[](double) { return Vec{0.1, 0.2, 0.3}; }, n, power};
    EXPECT_EQ(locus_length(constant, 50), 0.0);
    EXPECT_THROW(locus_length(constant, 0), DomainError);
}

TEST(LocusLength, SchemeLocusIsSumOfCodewordJumps) {
    const auto s = make_scheme(LatticeDef::zn(2), 2, 4.0, 9, false);
    // sampling at bin midpoints visits the codewords in index order
    const std::size_t m = s.bins();
    ModulatorFn mids{[&s, m](double t) {
                         const double u = (std::min(std::floor(t * (m - 1) + 0.5), double(m - 1)) + 0.5) / m;
                         return modulate(s, u);
                     },
                     2, 4.0};
    double direct = 0.0;
    for (std::size_t i = 0; i + 1 < m; ++i) {
        const Vec& a = s.codebook()[i];
        const Vec& b = s.codebook()[i + 1];
        direct += std::hypot(a[0] - b[0], a[1] - b[1]);
    }
    EXPECT_NEAR(locus_length(mids, m - 1), direct, 1e-12);
}

TEST(LocusLength, RefinementNeverShortens) {
    const auto s = make_scheme(LatticeDef::dn(3), 3, 1.0, 40, false);
    const auto f = as_modulator(s);
    const ModulatorFn spiral{[](double u) {
                           const double a = 20.0 * u;
                           return Vec{u * std::cos(a), u * std::sin(a), u};
                       },
                       3, 1.0};
    for (const auto* m : {&f, &spiral})
        for (std::size_t k = 1; k <= 512; k *= 2) ASSERT_GE(locus_length(*m, 2 * k), locus_length(*m, k) - 1e-12);
}

TEST(WeakNoise, CorrectDecodeMeansQuantizationError) {
    const PowerCost cost(2.0);
    for (std::size_t m : {8u, 64u}) {
        const auto s = make_scheme(LatticeDef::zn(2), 2, 4.0, m, false);
        double sup = 0.0;
        for (int k = 0; k <= 10000; ++k) {
            const double u = k / 10000.0;
            const double e = estimate(s, modulate(s, u)) - u;
            ASSERT_DOUBLE_EQ(e, quantize(u, m).midpoint - u);
            sup = std::max(sup, cost.rho(e));
        }
        EXPECT_LE(sup, cost.rho(0.5 / m) * (1 + 1e-12));
        EXPECT_GT(sup, cost.rho(0.5 / m) * (1 - 1e-3));
    }
}
