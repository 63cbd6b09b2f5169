// Copyright 2026 The netloc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>

#include "netloc/rbbbgb.hpp"

using namespace netloc;
using namespace netloc::rbbbgb;

namespace {

std::vector<RbbbgbParams> grid20() {
    std::vector<RbbbgbParams> g;
    for (int i = 1; i <= 20; ++i)
        for (int j = 1; j <= 20; ++j) g.push_back({i / 21.0, j / 21.0});
    return g;
}

double sq(double x) { return x * x; }

/// Reduced form of the region inequality at eps1 = eps2 = 1, typed in separately.
double reduced_margin(double u, double s0) {
    const double v = std::sqrt(1 - u * u), s1 = std::sqrt(1 - s0 * s0);
    const double a = std::pow(s0, 3), b = std::pow(s1, 3);
    return a * a * u * u - b * b * v * v - 2 * sq(a * u * u * u + b * v * v * v) - sq(a * v * v * v - b * u * u * u) -
           3 * sq(a * a * u * u * v - b * b * v * v * u);
}

}  // namespace

TEST(Table, NormalizationParityAndCyclicSymmetry) {
    for (const auto& p : grid20()) {
        auto d = rbbbgb_distribution(p);
        double sum = 0.0, even = 0.0;
        for (std::size_t k = 0; k < 64; ++k) {
            sum += d[k];
            const std::size_t a = k / 16, b = (k / 4) % 4, c = k % 4;
            const int chis = (a >= chi0) + (b >= chi0) + (c >= chi0);
            if (chis % 2 == 0) even += d[k];
            EXPECT_EQ(probability(p, a, b, c), probability(p, c, a, b));
        }
        EXPECT_NEAR(sum, 1.0, 1e-12);
        EXPECT_EQ(even, 0.0);
    }
}

TEST(Table, ReflectionSymmetryFailsWhenS0DiffersFromS1) {
    RbbbgbParams p{0.6, 0.8};
    bool differs = false;
    for (std::size_t a = 0; a < 4; ++a)
        for (std::size_t b = 0; b < 4; ++b)
            for (std::size_t c = 0; c < 4; ++c) differs |= probability(p, a, b, c) != probability(p, b, a, c);
    EXPECT_TRUE(differs);
}

TEST(Table, PairMarginals) {
    for (const auto& p : grid20()) {
        auto d = rbbbgb_distribution(p);
        const double s0 = p.s0, s1 = p.s1();
        EXPECT_NEAR(d.probability({{"a", "up"}, {"b", "down"}}), std::pow(s0, 4) * s1 * s1, 1e-12);
        EXPECT_NEAR(d.probability({{"c", "down"}, {"a", "up"}}), s0 * s0 * std::pow(s1, 4), 1e-12);
        double chi_sum = probability(p, chi0, up, down) + probability(p, chi1, up, down);
        EXPECT_NEAR(chi_sum, std::pow(s0, 4) * s1 * s1, 1e-12);
    }
}

TEST(Table, CoarseGrain) {
    auto d = rbbbgb_distribution({0.7, 0.6});
    auto c = coarse_grain(d);
    EXPECT_EQ(c.variables()[0].alphabet, coarse_alphabet());
    EXPECT_NEAR(c.probability({{"a", "chi"}, {"b", "chi"}, {"c", "chi"}}),
                d.probability({{"a", "chi0"}}) + d.probability({{"a", "chi1"}}) - d.probability({{"a", "chi0"}, {"b", "up"}}) -
                    d.probability({{"a", "chi0"}, {"b", "down"}}) - d.probability({{"a", "chi1"}, {"b", "up"}}) -
                    d.probability({{"a", "chi1"}, {"b", "down"}}),
                1e-14);
    EXPECT_THROW(coarse_grain(c), DomainError);
}

TEST(Params, Domain) {
    EXPECT_THROW(rbbbgb_distribution({0.0, 0.5}), DomainError);
    EXPECT_THROW(rbbbgb_distribution({0.5, 1.0}), DomainError);
    EXPECT_THROW(region_check({0.5, 0.5}, {1.2, 1.0}), DomainError);
    EXPECT_THROW(q_marginal_bounds({0.5, 0.5}, {0.5, 0.9}), DomainError);
}

TEST(QBounds, CollapseAtUnitEpsilonAndOrdered) {
    for (const auto& p : grid20()) {
        for (const auto& q : q_marginal_bounds(p, {1.0, 1.0})) EXPECT_NEAR(q.lower, q.upper, 1e-15);
        for (double e1 : {0.3, 0.9})
            for (double e2 : {1.0, 1.7})
                for (const auto& q : q_marginal_bounds(p, {e1, e2})) EXPECT_LE(q.lower, q.upper);
    }
}

TEST(QBounds, TableDerivedOracle) {
    // q(i,t=0) base = p(chi_i, up, down) * s0^2 / s1^2 / S, q(i,t=1) base = p(chi_i, down, up) * s1^2 / s0^2 / S,
    // q(i,j,k) base = p(chi_i, chi_j, chi_k) / S, all read from the outcome table.
    const RbbbgbParams p{0.9, 0.8};
    const double e1 = 0.9, e2 = 1.1, s0 = p.s0, s1 = p.s1(), S = std::pow(s0, 6) + std::pow(s1, 6);
    auto q = q_marginal_bounds(p, {e1, e2});
    ASSERT_EQ(q.size(), 12u);
    const double lo = e1 * e1 / std::pow(e2, 3), hi = e2 * e2 / std::pow(e1, 3);
    for (std::size_t i = 0; i < 2; ++i) {
        const double b0 = probability(p, chi0 + i, up, down) * s0 * s0 / (s1 * s1) / S;
        const double b1 = probability(p, chi0 + i, down, up) * s1 * s1 / (s0 * s0) / S;
        EXPECT_NEAR(q[i].lower, lo * b0, 1e-14);
        EXPECT_NEAR(q[i].upper, hi * b0, 1e-14);
        EXPECT_NEAR(q[2 + i].lower, lo * b1, 1e-14);
        EXPECT_NEAR(q[2 + i].upper, hi * b1, 1e-14);
    }
    for (std::size_t n = 0; n < 8; ++n) {
        const double b = probability(p, chi0 + n / 4, chi0 + (n / 2) % 2, chi0 + n % 2) / S;
        EXPECT_NEAR(q[4 + n].lower, b / e2, 1e-14);
        EXPECT_NEAR(q[4 + n].upper, b / e1, 1e-14);
    }
    EXPECT_EQ(q[4].label, "q(0,0,0)");
}

TEST(Region, UnitEpsilonMatchesReducedForm) {
    for (const auto& p : grid20()) {
        auto r = region_check(p, {1.0, 1.0});
        EXPECT_NEAR(r.lhs - r.rhs, reduced_margin(p.u, p.s0), 1e-12);
    }
}

TEST(Region, CoefficientFormMatchesLiteral) {
    for (const auto& p : grid20())
        for (double e1 : {0.2, 0.7, 1.0})
            for (double e2 : {1.0, 1.5, 4.0}) {
                auto r = region_check(p, {e1, e2});
                auto c = detail::region_coefficients(p);
                EXPECT_NEAR(r.lhs - r.rhs, c.a * e1 * e1 * e1 - c.b * e2 * e2 * e2, 1e-12 * std::max(1.0, e2 * e2 * e2));
            }
}

TEST(Region, LargeEps2IsLocal) {
    auto r = region_check({0.7, 0.8}, {1.0, 1e4});
    EXPECT_FALSE(r.nonlocal);
    EXPECT_LT(r.lhs, -1e6);
}

TEST(Region, InequalityNeverHoldsOnAdmissibleDomain) {
    // A < B everywhere, so the crossing eps2 lies below eps1 <= 1.
    for (const auto& p : grid20()) {
        auto c = detail::region_coefficients(p);
        EXPECT_LT(c.a, c.b);
        EXPECT_FALSE(region_check(p, {1.0, 1.0}).nonlocal);
        EXPECT_FALSE(max_eps2(p, 1.0).has_value());
    }
}

TEST(Region, ThresholdMatchesBisectionAndFlipsOnce) {
    for (const auto& p : grid20())
        for (double e1 : {0.3, 1.0}) {
            auto f = [&](double e2) {
                auto r = detail::region_terms(p, e1, e2);
                return r.lhs - r.rhs;
            };
            double lo = 1e-6, hi = 10.0;
            ASSERT_GT(f(lo), 0.0);
            ASSERT_LT(f(hi), 0.0);
            for (int it = 0; it < 200; ++it) {
                double mid = 0.5 * (lo + hi);
                (f(mid) > 0.0 ? lo : hi) = mid;
            }
            EXPECT_NEAR(eps2_threshold(p, e1), 0.5 * (lo + hi), 1e-12);
            int flips = 0;
            bool prev = f(1e-6) > 0.0;
            for (int k = 1; k <= 400; ++k) {
                bool now = f(1e-6 + 10.0 * k / 400.0) > 0.0;
                flips += now != prev;
                prev = now;
            }
            EXPECT_EQ(flips, 1);
        }
}

TEST(Region, MonotoneAlongRays) {
    for (const auto& p : grid20()) {
        double prev = -INFINITY;
        for (double e1 : {0.1, 0.4, 0.7, 1.0}) {
            auto r = region_check(p, {e1, 1.5});
            EXPECT_GT(r.lhs - r.rhs, prev);
            prev = r.lhs - r.rhs;
        }
        prev = INFINITY;
        for (double e2 : {1.0, 1.3, 2.0, 5.0}) {
            auto r = region_check(p, {0.8, e2});
            EXPECT_LT(r.lhs - r.rhs, prev);
            prev = r.lhs - r.rhs;
        }
    }
}

TEST(Chain, EquivalentToFinalInequality) {
    // (2/3)U - G/(eps1 S) = (lhs - rhs) / (3 eps1 eps2^3 S).
    for (const auto& p : grid20())
        for (double e1 : {0.4, 1.0})
            for (double e2 : {1.0, 2.0}) {
                auto c = chain_check(p, {e1, e2});
                auto r = region_check(p, {e1, e2});
                const double S = std::pow(p.s0, 6) + std::pow(p.s1(), 6);
                const double lhs = (2.0 / 3.0) * c.lower_times_three_halves - c.xi1_upper;
                const double rhs = (r.lhs - r.rhs) / (3.0 * e1 * std::pow(e2, 3) * S);
                EXPECT_NEAR(lhs, rhs, 1e-10 * std::max(1.0, std::abs(rhs)));
                EXPECT_EQ(c.no_common_solution, r.lhs > r.rhs);
            }
}

TEST(Scan, OrderAndCount) {
    std::vector<double> us{0.3, 0.6}, s0s{0.5, 0.7, 0.9}, e1{0.5, 1.0}, e2{1.0};
    auto rows = region_scan(us, s0s, e1, e2, 3);
    ASSERT_EQ(rows.size(), 12u);
    EXPECT_EQ(rows[0].u, 0.3);
    EXPECT_EQ(rows[1].eps1, 1.0);
    EXPECT_EQ(rows[2].s0, 0.7);
    EXPECT_EQ(rows[6].u, 0.6);
}
