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
#include <numbers>

#include "netloc/square.hpp"

using namespace netloc;
using namespace netloc::square;

namespace {

/// All outputs 0, inputs a_D = d_A and c_D = d_C uniform.
JointDistribution all_zeros_behaviour() {
    std::vector<double> p(256, 0.0);
    Radix r(std::vector<std::size_t>(8, 2));
    for (std::size_t x = 0; x < 2; ++x)
        for (std::size_t z = 0; z < 2; ++z) {
            // a_B, a_D, b_A, b_C, c_B, c_D, d_A, d_C
            std::vector<std::size_t> o{0, x, 0, 0, 0, z, x, z};
            p[r.ravel(o)] = 0.25;
        }
    std::vector<Variable> vars;
    for (const auto& n : variable_names()) vars.push_back(bit(n));
    return JointDistribution(std::move(vars), std::move(p));
}

/// Enumerates every deterministic response function on the weight grid (cards <= 2).
/// Correlators are accumulated as exact integers in units of 1 / (4 steps^2).
double exhaustive_bilocal(std::size_t cd, std::size_t ca, int steps) {
    auto weights = [steps](std::size_t card) {
        std::vector<std::array<int, 2>> w;
        if (card == 1) return std::vector<std::array<int, 2>>{{steps, 0}};
        for (int i = 0; i <= steps; ++i) w.push_back({i, steps - i});
        return w;
    };
    auto wd = weights(cd), wa = weights(ca);
    const std::size_t nf = std::size_t{1} << (2 * cd), ng = std::size_t{1} << (2 * cd * ca), nh = std::size_t{1} << (2 * ca);
    auto sgn = [](std::size_t bits) { return (bits & 1) ? -1 : 1; };
    const double unit = 4.0 * steps * steps;
    double best = 0.0;
    for (std::size_t f = 0; f < nf; ++f)
        for (std::size_t g = 0; g < ng; ++g)
            for (std::size_t h = 0; h < nh; ++h)
                for (const auto& pd : wd)
                    for (const auto& pa : wa) {
                        long I = 0, J = 0;
                        for (std::size_t x = 0; x < 2; ++x)
                            for (std::size_t z = 0; z < 2; ++z)
                                for (std::size_t d = 0; d < cd; ++d)
                                    for (std::size_t a = 0; a < ca; ++a) {
                                        const long w = pd[d] * pa[a] * sgn(f >> (d * 2 + x)) * sgn(h >> (a * 2 + z));
                                        const std::size_t gb = g >> (2 * (d * ca + a));
                                        I += w * sgn(gb);
                                        J += w * sgn(x + z) * sgn(gb >> 1);
                                    }
                        best = std::max(best, std::sqrt(std::abs(I) / unit) + std::sqrt(std::abs(J) / unit));
                    }
    return best;
}

}  // namespace

TEST(Square, BellKetsOrthonormal) {
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(std::abs(bell_ket(i).dot(bell_ket(j))), i == j ? 1.0 : 0.0, 1e-15);
    EXPECT_THROW(bell_ket(4), DomainError);
}

TEST(Square, SigmaKetsAreProjectorEigenvectors) {
    for (std::size_t n = 0; n < 2; ++n)
        for (std::size_t m = 0; m < 2; ++m) {
            auto k = sigma_ket(n, m);
            EXPECT_LT((sigma_projector(n, m) * k - k).norm(), 1e-14);
            EXPECT_LT((sigma_projector(n, 0) + sigma_projector(n, 1) - quantum::Matrix::Identity(2, 2)).norm(), 1e-15);
        }
}

TEST(Square, DistributionNormalizedAndConsistent) {
    auto d = square_distribution();
    EXPECT_EQ(d.names(), variable_names());
    double s = 0.0;
    for (std::size_t k = 0; k < d.size(); ++k) s += d[k];
    EXPECT_NEAR(s, 1.0, 1e-10);
    EXPECT_NEAR(consistency_probability(d, std::span<const VariablePair>(consistency_pairs())), 1.0, 1e-12);
    auto t = square_distribution(kCalibratedMapping, quantum::BornPath::trace);
    for (std::size_t k = 0; k < d.size(); ++k) EXPECT_NEAR(d[k], t[k], 1e-14);
}

TEST(Square, CalibratedValueIsSqrt2) {
    auto v = bilocality_value(square_distribution());
    EXPECT_NEAR(v.I14, 0.5, 1e-12);
    EXPECT_NEAR(v.J14, 0.5, 1e-12);
    EXPECT_NEAR(v.value, std::numbers::sqrt2, 1e-9);
}

TEST(Square, CalibrationDecisionProcedure) {
    auto cal = calibrate_bsm();
    ASSERT_EQ(cal.all.size(), 24u);
    EXPECT_TRUE(cal.mapping == kCalibratedMapping);
    EXPECT_NEAR(cal.best.value, std::numbers::sqrt2, 1e-9);
    for (const auto& [m, v] : cal.all) EXPECT_LE(v.value, std::numbers::sqrt2 + 1e-9);
    EXPECT_THROW((BsmMapping{{0, 0, 1, 2}}.validate()), DomainError);
}

TEST(Square, CertificateAtUnitEpsilon) {
    auto c = square_certify(square_distribution(), {1.0, 1.0});
    EXPECT_NEAR(c.cert.lhs, std::numbers::sqrt2 / 4, 1e-9);
    EXPECT_NEAR(c.cert.bound, 0.25, 1e-15);
    EXPECT_TRUE(c.cert.violated);
    // Equal xis: LHS = (sqrt(xi) / 2) * value.
    EXPECT_NEAR(c.cert.lhs, std::sqrt(c.cert.xi1) / 2 * c.correlators.value, 1e-12);
}

TEST(Square, CertificateLiteralAtAsymmetricEpsilon) {
    auto c = square_certify(square_distribution(), {0.5, 2.0});
    EXPECT_NEAR(c.cert.xi1, 1.0 / 1024.0, 1e-18);
    EXPECT_NEAR(c.cert.xi2, 64.0, 1e-12);
    EXPECT_NEAR(c.cert.lhs, 2.0 * std::sqrt(4.0 - 3.0 / 16384.0), 1e-12);
    EXPECT_TRUE(c.cert.violated);
}

TEST(Square, DeterministicAllZerosSitsOnBound) {
    auto c = square_certify(all_zeros_behaviour(), {1.0, 1.0});
    EXPECT_NEAR(c.cert.lhs, 0.25, 1e-15);
    EXPECT_NEAR(c.cert.bound, 0.25, 1e-15);
    EXPECT_FALSE(c.cert.violated);
}

TEST(Square, EpsilonParamsHandValues) {
    std::vector<double> pa{0.3, 0.7}, pc{0.5, 0.5};
    auto s = square_epsilon_params({0.5, 2.0}, pa, pc);
    EXPECT_NEAR(s.zeta1, 1.0 / 16.0, 1e-15);
    EXPECT_NEAR(s.theta_a1, 0.25 * 0.3, 1e-15);
    EXPECT_NEAR(s.theta_c2, 4.0 * 0.5, 1e-15);
    EXPECT_NEAR(s.xi1, s.zeta1 * s.theta_a1 * s.theta_c1, 1e-18);
    EXPECT_NEAR(s.xi2, s.zeta2 * s.theta_a2 * s.theta_c2, 1e-12);
}

TEST(Square, ConsistencyRequired) {
    std::vector<Variable> vars;
    for (const auto& n : variable_names()) vars.push_back(bit(n));
    JointDistribution uniform(vars, std::vector<double>(256, 1.0 / 256.0));
    EXPECT_THROW(square_certify(uniform, {1.0, 1.0}), DomainError);
}

TEST(BruteForce, SimplexGrid) {
    auto g = simplex_grid(3, 4);
    EXPECT_EQ(g.size(), 15u);
    for (const auto& w : g) EXPECT_NEAR(w[0] + w[1] + w[2], 1.0, 1e-15);
}

TEST(BruteForce, MatchesExhaustiveOracleForSmallCards) {
    for (std::size_t cd : {1, 2})
        for (std::size_t ca : {1, 2}) {
            const double lib = bilocal_brute_force_bound(cd, ca, {6, 2});
            EXPECT_NEAR(lib, exhaustive_bilocal(cd, ca, 6), 1e-12) << cd << "," << ca;
            EXPECT_NEAR(lib, 1.0, 1e-9);
        }
}

TEST(BruteForce, BoundTightAtCardinalityTwo) {
    EXPECT_NEAR(bilocal_brute_force_bound(2, 2), 1.0, 1e-9);
    EXPECT_THROW(bilocal_brute_force_bound(0, 2), DomainError);
    EXPECT_THROW(bilocal_brute_force_bound(5, 2), DomainError);
}
