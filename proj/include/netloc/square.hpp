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

/**
 * @file    square.hpp
 * @brief   Square network: entanglement-swapping strategy, I14/J14 bilocality
 *          correlators and the source-dependent certificate.
 *
 * Sources: singlets on (A_B, B_A) and (B_C, C_B), classically correlated bits
 * on (A_D, D_A) and (C_D, D_C). Variables: a_B, a_D, b_A, b_C, c_B, c_D, d_A, d_C.
 * Correlator bit selection: (b_A b_C)^y is b_A for y = 0 and b_C for y = 1.
 */

#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "netloc/bell.hpp"
#include "netloc/common.hpp"
#include "netloc/distribution.hpp"
#include "netloc/quantum.hpp"

namespace netloc::square {

inline const std::array<std::string, 4>& bell_state_names() {
    static const std::array<std::string, 4> names{"phi+", "phi-", "psi+", "psi-"};
    return names;
}

/// bits[j] = b_A * 2 + b_C reported for Bell state j (phi+, phi-, psi+, psi-).
struct BsmMapping {
    std::array<std::size_t, 4> bits{0, 1, 2, 3};

    void validate() const {
        std::array<bool, 4> seen{};
        for (auto b : bits) {
            if (b > 3 || seen[b]) throw DomainError("BSM mapping is not a bijection onto {0,1}^2");
            seen[b] = true;
        }
    }
    bool operator==(const BsmMapping&) const = default;
};

/// Result of the 24-mapping calibration, frozen here; a test re-runs it.
inline constexpr BsmMapping kCalibratedMapping{{0, 1, 2, 3}};

inline quantum::Ket bell_ket(std::size_t j) {
    const double h = std::numbers::sqrt2 / 2;
    quantum::Ket k(4);
    switch (j) {
        case 0: k << h, 0, 0, h; break;
        case 1: k << h, 0, 0, -h; break;
        case 2: k << 0, h, h, 0; break;
        case 3: k << 0, h, -h, 0; break;
        default: throw DomainError("bell_ket: index out of range");
    }
    return k;
}

/// Eigenvector of (1 + (-1)^m (Z + (-1)^n X) / sqrt2) / 2 with eigenvalue 1.
inline quantum::Ket sigma_ket(std::size_t n, std::size_t m) {
    const double sm = (m % 2) ? -1.0 : 1.0, sn = (n % 2) ? -1.0 : 1.0;
    const double z = sm / std::numbers::sqrt2, x = sm * sn / std::numbers::sqrt2;
    const double half = std::acos(z) / 2;
    quantum::Ket k(2);
    k << std::cos(half), (x >= 0 ? 1.0 : -1.0) * std::sin(half);
    return k;
}

inline quantum::Matrix sigma_projector(std::size_t n, std::size_t m) {
    quantum::Matrix zx(2, 2);
    const double sn = (n % 2) ? -1.0 : 1.0, sm = (m % 2) ? -1.0 : 1.0;
    zx << 1.0, sn, sn, -1.0;
    return (quantum::Matrix::Identity(2, 2) + sm * zx / std::numbers::sqrt2) / 2.0;
}

inline const std::vector<std::string>& variable_names() {
    static const std::vector<std::string> names{"a_B", "a_D", "b_A", "b_C", "c_B", "c_D", "d_A", "d_C"};
    return names;
}

inline JointDistribution square_distribution(const BsmMapping& mapping = kCalibratedMapping,
                                             quantum::BornPath path = quantum::BornPath::automatic) {
    using namespace quantum;
    mapping.validate();
    Ket singlet_ket(4);
    singlet_ket << 0.0, 1.0, -1.0, 0.0;
    auto singlet = DensityOperator::from_ensemble({2, 2}, Ensemble{{0.5}, {singlet_ket}});
    auto classical = DensityOperator::from_ensemble({2, 2}, Ensemble{{0.5, 0.5}, {basis_ket(4, 0), basis_ket(4, 3)}});

    NetworkLayout net;
    net.sources = {{singlet, {"A_B", "B_A"}}, {singlet, {"B_C", "C_B"}}, {classical, {"A_D", "D_A"}}, {classical, {"C_D", "D_C"}}};
    net.parties = {{"A", {"A_D", "A_B"}, {bit("a_B"), bit("a_D")}},
                   {"B", {"B_A", "B_C"}, {bit("b_A"), bit("b_C")}},
                   {"C", {"C_B", "C_D"}, {bit("c_B"), bit("c_D")}},
                   {"D", {"D_A", "D_C"}, {bit("d_A"), bit("d_C")}}};

    std::vector<Ket> alice(4), bob(4), charlie(4);
    for (std::size_t a_b = 0; a_b < 2; ++a_b)
        for (std::size_t a_d = 0; a_d < 2; ++a_d) alice[a_b * 2 + a_d] = kron(basis_ket(2, a_d), sigma_ket(a_d, a_b));
    for (std::size_t j = 0; j < 4; ++j) bob[mapping.bits[j]] = bell_ket(j);
    for (std::size_t c_b = 0; c_b < 2; ++c_b)
        for (std::size_t c_d = 0; c_d < 2; ++c_d) charlie[c_b * 2 + c_d] = kron(sigma_ket(c_d, c_b), basis_ket(2, c_d));
    std::vector<MeasurementEffects> meas{MeasurementEffects::projective({2, 2}, alice), MeasurementEffects::projective({2, 2}, bob),
                                         MeasurementEffects::projective({2, 2}, charlie), MeasurementEffects::computational({2, 2})};
    return network_distribution(net, meas, path);
}

inline const std::vector<VariablePair>& consistency_pairs() {
    static const std::vector<VariablePair> pairs{{"a_D", "d_A"}, {"c_D", "d_C"}};
    return pairs;
}

struct BilocalityValue {
    double I14 = 0.0;
    double J14 = 0.0;
    double value = 0.0;  ///< sqrt|I14| + sqrt|J14|
};

namespace detail {

/// Sign tables s[y][a_B][b_A][b_C][c_B][x][z] = (-1)^(a_B + b_y + c_B) times the
/// I (y=0) or J (y=1) input factor, with x, z the conditioning inputs.
inline double correlator_sign(std::size_t y, std::size_t a, std::size_t ba, std::size_t bc, std::size_t c, std::size_t x, std::size_t z) {
    std::size_t parity = a + (y == 0 ? ba : bc) + c;
    if (y == 1) parity += x + z;
    return (parity % 2) ? -1.0 : 1.0;
}

/// Joint p(a_B, b_A, b_C, c_B, x, z) as a flat table in that order.
inline std::vector<double> correlator_joint(const JointDistribution& d, const std::string& x, const std::string& z) {
    std::vector<std::string> keep{"a_B", "b_A", "b_C", "c_B", x, z};
    for (const auto& n : keep)
        if (!d.has(n)) throw DomainError("square: distribution lacks variable '" + n + "'");
    auto m = marginal(d, std::span<const std::string>(keep));
    for (const auto s : m.radix().sizes())
        if (s != 2) throw DomainError("square: correlator variables must be bits");
    return {m.probs().begin(), m.probs().end()};
}

}  // namespace detail

/// I14 = 1/4 sum <A B^0 C>, J14 = 1/4 sum (-1)^(d_A+d_C) <A B^1 C>, conditioned on (d_A, d_C).
inline BilocalityValue bilocality_value(const JointDistribution& d) {
    auto p = detail::correlator_joint(d, "d_A", "d_C");
    std::array<double, 4> px{};
    for (std::size_t k = 0; k < 64; ++k) px[k % 4] += p[k];
    for (std::size_t xz = 0; xz < 4; ++xz)
        if (px[xz] <= tol::kExact)
            throw DomainError("bilocality_value: input pair (d_A, d_C) = (" + std::to_string(xz / 2) + "," + std::to_string(xz % 2) +
                              ") has zero probability");
    BilocalityValue r;
    for (std::size_t k = 0; k < 64; ++k) {
        const std::size_t a = (k >> 5) & 1, ba = (k >> 4) & 1, bc = (k >> 3) & 1, c = (k >> 2) & 1, x = (k >> 1) & 1, z = k & 1;
        const double cond = p[k] / px[k % 4];
        r.I14 += 0.25 * detail::correlator_sign(0, a, ba, bc, c, x, z) * cond;
        r.J14 += 0.25 * detail::correlator_sign(1, a, ba, bc, c, x, z) * cond;
    }
    r.value = std::sqrt(std::abs(r.I14)) + std::sqrt(std::abs(r.J14));
    return r;
}

struct Calibration {
    BsmMapping mapping;
    BilocalityValue best;
    std::vector<std::pair<BsmMapping, BilocalityValue>> all;  ///< the 24 bijections in lexicographic order
};

/// Exhaustive search over the 24 bijections; ties within 1e-9 prefer I14, J14 >= 0,
/// then the lexicographically first mapping.
inline Calibration calibrate_bsm() {
    Calibration cal;
    std::array<std::size_t, 4> perm{0, 1, 2, 3};
    do {
        BsmMapping m{perm};
        cal.all.emplace_back(m, bilocality_value(square_distribution(m)));
    } while (std::next_permutation(perm.begin(), perm.end()));
    auto score = [](const BilocalityValue& v) { return (v.I14 >= -1e-9 && v.J14 >= -1e-9) ? 1 : 0; };
    std::size_t best = 0;
    for (std::size_t i = 1; i < cal.all.size(); ++i) {
        const auto& c = cal.all[i].second;
        const auto& b = cal.all[best].second;
        if (c.value > b.value + 1e-9 || (std::abs(c.value - b.value) <= 1e-9 && score(c) > score(b))) best = i;
    }
    cal.mapping = cal.all[best].first;
    cal.best = cal.all[best].second;
    return cal;
}

struct SquareEpsilonParams {
    double eps1 = 1.0, eps2 = 1.0;
    double zeta1 = 1.0, zeta2 = 1.0;
    double theta_a1 = 0.0, theta_a2 = 0.0, theta_c1 = 0.0, theta_c2 = 0.0;
    double xi1 = 0.0, xi2 = 0.0;
};

/// zeta1 = e1^2/e2^2, theta_{a,1} = (e1/e2) min p(a_D), theta_{a,2} = (e2/e1) max p(a_D),
/// same for c_D; xi1 = zeta1 theta_{a,1} theta_{c,1}, xi2 = zeta2 theta_{a,2} theta_{c,2}.
inline SquareEpsilonParams square_epsilon_params(const bell::EpsilonPair& eps, std::span<const double> p_aD, std::span<const double> p_cD) {
    eps.validate();
    auto [a_lo, a_hi] = bell::detail::support_extrema(p_aD, "p(a_D)");
    auto [c_lo, c_hi] = bell::detail::support_extrema(p_cD, "p(c_D)");
    SquareEpsilonParams s;
    s.eps1 = eps.eps1;
    s.eps2 = eps.eps2;
    const double r = eps.eps1 / eps.eps2;
    s.zeta1 = r * r;
    s.zeta2 = 1.0 / (r * r);
    s.theta_a1 = r * a_lo;
    s.theta_a2 = a_hi / r;
    s.theta_c1 = r * c_lo;
    s.theta_c2 = c_hi / r;
    s.xi1 = s.zeta1 * s.theta_a1 * s.theta_c1;
    s.xi2 = s.zeta2 * s.theta_a2 * s.theta_c2;
    return s;
}

struct SquareCertificate {
    bell::CertificateResult cert;
    SquareEpsilonParams params;
    BilocalityValue correlators;  ///< plain I14/J14 of the distribution
};

/// LHS = sqrt|sum (xi1 w+ - xi2 w-) p| + sqrt|sum (xi1 w'+ - xi2 w'-) p| over joint
/// probabilities with inputs a_D, c_D and |w| = 1/4; bound sqrt(xi1 xi2).
inline SquareCertificate square_certify(const JointDistribution& d, const bell::EpsilonPair& eps) {
    bell::verify_consistency(d, std::span<const VariablePair>(consistency_pairs()));
    auto pa = marginal(d, {"a_D"}), pc = marginal(d, {"c_D"});
    SquareCertificate out;
    out.params = square_epsilon_params(eps, pa.probs(), pc.probs());
    const double xi1 = out.params.xi1, xi2 = out.params.xi2;
    auto p = detail::correlator_joint(d, "a_D", "c_D");
    std::array<double, 2> pos{}, neg{};
    for (std::size_t k = 0; k < 64; ++k) {
        const std::size_t a = (k >> 5) & 1, ba = (k >> 4) & 1, bc = (k >> 3) & 1, c = (k >> 2) & 1, x = (k >> 1) & 1, z = k & 1;
        for (std::size_t y = 0; y < 2; ++y) (detail::correlator_sign(y, a, ba, bc, c, x, z) > 0 ? pos[y] : neg[y]) += 0.25 * p[k];
    }
    auto& r = out.cert;
    r.eps = eps;
    r.xi1 = xi1;
    r.xi2 = xi2;
    r.lhs = std::sqrt(std::abs(xi1 * pos[0] - xi2 * neg[0])) + std::sqrt(std::abs(xi1 * pos[1] - xi2 * neg[1]));
    r.bound = std::sqrt(xi1 * xi2);
    r.margin = r.lhs - r.bound;
    r.violated = r.margin > tol::kExact;
    r.marginals = {{"a_D", {pa.probs().begin(), pa.probs().end()}}, {"c_D", {pc.probs().begin(), pc.probs().end()}}};
    out.correlators = bilocality_value(d);
    return out;
}

/// Every point of the simplex with `card` coordinates in multiples of 1/steps.
inline std::vector<std::vector<double>> simplex_grid(std::size_t card, std::size_t steps) {
    std::vector<std::vector<double>> out;
    std::vector<std::size_t> c(card, 0);
    std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t i, std::size_t left) {
        if (i + 1 == card) {
            c[i] = left;
            std::vector<double> w(card);
            for (std::size_t k = 0; k < card; ++k) w[k] = static_cast<double>(c[k]) / static_cast<double>(steps);
            out.push_back(std::move(w));
            return;
        }
        for (std::size_t v = 0; v <= left; ++v) {
            c[i] = v;
            rec(i + 1, left - v);
        }
    };
    rec(0, steps);
    return out;
}

struct BruteForceOptions {
    std::size_t grid_steps = 12;
    std::size_t threads = 0;
};

/// Max of sqrt|I14| + sqrt|J14| over deterministic bilocal models
/// a_B = f(d_A, delta), (b_A, b_C) = g(delta, alpha), c_B = h(d_C, alpha), with
/// p(delta), p(alpha) on a simplex grid and uniform inputs. Bob is eliminated in
/// closed form: per cell he picks the sign that adds |coefficient| to each sum.
inline double bilocal_brute_force_bound(std::size_t card_delta, std::size_t card_alpha, const BruteForceOptions& opt = {}) {
    if (card_delta == 0 || card_alpha == 0) throw DomainError("bilocal_brute_force_bound: cardinalities must be positive");
    if (card_delta > 4 || card_alpha > 4) throw DomainError("bilocal_brute_force_bound: cardinalities above 4 are not supported");
    if (opt.grid_steps == 0) throw DomainError("bilocal_brute_force_bound: grid_steps must be positive");

    // Per hidden value, a local response f(., delta) on a binary input gives
    // (F0, F1) = ((s0 + s1)/2, (s0 - s1)/2) with s_x = (-1)^f(x).
    auto factors = [](std::size_t card) {
        std::vector<std::vector<std::array<double, 2>>> all;
        const std::size_t n = std::size_t{1} << (2 * card);
        for (std::size_t code = 0; code < n; ++code) {
            std::vector<std::array<double, 2>> row(card);
            for (std::size_t h = 0; h < card; ++h) {
                const double s0 = ((code >> (2 * h)) & 1) ? -1.0 : 1.0, s1 = ((code >> (2 * h + 1)) & 1) ? -1.0 : 1.0;
                row[h] = {std::abs(s0 + s1) / 2, std::abs(s0 - s1) / 2};
            }
            if (std::find(all.begin(), all.end(), row) == all.end()) all.push_back(std::move(row));
        }
        return all;
    };
    const auto fa = factors(card_delta), fc = factors(card_alpha);
    const auto wd = simplex_grid(card_delta, opt.grid_steps), wa = simplex_grid(card_alpha, opt.grid_steps);

    std::vector<double> best(fa.size(), 0.0);
    parallel_for(fa.size(), opt.threads, [&](std::size_t i) {
        double m = 0.0;
        for (const auto& h : fc)
            for (const auto& pd : wd)
                for (const auto& pa : wa) {
                    double s0 = 0.0, s1 = 0.0;
                    for (std::size_t x = 0; x < card_delta; ++x)
                        for (std::size_t z = 0; z < card_alpha; ++z) {
                            s0 += pd[x] * pa[z] * fa[i][x][0] * h[z][0];
                            s1 += pd[x] * pa[z] * fa[i][x][1] * h[z][1];
                        }
                    m = std::max(m, std::sqrt(s0) + std::sqrt(s1));
                }
        best[i] = m;
    });
    return *std::max_element(best.begin(), best.end());
}

}  // namespace netloc::square
