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
 * @file    rbbbgb.hpp
 * @brief   Analytic RBBBGB triangle statistics over {up, down, chi0, chi1}^3,
 *          its coarse graining, and the (eps1, eps2) region inequality.
 *
 * Parameters: u, s0 in (0, 1); v = sqrt(1 - u^2), s1 = sqrt(1 - s0^2);
 * u_0 = u, v_0 = v, u_1 = v, v_1 = -u.
 *
 * Support: tuples with an odd number of chi outputs.
 *   single chi, forward  (up,down,chi) and cyclic shifts:  s0^4 s1^2 u_i^2
 *   single chi, reverse  (down,up,chi) and cyclic shifts:  s0^2 s1^4 v_i^2
 *   triple chi (chi_i, chi_j, chi_k): (s0^3 u_i u_j u_k + s1^3 v_i v_j v_k)^2
 * The reverse weight uses s0^2 s1^4; printed sources give s0^4 s1^2 there,
 * which breaks normalization and the pair marginal p(c=down, a=up) = s0^2 s1^4.
 */

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "netloc/bell.hpp"
#include "netloc/common.hpp"
#include "netloc/distribution.hpp"

namespace netloc::rbbbgb {

enum Symbol : std::size_t { up = 0, down = 1, chi0 = 2, chi1 = 3 };

inline const std::vector<std::string>& alphabet() {
    static const std::vector<std::string> a{"up", "down", "chi0", "chi1"};
    return a;
}

inline const std::vector<std::string>& coarse_alphabet() {
    static const std::vector<std::string> a{"up", "down", "chi"};
    return a;
}

struct RbbbgbParams {
    double u = 0.0;
    double s0 = 0.0;

    void validate() const {
        if (!(u > 0.0 && u < 1.0)) throw DomainError("u must lie in (0, 1), got " + format_double(u));
        if (!(s0 > 0.0 && s0 < 1.0)) throw DomainError("s0 must lie in (0, 1), got " + format_double(s0));
    }
    double v() const { return std::sqrt(1.0 - u * u); }
    double s1() const { return std::sqrt(1.0 - s0 * s0); }
    /// u_i, v_i for i in {0, 1}.
    std::array<double, 2> us() const { return {u, v()}; }
    std::array<double, 2> vs() const { return {v(), -u}; }
};

/// p(a, b, c) for symbols in the four-letter alphabet.
inline double probability(const RbbbgbParams& p, std::size_t a, std::size_t b, std::size_t c) {
    const std::array<std::size_t, 3> t{a, b, c};
    const double s0 = p.s0, s1 = p.s1();
    const auto u = p.us(), v = p.vs();
    int chis = 0;
    std::size_t pos = 0;
    for (std::size_t k = 0; k < 3; ++k)
        if (t[k] >= chi0) {
            ++chis;
            pos = k;
        }
    if (chis == 3) {
        // Sorted indices make the value bit-identical under cyclic relabelling.
        std::array<std::size_t, 3> idx{a - chi0, b - chi0, c - chi0};
        std::sort(idx.begin(), idx.end());
        const double amp = s0 * s0 * s0 * u[idx[0]] * u[idx[1]] * u[idx[2]] + s1 * s1 * s1 * v[idx[0]] * v[idx[1]] * v[idx[2]];
        return amp * amp;
    }
    if (chis != 1) return 0.0;
    const std::size_t next = t[(pos + 1) % 3], last = t[(pos + 2) % 3];
    const std::size_t i = t[pos] - chi0;
    if (next == up && last == down) return std::pow(s0, 4) * s1 * s1 * u[i] * u[i];
    if (next == down && last == up) return s0 * s0 * std::pow(s1, 4) * v[i] * v[i];
    return 0.0;
}

inline JointDistribution rbbbgb_distribution(const RbbbgbParams& params) {
    params.validate();
    std::vector<double> probs(64);
    for (std::size_t a = 0; a < 4; ++a)
        for (std::size_t b = 0; b < 4; ++b)
            for (std::size_t c = 0; c < 4; ++c) probs[(a * 4 + b) * 4 + c] = probability(params, a, b, c);
    return JointDistribution({{"a", alphabet()}, {"b", alphabet()}, {"c", alphabet()}}, std::move(probs));
}

/// Merges chi0 and chi1 into chi for every variable.
inline JointDistribution coarse_grain(const JointDistribution& d) {
    for (const auto& v : d.variables())
        if (v.alphabet != alphabet()) throw DomainError("coarse_grain: variable '" + v.name + "' does not use the up/down/chi0/chi1 alphabet");
    std::vector<Variable> vars;
    std::vector<std::size_t> sizes;
    for (const auto& v : d.variables()) {
        vars.push_back({v.name, coarse_alphabet()});
        sizes.push_back(3);
    }
    Radix out(sizes);
    std::vector<double> probs(out.total(), 0.0);
    Outcome digits(vars.size());
    for (std::size_t k = 0; k < d.size(); ++k) {
        for (std::size_t i = 0; i < vars.size(); ++i) digits[i] = std::min<std::size_t>(d.radix().digit(k, i), 2);
        probs[out.ravel(digits)] += d[k];
    }
    return JointDistribution(std::move(vars), std::move(probs));
}

struct QInterval {
    std::string label;  ///< "q(i,t=0)", "q(i,t=1)" or "q(i,j,k)" with indices filled in
    double lower = 0.0;
    double upper = 0.0;
};

/// Interval bounds for q(i,t) (4 entries) and q(i,j,k) (8 entries), in that order.
inline std::vector<QInterval> q_marginal_bounds(const RbbbgbParams& params, const bell::EpsilonPair& eps) {
    params.validate();
    eps.validate();
    const double e1 = eps.eps1, e2 = eps.eps2;
    const double s0 = params.s0, s1 = params.s1();
    const double s06 = std::pow(s0, 6), s16 = std::pow(s1, 6), S = s06 + s16;
    const auto u = params.us(), v = params.vs();
    const double lo = e1 * e1 / (e2 * e2 * e2), hi = e2 * e2 / (e1 * e1 * e1);
    std::vector<QInterval> out;
    for (std::size_t t = 0; t < 2; ++t)
        for (std::size_t i = 0; i < 2; ++i) {
            const double base = (t == 0 ? s06 * u[i] * u[i] : s16 * v[i] * v[i]) / S;
            out.push_back({"q(" + std::to_string(i) + ",t=" + std::to_string(t) + ")", lo * base, hi * base});
        }
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j)
            for (std::size_t k = 0; k < 2; ++k) {
                const double amp = s0 * s0 * s0 * u[i] * u[j] * u[k] + s1 * s1 * s1 * v[i] * v[j] * v[k];
                const double base = amp * amp / S;
                out.push_back({"q(" + std::to_string(i) + "," + std::to_string(j) + "," + std::to_string(k) + ")", base / e2, base / e1});
            }
    return out;
}

struct RegionResult {
    double lhs = 0.0;
    double rhs = 0.0;
    bool nonlocal = false;
};

namespace detail {

/// lhs - rhs = A eps1^3 - B eps2^3.
struct RegionCoefficients {
    double a = 0.0;
    double b = 0.0;
};

inline RegionCoefficients region_coefficients(const RbbbgbParams& p) {
    const double u = p.u, v = p.v(), s0 = p.s0, s1 = p.s1();
    const double s03 = s0 * s0 * s0, s13 = s1 * s1 * s1, s06 = s03 * s03, s16 = s13 * s13;
    const double t1 = s03 * u * u * u + s13 * v * v * v;
    const double t2 = s03 * v * v * v - s13 * u * u * u;
    const double g = s06 * u * u * v - s16 * v * v * u;
    return {4.0 * s06 * u * u + 2.0 * s16 * v * v, 3.0 * s06 * u * u + 3.0 * s16 * v * v + 2.0 * t1 * t1 + t2 * t2 + 3.0 * g * g};
}


/// Literal term-by-term evaluation without domain checks on eps.
inline RegionResult region_terms(const RbbbgbParams& params, double eps1, double eps2) {
    const double u = params.u, v = params.v(), s0 = params.s0, s1 = params.s1();
    const double e13 = std::pow(eps1, 3), e23 = std::pow(eps2, 3);
    const double s03 = std::pow(s0, 3), s13 = std::pow(s1, 3), s06 = std::pow(s0, 6), s16 = std::pow(s1, 6);
    RegionResult r;
    r.lhs = s06 * u * u * (4.0 * e13 - 3.0 * e23) + s16 * v * v * (2.0 * e13 - 3.0 * e23) -
            2.0 * e23 * std::pow(s03 * std::pow(u, 3) + s13 * std::pow(v, 3), 2) - e23 * std::pow(s03 * std::pow(v, 3) - s13 * std::pow(u, 3), 2);
    r.rhs = 3.0 * e23 * std::pow(s06 * u * u * v - s16 * v * v * u, 2);
    r.nonlocal = r.lhs >= r.rhs - tol::kExact;
    return r;
}

}  // namespace detail

/// Final region inequality, evaluated term by term as printed:
/// s0^6 u^2 (4e1^3 - 3e2^3) + s1^6 v^2 (2e1^3 - 3e2^3) - 2e2^3 (s0^3u^3 + s1^3v^3)^2
///   - e2^3 (s0^3v^3 - s1^3u^3)^2  >=  3e2^3 (s0^6u^2v - s1^6v^2u)^2.
/// lhs - rhs = A e1^3 - B e2^3 with A < B for every (u, s0), so the verdict is
/// false on the whole domain eps1 <= 1 <= eps2.
inline RegionResult region_check(const RbbbgbParams& params, const bell::EpsilonPair& eps) {
    params.validate();
    eps.validate();
    return detail::region_terms(params, eps.eps1, eps.eps2);
}

/// eps2 at which lhs = rhs for the given eps1, from the closed form
/// (A e1^3 / B)^(1/3); no domain restriction on the result.
inline double eps2_threshold(const RbbbgbParams& params, double eps1) {
    params.validate();
    if (!(eps1 > 0.0)) throw DomainError("eps2_threshold: eps1 must be positive");
    auto c = detail::region_coefficients(params);
    return std::cbrt(c.a * eps1 * eps1 * eps1 / c.b);
}

/// Largest admissible eps2 (>= 1) keeping the verdict nonlocal; empty when none.
inline std::optional<double> max_eps2(const RbbbgbParams& params, double eps1) {
    bell::EpsilonPair{eps1, 1.0}.validate();
    const double t = eps2_threshold(params, eps1);
    if (t < 1.0) return std::nullopt;
    return t;
}

/// Endpoints of the elimination chain: (3/2) xi1 >= U and xi1 <= G / (eps1 S).
struct ChainResult {
    double lower_times_three_halves = 0.0;  ///< U
    double xi1_upper = 0.0;                 ///< G / (eps1 S)
    bool no_common_solution = false;        ///< (2/3) U > G / (eps1 S)
};

inline ChainResult chain_check(const RbbbgbParams& params, const bell::EpsilonPair& eps) {
    params.validate();
    eps.validate();
    const double u = params.u, v = params.v(), s0 = params.s0, s1 = params.s1();
    const double e1 = eps.eps1, e2 = eps.eps2, e13 = e1 * e1 * e1, e23 = e2 * e2 * e2;
    const double s03 = std::pow(s0, 3), s13 = std::pow(s1, 3), s06 = std::pow(s0, 6), s16 = std::pow(s1, 6), S = s06 + s16;
    const double first = (s06 * u * u * (2.0 * e13 - e23) - e23 * s16 * v * v - e23 * std::pow(s03 * std::pow(u, 3) + s13 * std::pow(v, 3), 2)) / S;
    const double second =
        (s16 * v * v * (e23 - 2.0 * e13) + e23 * s06 * u * u + e23 * std::pow(s03 * std::pow(v, 3) - s13 * std::pow(u, 3), 2)) / (2.0 * S);
    ChainResult r;
    r.lower_times_three_halves = (first - second) / (e1 * e23);
    r.xi1_upper = std::pow(s06 * u * u * v - s16 * v * v * u, 2) / (e1 * S);
    r.no_common_solution = (2.0 / 3.0) * r.lower_times_three_halves > r.xi1_upper;
    return r;
}

struct RegionRow {
    double u = 0.0, s0 = 0.0, eps1 = 0.0, eps2 = 0.0;
    RegionResult result;
};

/// Rows ordered u-major, then s0, eps1, eps2.
inline std::vector<RegionRow> region_scan(std::span<const double> us, std::span<const double> s0s, std::span<const double> eps1s,
                                          std::span<const double> eps2s, std::size_t threads = 0) {
    if (us.empty() || s0s.empty() || eps1s.empty() || eps2s.empty()) throw DomainError("region scan: empty grid");
    for (double u : us)
        for (double s0 : s0s) RbbbgbParams{u, s0}.validate();
    for (double e1 : eps1s)
        for (double e2 : eps2s) bell::EpsilonPair{e1, e2}.validate();
    const std::size_t n1 = s0s.size(), n2 = eps1s.size(), n3 = eps2s.size();
    std::vector<RegionRow> rows(us.size() * n1 * n2 * n3);
    parallel_for(rows.size(), threads, [&](std::size_t k) {
        const std::size_t l = k % n3, j = (k / n3) % n2, i = (k / (n3 * n2)) % n1, h = k / (n3 * n2 * n1);
        RbbbgbParams p{us[h], s0s[i]};
        rows[k] = {us[h], s0s[i], eps1s[j], eps2s[l], region_check(p, {eps1s[j], eps2s[l]})};
    });
    return rows;
}

}  // namespace netloc::rbbbgb
