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
 * @file    triangle.hpp
 * @brief   Hardy-type quantum family on the triangle network and its
 *          source-dependent certificate.
 *
 * Alice and Bob share |psi> = (s|11> + c(|01> + |10>)) / sqrt(1 + c^2) with
 * s = sin(theta), c = cos(theta). Each of them also shares a classically
 * correlated bit with Charlie, reads it out, and uses it as the setting for the
 * entangled qubit. Variables: a_B, a_C, b_A, b_C, c_A, c_B.
 *
 * Two setting conventions are available:
 *   hardy          setting 0: {-s|0> + c|1>, c|0> + s|1>}, setting 1: computational
 *   paper_verbatim setting 0: computational, setting 1: {s|0> + c|1>, c|0> - s|1>}
 * Only the hardy convention produces the zero/nonzero pattern the certificate
 * relies on; the verbatim one has nonzero "zero" events (e.g. p = s^2 c^2/(4(1+c^2))
 * for a_B=0, b_A=1, a_C=0, b_C=1).
 */

#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "netloc/bell.hpp"
#include "netloc/common.hpp"
#include "netloc/distribution.hpp"
#include "netloc/quantum.hpp"

namespace netloc::triangle {

enum class Convention { hardy, paper_verbatim };

inline std::string to_string(Convention c) { return c == Convention::hardy ? "hardy" : "paper-verbatim"; }

inline Convention convention_from_string(std::string_view s) {
    if (s == "hardy") return Convention::hardy;
    if (s == "paper-verbatim" || s == "paper_verbatim" || s == "verbatim") return Convention::paper_verbatim;
    throw DomainError("unknown convention '" + std::string(s) + "' (expected hardy or paper-verbatim)");
}

struct TriangleParams {
    double theta = std::numbers::pi / 4;
    Convention convention = Convention::hardy;
    bool extended = false;  ///< allow theta in (pi/4, pi/2]; no certification claims there

    void validate() const {
        const double hi = extended ? std::numbers::pi / 2 : std::numbers::pi / 4;
        if (!std::isfinite(theta) || theta < 0.0 || theta > hi)
            throw DomainError("theta must lie in [0, " + std::string(extended ? "pi/2" : "pi/4") + "], got " + format_double(theta));
    }
};

inline const std::vector<std::string>& variable_names() {
    static const std::vector<std::string> names{"a_B", "a_C", "b_A", "b_C", "c_A", "c_B"};
    return names;
}

/// Outcome-0/1 kets on the entangled qubit for a given setting bit.
inline std::array<quantum::Ket, 2> setting_basis(double theta, Convention conv, std::size_t setting) {
    const double s = std::sin(theta), c = std::cos(theta);
    quantum::Ket k0(2), k1(2);
    bool computational = (conv == Convention::hardy) ? setting == 1 : setting == 0;
    if (computational) {
        k0 << 1.0, 0.0;
        k1 << 0.0, 1.0;
    } else if (conv == Convention::hardy) {
        k0 << -s, c;
        k1 << c, s;
    } else {
        k0 << s, c;
        k1 << c, -s;
    }
    return {k0, k1};
}

inline quantum::NetworkLayout layout(double theta) {
    using namespace quantum;
    const double s = std::sin(theta), c = std::cos(theta);
    // Unnormalized ket with the norm in the weight; keeps Hardy zeros bit-exact.
    Ket psi(4);
    psi << 0.0, c, c, s;
    auto entangled = DensityOperator::from_ensemble({2, 2}, Ensemble{{1.0 / (1.0 + c * c)}, {psi}});
    auto classical = DensityOperator::from_ensemble({2, 2}, Ensemble{{0.5, 0.5}, {basis_ket(4, 0), basis_ket(4, 3)}});

    NetworkLayout net;
    net.sources = {{entangled, {"A_B", "B_A"}}, {classical, {"A_C", "C_A"}}, {classical, {"B_C", "C_B"}}};
    net.parties = {{"A", {"A_B", "A_C"}, {bit("a_B"), bit("a_C")}},
                   {"B", {"B_A", "B_C"}, {bit("b_A"), bit("b_C")}},
                   {"C", {"C_A", "C_B"}, {bit("c_A"), bit("c_B")}}};
    return net;
}

/// Effects for Alice or Bob: outcome index = out * 2 + setting, effect |basis_setting(out)> (x) |setting>.
inline quantum::MeasurementEffects conditioned_measurement(double theta, Convention conv) {
    std::vector<quantum::Ket> kets;
    for (std::size_t out = 0; out < 2; ++out)
        for (std::size_t setting = 0; setting < 2; ++setting)
            kets.push_back(quantum::kron(setting_basis(theta, conv, setting)[out], quantum::basis_ket(2, setting)));
    return quantum::MeasurementEffects::projective({2, 2}, std::move(kets));
}

inline JointDistribution triangle_distribution(const TriangleParams& params, quantum::BornPath path = quantum::BornPath::automatic) {
    params.validate();
    auto net = layout(params.theta);
    std::vector<quantum::MeasurementEffects> meas{conditioned_measurement(params.theta, params.convention),
                                                  conditioned_measurement(params.theta, params.convention),
                                                  quantum::MeasurementEffects::computational({2, 2})};
    return quantum::network_distribution(net, meas, path);
}

/// (1/4) s^2 c^4 / (1 + c^2): closed form of the positive Hardy event under the hardy convention.
inline double positive_event_closed_form(double theta) {
    const double s = std::sin(theta), c = std::cos(theta);
    return 0.25 * s * s * c * c * c * c / (1.0 + c * c);
}

inline const std::vector<std::pair<std::string, std::string>>& consistency_pairs() {
    static const std::vector<VariablePair> pairs{{"a_C", "c_A"}, {"b_C", "c_B"}};
    return pairs;
}

struct HardyReport {
    double p_positive = 0.0;         ///< a_B=0, b_A=0, a_C=0, b_C=0
    std::array<double, 3> p_zero{};  ///< (0,1,0,1), (1,0,1,0), (0,0,1,1) on (a_B, b_A, a_C, b_C)
    bool pass = false;
    double tolerance = tol::kExact;
};

inline HardyReport hardy_report(const JointDistribution& d) {
    auto ev = [&](const char* a, const char* b, const char* x, const char* y) {
        return d.probability({{"a_B", a}, {"b_A", b}, {"a_C", x}, {"b_C", y}});
    };
    HardyReport r;
    r.p_positive = ev("0", "0", "0", "0");
    r.p_zero = {ev("0", "1", "0", "1"), ev("1", "0", "1", "0"), ev("0", "0", "1", "1")};
    r.pass = r.p_positive > r.tolerance && std::all_of(r.p_zero.begin(), r.p_zero.end(), [&](double p) { return p < r.tolerance; });
    return r;
}

inline HardyReport hardy_check(const TriangleParams& params) { return hardy_report(triangle_distribution(params)); }

/// Certificate on a precomputed distribution, evaluated literally.
inline bell::CertificateResult certify_distribution(const JointDistribution& d, const bell::EpsilonPair& eps) {
    auto witness = bell::verify_consistency(d, std::span<const VariablePair>(consistency_pairs()));
    auto pa = marginal(d, {"a_C"}), pb = marginal(d, {"b_C"});
    auto xis = bell::lemma1_xis(eps, pa.probs(), pb.probs());
    auto lifted = bell::lift(bell::eberhard_chsh(), xis.xi1, xis.xi2);
    auto r = bell::eval_lifted(lifted, d, witness);
    r.eps = eps;
    return r;
}

/// Requires the consistency condition and the three Hardy zero events below
/// 1e-12; the positive event may vanish (theta = 0 gives lhs = 0).
inline bell::CertificateResult certify(const TriangleParams& params, const bell::EpsilonPair& eps) {
    eps.validate();
    auto d = triangle_distribution(params);
    auto h = hardy_report(d);
    for (double p : h.p_zero)
        if (!(p < h.tolerance))
            throw DomainError("Hardy zero event has probability " + format_double(p) + " (convention " + to_string(params.convention) + ")");
    return certify_distribution(d, eps);
}

struct ScanRow {
    double theta = 0.0;
    bell::CertificateResult result;
};

/// Rows ordered theta-major, then eps1, then eps2.
inline std::vector<ScanRow> scan(std::span<const double> thetas, std::span<const double> eps1s, std::span<const double> eps2s,
                                 Convention conv = Convention::hardy, bool extended = false, std::size_t threads = 0) {
    if (thetas.empty() || eps1s.empty() || eps2s.empty()) throw DomainError("scan: empty grid");
    for (double e1 : eps1s)
        for (double e2 : eps2s) bell::EpsilonPair{e1, e2}.validate();
    std::vector<std::optional<JointDistribution>> dists(thetas.size());
    parallel_for(thetas.size(), threads, [&](std::size_t i) { dists[i] = triangle_distribution({thetas[i], conv, extended}); });

    const std::size_t n1 = eps1s.size(), n2 = eps2s.size();
    std::vector<ScanRow> rows(thetas.size() * n1 * n2);
    parallel_for(rows.size(), threads, [&](std::size_t k) {
        std::size_t t = k / (n1 * n2), i = (k / n2) % n1, j = k % n2;
        rows[k] = {thetas[t], certify_distribution(*dists[t], {eps1s[i], eps2s[j]})};
    });
    return rows;
}

}  // namespace netloc::triangle
