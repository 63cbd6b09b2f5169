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
 * @file    local_model.hpp
 * @brief   Local hidden-variable models with a central variable lambda that
 *          correlates the sources: representation, audit and search.
 *
 * p(outputs) = sum_{lambda, t} p(lambda) p(t | lambda) prod_party p(o_party | parents(t)),
 * where t is the tuple of source values in wiring order (row-major).
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "netloc/common.hpp"
#include "netloc/distribution.hpp"

namespace netloc::models {

struct SourceSpec {
    std::string name;
    std::size_t card = 1;
};

struct PartySpec {
    std::string name;
    std::vector<std::size_t> parents;  ///< indices into NetworkWiring::sources
    std::vector<Variable> outputs;     ///< output index = row-major over these
};

struct NetworkWiring {
    std::vector<SourceSpec> sources;
    std::vector<PartySpec> parties;

    void validate() const {
        if (sources.empty() || parties.empty()) throw DomainError("NetworkWiring: need sources and parties");
        for (const auto& s : sources)
            if (s.card == 0) throw DomainError("NetworkWiring: source '" + s.name + "' has empty alphabet");
        for (const auto& p : parties) {
            if (p.outputs.empty()) throw DomainError("NetworkWiring: party '" + p.name + "' has no outputs");
            for (auto s : p.parents)
                if (s >= sources.size()) throw DomainError("NetworkWiring: party '" + p.name + "' has an unknown parent");
        }
    }

    Radix source_radix() const {
        std::vector<std::size_t> c;
        for (const auto& s : sources) c.push_back(s.card);
        return Radix(c);
    }
    std::size_t tuple_count() const { return source_radix().total(); }

    std::size_t output_card(std::size_t p) const {
        std::size_t n = 1;
        for (const auto& v : parties[p].outputs) n *= v.alphabet.size();
        return n;
    }
    std::size_t row_count(std::size_t p) const {
        std::size_t n = 1;
        for (auto s : parties[p].parents) n *= sources[s].card;
        return n;
    }
    /// Response-table row of party p for source tuple digits t.
    std::size_t row_of(std::size_t p, const Outcome& t) const {
        std::size_t r = 0;
        for (auto s : parties[p].parents) r = r * sources[s].card + t[s];
        return r;
    }
    std::vector<Variable> output_variables() const {
        std::vector<Variable> out;
        for (const auto& p : parties) out.insert(out.end(), p.outputs.begin(), p.outputs.end());
        return out;
    }
};

/// alpha: B-C, beta: A-C, gamma: A-B. Outputs a_B, a_C, b_A, b_C, c_A, c_B.
inline NetworkWiring triangle_wiring(std::size_t card_alpha = 4, std::size_t card_beta = 4, std::size_t card_gamma = 4) {
    return {{{"alpha", card_alpha}, {"beta", card_beta}, {"gamma", card_gamma}},
            {{"A", {1, 2}, {bit("a_B"), bit("a_C")}}, {"B", {0, 2}, {bit("b_A"), bit("b_C")}}, {"C", {0, 1}, {bit("c_A"), bit("c_B")}}}};
}

/// alpha: B-C, beta: C-D, gamma: D-A, delta: A-B. Outputs a_B, a_D, b_A, b_C, c_B, c_D, d_A, d_C.
inline NetworkWiring square_wiring(std::size_t card = 4) {
    return {{{"alpha", card}, {"beta", card}, {"gamma", card}, {"delta", card}},
            {{"A", {2, 3}, {bit("a_B"), bit("a_D")}},
             {"B", {0, 3}, {bit("b_A"), bit("b_C")}},
             {"C", {0, 1}, {bit("c_B"), bit("c_D")}},
             {"D", {1, 2}, {bit("d_A"), bit("d_C")}}}};
}

struct EpsilonLocalModel {
    NetworkWiring wiring;
    std::vector<double> p_lambda;
    std::vector<std::vector<double>> p_sources_given_lambda;  ///< [lambda][tuple]
    std::vector<std::vector<std::vector<double>>> responses;  ///< [party][row][output]

    void validate() const {
        wiring.validate();
        auto check_row = [](const std::vector<double>& row, const std::string& what) {
            double s = 0.0;
            for (double v : row) {
                if (!std::isfinite(v) || v < -tol::kExact) throw DomainError(what + ": negative or non-finite entry");
                s += v;
            }
            if (std::abs(s - 1.0) > tol::kExact) throw DomainError(what + ": not normalized (sum " + format_double(s) + ")");
        };
        if (p_lambda.empty()) throw DomainError("EpsilonLocalModel: empty lambda alphabet");
        check_row(p_lambda, "p(lambda)");
        if (p_sources_given_lambda.size() != p_lambda.size()) throw DomainError("EpsilonLocalModel: one source row per lambda required");
        const std::size_t T = wiring.tuple_count();
        for (std::size_t l = 0; l < p_lambda.size(); ++l) {
            if (p_sources_given_lambda[l].size() != T) throw DomainError("EpsilonLocalModel: source row has wrong length");
            check_row(p_sources_given_lambda[l], "p(sources|lambda=" + std::to_string(l) + ")");
        }
        if (responses.size() != wiring.parties.size()) throw DomainError("EpsilonLocalModel: one response table per party required");
        for (std::size_t p = 0; p < responses.size(); ++p) {
            const auto& name = wiring.parties[p].name;
            if (responses[p].size() != wiring.row_count(p)) throw DomainError("EpsilonLocalModel: response table of '" + name + "' has wrong row count");
            for (const auto& row : responses[p]) {
                if (row.size() != wiring.output_card(p)) throw DomainError("EpsilonLocalModel: response row of '" + name + "' has wrong length");
                check_row(row, "response of '" + name + "'");
            }
        }
    }

    /// q(t) = sum_lambda p(lambda) p(t | lambda).
    std::vector<double> source_joint() const {
        std::vector<double> q(wiring.tuple_count(), 0.0);
        for (std::size_t l = 0; l < p_lambda.size(); ++l)
            for (std::size_t t = 0; t < q.size(); ++t) q[t] += p_lambda[l] * p_sources_given_lambda[l][t];
        return q;
    }
};

namespace detail {

/// Marginal of each source under a tuple distribution q.
inline std::vector<std::vector<double>> source_marginals(const NetworkWiring& w, std::span<const double> q) {
    Radix r = w.source_radix();
    std::vector<std::vector<double>> m(w.sources.size());
    for (std::size_t s = 0; s < m.size(); ++s) m[s].assign(w.sources[s].card, 0.0);
    for (std::size_t t = 0; t < q.size(); ++t)
        for (std::size_t s = 0; s < m.size(); ++s) m[s][r.digit(t, s)] += q[t];
    return m;
}

inline std::vector<double> product_of_marginals(const NetworkWiring& w, const std::vector<std::vector<double>>& m) {
    Radix r = w.source_radix();
    std::vector<double> out(r.total(), 1.0);
    for (std::size_t t = 0; t < out.size(); ++t)
        for (std::size_t s = 0; s < m.size(); ++s) out[t] *= m[s][r.digit(t, s)];
    return out;
}

/// Output distribution for source-tuple weights q and response tables.
inline std::vector<double> induced_probs(const NetworkWiring& w, std::span<const double> q,
                                         const std::vector<std::vector<std::vector<double>>>& responses) {
    Radix tr = w.source_radix();
    std::vector<std::size_t> out_cards;
    for (std::size_t p = 0; p < w.parties.size(); ++p) out_cards.push_back(w.output_card(p));
    Radix orad(out_cards);
    std::vector<double> probs(orad.total(), 0.0);
    std::vector<std::size_t> rows(w.parties.size());
    for (std::size_t t = 0; t < q.size(); ++t) {
        if (q[t] == 0.0) continue;
        auto digits = tr.unravel(t);
        for (std::size_t p = 0; p < rows.size(); ++p) rows[p] = w.row_of(p, digits);
        for (std::size_t o = 0; o < probs.size(); ++o) {
            double v = q[t];
            for (std::size_t p = 0; p < rows.size() && v != 0.0; ++p) v *= responses[p][rows[p]][orad.digit(o, p)];
            probs[o] += v;
        }
    }
    return probs;
}

}  // namespace detail

inline JointDistribution induced_distribution(const EpsilonLocalModel& m) {
    m.validate();
    auto q = m.source_joint();
    return JointDistribution(m.wiring.output_variables(), detail::induced_probs(m.wiring, q, m.responses));
}

struct EpsilonAudit {
    double eps1_star = 0.0;  ///< min over (t, lambda) of p(t|lambda) / prod p(source)
    double eps2_star = 0.0;  ///< max of the same ratio
    bool strict = false;     ///< every p(t|lambda) < 1
    std::vector<std::vector<double>> source_marginals;
};

/// Ratios are taken over lambda values with p(lambda) > 0.
inline EpsilonAudit audit(const EpsilonLocalModel& m) {
    m.validate();
    auto q = m.source_joint();
    EpsilonAudit a;
    a.source_marginals = detail::source_marginals(m.wiring, q);
    for (std::size_t s = 0; s < a.source_marginals.size(); ++s)
        for (std::size_t x = 0; x < a.source_marginals[s].size(); ++x)
            if (!(a.source_marginals[s][x] > 0.0))
                throw DomainError("audit: source '" + m.wiring.sources[s].name + "' value " + std::to_string(x) + " has zero marginal probability");
    auto prod = detail::product_of_marginals(m.wiring, a.source_marginals);
    a.eps1_star = std::numeric_limits<double>::infinity();
    a.eps2_star = 0.0;
    a.strict = true;
    for (std::size_t l = 0; l < m.p_lambda.size(); ++l) {
        if (!(m.p_lambda[l] > 0.0)) continue;
        for (std::size_t t = 0; t < prod.size(); ++t) {
            const double r = m.p_sources_given_lambda[l][t] / prod[t];
            a.eps1_star = std::min(a.eps1_star, r);
            a.eps2_star = std::max(a.eps2_star, r);
            if (!(m.p_sources_given_lambda[l][t] < 1.0 - tol::kExact)) a.strict = false;
        }
    }
    return a;
}

inline bool validate(const EpsilonLocalModel& m, double eps1) {
    auto a = audit(m);
    return a.eps1_star >= eps1 - tol::kExact && a.strict;
}

// ---- canonical models ----

/// Local model for the triangle family at theta = 0: beta copies into (a_C, c_A),
/// alpha into (b_C, c_B), gamma = g gives a_B = g xor 1 xor a_C and b_A = g xor b_C.
inline EpsilonLocalModel explicit_theta0_model() {
    EpsilonLocalModel m;
    m.wiring = triangle_wiring(2, 2, 2);
    m.p_lambda = {1.0};
    m.p_sources_given_lambda = {std::vector<double>(8, 0.125)};
    m.responses.assign(3, std::vector<std::vector<double>>(4, std::vector<double>(4, 0.0)));
    for (std::size_t x = 0; x < 2; ++x)
        for (std::size_t g = 0; g < 2; ++g) {
            // A: parents (beta = x, gamma = g), output a_B * 2 + a_C
            m.responses[0][x * 2 + g][((g ^ 1 ^ x) * 2) + x] = 1.0;
            // B: parents (alpha = x, gamma = g), output b_A * 2 + b_C
            m.responses[1][x * 2 + g][((g ^ x) * 2) + x] = 1.0;
        }
    for (std::size_t al = 0; al < 2; ++al)
        for (std::size_t be = 0; be < 2; ++be) m.responses[2][al * 2 + be][be * 2 + al] = 1.0;  // c_A = beta, c_B = alpha
    return m;
}

namespace detail {

/// Assigns each party a distinct parent source (bipartite matching).
inline std::vector<std::size_t> carrier_sources(const NetworkWiring& w) {
    std::vector<std::size_t> owner(w.sources.size(), SIZE_MAX), carrier(w.parties.size(), SIZE_MAX);
    std::function<bool(std::size_t, std::vector<bool>&)> augment = [&](std::size_t p, std::vector<bool>& seen) {
        for (auto s : w.parties[p].parents) {
            if (seen[s]) continue;
            seen[s] = true;
            if (owner[s] == SIZE_MAX || augment(owner[s], seen)) {
                owner[s] = p;
                carrier[p] = s;
                return true;
            }
        }
        return false;
    };
    for (std::size_t p = 0; p < w.parties.size(); ++p) {
        std::vector<bool> seen(w.sources.size(), false);
        if (!augment(p, seen)) throw DomainError("broadcast_model: wiring has no distinct carrier source per party");
    }
    return carrier;
}

}  // namespace detail

/// lambda = full output tuple drawn from the target; each party reads its own
/// output from a dedicated source. Reproduces any target; eps1* = 0.
inline EpsilonLocalModel broadcast_model(const JointDistribution& target, NetworkWiring wiring) {
    wiring.validate();
    if (target.variables() != wiring.output_variables()) throw DomainError("broadcast_model: target variables do not match wiring outputs");
    auto carrier = detail::carrier_sources(wiring);
    for (auto& s : wiring.sources) s.card = 1;
    for (std::size_t p = 0; p < carrier.size(); ++p) wiring.sources[carrier[p]].card = wiring.output_card(p);

    std::vector<std::size_t> out_cards;
    for (std::size_t p = 0; p < wiring.parties.size(); ++p) out_cards.push_back(wiring.output_card(p));
    Radix orad(out_cards), trad = wiring.source_radix();

    EpsilonLocalModel m;
    m.wiring = wiring;
    m.p_lambda.assign(target.probs().begin(), target.probs().end());
    for (std::size_t l = 0; l < orad.total(); ++l) {
        Outcome t(wiring.sources.size(), 0);
        for (std::size_t p = 0; p < carrier.size(); ++p) t[carrier[p]] = orad.digit(l, p);
        std::vector<double> row(trad.total(), 0.0);
        row[trad.ravel(t)] = 1.0;
        m.p_sources_given_lambda.push_back(std::move(row));
    }
    for (std::size_t p = 0; p < wiring.parties.size(); ++p) {
        std::vector<std::vector<double>> table(wiring.row_count(p), std::vector<double>(out_cards[p], 0.0));
        const auto& parents = wiring.parties[p].parents;
        for (std::size_t r = 0; r < table.size(); ++r) {
            // decode the carrier digit from the row index
            std::size_t rem = r, value = 0;
            for (std::size_t k = parents.size(); k-- > 0;) {
                const std::size_t c = wiring.sources[parents[k]].card;
                if (parents[k] == carrier[p]) value = rem % c;
                rem /= c;
            }
            table[r][value] = 1.0;
        }
        m.responses.push_back(std::move(table));
    }
    return m;
}

namespace detail {

/// Dirichlet(1, ..., 1) sample via normalized exponentials.
inline std::vector<double> random_simplex(std::size_t n, std::mt19937_64& rng) {
    std::vector<double> v(n);
    double s = 0.0;
    for (auto& x : v) {
        x = -std::log(1.0 - uniform01(rng));
        s += x;
    }
    for (auto& x : v) x /= s;
    return v;
}

}  // namespace detail

struct RandomModelOptions {
    std::size_t lambda_card = 3;
    double product_weight = 0.5;  ///< p(t|lambda) = w prod m_s + (1 - w) Dirichlet
    std::uint64_t seed = 0;
};

/// Model with strictly positive tables (so eps1* > 0) and random stochastic responses.
inline EpsilonLocalModel random_model(const NetworkWiring& wiring, const RandomModelOptions& opt = {}) {
    wiring.validate();
    if (opt.lambda_card == 0) throw DomainError("random_model: lambda_card must be positive");
    if (!(opt.product_weight > 0.0 && opt.product_weight <= 1.0)) throw DomainError("random_model: product_weight must lie in (0, 1]");
    std::mt19937_64 rng(opt.seed);
    EpsilonLocalModel m;
    m.wiring = wiring;
    m.p_lambda = detail::random_simplex(opt.lambda_card, rng);
    std::vector<std::vector<double>> marg;
    for (const auto& s : wiring.sources) marg.push_back(detail::random_simplex(s.card, rng));
    auto prod = detail::product_of_marginals(wiring, marg);
    for (std::size_t l = 0; l < opt.lambda_card; ++l) {
        auto d = detail::random_simplex(prod.size(), rng);
        for (std::size_t t = 0; t < d.size(); ++t) d[t] = opt.product_weight * prod[t] + (1.0 - opt.product_weight) * d[t];
        m.p_sources_given_lambda.push_back(std::move(d));
    }
    for (std::size_t p = 0; p < wiring.parties.size(); ++p) {
        std::vector<std::vector<double>> table;
        for (std::size_t r = 0; r < wiring.row_count(p); ++r) table.push_back(detail::random_simplex(wiring.output_card(p), rng));
        m.responses.push_back(std::move(table));
    }
    return m;
}

// ---- search ----

namespace detail {

/// Raises entries to the floor f and rescales the rest so the total is 1:
/// q_t <- max(f_t, c q_t) with c solving sum_t max(f_t, c q_t) = 1 (needs sum f < 1).
inline void water_fill(std::span<double> q, const std::vector<double>& f) {
    std::vector<std::size_t> order;
    double fixed = 0.0;
    for (std::size_t t = 0; t < q.size(); ++t) {
        if (q[t] > 0.0) order.push_back(t);
        else fixed += f[t];
    }
    std::sort(order.begin(), order.end(), [&](auto i, auto j) { return f[i] / q[i] > f[j] / q[j]; });
    // Entries order[0..k) sit on the floor; the rest scale by c.
    double floor_sum = fixed, scaled_sum = 0.0;
    for (auto t : order) scaled_sum += q[t];
    double c = (1.0 - floor_sum) / scaled_sum;
    for (std::size_t k = 0; k < order.size(); ++k) {
        const auto t = order[k];
        if (c * q[t] >= f[t]) break;
        floor_sum += f[t];
        scaled_sum -= q[t];
        c = scaled_sum > 0.0 ? (1.0 - floor_sum) / scaled_sum : 0.0;
    }
    for (std::size_t t = 0; t < q.size(); ++t) q[t] = std::max(f[t], c * q[t]);
}

}  // namespace detail

/// Moves q into {q >= eps1 * prod of its marginals}: normalize, raise entries
/// below the floor and rescale the others to total 1, recompute the marginals,
/// repeat until the largest relative deficit is below 1e-12 (at most 100 rounds).
inline void project_floor(const NetworkWiring& w, std::span<double> q, double eps1) {
    const double s = std::accumulate(q.begin(), q.end(), 0.0);
    for (auto& x : q) x /= s;
    if (eps1 <= 0.0) return;
    if (eps1 >= 1.0) {
        auto prod = detail::product_of_marginals(w, detail::source_marginals(w, q));
        std::copy(prod.begin(), prod.end(), q.begin());
        return;
    }
    for (int it = 0; it < 100; ++it) {
        auto floor = detail::product_of_marginals(w, detail::source_marginals(w, q));
        double deficit = 0.0;
        for (std::size_t t = 0; t < q.size(); ++t) {
            floor[t] *= eps1;
            if (floor[t] > 0.0) deficit = std::max(deficit, (floor[t] - q[t]) / floor[t]);
        }
        if (deficit < tol::kExact) break;
        detail::water_fill(q, floor);
    }
}

struct SearchOptions {
    double eps1 = 0.5;
    std::vector<std::size_t> source_cards;  ///< empty: 4 per source
    std::size_t lambda_card = 4;
    std::size_t restarts = 32;
    std::size_t batch = 4;  ///< restarts per early-stop round; independent of threads
    std::size_t lm_iterations = 1500;
    double stop_tv = 1e-10;
    std::uint64_t seed = 0;
    std::size_t threads = 0;
};

struct SearchResult {
    EpsilonLocalModel model;
    double tv = 1.0;
    std::size_t restarts_run = 0;
    std::size_t best_restart = 0;
};

namespace detail {

/// Flat parameter vector: q (tuple weights) followed by every response row.
class SearchProblem {
public:
    SearchProblem(NetworkWiring w, const JointDistribution& target, double eps1) : w_(std::move(w)), eps1_(eps1) {
        target_.assign(target.probs().begin(), target.probs().end());
        Radix tr = w_.source_radix();
        T_ = tr.total();
        std::vector<std::size_t> out_cards;
        for (std::size_t p = 0; p < w_.parties.size(); ++p) out_cards.push_back(w_.output_card(p));
        orad_ = Radix(out_cards);
        rows_.assign(w_.parties.size(), std::vector<std::size_t>(T_));
        for (std::size_t t = 0; t < T_; ++t) {
            auto d = tr.unravel(t);
            for (std::size_t p = 0; p < w_.parties.size(); ++p) rows_[p][t] = w_.row_of(p, d);
        }
        blocks_.push_back({0, T_});
        std::size_t off = T_;
        for (std::size_t p = 0; p < w_.parties.size(); ++p) {
            party_offset_.push_back(off);
            for (std::size_t r = 0; r < w_.row_count(p); ++r) {
                blocks_.push_back({off, out_cards[p]});
                off += out_cards[p];
            }
        }
        n_ = off;
    }

    std::size_t size() const { return n_; }
    std::size_t outcomes() const { return orad_.total(); }

    double response(const std::vector<double>& x, std::size_t p, std::size_t row, std::size_t o) const {
        return x[party_offset_[p] + row * orad_.sizes()[p] + o];
    }

    std::vector<double> probs(const std::vector<double>& x) const {
        std::vector<double> out(orad_.total(), 0.0);
        const std::size_t P = w_.parties.size();
        for (std::size_t t = 0; t < T_; ++t) {
            if (x[t] == 0.0) continue;
            for (std::size_t o = 0; o < out.size(); ++o) {
                double v = x[t];
                for (std::size_t p = 0; p < P; ++p) v *= response(x, p, rows_[p][t], orad_.digit(o, p));
                out[o] += v;
            }
        }
        return out;
    }

    Eigen::VectorXd residual(const std::vector<double>& x) const {
        auto p = probs(x);
        Eigen::VectorXd r(static_cast<Eigen::Index>(p.size()));
        for (std::size_t o = 0; o < p.size(); ++o) r(static_cast<Eigen::Index>(o)) = p[o] - target_[o];
        return r;
    }

    double tv(const std::vector<double>& x) const {
        auto p = probs(x);
        double s = 0.0;
        for (std::size_t o = 0; o < p.size(); ++o) s += std::abs(p[o] - target_[o]);
        return 0.5 * s;
    }

    Eigen::MatrixXd jacobian(const std::vector<double>& x) const {
        const std::size_t P = w_.parties.size();
        Eigen::MatrixXd J = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(orad_.total()), static_cast<Eigen::Index>(n_));
        std::vector<double> f(P);
        for (std::size_t t = 0; t < T_; ++t)
            for (std::size_t o = 0; o < orad_.total(); ++o) {
                double all = 1.0;
                for (std::size_t p = 0; p < P; ++p) {
                    f[p] = response(x, p, rows_[p][t], orad_.digit(o, p));
                    all *= f[p];
                }
                const auto oi = static_cast<Eigen::Index>(o);
                J(oi, static_cast<Eigen::Index>(t)) += all;
                for (std::size_t p = 0; p < P; ++p) {
                    double others = x[t];
                    for (std::size_t k = 0; k < P; ++k)
                        if (k != p) others *= f[k];
                    J(oi, static_cast<Eigen::Index>(party_offset_[p] + rows_[p][t] * orad_.sizes()[p] + orad_.digit(o, p))) += others;
                }
            }
        return J;
    }

    /// Clip negatives, renormalize blocks, then the floor projection.
    void repair(std::vector<double>& x) const {
        for (const auto& [off, len] : blocks_) {
            double s = 0.0;
            for (std::size_t i = off; i < off + len; ++i) {
                x[i] = std::max(x[i], 0.0);
                s += x[i];
            }
            if (s <= 0.0)
                for (std::size_t i = off; i < off + len; ++i) x[i] = 1.0 / static_cast<double>(len);
            else
                for (std::size_t i = off; i < off + len; ++i) x[i] /= s;
        }
        project_floor(w_, std::span<double>(x.data(), T_), eps1_);
    }

    std::vector<double> random_start(std::mt19937_64& rng) const {
        std::vector<double> x(n_);
        for (const auto& [off, len] : blocks_) {
            auto v = random_simplex(len, rng);
            std::copy(v.begin(), v.end(), x.begin() + static_cast<std::ptrdiff_t>(off));
        }
        project_floor(w_, std::span<double>(x.data(), T_), eps1_);
        return x;
    }

    /// eps1 * prod of marginals for the q block of x.
    std::vector<double> floor(const std::vector<double>& x) const {
        auto f = product_of_marginals(w_, source_marginals(w_, std::span<const double>(x.data(), T_)));
        for (auto& v : f) v *= eps1_;
        return f;
    }

    const std::vector<std::pair<std::size_t, std::size_t>>& blocks() const { return blocks_; }

    EpsilonLocalModel to_model(const std::vector<double>& x, std::size_t lambda_card) const {
        EpsilonLocalModel m;
        m.wiring = w_;
        m.p_lambda.assign(lambda_card, 1.0 / static_cast<double>(lambda_card));
        m.p_sources_given_lambda.assign(lambda_card, std::vector<double>(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(T_)));
        for (std::size_t p = 0; p < w_.parties.size(); ++p) {
            std::vector<std::vector<double>> table(w_.row_count(p), std::vector<double>(orad_.sizes()[p]));
            for (std::size_t r = 0; r < table.size(); ++r)
                for (std::size_t o = 0; o < table[r].size(); ++o) table[r][o] = response(x, p, r, o);
            m.responses.push_back(std::move(table));
        }
        return m;
    }

private:
    NetworkWiring w_;
    double eps1_;
    std::vector<double> target_;
    std::size_t T_ = 0, n_ = 0;
    Radix orad_;
    std::vector<std::vector<std::size_t>> rows_;
    std::vector<std::size_t> party_offset_;
    std::vector<std::pair<std::size_t, std::size_t>> blocks_;
};

inline double half_sq(const Eigen::VectorXd& r) { return 0.5 * r.squaredNorm(); }

/// Blockwise softmax: each simplex block of x is softmax of the matching block of z.
inline std::vector<double> softmax_blocks(const SearchProblem& prob, const Eigen::VectorXd& z) {
    std::vector<double> x(static_cast<std::size_t>(z.size()));
    for (const auto& [off, len] : prob.blocks()) {
        double m = -std::numeric_limits<double>::infinity();
        for (std::size_t i = off; i < off + len; ++i) m = std::max(m, z(static_cast<Eigen::Index>(i)));
        double s = 0.0;
        for (std::size_t i = off; i < off + len; ++i) s += x[i] = std::exp(z(static_cast<Eigen::Index>(i)) - m);
        for (std::size_t i = off; i < off + len; ++i) x[i] /= s;
    }
    return x;
}

inline Eigen::VectorXd log_coordinates(const std::vector<double>& x) {
    Eigen::VectorXd z(static_cast<Eigen::Index>(x.size()));
    for (std::size_t i = 0; i < x.size(); ++i) z(static_cast<Eigen::Index>(i)) = std::log(std::max(x[i], 1e-300));
    return z;
}

/// Levenberg-Marquardt on 0.5 |p - target|^2 in softmax coordinates (one
/// softmax per simplex block), damped kernel-form solve. Every trial point is
/// passed through the eps1 floor projection before it is scored.
inline void lm_phase(const SearchProblem& prob, std::vector<double>& x, std::size_t iters, double stop_tv) {
    double mu = 1e-3;
    Eigen::VectorXd z = log_coordinates(x);
    Eigen::VectorXd r = prob.residual(x);
    double f = half_sq(r);
    for (std::size_t it = 0; it < iters; ++it) {
        if (prob.tv(x) < stop_tv) return;
        const Eigen::MatrixXd J = prob.jacobian(x);
        Eigen::MatrixXd Jz(J.rows(), J.cols());
        for (const auto& [off, len] : prob.blocks()) {
            const auto o = static_cast<Eigen::Index>(off), l = static_cast<Eigen::Index>(len);
            Eigen::VectorXd xb(l);
            for (Eigen::Index i = 0; i < l; ++i) xb(i) = x[off + static_cast<std::size_t>(i)];
            Eigen::MatrixXd d = -xb * xb.transpose();
            d.diagonal() += xb;
            Jz.middleCols(o, l) = J.middleCols(o, l) * d;
        }
        // q entries sitting on the eps1 floor that descent would push lower are frozen.
        const auto floor = prob.floor(x);
        const Eigen::VectorXd g = Jz.transpose() * r;
        for (std::size_t t = 0; t < floor.size(); ++t)
            if (x[t] <= floor[t] * (1.0 + 1e-9) && g(static_cast<Eigen::Index>(t)) > 0.0) Jz.col(static_cast<Eigen::Index>(t)).setZero();
        const Eigen::MatrixXd K = Jz * Jz.transpose();
        bool accepted = false;
        for (int tries = 0; tries < 12 && !accepted; ++tries) {
            Eigen::MatrixXd A = K;
            A.diagonal().array() += mu;
            const Eigen::VectorXd dz = -(Jz.transpose() * A.ldlt().solve(r));
            auto y = softmax_blocks(prob, z + dz);
            prob.repair(y);
            Eigen::VectorXd ry = prob.residual(y);
            const double fy = half_sq(ry);
            if (fy < f) {
                x = std::move(y);
                z = log_coordinates(x);
                r = std::move(ry);
                f = fy;
                mu = std::max(mu / 3.0, 1e-15);
                accepted = true;
            } else {
                mu *= 4.0;
            }
        }
        if (!accepted && mu > 1e8) return;
    }
}

}  // namespace detail

/// Multistart falsifier: finds an eps1-feasible model whose induced distribution
/// is close to `target` in total variation. Never a proof of nonexistence.
///
/// The induced distribution depends on the model only through
/// q(t) = sum_lambda p(lambda) p(t|lambda), and q meets the eps1 floor whenever a
/// model does; the search therefore works on q and the response tables and
/// returns a model with uniform p(lambda) and every row equal to q.
inline SearchResult search(const JointDistribution& target, NetworkWiring wiring, const SearchOptions& opt) {
    if (!(opt.eps1 >= 0.0) || opt.eps1 > 1.0) throw DomainError("search: infeasible eps1 floor (must lie in [0, 1]), got " + format_double(opt.eps1));
    if (opt.restarts == 0 || opt.batch == 0 || opt.lm_iterations == 0)
        throw DomainError("search: budget must be positive");
    if (opt.lambda_card == 0 || opt.lambda_card > 6) throw DomainError("search: lambda cardinality must lie in [1, 6]");
    if (!opt.source_cards.empty()) {
        if (opt.source_cards.size() != wiring.sources.size()) throw DomainError("search: one cardinality per source required");
        for (std::size_t s = 0; s < wiring.sources.size(); ++s) wiring.sources[s].card = opt.source_cards[s];
    }
    for (const auto& s : wiring.sources)
        if (s.card == 0 || s.card > 6) throw DomainError("search: source cardinalities must lie in [1, 6]");
    wiring.validate();
    if (target.variables() != wiring.output_variables()) throw DomainError("search: target variables do not match wiring outputs");

    // Odd restarts search the product family (floor eps1 = 1), which meets any eps1 <= 1 floor.
    detail::SearchProblem prob(wiring, target, opt.eps1), product(wiring, target, 1.0);
    SearchResult best;
    std::vector<double> best_x;
    for (std::size_t start = 0; start < opt.restarts; start += opt.batch) {
        const std::size_t count = std::min(opt.batch, opt.restarts - start);
        std::vector<std::vector<double>> xs(count);
        std::vector<double> tvs(count);
        parallel_for(count, opt.threads, [&](std::size_t i) {
            std::seed_seq seq{opt.seed, static_cast<std::uint64_t>(start + i)};
            std::mt19937_64 rng(seq);
            const auto& pr = ((start + i) % 2 == 1) ? product : prob;
            auto x = pr.random_start(rng);
            detail::lm_phase(pr, x, opt.lm_iterations, opt.stop_tv);
            tvs[i] = prob.tv(x);
            xs[i] = std::move(x);
        });
        for (std::size_t i = 0; i < count; ++i)
            if (best_x.empty() || tvs[i] < best.tv) {
                best.tv = tvs[i];
                best.best_restart = start + i;
                best_x = xs[i];
            }
        best.restarts_run = start + count;
        if (best.tv < opt.stop_tv) break;
    }
    best.model = prob.to_model(best_x, opt.lambda_card);
    best.tv = total_variation(induced_distribution(best.model), target);
    return best;
}

// ---- JSON ----

inline nlohmann::json to_json(const NetworkWiring& w) {
    nlohmann::json sources = nlohmann::json::array(), parties = nlohmann::json::array();
    for (const auto& s : w.sources) sources.push_back({{"name", s.name}, {"card", s.card}});
    for (const auto& p : w.parties) {
        nlohmann::json parents = nlohmann::json::array(), outputs = nlohmann::json::array();
        for (auto s : p.parents) parents.push_back(w.sources[s].name);
        for (const auto& v : p.outputs) outputs.push_back({{"name", v.name}, {"alphabet", v.alphabet}});
        parties.push_back({{"name", p.name}, {"parents", parents}, {"outputs", outputs}});
    }
    return {{"sources", sources}, {"parties", parties}};
}

inline nlohmann::json to_json(const EpsilonLocalModel& m) {
    nlohmann::json responses = nlohmann::json::object();
    for (std::size_t p = 0; p < m.responses.size(); ++p) responses[m.wiring.parties[p].name] = m.responses[p];
    return {{"wiring", to_json(m.wiring)}, {"p_lambda", m.p_lambda}, {"p_sources_given_lambda", m.p_sources_given_lambda}, {"responses", responses}};
}

inline nlohmann::json to_json(const EpsilonAudit& a) {
    return {{"eps1_star", a.eps1_star}, {"eps2_star", a.eps2_star}, {"strict", a.strict}, {"source_marginals", a.source_marginals}};
}

inline NetworkWiring wiring_from_json(const nlohmann::json& j) {
    NetworkWiring w;
    for (const auto& s : j.at("sources")) w.sources.push_back({s.at("name").get<std::string>(), s.at("card").get<std::size_t>()});
    for (const auto& p : j.at("parties")) {
        PartySpec ps;
        ps.name = p.at("name").get<std::string>();
        for (const auto& parent : p.at("parents")) {
            auto name = parent.get<std::string>();
            auto it = std::find_if(w.sources.begin(), w.sources.end(), [&](const auto& s) { return s.name == name; });
            if (it == w.sources.end()) throw DomainError("wiring JSON: party '" + ps.name + "' has unknown parent '" + name + "'");
            ps.parents.push_back(static_cast<std::size_t>(it - w.sources.begin()));
        }
        ps.outputs = variables_from_json(p.at("outputs"));
        w.parties.push_back(std::move(ps));
    }
    w.validate();
    return w;
}

inline EpsilonLocalModel model_from_json(const nlohmann::json& j) {
    try {
        EpsilonLocalModel m;
        m.wiring = wiring_from_json(j.at("wiring"));
        m.p_lambda = j.at("p_lambda").get<std::vector<double>>();
        m.p_sources_given_lambda = j.at("p_sources_given_lambda").get<std::vector<std::vector<double>>>();
        const auto& resp = j.at("responses");
        for (const auto& p : m.wiring.parties) {
            if (!resp.contains(p.name)) throw DomainError("model JSON: no response table for party '" + p.name + "'");
            m.responses.push_back(resp.at(p.name).get<std::vector<std::vector<double>>>());
        }
        m.validate();
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("model JSON: ") + e.what());
    }
}

}  // namespace netloc::models
