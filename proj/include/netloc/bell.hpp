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
 * @file    bell.hpp
 * @brief   Bipartite Bell expressions in positive/negative coefficient form and
 *          their source-dependent network lift.
 */

#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "netloc/common.hpp"
#include "netloc/distribution.hpp"

namespace netloc::bell {

/// Alphabet sizes for outputs (a, b) and inputs (x, y).
struct BellShape {
    std::size_t a = 2, b = 2, x = 2, y = 2;

    std::size_t size() const { return a * b * x * y; }
    std::size_t index(std::size_t ia, std::size_t ib, std::size_t ix, std::size_t iy) const {
        if (ia >= a || ib >= b || ix >= x || iy >= y) throw DomainError("BellShape: index out of range");
        return ((ia * b + ib) * x + ix) * y + iy;
    }
    bool operator==(const BellShape&) const = default;
};

/// sum w+ p(ab|xy) - sum w- p(ab|xy) <= L, with w+/- >= 0.
class BipartiteBellExpression {
public:
    BipartiteBellExpression(BellShape shape, std::vector<double> omega_plus, std::vector<double> omega_minus, double local_bound)
        : shape_(shape), plus_(std::move(omega_plus)), minus_(std::move(omega_minus)), bound_(local_bound) {
        if (shape_.size() == 0) throw DomainError("BipartiteBellExpression: empty shape");
        if (plus_.size() != shape_.size() || minus_.size() != shape_.size())
            throw DomainError("BipartiteBellExpression: coefficient tables do not match shape");
        for (std::size_t k = 0; k < plus_.size(); ++k)
            if (!(plus_[k] >= 0.0) || !(minus_[k] >= 0.0)) throw DomainError("BipartiteBellExpression: negative coefficient");
        if (!std::isfinite(bound_)) throw DomainError("BipartiteBellExpression: non-finite local bound");
    }

    const BellShape& shape() const { return shape_; }
    std::span<const double> omega_plus() const { return plus_; }
    std::span<const double> omega_minus() const { return minus_; }
    double local_bound() const { return bound_; }

private:
    BellShape shape_;
    std::vector<double> plus_, minus_;
    double bound_;
};

/// p(a,b|x,y), flat in (a,b,x,y) row-major order.
class ConditionalBehaviour {
public:
    ConditionalBehaviour(BellShape shape, std::vector<double> probs) : shape_(shape), p_(std::move(probs)) {
        if (p_.size() != shape_.size()) throw DomainError("ConditionalBehaviour: table does not match shape");
        for (double v : p_)
            if (!std::isfinite(v) || v < -tol::kExact) throw DomainError("ConditionalBehaviour: negative entry");
        for (std::size_t x = 0; x < shape_.x; ++x)
            for (std::size_t y = 0; y < shape_.y; ++y) {
                double s = 0.0;
                for (std::size_t a = 0; a < shape_.a; ++a)
                    for (std::size_t b = 0; b < shape_.b; ++b) s += p_[shape_.index(a, b, x, y)];
                if (std::abs(s - 1.0) > tol::kNormalization)
                    throw DomainError("ConditionalBehaviour: p(.|x=" + std::to_string(x) + ",y=" + std::to_string(y) + ") not normalized");
            }
    }

    /// Conditions a joint distribution on the input variables.
    static ConditionalBehaviour from_joint(const JointDistribution& d, const std::string& a, const std::string& b,
                                           const std::string& x, const std::string& y) {
        std::vector<std::string> keep{a, b, x, y};
        auto m = marginal(d, std::span<const std::string>(keep));
        const auto& sz = m.radix().sizes();
        BellShape shape{sz[0], sz[1], sz[2], sz[3]};
        std::vector<double> p(shape.size(), 0.0);
        for (std::size_t ix = 0; ix < shape.x; ++ix)
            for (std::size_t iy = 0; iy < shape.y; ++iy) {
                double px = 0.0;
                for (std::size_t ia = 0; ia < shape.a; ++ia)
                    for (std::size_t ib = 0; ib < shape.b; ++ib) px += m[shape.index(ia, ib, ix, iy)];
                if (px <= tol::kExact) throw DomainError("ConditionalBehaviour: input pair with zero probability");
                for (std::size_t ia = 0; ia < shape.a; ++ia)
                    for (std::size_t ib = 0; ib < shape.b; ++ib) p[shape.index(ia, ib, ix, iy)] = m[shape.index(ia, ib, ix, iy)] / px;
            }
        return ConditionalBehaviour(shape, std::move(p));
    }

    const BellShape& shape() const { return shape_; }
    std::span<const double> probs() const { return p_; }
    double operator()(std::size_t a, std::size_t b, std::size_t x, std::size_t y) const { return p_[shape_.index(a, b, x, y)]; }

private:
    BellShape shape_;
    std::vector<double> p_;
};

/// p(00|00) - p(01|01) - p(10|10) - p(00|11) <= 0.
inline BipartiteBellExpression eberhard_chsh() {
    BellShape s{};
    std::vector<double> plus(s.size(), 0.0), minus(s.size(), 0.0);
    plus[s.index(0, 0, 0, 0)] = 1.0;
    minus[s.index(0, 1, 0, 1)] = 1.0;
    minus[s.index(1, 0, 1, 0)] = 1.0;
    minus[s.index(0, 0, 1, 1)] = 1.0;
    return BipartiteBellExpression(s, std::move(plus), std::move(minus), 0.0);
}

inline double eval_bipartite(const BipartiteBellExpression& expr, const ConditionalBehaviour& p) {
    if (!(expr.shape() == p.shape())) throw DomainError("eval_bipartite: shape mismatch");
    double v = 0.0;
    for (std::size_t k = 0; k < p.probs().size(); ++k) v += (expr.omega_plus()[k] - expr.omega_minus()[k]) * p.probs()[k];
    return v;
}

struct EpsilonPair {
    double eps1 = 1.0;
    double eps2 = 1.0;

    void validate() const {
        if (!(eps1 > 0.0 && eps1 <= 1.0)) throw DomainError("eps1 must lie in (0, 1], got " + format_double(eps1));
        if (!(eps2 >= 1.0) || !std::isfinite(eps2)) throw DomainError("eps2 must be finite and >= 1, got " + format_double(eps2));
    }
};

struct XiPair {
    double xi1 = 0.0;
    double xi2 = 0.0;
};

namespace detail {

/// (min, max) over the support of a normalized marginal.
inline std::pair<double, double> support_extrema(std::span<const double> p, const char* what) {
    double sum = 0.0, lo = 0.0, hi = 0.0;
    bool any = false;
    for (double v : p) {
        if (v < -tol::kExact) throw DomainError(std::string(what) + ": negative probability");
        sum += v;
        if (v > 0.0) {
            lo = any ? std::min(lo, v) : v;
            hi = any ? std::max(hi, v) : v;
            any = true;
        }
    }
    if (!any) throw DomainError(std::string(what) + ": empty support");
    if (std::abs(sum - 1.0) > tol::kNormalization) throw DomainError(std::string(what) + ": marginal not normalized");
    return {lo, hi};
}

}  // namespace detail

/// xi1 = eps1^3/eps2^6 * min p(x) * min p(y), xi2 = eps2^3/eps1^6 * max p(x) * max p(y),
/// extrema over the support.
inline XiPair lemma1_xis(const EpsilonPair& eps, std::span<const double> p_x, std::span<const double> p_y) {
    eps.validate();
    auto [x_lo, x_hi] = detail::support_extrema(p_x, "lemma1_xis p(a_C)");
    auto [y_lo, y_hi] = detail::support_extrema(p_y, "lemma1_xis p(b_C)");
    double e1 = eps.eps1, e2 = eps.eps2;
    return {e1 * e1 * e1 / std::pow(e2, 6) * x_lo * y_lo, e2 * e2 * e2 / std::pow(e1, 6) * x_hi * y_hi};
}

class LiftedNetworkExpression {
public:
    LiftedNetworkExpression(BipartiteBellExpression base, double xi1, double xi2) : base_(std::move(base)), xi1_(xi1), xi2_(xi2) {
        if (!(xi1_ > 0.0) || !(xi2_ > 0.0) || !std::isfinite(xi1_) || !std::isfinite(xi2_))
            throw DomainError("LiftedNetworkExpression: xi1 and xi2 must be positive and finite");
    }

    const BipartiteBellExpression& base() const { return base_; }
    double xi1() const { return xi1_; }
    double xi2() const { return xi2_; }
    double bound() const { return xi1_ * xi2_ * base_.local_bound(); }

private:
    BipartiteBellExpression base_;
    double xi1_, xi2_;
};

inline LiftedNetworkExpression lift(const BipartiteBellExpression& expr, double xi1, double xi2) {
    return LiftedNetworkExpression(expr, xi1, xi2);
}

/// Proof that the effective inputs are faithful copies (agreement probability 1).
class ConsistencyWitness {
public:
    double probability() const { return p_; }
    const std::vector<VariablePair>& pairs() const { return pairs_; }

private:
    friend ConsistencyWitness verify_consistency(const JointDistribution&, std::span<const VariablePair>);
    ConsistencyWitness(double p, std::vector<VariablePair> pairs) : p_(p), pairs_(std::move(pairs)) {}
    double p_;
    std::vector<VariablePair> pairs_;
};

/// Throws unless the listed pairs agree with probability 1 within 1e-12.
inline ConsistencyWitness verify_consistency(const JointDistribution& d, std::span<const VariablePair> pairs) {
    double p = consistency_probability(d, pairs);
    if (std::abs(p - 1.0) > tol::kExact) throw DomainError("consistency condition fails: agreement probability " + format_double(p));
    return ConsistencyWitness(p, std::vector<VariablePair>(pairs.begin(), pairs.end()));
}

inline ConsistencyWitness verify_consistency(const JointDistribution& d, std::initializer_list<VariablePair> pairs) {
    return verify_consistency(d, std::span<const VariablePair>(pairs.begin(), pairs.size()));
}

/// Which joint variables play outputs (a, b) and effective inputs (x, y).
struct Roles {
    std::string a = "a_B";
    std::string b = "b_A";
    std::string x = "a_C";
    std::string y = "b_C";
};

struct NamedMarginal {
    std::string variable;
    std::vector<double> probs;
};

struct CertificateResult {
    double lhs = 0.0;
    double bound = 0.0;
    double margin = 0.0;  ///< lhs - bound
    bool violated = false;
    std::optional<EpsilonPair> eps;
    double xi1 = 0.0;
    double xi2 = 0.0;
    std::vector<NamedMarginal> marginals;
};

/// Violation tolerance on lhs - bound, scaled down with xi1 so certificates stay
/// meaningful when xi1 * p is far below 1e-12.
inline double lifted_tolerance(double xi1) { return tol::kExact * std::min(1.0, xi1); }

/// LHS = sum (xi1 w+ - xi2 w-) p(a,b,x,y) on joint probabilities.
inline CertificateResult eval_lifted(const LiftedNetworkExpression& lifted, const JointDistribution& joint,
                                     const std::optional<ConsistencyWitness>& witness, const Roles& roles = {}) {
    if (!witness) throw DomainError("eval_lifted: consistency witness not supplied");
    for (const auto* name : {&roles.a, &roles.b, &roles.x, &roles.y})
        if (!joint.has(*name)) throw DomainError("eval_lifted: joint lacks variable '" + *name + "'");
    std::vector<std::string> keep{roles.a, roles.b, roles.x, roles.y};
    auto m = marginal(joint, std::span<const std::string>(keep));
    const auto& sz = m.radix().sizes();
    const auto& shape = lifted.base().shape();
    if (!(BellShape{sz[0], sz[1], sz[2], sz[3]} == shape)) throw DomainError("eval_lifted: joint alphabets do not match expression shape");

    double pos = 0.0, neg = 0.0;
    for (std::size_t k = 0; k < m.size(); ++k) {
        pos += lifted.base().omega_plus()[k] * m[k];
        neg += lifted.base().omega_minus()[k] * m[k];
    }
    CertificateResult r;
    r.xi1 = lifted.xi1();
    r.xi2 = lifted.xi2();
    r.lhs = r.xi1 * pos - r.xi2 * neg;
    r.bound = lifted.bound();
    r.margin = r.lhs - r.bound;
    r.violated = r.margin > lifted_tolerance(r.xi1);
    for (const auto* name : {&roles.x, &roles.y}) {
        auto mx = marginal(joint, {*name});
        r.marginals.push_back({*name, std::vector<double>(mx.probs().begin(), mx.probs().end())});
    }
    return r;
}

// ---- JSON ----

inline nlohmann::json to_json(const BipartiteBellExpression& e) {
    const auto& s = e.shape();
    nlohmann::json plus = nlohmann::json::array(), minus = nlohmann::json::array();
    for (std::size_t a = 0; a < s.a; ++a)
        for (std::size_t b = 0; b < s.b; ++b)
            for (std::size_t x = 0; x < s.x; ++x)
                for (std::size_t y = 0; y < s.y; ++y) {
                    std::size_t k = s.index(a, b, x, y);
                    if (e.omega_plus()[k] != 0.0) plus.push_back({a, b, x, y, e.omega_plus()[k]});
                    if (e.omega_minus()[k] != 0.0) minus.push_back({a, b, x, y, e.omega_minus()[k]});
                }
    return {{"omega_plus", plus}, {"omega_minus", minus}, {"L", e.local_bound()}, {"shape", {s.a, s.b, s.x, s.y}}};
}

/// "shape" is optional; without it each dimension is max index + 1 (at least 2).
inline BipartiteBellExpression expression_from_json(const nlohmann::json& j) {
    try {
        BellShape s{};
        if (j.contains("shape")) {
            const auto& sh = j.at("shape");
            s = {sh.at(0).get<std::size_t>(), sh.at(1).get<std::size_t>(), sh.at(2).get<std::size_t>(), sh.at(3).get<std::size_t>()};
        } else {
            for (const char* key : {"omega_plus", "omega_minus"})
                for (const auto& row : j.at(key)) {
                    s.a = std::max(s.a, row.at(0).get<std::size_t>() + 1);
                    s.b = std::max(s.b, row.at(1).get<std::size_t>() + 1);
                    s.x = std::max(s.x, row.at(2).get<std::size_t>() + 1);
                    s.y = std::max(s.y, row.at(3).get<std::size_t>() + 1);
                }
        }
        std::vector<double> plus(s.size(), 0.0), minus(s.size(), 0.0);
        auto fill = [&](const nlohmann::json& rows, std::vector<double>& out) {
            for (const auto& row : rows) {
                if (row.size() != 5) throw DomainError("Bell expression JSON: coefficient rows are [a,b,x,y,w]");
                out[s.index(row[0].get<std::size_t>(), row[1].get<std::size_t>(), row[2].get<std::size_t>(), row[3].get<std::size_t>())] +=
                    row[4].get<double>();
            }
        };
        fill(j.at("omega_plus"), plus);
        fill(j.at("omega_minus"), minus);
        return BipartiteBellExpression(s, std::move(plus), std::move(minus), j.at("L").get<double>());
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("Bell expression JSON: ") + e.what());
    }
}

}  // namespace netloc::bell
