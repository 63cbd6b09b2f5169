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
 * @file    distribution.hpp
 * @brief   Finite joint distributions over named discrete variables.
 *
 * Index convention (used everywhere in netloc, including quantum amplitudes):
 * outcome tuples are flattened row-major, the FIRST variable is the most
 * significant digit and the LAST variable varies fastest.
 */

#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "netloc/common.hpp"

namespace netloc {

struct Variable {
    std::string name;
    std::vector<std::string> alphabet;

    bool operator==(const Variable&) const = default;
};

/// Binary variable with labels "0" and "1".
inline Variable bit(std::string name) { return Variable{std::move(name), {"0", "1"}}; }

/// Partial assignment name -> label.
using Assignment = std::vector<std::pair<std::string, std::string>>;

/// Label indices, one per variable.
using Outcome = std::vector<std::size_t>;

/// Mixed-radix helper for the row-major convention.
class Radix {
public:
    Radix() = default;
    explicit Radix(std::vector<std::size_t> sizes) : sizes_(std::move(sizes)) {
        strides_.assign(sizes_.size(), 1);
        total_ = 1;
        for (std::size_t i = sizes_.size(); i-- > 0;) {
            strides_[i] = total_;
            total_ *= sizes_[i];
        }
    }

    std::size_t total() const { return total_; }
    std::size_t rank() const { return sizes_.size(); }
    const std::vector<std::size_t>& sizes() const { return sizes_; }
    std::size_t stride(std::size_t i) const { return strides_[i]; }

    std::size_t digit(std::size_t flat, std::size_t i) const { return (flat / strides_[i]) % sizes_[i]; }

    Outcome unravel(std::size_t flat) const {
        Outcome out(sizes_.size());
        for (std::size_t i = 0; i < sizes_.size(); ++i) out[i] = digit(flat, i);
        return out;
    }

    std::size_t ravel(std::span<const std::size_t> digits) const {
        std::size_t flat = 0;
        for (std::size_t i = 0; i < sizes_.size(); ++i) flat += digits[i] * strides_[i];
        return flat;
    }

private:
    std::vector<std::size_t> sizes_;
    std::vector<std::size_t> strides_;
    std::size_t total_ = 1;
};

class JointDistribution {
public:
    JointDistribution() = default;

    /// Validates shape and normalization; entries in [-1e-12, 0) are clamped to 0.
    JointDistribution(std::vector<Variable> variables, std::vector<double> probs)
        : variables_(std::move(variables)), probs_(std::move(probs)) {
        if (variables_.empty()) throw DomainError("JointDistribution: no variables");
        std::vector<std::size_t> sizes;
        for (std::size_t i = 0; i < variables_.size(); ++i) {
            const auto& v = variables_[i];
            if (v.alphabet.empty()) throw DomainError("JointDistribution: empty alphabet for '" + v.name + "'");
            for (std::size_t j = 0; j < i; ++j)
                if (variables_[j].name == v.name) throw DomainError("JointDistribution: duplicate variable '" + v.name + "'");
            sizes.push_back(v.alphabet.size());
        }
        radix_ = Radix(std::move(sizes));
        if (probs_.size() != radix_.total())
            throw DomainError("JointDistribution: expected " + std::to_string(radix_.total()) + " probabilities, got " +
                              std::to_string(probs_.size()));
        double sum = 0.0;
        for (double& p : probs_) {
            if (!std::isfinite(p) || p < -tol::kExact) throw DomainError("JointDistribution: negative or non-finite entry");
            if (p < 0.0) p = 0.0;
            sum += p;
        }
        if (std::abs(sum - 1.0) > tol::kNormalization)
            throw DomainError("JointDistribution: probabilities sum to " + format_double(sum));
    }

    const std::vector<Variable>& variables() const { return variables_; }
    std::span<const double> probs() const { return probs_; }
    const Radix& radix() const { return radix_; }
    std::size_t size() const { return probs_.size(); }
    double operator[](std::size_t flat) const { return probs_[flat]; }

    std::vector<std::string> names() const {
        std::vector<std::string> out;
        for (const auto& v : variables_) out.push_back(v.name);
        return out;
    }

    std::size_t index_of(std::string_view name) const {
        for (std::size_t i = 0; i < variables_.size(); ++i)
            if (variables_[i].name == name) return i;
        throw DomainError("unknown variable '" + std::string(name) + "'");
    }

    bool has(std::string_view name) const {
        for (const auto& v : variables_)
            if (v.name == name) return true;
        return false;
    }

    std::size_t label_index(std::size_t var, std::string_view label) const {
        const auto& a = variables_.at(var).alphabet;
        for (std::size_t k = 0; k < a.size(); ++k)
            if (a[k] == label) return k;
        throw DomainError("unknown label '" + std::string(label) + "' for variable '" + variables_[var].name + "'");
    }

    /// Probability of a partial assignment (an event).
    double probability(const Assignment& event) const {
        std::vector<std::pair<std::size_t, std::size_t>> fixed;
        for (const auto& [name, label] : event) {
            std::size_t v = index_of(name);
            fixed.emplace_back(v, label_index(v, label));
        }
        double p = 0.0;
        for (std::size_t k = 0; k < probs_.size(); ++k) {
            bool match = true;
            for (auto [v, l] : fixed)
                if (radix_.digit(k, v) != l) {
                    match = false;
                    break;
                }
            if (match) p += probs_[k];
        }
        return p;
    }

    /// Probability of a full outcome tuple given by labels in variable order.
    double at(std::span<const std::string> labels) const {
        if (labels.size() != variables_.size()) throw DomainError("at: wrong tuple length");
        Outcome digits(labels.size());
        for (std::size_t i = 0; i < labels.size(); ++i) digits[i] = label_index(i, labels[i]);
        return probs_[radix_.ravel(digits)];
    }

private:
    std::vector<Variable> variables_;
    std::vector<double> probs_;
    Radix radix_;
};

/// Sums out every variable not in `keep`; the result lists variables in `keep` order.
inline JointDistribution marginal(const JointDistribution& d, std::span<const std::string> keep) {
    if (keep.empty()) throw DomainError("marginal: empty keep set");
    std::vector<std::size_t> idx;
    std::vector<Variable> vars;
    for (const auto& name : keep) {
        std::size_t v = d.index_of(name);
        if (std::find(idx.begin(), idx.end(), v) != idx.end()) throw DomainError("marginal: duplicate name '" + name + "'");
        idx.push_back(v);
        vars.push_back(d.variables()[v]);
    }
    std::vector<std::size_t> sizes;
    for (const auto& v : vars) sizes.push_back(v.alphabet.size());
    Radix out_radix(sizes);
    std::vector<double> out(out_radix.total(), 0.0);
    const Radix& in = d.radix();
    for (std::size_t k = 0; k < d.size(); ++k) {
        std::size_t flat = 0;
        for (std::size_t j = 0; j < idx.size(); ++j) flat += in.digit(k, idx[j]) * out_radix.stride(j);
        out[flat] += d[k];
    }
    return JointDistribution(std::move(vars), std::move(out));
}

inline JointDistribution marginal(const JointDistribution& d, std::initializer_list<std::string> keep) {
    std::vector<std::string> k(keep);
    return marginal(d, std::span<const std::string>(k));
}

/// Distribution of the remaining variables given an event of probability > 1e-12.
inline JointDistribution conditional(const JointDistribution& d, const Assignment& given) {
    std::vector<std::pair<std::size_t, std::size_t>> fixed;
    for (const auto& [name, label] : given) {
        std::size_t v = d.index_of(name);
        fixed.emplace_back(v, d.label_index(v, label));
    }
    std::vector<std::string> rest;
    for (std::size_t i = 0; i < d.variables().size(); ++i) {
        bool is_fixed = std::any_of(fixed.begin(), fixed.end(), [i](auto f) { return f.first == i; });
        if (!is_fixed) rest.push_back(d.variables()[i].name);
    }
    if (rest.empty()) throw DomainError("conditional: nothing left after conditioning");
    double pg = d.probability(given);
    if (pg <= tol::kExact) throw DomainError("conditional: conditioning event has probability " + format_double(pg));

    std::vector<Variable> vars;
    std::vector<std::size_t> rest_idx;
    for (const auto& name : rest) {
        rest_idx.push_back(d.index_of(name));
        vars.push_back(d.variables()[rest_idx.back()]);
    }
    std::vector<std::size_t> sizes;
    for (const auto& v : vars) sizes.push_back(v.alphabet.size());
    Radix out_radix(sizes);
    std::vector<double> out(out_radix.total(), 0.0);
    const Radix& in = d.radix();
    for (std::size_t k = 0; k < d.size(); ++k) {
        bool match = true;
        for (auto [v, l] : fixed)
            if (in.digit(k, v) != l) {
                match = false;
                break;
            }
        if (!match) continue;
        std::size_t flat = 0;
        for (std::size_t j = 0; j < rest_idx.size(); ++j) flat += in.digit(k, rest_idx[j]) * out_radix.stride(j);
        out[flat] += d[k] / pg;
    }
    return JointDistribution(std::move(vars), std::move(out));
}

using VariablePair = std::pair<std::string, std::string>;

/// Total probability that every listed pair of variables takes the same label.
inline double consistency_probability(const JointDistribution& d, std::span<const VariablePair> pairs) {
    std::vector<std::pair<std::size_t, std::size_t>> idx;
    for (const auto& [x, y] : pairs) {
        std::size_t i = d.index_of(x), j = d.index_of(y);
        if (d.variables()[i].alphabet != d.variables()[j].alphabet)
            throw DomainError("consistency_probability: alphabets of '" + x + "' and '" + y + "' differ");
        idx.emplace_back(i, j);
    }
    double p = 0.0;
    for (std::size_t k = 0; k < d.size(); ++k) {
        bool agree = std::all_of(idx.begin(), idx.end(),
                                 [&](auto ij) { return d.radix().digit(k, ij.first) == d.radix().digit(k, ij.second); });
        if (agree) p += d[k];
    }
    return p;
}

inline double consistency_probability(const JointDistribution& d, std::initializer_list<VariablePair> pairs) {
    std::vector<VariablePair> v(pairs);
    return consistency_probability(d, std::span<const VariablePair>(v));
}

inline double total_variation(const JointDistribution& a, const JointDistribution& b) {
    if (a.variables() != b.variables()) throw DomainError("total_variation: shape mismatch");
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += std::abs(a[k] - b[k]);
    return 0.5 * s;
}

/// Uniform double in [0, 1) from the top 53 bits of one 64-bit draw.
inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Inverse-CDF sampling over the flat lexicographic order, driven by
/// std::mt19937_64 seeded with `seed`.
inline std::vector<Outcome> sample(const JointDistribution& d, std::size_t n, std::uint64_t seed) {
    std::vector<double> cdf(d.size());
    std::partial_sum(d.probs().begin(), d.probs().end(), cdf.begin());
    std::size_t last_nonzero = 0;
    for (std::size_t k = 0; k < d.size(); ++k)
        if (d[k] > 0.0) last_nonzero = k;

    std::mt19937_64 rng(seed);
    std::vector<Outcome> out;
    out.reserve(n);
    for (std::size_t s = 0; s < n; ++s) {
        double u = uniform01(rng);
        auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        std::size_t k = (it == cdf.end()) ? last_nonzero : static_cast<std::size_t>(it - cdf.begin());
        out.push_back(d.radix().unravel(k));
    }
    return out;
}

struct EmpiricalEstimate {
    std::vector<Variable> variables;
    std::vector<std::uint64_t> counts;
    std::uint64_t n = 0;

    JointDistribution frequencies() const {
        std::vector<double> f(counts.size());
        for (std::size_t k = 0; k < counts.size(); ++k) f[k] = static_cast<double>(counts[k]) / static_cast<double>(n);
        return JointDistribution(variables, std::move(f));
    }

    /// sqrt(p(1-p)/n) per outcome tuple.
    std::vector<double> standard_errors() const {
        std::vector<double> se(counts.size());
        for (std::size_t k = 0; k < counts.size(); ++k) {
            double p = static_cast<double>(counts[k]) / static_cast<double>(n);
            se[k] = std::sqrt(p * (1.0 - p) / static_cast<double>(n));
        }
        return se;
    }
};

inline EmpiricalEstimate estimate(const std::vector<Variable>& variables, std::span<const Outcome> samples) {
    if (samples.empty()) throw DomainError("estimate: no samples (total is zero)");
    std::vector<std::size_t> sizes;
    for (const auto& v : variables) sizes.push_back(v.alphabet.size());
    Radix radix(sizes);
    EmpiricalEstimate e{variables, std::vector<std::uint64_t>(radix.total(), 0), samples.size()};
    for (const auto& s : samples) {
        if (s.size() != variables.size()) throw DomainError("estimate: sample tuple has wrong length");
        for (std::size_t i = 0; i < s.size(); ++i)
            if (s[i] >= sizes[i]) throw DomainError("estimate: label index out of range");
        ++e.counts[radix.ravel(s)];
    }
    return e;
}

// ---- JSON: {"variables":[{"name","alphabet":[...]}], "probs":[...]} ----

inline nlohmann::json to_json(const JointDistribution& d) {
    nlohmann::json vars = nlohmann::json::array();
    for (const auto& v : d.variables()) vars.push_back({{"name", v.name}, {"alphabet", v.alphabet}});
    return {{"variables", vars}, {"probs", std::vector<double>(d.probs().begin(), d.probs().end())}};
}

inline std::vector<Variable> variables_from_json(const nlohmann::json& j) {
    if (!j.is_array()) throw DomainError("distribution JSON: 'variables' must be an array");
    std::vector<Variable> vars;
    for (const auto& jv : j) {
        if (!jv.contains("name") || !jv.contains("alphabet")) throw DomainError("distribution JSON: variable needs name and alphabet");
        Variable v{jv.at("name").get<std::string>(), {}};
        for (const auto& label : jv.at("alphabet")) v.alphabet.push_back(label.is_string() ? label.get<std::string>() : label.dump());
        vars.push_back(std::move(v));
    }
    return vars;
}

inline JointDistribution distribution_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("variables") || !j.contains("probs"))
        throw DomainError("distribution JSON: expected fields 'variables' and 'probs'");
    auto vars = variables_from_json(j.at("variables"));
    auto probs = j.at("probs").get<std::vector<double>>();
    return JointDistribution(std::move(vars), std::move(probs));
}

}  // namespace netloc
