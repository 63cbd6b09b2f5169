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
 * @file    quantum.hpp
 * @brief   Small dense multi-qudit states, effects and network Born statistics.
 *
 * Amplitudes follow the row-major convention of distribution.hpp: subsystem 0
 * is the most significant digit of the flat index.
 */

#pragma once

#include <complex>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

#include "netloc/common.hpp"
#include "netloc/distribution.hpp"

namespace netloc::quantum {

using Complex = std::complex<double>;
using Ket = Eigen::VectorXcd;
using Matrix = Eigen::MatrixXcd;
using Dims = std::vector<std::size_t>;

inline std::size_t total_dim(const Dims& dims) {
    std::size_t n = 1;
    for (auto d : dims) n *= d;
    return n;
}

inline Ket basis_ket(std::size_t dim, std::size_t index) {
    Ket k = Ket::Zero(static_cast<Eigen::Index>(dim));
    k(static_cast<Eigen::Index>(index)) = 1.0;
    return k;
}

inline Ket kron(const Ket& a, const Ket& b) { return Eigen::kroneckerProduct(a, b).eval(); }
inline Matrix kron(const Matrix& a, const Matrix& b) { return Eigen::kroneckerProduct(a, b).eval(); }

class StateVector {
public:
    StateVector(Dims dims, Ket amplitudes) : dims_(std::move(dims)), amps_(std::move(amplitudes)) {
        if (dims_.empty()) throw DomainError("StateVector: no subsystems");
        if (static_cast<std::size_t>(amps_.size()) != total_dim(dims_))
            throw DomainError("StateVector: amplitude length does not match dims");
        if (std::abs(amps_.squaredNorm() - 1.0) > tol::kExact) throw DomainError("StateVector: not normalized");
    }

    /// Single qubit-or-qudit basis state |index>.
    static StateVector basis(Dims dims, std::size_t index) {
        std::size_t n = total_dim(dims);
        return StateVector(std::move(dims), basis_ket(n, index));
    }

    const Dims& dims() const { return dims_; }
    const Ket& amplitudes() const { return amps_; }

private:
    friend StateVector tensor_product(std::span<const StateVector>);
    friend StateVector permute_subsystems(const StateVector&, std::span<const std::size_t>);
    struct Unchecked {};
    StateVector(Unchecked, Dims dims, Ket amps) : dims_(std::move(dims)), amps_(std::move(amps)) {}

    Dims dims_;
    Ket amps_;
};

/// Weighted pure states; carried alongside a density matrix when it was built
/// from an explicit ensemble, so Born probabilities can be taken as |<e|phi>|^2.
struct Ensemble {
    std::vector<double> weights;
    std::vector<Ket> kets;
};

class DensityOperator {
public:
    DensityOperator(Dims dims, Matrix matrix) : dims_(std::move(dims)), m_(std::move(matrix)) { validate(); }

    static DensityOperator pure(const StateVector& psi) {
        return mixture(psi.dims(), {1.0}, {psi});
    }

    static DensityOperator mixture(const Dims& dims, std::vector<double> weights, const std::vector<StateVector>& states) {
        if (weights.size() != states.size() || states.empty()) throw DomainError("DensityOperator::mixture: size mismatch");
        std::size_t n = total_dim(dims);
        Matrix m = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        Ensemble ens;
        for (std::size_t k = 0; k < states.size(); ++k) {
            if (states[k].dims() != dims) throw DomainError("DensityOperator::mixture: dims mismatch");
            if (weights[k] < 0.0) throw DomainError("DensityOperator::mixture: negative weight");
            m += weights[k] * states[k].amplitudes() * states[k].amplitudes().adjoint();
            ens.weights.push_back(weights[k]);
            ens.kets.push_back(states[k].amplitudes());
        }
        DensityOperator rho(dims, std::move(m));
        rho.ensemble_ = std::move(ens);
        return rho;
    }

    /// rho = sum_k w_k |k><k| with kets that need not be normalized; the norm
    /// lives in the weight, which keeps exact algebraic cancellations exact.
    static DensityOperator from_ensemble(const Dims& dims, Ensemble ens) {
        if (ens.weights.size() != ens.kets.size() || ens.kets.empty()) throw DomainError("DensityOperator::from_ensemble: size mismatch");
        std::size_t n = total_dim(dims);
        Matrix m = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        for (std::size_t k = 0; k < ens.kets.size(); ++k) {
            if (static_cast<std::size_t>(ens.kets[k].size()) != n) throw DomainError("DensityOperator::from_ensemble: ket length");
            if (ens.weights[k] < 0.0) throw DomainError("DensityOperator::from_ensemble: negative weight");
            m += ens.weights[k] * ens.kets[k] * ens.kets[k].adjoint();
        }
        DensityOperator rho(dims, std::move(m));
        rho.ensemble_ = std::move(ens);
        return rho;
    }

    const Dims& dims() const { return dims_; }
    const Matrix& matrix() const { return m_; }
    const std::optional<Ensemble>& ensemble() const { return ensemble_; }

private:
    friend DensityOperator tensor_product(std::span<const DensityOperator>);
    friend DensityOperator permute_subsystems(const DensityOperator&, std::span<const std::size_t>);
    struct Unchecked {};
    DensityOperator(Unchecked, Dims dims, Matrix m, std::optional<Ensemble> e)
        : dims_(std::move(dims)), m_(std::move(m)), ensemble_(std::move(e)) {}

    void validate() const {
        std::size_t n = total_dim(dims_);
        if (dims_.empty()) throw DomainError("DensityOperator: no subsystems");
        if (static_cast<std::size_t>(m_.rows()) != n || static_cast<std::size_t>(m_.cols()) != n)
            throw DomainError("DensityOperator: matrix size does not match dims");
        if ((m_ - m_.adjoint()).cwiseAbs().maxCoeff() > tol::kExact) throw DomainError("DensityOperator: not Hermitian");
        if (std::abs(m_.trace() - Complex(1.0)) > tol::kExact) throw DomainError("DensityOperator: trace is not 1");
        Eigen::SelfAdjointEigenSolver<Matrix> es(m_, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < -tol::kExact) throw DomainError("DensityOperator: negative eigenvalue");
    }

    Dims dims_;
    Matrix m_;
    std::optional<Ensemble> ensemble_;
};

class MeasurementEffects {
public:
    /// General POVM: PSD effects summing to the identity.
    MeasurementEffects(Dims dims, std::vector<Matrix> effects) : dims_(std::move(dims)), effects_(std::move(effects)) {
        validate();
    }

    /// Rank-one effects |k><k|; the kets are retained for amplitude evaluation.
    static MeasurementEffects projective(Dims dims, std::vector<Ket> kets) {
        std::vector<Matrix> effects;
        for (const auto& k : kets) effects.push_back(k * k.adjoint());
        MeasurementEffects m(std::move(dims), std::move(effects));
        m.kets_ = std::move(kets);
        return m;
    }

    /// Computational basis readout of all subsystems.
    static MeasurementEffects computational(const Dims& dims) {
        std::size_t n = total_dim(dims);
        std::vector<Ket> kets;
        for (std::size_t i = 0; i < n; ++i) kets.push_back(basis_ket(n, i));
        return projective(dims, std::move(kets));
    }

    const Dims& dims() const { return dims_; }
    std::size_t outcomes() const { return effects_.size(); }
    const Matrix& effect(std::size_t k) const { return effects_.at(k); }
    const std::vector<Matrix>& effects() const { return effects_; }
    const std::optional<std::vector<Ket>>& kets() const { return kets_; }

private:
    void validate() const {
        std::size_t n = total_dim(dims_);
        if (effects_.empty()) throw DomainError("MeasurementEffects: no effects");
        Matrix sum = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        for (const auto& e : effects_) {
            if (static_cast<std::size_t>(e.rows()) != n || static_cast<std::size_t>(e.cols()) != n)
                throw DomainError("MeasurementEffects: effect size does not match dims");
            if ((e - e.adjoint()).cwiseAbs().maxCoeff() > tol::kExact) throw DomainError("MeasurementEffects: effect not Hermitian");
            Eigen::SelfAdjointEigenSolver<Matrix> es(e, Eigen::EigenvaluesOnly);
            if (es.eigenvalues().minCoeff() < -tol::kExact) throw DomainError("MeasurementEffects: effect not PSD");
            sum += e;
        }
        if ((sum - Matrix::Identity(sum.rows(), sum.cols())).cwiseAbs().maxCoeff() > tol::kExact)
            throw DomainError("MeasurementEffects: effects do not sum to identity");
    }

    Dims dims_;
    std::vector<Matrix> effects_;
    std::optional<std::vector<Ket>> kets_;
};

// ---- tensor products ----

inline StateVector tensor_product(std::span<const StateVector> factors) {
    if (factors.empty()) throw DomainError("tensor_product: empty list");
    Dims dims = factors[0].dims();
    Ket amps = factors[0].amplitudes();
    for (std::size_t i = 1; i < factors.size(); ++i) {
        dims.insert(dims.end(), factors[i].dims().begin(), factors[i].dims().end());
        amps = kron(amps, factors[i].amplitudes());
    }
    return StateVector(StateVector::Unchecked{}, std::move(dims), std::move(amps));
}

inline DensityOperator tensor_product(std::span<const DensityOperator> factors) {
    if (factors.empty()) throw DomainError("tensor_product: empty list");
    Dims dims = factors[0].dims();
    Matrix m = factors[0].matrix();
    std::optional<Ensemble> ens = factors[0].ensemble();
    for (std::size_t i = 1; i < factors.size(); ++i) {
        const auto& f = factors[i];
        dims.insert(dims.end(), f.dims().begin(), f.dims().end());
        m = kron(m, f.matrix());
        if (ens && f.ensemble()) {
            Ensemble next;
            for (std::size_t a = 0; a < ens->kets.size(); ++a)
                for (std::size_t b = 0; b < f.ensemble()->kets.size(); ++b) {
                    next.weights.push_back(ens->weights[a] * f.ensemble()->weights[b]);
                    next.kets.push_back(kron(ens->kets[a], f.ensemble()->kets[b]));
                }
            ens = std::move(next);
        } else {
            ens.reset();
        }
    }
    return DensityOperator(DensityOperator::Unchecked{}, std::move(dims), std::move(m), std::move(ens));
}

using QuantumObject = std::variant<StateVector, DensityOperator>;

/// Kind-generic product; all factors must be the same kind.
inline QuantumObject tensor_product(std::span<const QuantumObject> factors) {
    if (factors.empty()) throw DomainError("tensor_product: empty list");
    if (std::holds_alternative<StateVector>(factors[0])) {
        std::vector<StateVector> v;
        for (const auto& f : factors) {
            if (!std::holds_alternative<StateVector>(f)) throw DomainError("tensor_product: mixed kinds");
            v.push_back(std::get<StateVector>(f));
        }
        return tensor_product(std::span<const StateVector>(v));
    }
    std::vector<DensityOperator> v;
    for (const auto& f : factors) {
        if (!std::holds_alternative<DensityOperator>(f)) throw DomainError("tensor_product: mixed kinds");
        v.push_back(std::get<DensityOperator>(f));
    }
    return tensor_product(std::span<const DensityOperator>(v));
}

// ---- subsystem permutation ----

namespace detail {

inline void check_permutation(std::span<const std::size_t> perm, std::size_t n) {
    if (perm.size() != n) throw DomainError("permute_subsystems: not a permutation (wrong length)");
    std::vector<bool> seen(n, false);
    for (auto p : perm) {
        if (p >= n || seen[p]) throw DomainError("permute_subsystems: not a permutation");
        seen[p] = true;
    }
}

/// map[out_flat] = in_flat where output subsystem i is input subsystem perm[i].
inline std::vector<std::size_t> permutation_index_map(const Dims& in_dims, std::span<const std::size_t> perm) {
    Dims out_dims(perm.size());
    for (std::size_t i = 0; i < perm.size(); ++i) out_dims[i] = in_dims[perm[i]];
    Radix in(in_dims), out(out_dims);
    std::vector<std::size_t> map(in.total());
    Outcome digits(perm.size());
    for (std::size_t k = 0; k < out.total(); ++k) {
        for (std::size_t i = 0; i < perm.size(); ++i) digits[perm[i]] = out.digit(k, i);
        map[k] = in.ravel(digits);
    }
    return map;
}

inline Dims permuted_dims(const Dims& dims, std::span<const std::size_t> perm) {
    Dims out(perm.size());
    for (std::size_t i = 0; i < perm.size(); ++i) out[i] = dims[perm[i]];
    return out;
}

inline Ket permute_ket(const Ket& in, const std::vector<std::size_t>& map) {
    Ket out(in.size());
    for (std::size_t k = 0; k < map.size(); ++k) out(static_cast<Eigen::Index>(k)) = in(static_cast<Eigen::Index>(map[k]));
    return out;
}

}  // namespace detail

/// Output subsystem i is input subsystem perm[i].
inline StateVector permute_subsystems(const StateVector& x, std::span<const std::size_t> perm) {
    detail::check_permutation(perm, x.dims().size());
    auto map = detail::permutation_index_map(x.dims(), perm);
    return StateVector(StateVector::Unchecked{}, detail::permuted_dims(x.dims(), perm), detail::permute_ket(x.amplitudes(), map));
}

inline DensityOperator permute_subsystems(const DensityOperator& x, std::span<const std::size_t> perm) {
    detail::check_permutation(perm, x.dims().size());
    auto map = detail::permutation_index_map(x.dims(), perm);
    const auto n = static_cast<Eigen::Index>(map.size());
    Matrix out(n, n);
    for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index c = 0; c < n; ++c)
            out(r, c) = x.matrix()(static_cast<Eigen::Index>(map[r]), static_cast<Eigen::Index>(map[c]));
    std::optional<Ensemble> ens;
    if (x.ensemble()) {
        ens = Ensemble{x.ensemble()->weights, {}};
        for (const auto& k : x.ensemble()->kets) ens->kets.push_back(detail::permute_ket(k, map));
    }
    return DensityOperator(DensityOperator::Unchecked{}, detail::permuted_dims(x.dims(), perm), std::move(out), std::move(ens));
}

inline std::vector<std::size_t> inverse_permutation(std::span<const std::size_t> perm) {
    std::vector<std::size_t> inv(perm.size());
    for (std::size_t i = 0; i < perm.size(); ++i) inv[perm[i]] = i;
    return inv;
}

// ---- Born rule ----

/// Tr[effect * rho]; imaginary residue above 1e-10 or a value outside
/// [-1e-12, 1 + 1e-12] is an error. Tiny positive values are returned as-is.
inline double born_probability(const DensityOperator& rho, const Matrix& effect) {
    if (effect.rows() != rho.matrix().rows() || effect.cols() != rho.matrix().cols())
        throw DomainError("born_probability: dimension mismatch");
    Complex tr = effect.cwiseProduct(rho.matrix().transpose()).sum();
    if (std::abs(tr.imag()) > tol::kImaginary) throw DomainError("born_probability: imaginary residue " + format_double(tr.imag()));
    double p = tr.real();
    if (p < -tol::kExact || p > 1.0 + tol::kExact) throw DomainError("born_probability: value out of range " + format_double(p));
    return std::clamp(p, 0.0, 1.0);
}

// ---- networks ----

struct Source {
    DensityOperator state;
    std::vector<std::string> slots;  ///< one label per subsystem of `state`, in order
};

struct Party {
    std::string name;
    std::vector<std::string> slots;          ///< local measurement order
    std::vector<Variable> outcome_variables;  ///< outcome index = row-major over these
};

struct NetworkLayout {
    std::vector<Party> parties;
    std::vector<Source> sources;

    /// Slot labels in source order.
    std::vector<std::string> slot_labels() const {
        std::vector<std::string> out;
        for (const auto& s : sources) out.insert(out.end(), s.slots.begin(), s.slots.end());
        return out;
    }

    Dims slot_dims() const {
        Dims out;
        for (const auto& s : sources) out.insert(out.end(), s.state.dims().begin(), s.state.dims().end());
        return out;
    }

    void validate() const {
        if (parties.empty() || sources.empty()) throw DomainError("NetworkLayout: need parties and sources");
        auto labels = slot_labels();
        for (const auto& s : sources)
            if (s.slots.size() != s.state.dims().size()) throw DomainError("NetworkLayout: source slot count does not match state");
        for (std::size_t i = 0; i < labels.size(); ++i)
            for (std::size_t j = i + 1; j < labels.size(); ++j)
                if (labels[i] == labels[j]) throw DomainError("NetworkLayout: slot '" + labels[i] + "' in two sources");
        std::vector<int> owner(labels.size(), 0);
        for (const auto& p : parties)
            for (const auto& s : p.slots) {
                auto it = std::find(labels.begin(), labels.end(), s);
                if (it == labels.end()) throw DomainError("NetworkLayout: party '" + p.name + "' measures unknown slot '" + s + "'");
                ++owner[static_cast<std::size_t>(it - labels.begin())];
            }
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (owner[i] != 1) throw DomainError("NetworkLayout: slot '" + labels[i] + "' not owned by exactly one party");
    }

    /// perm[i] = source-order position of the i-th slot in party order.
    std::vector<std::size_t> party_order_permutation() const {
        auto labels = slot_labels();
        std::vector<std::size_t> perm;
        for (const auto& p : parties)
            for (const auto& s : p.slots)
                perm.push_back(static_cast<std::size_t>(std::find(labels.begin(), labels.end(), s) - labels.begin()));
        return perm;
    }
};

enum class BornPath { automatic, trace, amplitude };

/// Joint outcome statistics of a network; variables are the parties' outcome
/// variables in party order.
inline JointDistribution network_distribution(const NetworkLayout& layout, std::span<const MeasurementEffects> measurements,
                                              BornPath path = BornPath::automatic) {
    layout.validate();
    if (measurements.size() != layout.parties.size()) throw DomainError("network_distribution: one measurement per party required");

    auto slot_dims = layout.slot_dims();
    auto labels = layout.slot_labels();
    std::vector<Variable> vars;
    std::vector<std::size_t> party_outcomes;
    for (std::size_t p = 0; p < layout.parties.size(); ++p) {
        const auto& party = layout.parties[p];
        Dims expect;
        for (const auto& s : party.slots)
            expect.push_back(slot_dims[static_cast<std::size_t>(std::find(labels.begin(), labels.end(), s) - labels.begin())]);
        if (measurements[p].dims() != expect) throw DomainError("network_distribution: measurement dims mismatch for '" + party.name + "'");
        std::size_t k = 1;
        for (const auto& v : party.outcome_variables) k *= v.alphabet.size();
        if (k != measurements[p].outcomes())
            throw DomainError("network_distribution: outcome variables of '" + party.name + "' do not match effect count");
        vars.insert(vars.end(), party.outcome_variables.begin(), party.outcome_variables.end());
        party_outcomes.push_back(k);
    }

    std::vector<DensityOperator> states;
    for (const auto& s : layout.sources) states.push_back(s.state);
    auto perm = layout.party_order_permutation();
    DensityOperator rho = permute_subsystems(tensor_product(std::span<const DensityOperator>(states)), perm);

    bool have_kets = std::all_of(measurements.begin(), measurements.end(), [](const auto& m) { return m.kets().has_value(); });
    bool amplitude = rho.ensemble().has_value() && have_kets;
    if (path == BornPath::amplitude && !amplitude) throw DomainError("network_distribution: amplitude path needs ensembles and kets");
    if (path == BornPath::trace) amplitude = false;

    Radix outcomes(party_outcomes);
    std::vector<double> probs(outcomes.total());
    for (std::size_t k = 0; k < outcomes.total(); ++k) {
        if (amplitude) {
            Ket e = (*measurements[0].kets())[outcomes.digit(k, 0)];
            for (std::size_t p = 1; p < measurements.size(); ++p) e = kron(e, (*measurements[p].kets())[outcomes.digit(k, p)]);
            double acc = 0.0;
            const auto& ens = *rho.ensemble();
            for (std::size_t t = 0; t < ens.kets.size(); ++t) acc += ens.weights[t] * std::norm(e.dot(ens.kets[t]));
            probs[k] = acc;
        } else {
            Matrix e = measurements[0].effect(outcomes.digit(k, 0));
            for (std::size_t p = 1; p < measurements.size(); ++p) e = kron(e, measurements[p].effect(outcomes.digit(k, p)));
            probs[k] = born_probability(rho, e);
        }
    }
    double sum = std::accumulate(probs.begin(), probs.end(), 0.0);
    if (std::abs(sum - 1.0) > tol::kNormalization)
        throw DomainError("network_distribution: outcome probabilities sum to " + format_double(sum) + " (subsystem ordering?)");
    return JointDistribution(std::move(vars), std::move(probs));
}

}  // namespace netloc::quantum
