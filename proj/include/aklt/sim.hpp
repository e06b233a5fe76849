// Copyright 2026 The aklt-prep Authors
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
 * @file
 * Exact statevector simulation: gates, projective measurements, Bell
 * measurements, circuits with classical feed-forward, depth accounting and a
 * trajectory executor with optional stochastic Pauli noise.
 *
 * Qubit 0 is the least significant bit of an amplitude index. For a k-qubit
 * gate or projector acting on targets t[0..k-1], t[j] is bit j of the local
 * index.
 */

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "aklt/error.hpp"
#include "aklt/linalg.hpp"

namespace aklt {

// ---------------------------------------------------------------------------
// Noise parameters (the channel model itself lives in the noise module; the
// executor below needs the raw numbers).

struct NoiseModel {
    double p1 = 0.0;           ///< single-qubit depolarizing probability per gate
    double p2 = 0.0;           ///< two-qubit depolarizing probability per adjacent target pair
    double p_ro = 0.0;         ///< symmetric readout flip probability per classical bit
    double idle_dephase = 0.0; ///< phase-flip probability per idle layer

    bool is_zero() const { return p1 == 0.0 && p2 == 0.0 && p_ro == 0.0 && idle_dephase == 0.0; }

    void validate() const {
        for (double p : {p1, p2, p_ro, idle_dephase})
            if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("noise probabilities must lie in [0, 1]");
    }
};

namespace sim {

inline constexpr double kNormTol = 1e-10;
inline constexpr double kForceThreshold = 1e-12;

// ---------------------------------------------------------------------------
// Labels

enum class Role { Site, MemoryLeft, MemoryRight, Memory, Ancilla };

inline const char *role_name(Role r) {
    switch (r) {
    case Role::Site: return "site";
    case Role::MemoryLeft: return "memory_left";
    case Role::MemoryRight: return "memory_right";
    case Role::Memory: return "memory";
    case Role::Ancilla: return "ancilla";
    }
    return "ancilla";
}

struct QubitLabel {
    Role role = Role::Ancilla;
    int site = -1; ///< 1-based site index for Role::Site
    int slot = 0;  ///< qubit slot within a site
    int wire = -1; ///< circuit wire this qubit lives on

    static QubitLabel site_qubit(int site, int slot) { return {Role::Site, site, slot, -1}; }
    static QubitLabel memory(Role r) { return {r, -1, 0, -1}; }
    static QubitLabel ancilla() { return {}; }

    bool operator==(const QubitLabel &) const = default;
};

inline nlohmann::json to_json(const QubitLabel &l) {
    nlohmann::json j{{"role", role_name(l.role)}, {"wire", l.wire}};
    if (l.role == Role::Site) {
        j["site"] = l.site;
        j["slot"] = l.slot;
    }
    return j;
}

namespace detail {

inline double uniform01(std::mt19937_64 &g) { return static_cast<double>(g() >> 11) * 0x1.0p-53; }

/// Inverse-CDF choice over (possibly unnormalized) probabilities.
inline int choose_outcome(std::span<const double> probs, double u) {
    double total = 0.0;
    for (double p : probs) total += std::max(p, 0.0);
    if (!(total > 0.0)) throw ZeroProbabilityError("all measurement outcomes have zero probability");
    double acc = 0.0;
    int last = -1;
    for (std::size_t k = 0; k < probs.size(); ++k) {
        const double p = std::max(probs[k], 0.0) / total;
        if (p <= 0.0) continue;
        last = static_cast<int>(k);
        acc += p;
        if (u < acc) return last;
    }
    return last;
}

// Enumerates base indices with zero bits at the given (sorted) positions.
inline std::size_t deposit_zeros(std::size_t r, std::span<const int> sorted_positions) {
    for (int p : sorted_positions) {
        const std::size_t low = r & ((std::size_t{1} << p) - 1);
        r = ((r >> p) << (p + 1)) | low;
    }
    return r;
}

inline std::vector<std::size_t> local_offsets(std::span<const int> positions) {
    std::vector<std::size_t> off(std::size_t{1} << positions.size(), 0);
    for (std::size_t j = 0; j < off.size(); ++j)
        for (std::size_t b = 0; b < positions.size(); ++b)
            if ((j >> b) & 1U) off[j] |= std::size_t{1} << positions[b];
    return off;
}

} // namespace detail

// ---------------------------------------------------------------------------
// StateVector

class StateVector {
  public:
    StateVector() : StateVector(0) {}

    /// |0...0> on n qubits with ancilla labels.
    explicit StateVector(int n) : n_(n), amps_(Vector::Zero(Eigen::Index{1} << n)), labels_(n) {
        if (n < 0 || n > 30) throw DimensionError("qubit count out of range");
        amps_(0) = 1.0;
        for (int q = 0; q < n; ++q) labels_[q].wire = q;
    }

    StateVector(Vector amps, std::vector<QubitLabel> labels) : amps_(std::move(amps)), labels_(std::move(labels)) {
        n_ = linalg::qubits_for_dim(amps_.size());
        if (n_ < 0) throw DimensionError("amplitude count must be a power of two");
        if (static_cast<int>(labels_.size()) != n_) throw DimensionError("label count must equal qubit count");
        const double nrm = amps_.norm();
        if (!(nrm > 0.0)) throw NumericalError("zero state vector");
        amps_ /= nrm;
    }

    int num_qubits() const { return n_; }
    const Vector &amplitudes() const { return amps_; }
    const std::vector<QubitLabel> &labels() const { return labels_; }
    const QubitLabel &label(int q) const { return labels_.at(static_cast<std::size_t>(q)); }
    void set_label(int q, QubitLabel l) { labels_.at(static_cast<std::size_t>(q)) = l; }

    double norm() const { return amps_.norm(); }

    /// Position of the first qubit matching the predicate, or -1.
    template <class Pred> int find(Pred &&pred) const {
        for (int q = 0; q < n_; ++q)
            if (pred(labels_[static_cast<std::size_t>(q)])) return q;
        return -1;
    }

    int find_site(int site, int slot) const {
        return find([&](const QubitLabel &l) { return l.role == Role::Site && l.site == site && l.slot == slot; });
    }
    int find_role(Role r) const {
        return find([&](const QubitLabel &l) { return l.role == r; });
    }

    /// Appends a fresh |0> qubit as the new most significant bit.
    int append_qubit(QubitLabel l) {
        if (n_ >= 30) throw DimensionError("state vector too large");
        Vector next = Vector::Zero(amps_.size() * 2);
        next.head(amps_.size()) = amps_;
        amps_ = std::move(next);
        labels_.push_back(l);
        return n_++;
    }

    /// Applies an arbitrary (not necessarily unitary) local matrix.
    void apply_matrix(const Matrix &m, std::span<const int> targets) {
        check_targets(targets);
        const auto k = targets.size();
        const auto d = Eigen::Index{1} << k;
        if (m.rows() != d || m.cols() != d) throw DimensionError("matrix size does not match target count");
        std::vector<int> sorted(targets.begin(), targets.end());
        std::sort(sorted.begin(), sorted.end());
        const auto off = detail::local_offsets(targets);
        const std::size_t groups = std::size_t{1} << (n_ - static_cast<int>(k));
        Vector v(d), w(d);
        for (std::size_t r = 0; r < groups; ++r) {
            const std::size_t base = detail::deposit_zeros(r, sorted);
            for (Eigen::Index j = 0; j < d; ++j) v(j) = amps_(static_cast<Eigen::Index>(base + off[static_cast<std::size_t>(j)]));
            w.noalias() = m * v;
            for (Eigen::Index j = 0; j < d; ++j) amps_(static_cast<Eigen::Index>(base + off[static_cast<std::size_t>(j)])) = w(j);
        }
    }

    void apply_unitary(const Matrix &u, std::span<const int> targets) {
        if (!linalg::is_unitary(u)) throw NumericalError("gate matrix is not unitary");
        apply_matrix(u, targets);
    }

    /// Outcome probabilities <psi|P_k|psi> for projectors on the targets.
    std::vector<double> probabilities(std::span<const Matrix> projectors, std::span<const int> targets) const {
        check_targets(targets);
        const auto k = targets.size();
        const auto d = Eigen::Index{1} << k;
        std::vector<int> sorted(targets.begin(), targets.end());
        std::sort(sorted.begin(), sorted.end());
        const auto off = detail::local_offsets(targets);
        const std::size_t groups = std::size_t{1} << (n_ - static_cast<int>(k));
        bool diagonal = true;
        for (const auto &p : projectors) {
            if (p.rows() != d || p.cols() != d) throw DimensionError("projector size does not match target count");
            if (!p.isDiagonal(1e-15)) diagonal = false;
        }
        std::vector<double> probs(projectors.size(), 0.0);
        if (diagonal) {
            std::vector<double> local(static_cast<std::size_t>(d), 0.0);
            for (std::size_t r = 0; r < groups; ++r) {
                const std::size_t base = detail::deposit_zeros(r, sorted);
                for (Eigen::Index j = 0; j < d; ++j)
                    local[static_cast<std::size_t>(j)] += std::norm(amps_(static_cast<Eigen::Index>(base + off[static_cast<std::size_t>(j)])));
            }
            for (std::size_t p = 0; p < projectors.size(); ++p)
                for (Eigen::Index j = 0; j < d; ++j) probs[p] += projectors[p](j, j).real() * local[static_cast<std::size_t>(j)];
            return probs;
        }
        // Local density matrix on the targets, then Tr(P rho).
        Matrix rho = Matrix::Zero(d, d);
        Vector v(d);
        for (std::size_t r = 0; r < groups; ++r) {
            const std::size_t base = detail::deposit_zeros(r, sorted);
            for (Eigen::Index j = 0; j < d; ++j) v(j) = amps_(static_cast<Eigen::Index>(base + off[static_cast<std::size_t>(j)]));
            rho.noalias() += v * v.adjoint();
        }
        for (std::size_t p = 0; p < projectors.size(); ++p) probs[p] = (projectors[p] * rho).trace().real();
        return probs;
    }

    /// Applies a projector and renormalizes by sqrt(prob).
    void collapse(const Matrix &projector, std::span<const int> targets, double prob) {
        if (!(prob > 0.0)) throw ZeroProbabilityError("cannot collapse onto a zero-probability outcome");
        apply_matrix(projector, targets);
        amps_ /= std::sqrt(prob);
    }

    /// Removes the target qubits by contracting them with <ket|; renormalizes.
    void contract_out(const Vector &ket, std::span<const int> targets) {
        check_targets(targets);
        const auto k = targets.size();
        const auto d = Eigen::Index{1} << k;
        if (ket.size() != d) throw DimensionError("ket size does not match target count");
        std::vector<int> sorted(targets.begin(), targets.end());
        std::sort(sorted.begin(), sorted.end());
        const auto off = detail::local_offsets(targets);
        const std::size_t groups = std::size_t{1} << (n_ - static_cast<int>(k));
        Vector out(static_cast<Eigen::Index>(groups));
        for (std::size_t r = 0; r < groups; ++r) {
            const std::size_t base = detail::deposit_zeros(r, sorted);
            cplx acc = 0;
            for (Eigen::Index j = 0; j < d; ++j)
                acc += std::conj(ket(j)) * amps_(static_cast<Eigen::Index>(base + off[static_cast<std::size_t>(j)]));
            out(static_cast<Eigen::Index>(r)) = acc;
        }
        const double nrm = out.norm();
        if (!(nrm > kForceThreshold)) throw ZeroProbabilityError("contracted state has zero norm");
        amps_ = out / nrm;
        std::vector<QubitLabel> kept;
        for (int q = 0; q < n_; ++q)
            if (std::find(targets.begin(), targets.end(), q) == targets.end()) kept.push_back(labels_[static_cast<std::size_t>(q)]);
        labels_ = std::move(kept);
        n_ -= static_cast<int>(k);
    }

    /// New state whose qubit j is this state's qubit order[j]; order must be a permutation.
    StateVector permuted(std::span<const int> order) const {
        if (static_cast<int>(order.size()) != n_) throw DimensionError("permutation size mismatch");
        check_targets(order);
        Vector out(amps_.size());
        std::vector<QubitLabel> labels(static_cast<std::size_t>(n_));
        for (int j = 0; j < n_; ++j) labels[static_cast<std::size_t>(j)] = labels_[static_cast<std::size_t>(order[static_cast<std::size_t>(j)])];
        for (std::size_t i = 0; i < static_cast<std::size_t>(amps_.size()); ++i) {
            std::size_t ni = 0;
            for (int j = 0; j < n_; ++j)
                if ((i >> order[static_cast<std::size_t>(j)]) & 1U) ni |= std::size_t{1} << j;
            out(static_cast<Eigen::Index>(ni)) = amps_(static_cast<Eigen::Index>(i));
        }
        StateVector s;
        s.n_ = n_;
        s.amps_ = std::move(out);
        s.labels_ = std::move(labels);
        return s;
    }

    /// Two-by-two reduced density matrix of one qubit.
    Matrix single_qubit_rdm(int q) const {
        check_targets(std::array<int, 1>{q});
        Matrix rho = Matrix::Zero(2, 2);
        const std::size_t bit = std::size_t{1} << q;
        for (std::size_t i = 0; i < static_cast<std::size_t>(amps_.size()); ++i) {
            if (i & bit) continue;
            const cplx a0 = amps_(static_cast<Eigen::Index>(i)), a1 = amps_(static_cast<Eigen::Index>(i | bit));
            rho(0, 0) += std::norm(a0);
            rho(1, 1) += std::norm(a1);
            rho(0, 1) += a0 * std::conj(a1);
        }
        rho(1, 0) = std::conj(rho(0, 1));
        return rho;
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["n"] = n_;
        j["bit_order"] = "little_endian";
        j["labels"] = nlohmann::json::array();
        for (const auto &l : labels_) j["labels"].push_back(sim::to_json(l));
        std::vector<double> flat;
        flat.reserve(static_cast<std::size_t>(amps_.size()) * 2);
        for (Eigen::Index i = 0; i < amps_.size(); ++i) {
            flat.push_back(amps_(i).real());
            flat.push_back(amps_(i).imag());
        }
        j["amplitudes"] = std::move(flat);
        return j;
    }

  private:
    void check_targets(std::span<const int> targets) const {
        for (std::size_t a = 0; a < targets.size(); ++a) {
            if (targets[a] < 0 || targets[a] >= n_) throw DimensionError("qubit index out of range");
            for (std::size_t b = 0; b < a; ++b)
                if (targets[a] == targets[b]) throw DimensionError("repeated target qubit");
        }
    }

    int n_ = 0;
    Vector amps_;
    std::vector<QubitLabel> labels_;
};

inline double fidelity(const StateVector &a, const StateVector &b) {
    return linalg::fidelity(a.amplitudes(), b.amplitudes());
}

// ---------------------------------------------------------------------------
// Gates

struct Gate {
    Matrix matrix;
    std::vector<int> targets;
    std::string tag;
};

inline StateVector apply_gate(StateVector state, const Gate &g) {
    state.apply_unitary(g.matrix, g.targets);
    return state;
}

namespace gates {
inline Matrix h() {
    Matrix m(2, 2);
    m << 1, 1, 1, -1;
    return m / std::sqrt(2.0);
}
inline Matrix x() { return linalg::pauli_x(); }
inline Matrix y() { return linalg::pauli_y(); }
inline Matrix z() { return linalg::pauli_z(); }
inline Matrix ry(double theta) {
    Matrix m(2, 2);
    m << std::cos(theta / 2), -std::sin(theta / 2), std::sin(theta / 2), std::cos(theta / 2);
    return m;
}
/// Controlled-U with the control on local bit 0 and U on local bit 1.
inline Matrix controlled(const Matrix &u) {
    Matrix m = Matrix::Identity(4, 4);
    m(1, 1) = u(0, 0);
    m(1, 3) = u(0, 1);
    m(3, 1) = u(1, 0);
    m(3, 3) = u(1, 1);
    return m;
}
/// CNOT with control on local bit 0 and target on local bit 1.
inline Matrix cnot() { return controlled(x()); }
inline Matrix cz() { return controlled(z()); }
} // namespace gates

// ---------------------------------------------------------------------------
// Outcome policies

class OutcomePolicy {
  public:
    static OutcomePolicy sample(std::uint64_t seed) {
        OutcomePolicy p;
        p.rng_.seed(seed);
        return p;
    }
    static OutcomePolicy forced(std::vector<int> outcomes) {
        OutcomePolicy p;
        p.forced_ = std::move(outcomes);
        p.is_forced_ = true;
        return p;
    }

    bool is_forced() const { return is_forced_; }
    std::size_t remaining() const { return is_forced_ ? forced_.size() - next_ : 0; }

    int choose(std::span<const double> probs) {
        if (!is_forced_) return detail::choose_outcome(probs, detail::uniform01(rng_));
        const int o = next_forced();
        if (o < 0 || o >= static_cast<int>(probs.size())) throw ConfigError("forced outcome index out of range");
        if (probs[static_cast<std::size_t>(o)] < kForceThreshold)
            throw ZeroProbabilityError("forced outcome " + std::to_string(o) + " has probability " +
                                       std::to_string(probs[static_cast<std::size_t>(o)]));
        return o;
    }

    /// Outcome used when no state is simulated (circuit construction only).
    int choose_dry() { return is_forced_ ? next_forced() : 0; }

    std::mt19937_64 &rng() { return rng_; }

  private:
    int next_forced() {
        if (next_ >= forced_.size()) throw ConfigError("forced-outcome list exhausted");
        return forced_[next_++];
    }

    std::mt19937_64 rng_{0};
    std::vector<int> forced_;
    std::size_t next_ = 0;
    bool is_forced_ = false;
};

struct MeasureResult {
    int outcome = -1;
    double probability = 0.0;
    StateVector state;
};

/// Projective measurement in an orthonormal basis of the target subspace.
/// basis[k] is the k-th basis ket (dimension 2^|qubits|).
inline MeasureResult measure(StateVector state, std::span<const int> qubits, std::span<const Vector> basis,
                             OutcomePolicy &policy) {
    const auto d = Eigen::Index{1} << qubits.size();
    if (static_cast<Eigen::Index>(basis.size()) != d) throw DimensionError("measurement basis must be complete");
    Matrix gram(d, d);
    for (Eigen::Index a = 0; a < d; ++a) {
        if (basis[static_cast<std::size_t>(a)].size() != d) throw DimensionError("basis ket has wrong dimension");
        for (Eigen::Index b = 0; b < d; ++b) gram(a, b) = basis[static_cast<std::size_t>(a)].dot(basis[static_cast<std::size_t>(b)]);
    }
    if ((gram - Matrix::Identity(d, d)).norm() > 1e-10) throw NumericalError("measurement basis is not orthonormal");
    std::vector<Matrix> proj;
    for (const auto &b : basis) proj.push_back(b * b.adjoint());
    const auto probs = state.probabilities(proj, qubits);
    const int o = policy.choose(probs);
    const double p = probs[static_cast<std::size_t>(o)];
    state.collapse(proj[static_cast<std::size_t>(o)], qubits, p);
    return {o, p, std::move(state)};
}

inline std::vector<Vector> computational_basis(int k) {
    std::vector<Vector> b;
    for (Eigen::Index j = 0; j < (Eigen::Index{1} << k); ++j) b.push_back(Vector::Unit(Eigen::Index{1} << k, j));
    return b;
}

// ---------------------------------------------------------------------------
// Bell measurement

enum class BellLabel : int { PhiPlus = 0, PhiMinus = 1, PsiPlus = 2, PsiMinus = 3 };

inline const char *bell_name(BellLabel b) {
    static constexpr const char *names[4] = {"Phi+", "Phi-", "Psi+", "Psi-"};
    return names[static_cast<int>(b)];
}

struct BellOutcome {
    BellLabel label = BellLabel::PhiPlus;
    linalg::Pauli inserted = linalg::Pauli::I; ///< matrix M inserted between the fused chains
    linalg::Pauli defect = linalg::Pauli::Y;   ///< residual defect B on the fused bond

    int index() const { return static_cast<int>(label); }
};

/// Table of (label, M, B) rows for outcome index 0..3.
inline BellOutcome bell_outcome(int index) {
    using linalg::Pauli;
    static constexpr Pauli M[4] = {Pauli::I, Pauli::Z, Pauli::X, Pauli::Y};
    static constexpr Pauli B[4] = {Pauli::Y, Pauli::X, Pauli::Z, Pauli::I};
    if (index < 0 || index > 3) throw ConfigError("Bell outcome index out of range");
    return {static_cast<BellLabel>(index), M[index], B[index]};
}

/// Bell state ket with q1 on local bit 0 and q2 on local bit 1:
/// Phi+- = (|00> +- |11>)/sqrt2, Psi+- = (|01> +- |10>)/sqrt2 written as |q1 q2>.
inline Vector bell_state(BellLabel b) {
    const double r = 1.0 / std::sqrt(2.0);
    Vector v = Vector::Zero(4);
    switch (b) {
    case BellLabel::PhiPlus: v(0) = r; v(3) = r; break;
    case BellLabel::PhiMinus: v(0) = r; v(3) = -r; break;
    case BellLabel::PsiPlus: v(2) = r; v(1) = r; break;
    case BellLabel::PsiMinus: v(2) = r; v(1) = -r; break;
    }
    return v;
}

inline std::vector<Vector> bell_basis() {
    return {bell_state(BellLabel::PhiPlus), bell_state(BellLabel::PhiMinus), bell_state(BellLabel::PsiPlus),
            bell_state(BellLabel::PsiMinus)};
}

inline std::vector<Matrix> bell_projectors() {
    std::vector<Matrix> out;
    for (const auto &b : bell_basis()) out.push_back(b * b.adjoint());
    return out;
}

/// 2x2 coefficient matrix phi_ij of a two-qubit ket sum_ij phi_ij |i>_q1 |j>_q2.
inline Matrix coefficient_matrix(const Vector &ket) {
    Matrix m(2, 2);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) m(i, j) = ket(i + 2 * j);
    return m;
}

struct BellMeasureResult {
    BellOutcome outcome;
    double probability = 0.0;
    StateVector state;
};

inline BellMeasureResult bell_measure(StateVector state, int q1, int q2, OutcomePolicy &policy) {
    if (q1 == q2) throw DimensionError("bell_measure needs two distinct qubits");
    const std::array<int, 2> qs{q1, q2};
    const auto basis = bell_basis();
    auto r = measure(std::move(state), qs, basis, policy);
    return {bell_outcome(r.outcome), r.probability, std::move(r.state)};
}

// ---------------------------------------------------------------------------
// Circuits

/// Returns the matrix for a conditional gate given the outcomes of its
/// dependency records, or nothing to skip the gate.
using Selector = std::function<std::optional<Matrix>(std::span<const int>)>;

struct Instruction {
    enum class Kind { Gate, Measure, Conditional };
    Kind kind = Kind::Gate;
    std::string tag;
    std::vector<int> wires;
    Matrix matrix;                  // Gate
    std::vector<Matrix> projectors; // Measure
    bool discard = false;           // Measure: drop the wires afterwards (rank-1 projectors only)
    int record = -1;                // Measure: classical record id
    std::vector<int> depends;       // Conditional: record ids
    Selector select;                // Conditional

    bool projectors_diagonal() const {
        return std::all_of(projectors.begin(), projectors.end(), [](const Matrix &p) { return p.isDiagonal(1e-15); });
    }
    bool projectors_rank_one() const {
        return std::all_of(projectors.begin(), projectors.end(),
                           [](const Matrix &p) { return std::abs(p.trace().real() - 1.0) < 1e-9; });
    }
};

class Circuit {
  public:
    int add_wire(QubitLabel label) {
        label.wire = static_cast<int>(wire_labels_.size());
        wire_labels_.push_back(label);
        return label.wire;
    }
    int num_wires() const { return static_cast<int>(wire_labels_.size()); }
    const QubitLabel &wire_label(int w) const { return wire_labels_.at(static_cast<std::size_t>(w)); }
    void set_wire_label(int w, QubitLabel l) {
        l.wire = w;
        wire_labels_.at(static_cast<std::size_t>(w)) = l;
    }
    const std::vector<QubitLabel> &wire_labels() const { return wire_labels_; }

    const std::vector<Instruction> &instructions() const { return instrs_; }
    int num_records() const { return num_records_; }
    int record_outcomes(int rec) const { return record_outcomes_.at(static_cast<std::size_t>(rec)); }
    int record_instruction(int rec) const { return record_instr_.at(static_cast<std::size_t>(rec)); }

    void add_gate(Matrix m, std::vector<int> wires, std::string tag) {
        check_wires(wires);
        Instruction in;
        in.kind = Instruction::Kind::Gate;
        in.matrix = std::move(m);
        in.wires = std::move(wires);
        in.tag = std::move(tag);
        instrs_.push_back(std::move(in));
    }

    int add_measure(std::vector<Matrix> projectors, std::vector<int> wires, std::string tag, bool discard) {
        check_wires(wires);
        Instruction in;
        in.kind = Instruction::Kind::Measure;
        in.projectors = std::move(projectors);
        in.wires = std::move(wires);
        in.tag = std::move(tag);
        in.record = num_records_++;
        in.discard = discard && in.projectors_rank_one();
        record_outcomes_.push_back(static_cast<int>(in.projectors.size()));
        record_instr_.push_back(static_cast<int>(instrs_.size()));
        instrs_.push_back(std::move(in));
        return num_records_ - 1;
    }

    void add_conditional(std::vector<int> wires, std::vector<int> depends, Selector sel, std::string tag) {
        check_wires(wires);
        for (int r : depends)
            if (r < 0 || r >= num_records_) throw ConfigError("conditional gate depends on an unknown record");
        Instruction in;
        in.kind = Instruction::Kind::Conditional;
        in.wires = std::move(wires);
        in.depends = std::move(depends);
        in.select = std::move(sel);
        in.tag = std::move(tag);
        instrs_.push_back(std::move(in));
    }

    /// ASAP layer (1-based) of every instruction. Instructions sharing a wire
    /// never share a layer; a conditional gate sits after the measurements it
    /// depends on.
    std::vector<int> layers() const {
        std::vector<int> wire_layer(wire_labels_.size(), 0), rec_layer(static_cast<std::size_t>(num_records_), 0);
        std::vector<int> out;
        out.reserve(instrs_.size());
        for (const auto &in : instrs_) {
            int l = 0;
            for (int w : in.wires) l = std::max(l, wire_layer[static_cast<std::size_t>(w)]);
            for (int r : in.depends) l = std::max(l, rec_layer[static_cast<std::size_t>(r)]);
            ++l;
            for (int w : in.wires) wire_layer[static_cast<std::size_t>(w)] = l;
            if (in.record >= 0) rec_layer[static_cast<std::size_t>(in.record)] = l;
            out.push_back(l);
        }
        return out;
    }

    int depth() const {
        const auto l = layers();
        return l.empty() ? 0 : *std::max_element(l.begin(), l.end());
    }

    /// A valid execution order that keeps few wires alive at once: among ready
    /// instructions prefer those touching no new wire, then those releasing
    /// wires, then the earliest.
    std::vector<int> low_memory_order() const {
        const auto n = instrs_.size();
        std::vector<std::vector<int>> preds(n);
        std::vector<int> last_on_wire(wire_labels_.size(), -1);
        for (std::size_t i = 0; i < n; ++i) {
            const auto &in = instrs_[i];
            for (int w : in.wires) {
                int &p = last_on_wire[static_cast<std::size_t>(w)];
                if (p >= 0) preds[i].push_back(p);
                p = static_cast<int>(i);
            }
            for (int r : in.depends) preds[i].push_back(record_instr_[static_cast<std::size_t>(r)]);
        }
        const auto releases = releasing_measures();
        std::vector<int> remaining_preds(n);
        std::vector<std::vector<int>> succs(n);
        for (std::size_t i = 0; i < n; ++i) {
            std::sort(preds[i].begin(), preds[i].end());
            preds[i].erase(std::unique(preds[i].begin(), preds[i].end()), preds[i].end());
            remaining_preds[i] = static_cast<int>(preds[i].size());
            for (int p : preds[i]) succs[static_cast<std::size_t>(p)].push_back(static_cast<int>(i));
        }
        std::vector<char> live(wire_labels_.size(), 0), done(n, 0);
        std::vector<int> order;
        order.reserve(n);
        std::vector<int> ready;
        for (std::size_t i = 0; i < n; ++i)
            if (remaining_preds[i] == 0) ready.push_back(static_cast<int>(i));
        while (!ready.empty()) {
            auto score = [&](int i) {
                int fresh = 0;
                for (int w : instrs_[static_cast<std::size_t>(i)].wires) fresh += live[static_cast<std::size_t>(w)] ? 0 : 1;
                const int frees = releases[static_cast<std::size_t>(i)] ? 1 : 0;
                return std::make_tuple(fresh, -frees, i);
            };
            auto best = std::min_element(ready.begin(), ready.end(), [&](int a, int b) { return score(a) < score(b); });
            const int i = *best;
            ready.erase(best);
            order.push_back(i);
            done[static_cast<std::size_t>(i)] = 1;
            for (int w : instrs_[static_cast<std::size_t>(i)].wires) live[static_cast<std::size_t>(w)] = 1;
            if (releases[static_cast<std::size_t>(i)])
                for (int w : instrs_[static_cast<std::size_t>(i)].wires) live[static_cast<std::size_t>(w)] = 0;
            for (int s : succs[static_cast<std::size_t>(i)])
                if (--remaining_preds[static_cast<std::size_t>(s)] == 0) ready.push_back(s);
        }
        return order;
    }

    /// Measurements after which none of their wires is touched again and the
    /// post-measurement state of those wires is a known ket.
    std::vector<char> releasing_measures() const {
        std::vector<char> out(instrs_.size(), 0);
        std::vector<char> used_later(wire_labels_.size(), 0);
        for (std::size_t k = instrs_.size(); k-- > 0;) {
            const auto &in = instrs_[k];
            if (in.kind == Instruction::Kind::Measure && in.projectors_rank_one()) {
                bool later = false;
                for (int w : in.wires) later = later || used_later[static_cast<std::size_t>(w)];
                out[k] = later ? 0 : 1;
            }
            for (int w : in.wires) used_later[static_cast<std::size_t>(w)] = 1;
        }
        return out;
    }

    nlohmann::json to_json() const {
        auto mat = [](const Matrix &m) {
            nlohmann::json rows = nlohmann::json::array();
            for (Eigen::Index i = 0; i < m.rows(); ++i) {
                nlohmann::json row = nlohmann::json::array();
                for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back({m(i, j).real(), m(i, j).imag()});
                rows.push_back(row);
            }
            return rows;
        };
        nlohmann::json j;
        j["bit_order"] = "little_endian";
        j["depth"] = depth();
        j["wires"] = nlohmann::json::array();
        for (const auto &l : wire_labels_) j["wires"].push_back(sim::to_json(l));
        j["instructions"] = nlohmann::json::array();
        const auto lay = layers();
        for (std::size_t k = 0; k < instrs_.size(); ++k) {
            const auto &in = instrs_[k];
            nlohmann::json e{{"tag", in.tag}, {"targets", in.wires}, {"layer", lay[k]}};
            switch (in.kind) {
            case Instruction::Kind::Gate:
                e["kind"] = "gate";
                e["matrix"] = mat(in.matrix);
                break;
            case Instruction::Kind::Measure:
                e["kind"] = "measure";
                e["record"] = in.record;
                e["projectors"] = nlohmann::json::array();
                for (const auto &p : in.projectors) e["projectors"].push_back(mat(p));
                break;
            case Instruction::Kind::Conditional: {
                e["kind"] = "conditional";
                e["depends"] = in.depends;
                std::size_t combos = 1;
                for (int r : in.depends) combos *= static_cast<std::size_t>(record_outcomes(r));
                if (combos <= 4096) {
                    nlohmann::json variants = nlohmann::json::array();
                    std::vector<int> outs(in.depends.size(), 0);
                    for (std::size_t c = 0; c < combos; ++c) {
                        std::size_t rest = c;
                        for (std::size_t t = 0; t < outs.size(); ++t) {
                            const auto base = static_cast<std::size_t>(record_outcomes(in.depends[t]));
                            outs[t] = static_cast<int>(rest % base);
                            rest /= base;
                        }
                        const auto m = in.select(outs);
                        if (m) variants.push_back({{"outcomes", outs}, {"matrix", mat(*m)}});
                    }
                    e["variants"] = std::move(variants);
                }
                break;
            }
            }
            j["instructions"].push_back(std::move(e));
        }
        return j;
    }

  private:
    void check_wires(const std::vector<int> &wires) const {
        for (std::size_t a = 0; a < wires.size(); ++a) {
            if (wires[a] < 0 || wires[a] >= num_wires()) throw DimensionError("unknown wire");
            for (std::size_t b = 0; b < a; ++b)
                if (wires[a] == wires[b]) throw DimensionError("repeated wire in instruction");
        }
    }

    std::vector<QubitLabel> wire_labels_;
    std::vector<Instruction> instrs_;
    int num_records_ = 0;
    std::vector<int> record_outcomes_;
    std::vector<int> record_instr_;
};

inline int circuit_depth(const Circuit &c) { return c.depth(); }

// ---------------------------------------------------------------------------
// Register: a state vector over lazily allocated circuit wires.

class Register {
  public:
    Register() = default;
    explicit Register(const Circuit &c) : pos_(static_cast<std::size_t>(c.num_wires()), -1), labels_(c.wire_labels()) {}

    void add_wire(const QubitLabel &l) {
        pos_.push_back(-1);
        labels_.push_back(l);
    }
    void relabel(int w, QubitLabel l) {
        l.wire = w;
        labels_.at(static_cast<std::size_t>(w)) = l;
        const int p = pos_.at(static_cast<std::size_t>(w));
        if (p >= 0) state_.set_label(p, l);
    }

    int position(int w) const { return pos_.at(static_cast<std::size_t>(w)); }
    bool is_live(int w) const { return position(w) >= 0; }
    const StateVector &state() const { return state_; }

    std::vector<int> positions(std::span<const int> wires) {
        std::vector<int> out;
        out.reserve(wires.size());
        for (int w : wires) {
            int &p = pos_.at(static_cast<std::size_t>(w));
            if (p < 0) p = state_.append_qubit(labels_.at(static_cast<std::size_t>(w)));
            out.push_back(p);
        }
        return out;
    }

    void apply(const Matrix &m, std::span<const int> wires) {
        const auto p = positions(wires);
        state_.apply_matrix(m, p);
    }

    std::vector<double> probabilities(std::span<const Matrix> projectors, std::span<const int> wires) {
        const auto p = positions(wires);
        return state_.probabilities(projectors, p);
    }

    void collapse(const Matrix &projector, std::span<const int> wires, double prob, bool discard) {
        const auto p = positions(wires);
        if (!discard) {
            state_.collapse(projector, p, prob);
            return;
        }
        // Rank-1 projector |b><b|: the post-measurement state is a product, so
        // contracting with <b| removes the wires.
        Eigen::SelfAdjointEigenSolver<Matrix> es(projector);
        const Vector ket = es.eigenvectors().col(es.eigenvalues().size() - 1);
        state_.contract_out(ket, p);
        std::vector<int> removed(p.begin(), p.end());
        std::sort(removed.begin(), removed.end());
        for (int w : wires) pos_[static_cast<std::size_t>(w)] = -1;
        for (auto &q : pos_) {
            if (q < 0) continue;
            const auto below = std::lower_bound(removed.begin(), removed.end(), q) - removed.begin();
            q -= static_cast<int>(below);
        }
    }

    std::vector<int> live_wires() const {
        std::vector<int> out;
        for (std::size_t w = 0; w < pos_.size(); ++w)
            if (pos_[w] >= 0) out.push_back(static_cast<int>(w));
        return out;
    }

    /// The joint state of the requested wires (in the requested order). Other
    /// live wires must be in a product state with them; they are projected out.
    StateVector extract(std::span<const int> wires) const {
        Register tmp = *this;
        auto p = tmp.positions(wires);
        for (int w : tmp.live_wires()) {
            if (std::find(wires.begin(), wires.end(), w) != wires.end()) continue;
            const int q = tmp.position(w);
            const Matrix rho = tmp.state_.single_qubit_rdm(q);
            Eigen::SelfAdjointEigenSolver<Matrix> es(rho);
            if (es.eigenvalues()(0) > 1e-9)
                throw Error("wire " + std::to_string(w) + " is entangled with the requested wires");
            const Vector ket = es.eigenvectors().col(1);
            tmp.collapse(ket * ket.adjoint(), std::array<int, 1>{w}, 1.0, true);
        }
        p = tmp.positions(wires);
        return tmp.state_.permuted(p);
    }

  private:
    StateVector state_;
    std::vector<int> pos_;
    std::vector<QubitLabel> labels_;
};

// ---------------------------------------------------------------------------
// Session: executes instructions on a register while recording them.

class Session {
  public:
    /// With simulate == false only the circuit is recorded (no amplitudes).
    explicit Session(bool simulate = true) : simulate_(simulate) {}

    bool simulating() const { return simulate_; }

    int add_wire(QubitLabel label) {
        const int w = circuit_.add_wire(label);
        reg_.add_wire(circuit_.wire_label(w));
        return w;
    }
    void relabel(int w, QubitLabel l) {
        circuit_.set_wire_label(w, l);
        reg_.relabel(w, circuit_.wire_label(w));
    }

    void gate(const Matrix &m, std::vector<int> wires, std::string tag) {
        if (!linalg::is_unitary(m)) throw NumericalError("gate '" + tag + "' is not unitary");
        if (simulate_) reg_.apply(m, wires);
        circuit_.add_gate(m, std::move(wires), std::move(tag));
    }

    int measure(std::vector<Matrix> projectors, std::vector<int> wires, std::string tag, OutcomePolicy &policy,
                bool discard = true) {
        const int rec = circuit_.add_measure(std::move(projectors), wires, std::move(tag), discard);
        const auto &in = circuit_.instructions().back();
        int o;
        if (simulate_) {
            const auto probs = reg_.probabilities(in.projectors, in.wires);
            o = policy.choose(probs);
            reg_.collapse(in.projectors[static_cast<std::size_t>(o)], in.wires, probs[static_cast<std::size_t>(o)],
                          in.discard);
            probabilities_.push_back(probs[static_cast<std::size_t>(o)]);
        } else {
            o = policy.choose_dry();
            if (o < 0 || o >= static_cast<int>(in.projectors.size())) throw ConfigError("forced outcome index out of range");
            probabilities_.push_back(std::numeric_limits<double>::quiet_NaN());
        }
        records_.push_back(o);
        return rec;
    }

    void conditional(std::vector<int> wires, std::vector<int> depends, Selector sel, std::string tag) {
        std::vector<int> outs;
        for (int r : depends) outs.push_back(records_.at(static_cast<std::size_t>(r)));
        if (simulate_) {
            if (const auto m = sel(outs)) {
                if (!linalg::is_unitary(*m)) throw NumericalError("conditional gate '" + tag + "' is not unitary");
                reg_.apply(*m, wires);
            }
        }
        circuit_.add_conditional(std::move(wires), std::move(depends), std::move(sel), std::move(tag));
    }

    int record(int rec) const { return records_.at(static_cast<std::size_t>(rec)); }
    double record_probability(int rec) const { return probabilities_.at(static_cast<std::size_t>(rec)); }
    const std::vector<int> &records() const { return records_; }

    const Circuit &circuit() const { return circuit_; }
    const Register &reg() const { return reg_; }
    Register &reg() { return reg_; }

    StateVector extract(std::span<const int> wires) const {
        if (!simulate_) throw Error("no state available: session only records the circuit");
        return reg_.extract(wires);
    }

  private:
    bool simulate_;
    Circuit circuit_;
    Register reg_;
    std::vector<int> records_;
    std::vector<double> probabilities_;
};

// ---------------------------------------------------------------------------
// Executor: replays a circuit as independent trajectories.

/// Per-shot random stream derived from (seed, shot index).
inline std::mt19937_64 shot_rng(std::uint64_t seed, std::uint64_t shot) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(shot), static_cast<std::uint32_t>(shot >> 32)};
    return std::mt19937_64(seq);
}

class Executor {
  public:
    explicit Executor(const Circuit &c) : circuit_(c), order_(c.low_memory_order()), layers_(c.layers()) {
        const auto rel = c.releasing_measures();
        release_.assign(rel.begin(), rel.end());
        first_layer_.assign(static_cast<std::size_t>(c.num_wires()), -1);
        for (std::size_t k = 0; k < c.instructions().size(); ++k)
            for (int w : c.instructions()[k].wires)
                if (first_layer_[static_cast<std::size_t>(w)] < 0) first_layer_[static_cast<std::size_t>(w)] = layers_[k];
    }

    const Circuit &circuit() const { return circuit_; }

    struct Shot {
        std::vector<int> records; ///< reported outcomes (after readout flips)
    };

    /// Final-state callback: receives the register after the last instruction.
    using FinalHook = std::function<void(std::size_t shot, const Register &, const std::vector<int> &records)>;

    /// Runs `shots` trajectories. Noise-free runs share intermediate states
    /// across shots through a prefix tree; both paths consume the random
    /// stream identically (one uniform per measurement when noise is off).
    std::vector<Shot> run(std::size_t shots, std::uint64_t seed, const NoiseModel &model, const FinalHook &hook = {},
                          std::size_t cache_budget = std::size_t{1} << 22) const {
        model.validate();
        std::vector<Shot> out(shots);
        if (model.is_zero()) {
            Tree tree;
            tree.budget = cache_budget;
            for (std::size_t s = 0; s < shots; ++s) {
                auto rng = shot_rng(seed, s);
                out[s].records = run_cached(tree, rng, hook, s);
            }
        } else {
            for (std::size_t s = 0; s < shots; ++s) {
                auto rng = shot_rng(seed, s);
                out[s].records = run_noisy(rng, model, hook, s);
            }
        }
        return out;
    }

  private:
    struct Node {
        std::size_t pos = 0; ///< index into order_ of the pending measurement (or end)
        Register reg;
        std::vector<int> records;
        std::vector<double> probs;
        std::vector<std::unique_ptr<Node>> children;
    };
    struct Tree {
        std::unique_ptr<Node> root;
        std::size_t budget = 0;
        std::size_t used = 0;
    };

    const Instruction &instr(std::size_t pos) const {
        return circuit_.instructions()[static_cast<std::size_t>(order_[pos])];
    }

    void apply_unitary_step(Register &reg, const Instruction &in, const std::vector<int> &records,
                            const Matrix **applied) const {
        *applied = nullptr;
        if (in.kind == Instruction::Kind::Gate) {
            reg.apply(in.matrix, in.wires);
            *applied = &in.matrix;
        } else if (in.kind == Instruction::Kind::Conditional) {
            std::vector<int> outs;
            for (int r : in.depends) outs.push_back(records[static_cast<std::size_t>(r)]);
            thread_local Matrix selected;
            if (const auto m = in.select(outs)) {
                selected = *m;
                reg.apply(selected, in.wires);
                *applied = &selected;
            }
        }
    }

    // Advances through non-measurement instructions (noise free).
    std::size_t advance(Register &reg, std::size_t pos, const std::vector<int> &records) const {
        while (pos < order_.size() && instr(pos).kind != Instruction::Kind::Measure) {
            const Matrix *applied;
            apply_unitary_step(reg, instr(pos), records, &applied);
            ++pos;
        }
        return pos;
    }

    std::vector<int> run_cached(Tree &tree, std::mt19937_64 &rng, const FinalHook &hook, std::size_t shot) const {
        if (!tree.root) {
            tree.root = std::make_unique<Node>();
            tree.root->reg = Register(circuit_);
            tree.root->records.assign(static_cast<std::size_t>(circuit_.num_records()), -1);
            tree.root->pos = advance(tree.root->reg, 0, tree.root->records);
            fill_probs(*tree.root);
        }
        Node *node = tree.root.get();
        // Walk cached nodes.
        while (node->pos < order_.size()) {
            const int o = detail::choose_outcome(node->probs, detail::uniform01(rng));
            auto &child = node->children[static_cast<std::size_t>(o)];
            if (!child) {
                auto next = std::make_unique<Node>();
                next->reg = node->reg;
                next->records = node->records;
                step_measure(next->reg, next->records, node->pos, o, node->probs[static_cast<std::size_t>(o)]);
                next->pos = advance(next->reg, node->pos + 1, next->records);
                fill_probs(*next);
                const auto cost = static_cast<std::size_t>(next->reg.state().amplitudes().size());
                if (tree.used + cost > tree.budget) {
                    // Out of cache: finish this trajectory without storing.
                    return finish_uncached(std::move(*next), rng, hook, shot);
                }
                tree.used += cost;
                child = std::move(next);
            }
            node = child.get();
        }
        if (hook) hook(shot, node->reg, node->records);
        return node->records;
    }

    std::vector<int> finish_uncached(Node cur, std::mt19937_64 &rng, const FinalHook &hook, std::size_t shot) const {
        while (cur.pos < order_.size()) {
            const int o = detail::choose_outcome(cur.probs, detail::uniform01(rng));
            step_measure(cur.reg, cur.records, cur.pos, o, cur.probs[static_cast<std::size_t>(o)]);
            cur.pos = advance(cur.reg, cur.pos + 1, cur.records);
            fill_probs(cur);
        }
        if (hook) hook(shot, cur.reg, cur.records);
        return cur.records;
    }

    void fill_probs(Node &n) const {
        if (n.pos >= order_.size()) return;
        const auto &in = instr(n.pos);
        n.probs = n.reg.probabilities(in.projectors, in.wires);
        n.children.resize(in.projectors.size());
    }

    void step_measure(Register &reg, std::vector<int> &records, std::size_t pos, int o, double p) const {
        const auto &in = instr(pos);
        reg.collapse(in.projectors[static_cast<std::size_t>(o)], in.wires, p,
                     release_[static_cast<std::size_t>(order_[pos])] != 0);
        records[static_cast<std::size_t>(in.record)] = o;
    }

    static void depolarize1(Register &reg, int w, double p, std::mt19937_64 &rng) {
        if (p <= 0.0 || detail::uniform01(rng) >= p) return;
        const int k = 1 + static_cast<int>(detail::uniform01(rng) * 3.0);
        reg.apply(linalg::pauli(static_cast<linalg::Pauli>(std::min(k, 3))), std::array<int, 1>{w});
    }

    static void depolarize2(Register &reg, int a, int b, double p, std::mt19937_64 &rng) {
        if (p <= 0.0 || detail::uniform01(rng) >= p) return;
        const int k = 1 + std::min(14, static_cast<int>(detail::uniform01(rng) * 15.0));
        const int pa = k % 4, pb = k / 4;
        if (pa) reg.apply(linalg::pauli(static_cast<linalg::Pauli>(pa)), std::array<int, 1>{a});
        if (pb) reg.apply(linalg::pauli(static_cast<linalg::Pauli>(pb)), std::array<int, 1>{b});
    }

    static void gate_noise(Register &reg, const std::vector<int> &wires, const NoiseModel &m, std::mt19937_64 &rng) {
        if (wires.size() == 1) {
            depolarize1(reg, wires[0], m.p1, rng);
        } else {
            for (std::size_t k = 0; k + 1 < wires.size(); ++k) depolarize2(reg, wires[k], wires[k + 1], m.p2, rng);
        }
    }

    std::vector<int> run_noisy(std::mt19937_64 &rng, const NoiseModel &m, const FinalHook &hook, std::size_t shot) const {
        Register reg(circuit_);
        std::vector<int> records(static_cast<std::size_t>(circuit_.num_records()), -1);
        std::vector<int> last(first_layer_.size());
        for (std::size_t w = 0; w < last.size(); ++w) last[w] = first_layer_[w] - 1;
        for (std::size_t pos = 0; pos < order_.size(); ++pos) {
            const auto k = static_cast<std::size_t>(order_[pos]);
            const auto &in = circuit_.instructions()[k];
            const int layer = layers_[k];
            if (m.idle_dephase > 0.0) {
                for (int w : in.wires) {
                    const int gap = layer - last[static_cast<std::size_t>(w)] - 1;
                    if (gap > 0) {
                        const double p_odd = 0.5 * (1.0 - std::pow(1.0 - 2.0 * m.idle_dephase, gap));
                        if (detail::uniform01(rng) < p_odd) reg.apply(linalg::pauli_z(), std::array<int, 1>{w});
                    }
                }
            }
            for (int w : in.wires) last[static_cast<std::size_t>(w)] = layer;
            if (in.kind == Instruction::Kind::Measure) {
                if (!in.projectors_diagonal()) gate_noise(reg, in.wires, m, rng);
                const auto probs = reg.probabilities(in.projectors, in.wires);
                const int o = detail::choose_outcome(probs, detail::uniform01(rng));
                reg.collapse(in.projectors[static_cast<std::size_t>(o)], in.wires, probs[static_cast<std::size_t>(o)],
                             release_[k] != 0);
                int reported = o;
                const auto count = in.projectors.size();
                if (m.p_ro > 0.0 && count > 1 && (count & (count - 1)) == 0) {
                    for (std::size_t b = 0; (std::size_t{1} << b) < count; ++b)
                        if (detail::uniform01(rng) < m.p_ro) reported ^= 1 << b;
                }
                records[static_cast<std::size_t>(in.record)] = reported;
            } else {
                const Matrix *applied;
                apply_unitary_step(reg, in, records, &applied);
                if (applied) gate_noise(reg, in.wires, m, rng);
            }
        }
        if (hook) hook(shot, reg, records);
        return records;
    }

    const Circuit &circuit_;
    std::vector<int> order_;
    std::vector<int> layers_;
    std::vector<char> release_;
    std::vector<int> first_layer_;
};

} // namespace sim
} // namespace aklt
