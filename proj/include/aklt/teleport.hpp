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
 * Teleportation of a qubit state from the right boundary memory to the left
 * one through a prepared chain, with Pauli byproduct tracking.
 */

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "aklt/error.hpp"
#include "aklt/linalg.hpp"
#include "aklt/observables.hpp"
#include "aklt/protocol.hpp"
#include "aklt/sim.hpp"

namespace aklt::teleport {

using linalg::DensityMatrix;
using linalg::Pauli;
using protocol::CorrectionMode;
using protocol::Method;
using protocol::PreparationResult;
using sim::OutcomePolicy;

// ---------------------------------------------------------------------------
// Site measurement basis

/// CNOT(q1 -> q0), then RY(-pi/2) on q1 controlled by q0, then X on q0.
/// Local index q0 + 2 q1; maps the encoded x, y, z, s states onto
/// |q1 q0> = |10>, |00>, |01>, |11>.
inline Matrix site_basis_transform() {
    Matrix cnot = Matrix::Zero(4, 4);
    cnot(0, 0) = cnot(1, 1) = cnot(3, 2) = cnot(2, 3) = 1;
    Matrix cry = Matrix::Identity(4, 4);
    const Matrix ry = sim::gates::ry(-std::numbers::pi / 2);
    cry(1, 1) = ry(0, 0);
    cry(1, 3) = ry(0, 1);
    cry(3, 1) = ry(1, 0);
    cry(3, 3) = ry(1, 1);
    const Matrix x0 = linalg::kron(Matrix::Identity(2, 2), sim::gates::x());
    return x0 * cry * cnot;
}

/// Encoded ket of the teleportation basis state 'x', 'y', 'z' or 's'.
inline Vector basis_state(char label) {
    using E = mps::Spin1Encoding;
    const double r = 1.0 / std::sqrt(2.0);
    Vector v = Vector::Zero(4);
    switch (label) {
    case 'x': v(E::code(E::kPlus)) = r, v(E::code(E::kMinus)) = -r; break;
    case 'y': v(E::code(E::kPlus)) = r, v(E::code(E::kMinus)) = r; break;
    case 'z': v(E::code(E::kZero)) = 1; break;
    case 's': v(E::kSingletCode) = 1; break;
    default: throw ConfigError(std::string("unknown teleportation basis label ") + label);
    }
    return v;
}

/// Basis label read from the two-qubit code after site_basis_transform.
inline char outcome_label(int code) {
    constexpr char table[4] = {'y', 'z', 'x', 's'};
    if (code < 0 || code > 3) throw DimensionError("site code out of range");
    return table[code];
}

/// Pauli to which the site tensor collapses for a measured label.
inline Pauli label_pauli(char label) {
    switch (label) {
    case 'x': return Pauli::X;
    case 'y': return Pauli::Y;
    case 'z': return Pauli::Z;
    default: throw ConfigError(std::string("no Pauli for outcome ") + label);
    }
}

// ---------------------------------------------------------------------------
// Targets

struct Target {
    Vector psi; ///< normalized, first component real and non-negative

    static Target from_vector(Vector v) {
        const double n = v.norm();
        if (std::abs(n - 1.0) > 1e-9) throw ConfigError("target state must be normalized");
        if (v.size() != 2) throw DimensionError("target must be a single-qubit state");
        if (std::abs(v(0)) > 1e-15) v *= std::conj(v(0)) / std::abs(v(0));
        return {v};
    }
    static Target from_bloch(double theta, double phi) {
        Vector v(2);
        v << std::cos(theta / 2), std::polar(std::sin(theta / 2), phi);
        return {v};
    }
    double theta() const { return 2.0 * std::acos(std::clamp(std::abs(psi(0)), 0.0, 1.0)); }
    double phi() const { return std::abs(psi(1)) > 1e-15 ? std::arg(psi(1)) : 0.0; }
    /// The orthogonal state Y conj(psi).
    Vector perp() const { return linalg::pauli_y() * psi.conjugate(); }
};

/// |0>, |1>, |+>, |->, |+i>, (|0> + e^{i pi/4}|1>)/sqrt2.
inline std::vector<std::pair<std::string, Target>> canonical_targets() {
    const double pi = std::numbers::pi;
    return {{"0", Target::from_bloch(0, 0)},        {"1", Target::from_bloch(pi, 0)},
            {"+", Target::from_bloch(pi / 2, 0)},   {"-", Target::from_bloch(pi / 2, pi)},
            {"+i", Target::from_bloch(pi / 2, pi / 2)}, {"T", Target::from_bloch(pi / 2, pi / 4)}};
}

// ---------------------------------------------------------------------------
// Protocol

struct Options {
    Method method = Method::Fusion;
    CorrectionMode correction = CorrectionMode::None; ///< fusion only; None absorbs defects into the byproduct
};

/// Chain with live boundary memories.
inline PreparationResult resource(int N, const Options &opt, OutcomePolicy &fusion, bool simulate) {
    if (N < 1) throw DimensionError("teleportation needs N >= 1");
    if (opt.method == Method::Sequential)
        return protocol::prepare_sequential(N, protocol::MemoryMode::Single, protocol::MemoryInit::singlet(), simulate);
    if (opt.method != Method::Fusion)
        throw ConfigError(std::string("no teleportation resource for method ") + protocol::method_name(opt.method));
    if (N == 1)
        return protocol::prepare_sequential(N, protocol::MemoryMode::Dual, protocol::MemoryInit::singlet(), simulate);
    auto r = protocol::prepare_fusion(N, fusion, simulate);
    if (opt.correction != CorrectionMode::None) protocol::correct_defects(r, opt.correction);
    return r;
}

/// Teleportation circuit appended to a resource: target initialization on
/// the right memory, basis change and readout of every site.
struct Circuit {
    PreparationResult r;
    int rec_target = -1;
    std::vector<std::array<int, 2>> site_records;
};

/// The memory is measured in {perp, psi}: outcome 0 (conj(perp) overlap
/// psi) is the one that leaves the right edge spin in psi, because the
/// memory and edge share the singlet bond S ~ Y.
inline Circuit build(PreparationResult r, const Target &t, OutcomePolicy &target_policy, OutcomePolicy &site_policy) {
    if (!r.memories_live()) throw ConfigError("teleportation needs both boundary memories");
    Circuit c;
    auto &s = r.session;
    const Vector keep = t.perp(), other = t.psi;
    c.rec_target = s.measure({keep * keep.adjoint(), other * other.adjoint()}, {r.mem_right}, "target_init",
                             target_policy);
    const Matrix T = site_basis_transform();
    for (const auto &w : r.sites) s.gate(T, {w[0], w[1]}, "teleport_basis");
    for (const auto &w : r.sites) {
        std::array<int, 2> recs{};
        for (int slot = 0; slot < 2; ++slot)
            recs[static_cast<std::size_t>(slot)] =
                s.measure(protocol::detail::z_projectors(), {w[static_cast<std::size_t>(slot)]}, "site_readout", site_policy);
        c.site_records.push_back(recs);
    }
    c.r = std::move(r);
    return c;
}

/// Byproduct of one run given its records, or nothing when a site read the
/// encoded singlet (not a valid spin-1 outcome).
inline std::optional<Pauli> byproduct(const Circuit &c, std::span<const int> records) {
    Pauli lambda = Pauli::I;
    for (const auto &rs : c.site_records) {
        const int code = records[static_cast<std::size_t>(rs[0])] + 2 * records[static_cast<std::size_t>(rs[1])];
        const char label = outcome_label(code);
        if (label == 's') return std::nullopt;
        lambda = linalg::pauli_product(lambda, label_pauli(label));
    }
    if (c.r.correction != CorrectionMode::Unitary) lambda = linalg::pauli_product(lambda, protocol::frame_for_memory(c.r, records));
    return lambda;
}

struct PathResult {
    double acceptance = 0.0; ///< probability of the target-initialization outcome
    Pauli lambda = Pauli::I;
    std::vector<char> labels;
    DensityMatrix raw;      ///< left memory as measured
    DensityMatrix received; ///< left memory after removing lambda
    double fidelity = 0.0;
};

/// One exact trajectory with the target initialization post-selected.
inline PathResult run_path(int N, const Target &t, const Options &opt, OutcomePolicy &fusion, OutcomePolicy &sites) {
    auto target = OutcomePolicy::forced({0});
    auto c = build(resource(N, opt, fusion, true), t, target, sites);
    const auto &recs = c.r.session.records();
    PathResult out;
    out.acceptance = c.r.session.record_probability(c.rec_target);
    const auto lambda = byproduct(c, recs);
    if (!lambda) throw NumericalError("singlet outcome in a noiseless trajectory");
    out.lambda = *lambda;
    for (const auto &rs : c.site_records)
        out.labels.push_back(outcome_label(recs[static_cast<std::size_t>(rs[0])] + 2 * recs[static_cast<std::size_t>(rs[1])]));
    const std::array<int, 1> left{c.r.mem_left};
    const Vector raw = c.r.session.extract(left).amplitudes();
    out.raw = DensityMatrix::pure(raw);
    out.received = DensityMatrix::pure(linalg::pauli(out.lambda) * raw);
    out.fidelity = linalg::fidelity(out.received, t.psi);
    return out;
}

/// Forced site policy for a sequence of labels ('x', 'y', 'z').
inline OutcomePolicy forced_sites(const std::vector<char> &labels) {
    std::vector<int> bits;
    for (char l : labels) {
        int code = -1;
        for (int k = 0; k < 4; ++k)
            if (outcome_label(k) == l) code = k;
        bits.push_back(code & 1);
        bits.push_back(code >> 1);
    }
    return OutcomePolicy::forced(bits);
}

struct Report {
    int N = 0;
    Target target;
    std::string prep;
    bool exact = true;
    std::size_t runs = 0; ///< paths (exact) or shots per tomography setting
    std::uint64_t seed = 0;
    double raw_fidelity = 0.0;
    double purified_fidelity = 0.0;
    double acceptance_rate = 0.0;
    double spin1_rejection = 0.0;
    std::array<std::size_t, 4> lambda_histogram{};
    DensityMatrix received;
    DensityMatrix purified;

    nlohmann::json to_json() const {
        nlohmann::json hist;
        for (int p = 0; p < 4; ++p) hist[std::string(1, linalg::pauli_char(static_cast<Pauli>(p)))] = lambda_histogram[static_cast<std::size_t>(p)];
        return {{"N", N},
                {"psi", {{"theta", target.theta()}, {"phi", target.phi()}}},
                {"prep", prep},
                {"mode", exact ? "exact" : "shots"},
                {"runs", runs},
                {"raw_fidelity", raw_fidelity},
                {"purified_fidelity", purified_fidelity},
                {"lambda_histogram", hist},
                {"acceptance_rate", acceptance_rate},
                {"spin1_rejection_rate", spin1_rejection},
                {"seed", seed}};
    }
};

namespace detail {
inline void finish(Report &rep, const Matrix &rho) {
    rep.received = DensityMatrix::normalized(rho);
    rep.raw_fidelity = linalg::fidelity(rep.received, rep.target.psi);
    rep.purified = linalg::mcweeny_purify(rep.received).rho;
    rep.purified_fidelity = linalg::fidelity(rep.purified, rep.target.psi);
}
} // namespace detail

/// Exact mode: `paths` sampled trajectories; the received state is their
/// average after byproduct removal. With `forced`, every path uses that list
/// of fusion outcomes.
inline Report teleport(int N, const Target &t, const Options &opt, std::uint64_t seed, std::size_t paths = 16,
                       const std::vector<int> *forced = nullptr) {
    Report rep;
    rep.N = N;
    rep.target = t;
    rep.prep = protocol::method_name(opt.method);
    rep.seed = seed;
    rep.runs = paths;
    Matrix rho = Matrix::Zero(2, 2);
    for (std::size_t k = 0; k < paths; ++k) {
        auto fusion = forced ? OutcomePolicy::forced(*forced) : OutcomePolicy::sample(seed + 2 * k);
        auto sites = OutcomePolicy::sample(seed + 2 * k + 1);
        const auto p = run_path(N, t, opt, fusion, sites);
        if (fusion.remaining() != 0) throw ConfigError("more forced outcomes than fusion measurements");
        rho += p.received.matrix() / static_cast<double>(paths);
        rep.acceptance_rate += p.acceptance / static_cast<double>(paths);
        ++rep.lambda_histogram[static_cast<std::size_t>(p.lambda)];
    }
    detail::finish(rep, rho);
    return rep;
}

/// Shot mode: replays the circuit (optionally noisy) with the left memory
/// read in the X, Y and Z bases; rejected shots fail target initialization
/// or read a singlet site. The byproduct is removed per shot by flipping
/// the memory bit when lambda anticommutes with the measured Pauli.
inline Report teleport_shots(int N, const Target &t, const Options &opt, std::size_t shots, std::uint64_t seed,
                             const NoiseModel &model = {}) {
    if (shots < 1) throw ConfigError("teleportation needs at least one shot");
    Report rep;
    rep.N = N;
    rep.target = t;
    rep.prep = protocol::method_name(opt.method);
    rep.exact = false;
    rep.seed = seed;
    rep.runs = shots;
    auto fusion = OutcomePolicy::sample(0);
    auto target = OutcomePolicy::sample(0);
    auto sites = OutcomePolicy::sample(0);
    const auto base = build(resource(N, opt, fusion, false), t, target, sites);
    std::array<double, 4> expect{1.0, 0.0, 0.0, 0.0};
    std::size_t total = 0, accepted = 0, valid = 0;
    for (int b = 1; b <= 3; ++b) {
        const auto P = static_cast<Pauli>(b);
        sim::Circuit circ = base.r.session.circuit();
        if (P != Pauli::Z) circ.add_gate(observables::basis_rotation(P), {base.r.mem_left}, "tomo_basis");
        const int rec = circ.add_measure(protocol::detail::z_projectors(), {base.r.mem_left}, "receive", true);
        sim::Executor ex(circ);
        double sum = 0.0;
        std::size_t kept = 0;
        for (const auto &shot : ex.run(shots, seed + 1000003ULL * static_cast<std::uint64_t>(b), model)) {
            ++total;
            if (shot.records[static_cast<std::size_t>(base.rec_target)] != 0) continue;
            ++accepted;
            const auto lambda = byproduct(base, shot.records);
            if (!lambda) continue;
            ++valid;
            ++kept;
            ++rep.lambda_histogram[static_cast<std::size_t>(*lambda)];
            int bit = shot.records[static_cast<std::size_t>(rec)];
            const bool anti = *lambda != Pauli::I && *lambda != P;
            if (anti) bit ^= 1;
            sum += bit ? -1.0 : 1.0;
        }
        if (kept == 0) throw ZeroProbabilityError("no accepted shots for a tomography setting");
        expect[static_cast<std::size_t>(b)] = sum / static_cast<double>(kept);
    }
    rep.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(total);
    rep.spin1_rejection = accepted ? 1.0 - static_cast<double>(valid) / static_cast<double>(accepted) : 0.0;
    detail::finish(rep, observables::linear_inversion(expect, 1));
    return rep;
}

/// Exact probability of the accepted target-initialization outcome.
inline double exact_acceptance(int N, const Target &t, const Options &opt, std::uint64_t seed = 0) {
    auto fusion = OutcomePolicy::sample(seed);
    const auto r = resource(N, opt, fusion, true);
    const std::array<int, 1> right{r.mem_right};
    auto reg = r.session.reg();
    const Vector keep = t.perp();
    const std::array<Matrix, 2> proj{keep * keep.adjoint(), t.psi * t.psi.adjoint()};
    return reg.probabilities(proj, right)[0];
}

} // namespace aklt::teleport
