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
 * GHZ and 1D cluster states built from small blocks joined by Bell
 * measurements, with Pauli defects pushed out by tensor symmetries.
 */

#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "aklt/error.hpp"
#include "aklt/linalg.hpp"
#include "aklt/mps.hpp"
#include "aklt/protocol.hpp"
#include "aklt/sim.hpp"

namespace aklt::variants {

using linalg::Pauli;
using mps::MpsChain;
using sim::OutcomePolicy;
using sim::QubitLabel;
using sim::Role;
using sim::Session;
using sim::StateVector;

enum class VariantKind { Ghz, Cluster };

inline const char *kind_name(VariantKind k) { return k == VariantKind::Ghz ? "ghz" : "cluster"; }

inline VariantKind kind_from_name(const std::string &s) {
    if (s == "ghz") return VariantKind::Ghz;
    if (s == "cluster") return VariantKind::Cluster;
    throw ConfigError("unknown variant '" + s + "'");
}

/// GHZ: <i|A^m|j> = delta_im delta_jm. Cluster: A^0 = |+><0|, A^1 = |-><1|.
inline MpsChain variant_tensors(VariantKind kind) {
    MpsChain c;
    c.d = 2;
    c.D = 2;
    c.canonical = true;
    if (kind == VariantKind::Ghz) {
        c.name = "ghz";
        for (int m = 0; m < 2; ++m) {
            Matrix a = Matrix::Zero(2, 2);
            a(m, m) = 1;
            c.A.push_back(a);
        }
    } else {
        c.name = "cluster";
        const double r = 1.0 / std::sqrt(2.0);
        Matrix a0 = Matrix::Zero(2, 2), a1 = Matrix::Zero(2, 2);
        a0(0, 0) = r, a0(1, 0) = r;
        a1(0, 1) = r, a1(1, 1) = -r;
        c.A = {a0, a1};
    }
    return c;
}

/// Boundary vectors giving the textbook state: (|0..0> + |1..1>)/sqrt2 for
/// GHZ, |+>^N followed by CZ on neighbours for the cluster.
inline std::pair<Vector, Vector> variant_boundaries(VariantKind kind) {
    Vector plus = Vector::Ones(2) / std::sqrt(2.0);
    if (kind == VariantKind::Ghz) return {plus, plus};
    return {Vector::Unit(2, 0), plus};
}

inline StateVector variant_reference(VariantKind kind, int N) {
    const auto [L, R] = variant_boundaries(kind);
    return mps::contract_open(variant_tensors(kind), L, R, N);
}

// ---------------------------------------------------------------------------
// Symmetry relations

/// A defect B on the right bond of a site becomes `left` on its left bond
/// once `physical` is applied to the site:
/// sum_m' physical_{m m'} A^{m'} B = e^{i theta} left A^m.
struct PushRule {
    Pauli physical = Pauli::I;
    Pauli left = Pauli::I;
};

/// Rules found by search over Pauli pairs. Among valid rules the one whose
/// defect is absorbed after the fewest further sites wins; defects that are
/// never absorbed (GHZ X) keep the first valid rule.
inline std::array<PushRule, 4> derive_push_rules(const MpsChain &c, double tol = 1e-12) {
    auto holds = [&](const Matrix &U, const Matrix &B, const Matrix &Bl) {
        std::optional<cplx> phase;
        for (int m = 0; m < c.d; ++m) {
            Matrix lhs = Matrix::Zero(c.D, c.D);
            for (int mp = 0; mp < c.d; ++mp) lhs += U(m, mp) * c.A[static_cast<std::size_t>(mp)] * B;
            const Matrix rhs = Bl * c.A[static_cast<std::size_t>(m)];
            Eigen::Index r = 0, col = 0;
            rhs.cwiseAbs().maxCoeff(&r, &col);
            if (std::abs(rhs(r, col)) < tol) {
                if (lhs.norm() >= tol) return false;
                continue;
            }
            const cplx ph = lhs(r, col) / rhs(r, col);
            if (!phase) phase = ph;
            if (std::abs(std::abs(ph) - 1.0) > 1e-9 || std::abs(ph - *phase) > 1e-9 || (lhs - ph * rhs).norm() > 1e-9)
                return false;
        }
        return phase.has_value();
    };
    std::array<std::vector<PushRule>, 4> valid;
    for (int b = 0; b < 4; ++b) {
        for (int l = 0; l < 4; ++l)
            for (int u = 0; u < 4; ++u)
                if (holds(linalg::pauli(static_cast<Pauli>(u)), linalg::pauli(static_cast<Pauli>(b)),
                          linalg::pauli(static_cast<Pauli>(l))))
                    valid[static_cast<std::size_t>(b)].push_back({static_cast<Pauli>(u), static_cast<Pauli>(l)});
        if (valid[static_cast<std::size_t>(b)].empty())
            throw NumericalError(std::string("no push rule for defect ") + linalg::pauli_char(static_cast<Pauli>(b)));
    }
    constexpr int kNever = 1 << 20;
    std::array<int, 4> dist{0, kNever, kNever, kNever};
    std::array<PushRule, 4> out{};
    for (int b = 0; b < 4; ++b) out[static_cast<std::size_t>(b)] = valid[static_cast<std::size_t>(b)].front();
    for (int pass = 0; pass < 4; ++pass)
        for (int b = 1; b < 4; ++b)
            for (const auto &rule : valid[static_cast<std::size_t>(b)]) {
                const int d = dist[static_cast<std::size_t>(rule.left)] + 1;
                if (d < dist[static_cast<std::size_t>(b)]) {
                    dist[static_cast<std::size_t>(b)] = d;
                    out[static_cast<std::size_t>(b)] = rule;
                }
            }
    return out;
}

inline const std::array<PushRule, 4> &push_rules(VariantKind kind) {
    static const auto ghz = derive_push_rules(variant_tensors(VariantKind::Ghz));
    static const auto cluster = derive_push_rules(variant_tensors(VariantKind::Cluster));
    return kind == VariantKind::Ghz ? ghz : cluster;
}

/// Paired tensor A^{m1} A^{m2} with composite index n = 2 m1 + m2.
inline Matrix paired_tensor(const MpsChain &c, int n) {
    return c.A[static_cast<std::size_t>(n / 2)] * c.A[static_cast<std::size_t>(n % 2)];
}

/// The two-site U_B with sum_n' (U_B)_{n n'} A~^{n'} = B A~^n B, solved from
/// the linear independence of the four paired tensors.
inline Matrix derive_pair_symmetry(const MpsChain &c, Pauli b) {
    const Matrix B = linalg::pauli(b);
    Matrix T(4, 4), M(4, 4);
    for (int n = 0; n < 4; ++n) {
        const Matrix a = paired_tensor(c, n);
        const Matrix ba = B * a * B;
        for (int k = 0; k < 4; ++k) {
            T(n, k) = a(k % 2, k / 2);
            M(n, k) = ba(k % 2, k / 2);
        }
    }
    Eigen::FullPivLU<Matrix> lu(T.transpose());
    if (lu.rank() < 4) throw NumericalError("paired tensors are linearly dependent");
    const Matrix U = lu.solve(M.transpose()).transpose();
    if (!linalg::is_unitary(U, 1e-10)) throw NumericalError("paired symmetry is not unitary");
    return U;
}

inline const Matrix &pair_symmetry(Pauli b) {
    static const std::array<Matrix, 4> cache = [] {
        const auto c = variant_tensors(VariantKind::Cluster);
        return std::array<Matrix, 4>{derive_pair_symmetry(c, Pauli::I), derive_pair_symmetry(c, Pauli::X),
                                     derive_pair_symmetry(c, Pauli::Y), derive_pair_symmetry(c, Pauli::Z)};
    }();
    return cache[static_cast<std::size_t>(b)];
}

/// Physical Paulis on sites 1..n that remove defects given as (bond, B),
/// bond k lying right of site k; the second member is what reaches the left
/// boundary.
inline std::pair<std::vector<Pauli>, Pauli> push_defects(const std::array<PushRule, 4> &rules, int n,
                                                         const std::vector<std::pair<int, Pauli>> &defects) {
    std::vector<Pauli> ops(static_cast<std::size_t>(n), Pauli::I);
    Pauli cur = Pauli::I;
    for (int k = n; k >= 1; --k) {
        for (const auto &[bond, b] : defects)
            if (bond == k) cur = linalg::pauli_product(b, cur);
        const auto rule = rules[static_cast<std::size_t>(cur)];
        ops[static_cast<std::size_t>(k - 1)] = rule.physical;
        cur = rule.left;
    }
    return {ops, cur};
}

// ---------------------------------------------------------------------------
// Fusion preparation

struct VariantDefect {
    int bond = 0; ///< among the corrected sites (GHZ: sites kept through fusion)
    Pauli defect = Pauli::I;
    int record = -1;
};

struct VariantResult {
    Session session{true};
    VariantKind kind = VariantKind::Ghz;
    int N = 0;
    std::vector<int> sites;              ///< final site wires in chain order
    std::vector<std::vector<int>> blocks; ///< wires of every block, in order
    std::vector<int> recycled;           ///< GHZ: measured wires reused as sites
    std::vector<VariantDefect> defects;
    int mem_left = -1, mem_right = -1; ///< cluster boundary memories (measured at the end)

    int depth() const { return session.circuit().depth(); }
    int num_qubits() const { return session.circuit().num_wires(); }
};

namespace detail {

/// Defect left by a Bell-pair projection onto `ket` (qubit a = index bit 0).
inline Pauli bell_defect(const Vector &ket) {
    Pauli p;
    if (!linalg::match_pauli(sim::coefficient_matrix(ket).conjugate(), p)) throw NumericalError("projection is not a Pauli");
    return p;
}

/// Defects for the Z-basis outcomes a + 2b read after CNOT(a->b), H(a).
inline std::array<Pauli, 4> ghz_outcome_defects() {
    Matrix cn = Matrix::Zero(4, 4);
    cn(0, 0) = cn(3, 1) = cn(2, 2) = cn(1, 3) = 1;
    const Matrix rot = linalg::kron(Matrix::Identity(2, 2), sim::gates::h()) * cn;
    std::array<Pauli, 4> out{};
    for (int o = 0; o < 4; ++o) out[static_cast<std::size_t>(o)] = bell_defect(rot.adjoint() * Vector::Unit(4, o));
    return out;
}

inline std::array<Pauli, 4> bell_outcome_defects() {
    std::array<Pauli, 4> out{};
    const auto basis = sim::bell_basis();
    for (int o = 0; o < 4; ++o) out[static_cast<std::size_t>(o)] = bell_defect(basis[static_cast<std::size_t>(o)]);
    return out;
}

/// Conditional Pauli gates that push every recorded defect out of sites[0..n).
inline void add_push_layer(VariantResult &r, const std::vector<int> &wires, const std::array<Pauli, 4> &outcome_defects,
                           int left_wire) {
    const auto &rules = push_rules(r.kind);
    const int n = static_cast<int>(wires.size());
    auto selector = [rules, n, outcome_defects, defs = r.defects](int site) {
        return [=](std::span<const int> outs) -> std::optional<Matrix> {
            std::vector<std::pair<int, Pauli>> d;
            std::size_t j = 0;
            for (const auto &e : defs)
                if (site < 1 || e.bond >= site) d.emplace_back(e.bond, outcome_defects[static_cast<std::size_t>(outs[j++])]);
            const auto [ops, left] = push_defects(rules, n, d);
            const Pauli p = site < 1 ? left : ops[static_cast<std::size_t>(site - 1)];
            if (p == Pauli::I) return std::nullopt;
            return linalg::pauli(p);
        };
    };
    for (int k = 1; k <= n; ++k) {
        std::vector<int> deps;
        for (const auto &e : r.defects)
            if (e.bond >= k) deps.push_back(e.record);
        if (deps.empty()) continue;
        r.session.conditional({wires[static_cast<std::size_t>(k - 1)]}, deps, selector(k), "push");
    }
    if (left_wire >= 0 && !r.defects.empty()) {
        std::vector<int> deps;
        for (const auto &e : r.defects) deps.push_back(e.record);
        r.session.conditional({left_wire}, deps, selector(0), "push_edge");
    }
}

inline void check_forced(const OutcomePolicy &policy, int fusions) {
    if (policy.is_forced() && policy.remaining() != static_cast<std::size_t>(fusions))
        throw ConfigError("forced-outcome list length mismatch: expected " + std::to_string(fusions) + ", got " +
                          std::to_string(policy.remaining()));
}

/// GHZ block sizes: end blocks hold at least one kept site plus one fused
/// edge, inner blocks one kept site plus two fused edges.
inline std::vector<int> ghz_block_sizes(int N) {
    const int K = N < 4 ? 1 : std::max(2, (N + 2) / 4);
    if (K == 1) return {N};
    std::vector<int> sizes(static_cast<std::size_t>(K), 3);
    sizes.front() = sizes.back() = 2;
    int rest = N - (3 * K - 2);
    for (std::size_t b = 0; rest > 0; b = (b + 1) % sizes.size(), --rest) ++sizes[b];
    return sizes;
}

inline VariantResult prepare_ghz(int N, OutcomePolicy &policy, bool simulate) {
    VariantResult r;
    r.session = Session(simulate);
    r.kind = VariantKind::Ghz;
    r.N = N;
    auto &s = r.session;
    const auto sizes = ghz_block_sizes(N);
    check_forced(policy, static_cast<int>(sizes.size()) - 1);
    int site = 1;
    for (int m : sizes) {
        std::vector<int> w;
        for (int q = 0; q < m; ++q) w.push_back(s.add_wire(QubitLabel::site_qubit(site++, 0)));
        r.blocks.push_back(w);
        r.sites.insert(r.sites.end(), w.begin(), w.end());
    }
    // Sequential GHZ blocks, grown outward from the middle qubit.
    for (const auto &w : r.blocks) {
        const int mid = static_cast<int>(w.size() - 1) / 2;
        s.gate(sim::gates::h(), {w[static_cast<std::size_t>(mid)]}, "H");
        for (int q = mid; q > 0; --q)
            s.gate(sim::gates::cnot(), {w[static_cast<std::size_t>(q)], w[static_cast<std::size_t>(q - 1)]}, "CNOT");
        for (int q = mid; q + 1 < static_cast<int>(w.size()); ++q)
            s.gate(sim::gates::cnot(), {w[static_cast<std::size_t>(q)], w[static_cast<std::size_t>(q + 1)]}, "CNOT");
    }
    // Bell measurements of neighbouring block edges, kept alive for reuse.
    std::vector<int> kept;
    std::vector<std::array<int, 3>> reuse; // (record, wire a, wire b)
    const auto z4 = sim::computational_basis(2);
    std::vector<Matrix> proj;
    for (const auto &v : z4) proj.push_back(v * v.adjoint());
    for (std::size_t b = 0; b < r.blocks.size(); ++b) {
        const auto &w = r.blocks[b];
        const std::size_t lo = b > 0 ? 1 : 0, hi = b + 1 < r.blocks.size() ? w.size() - 1 : w.size();
        for (std::size_t q = lo; q < hi; ++q) kept.push_back(w[q]);
        if (b + 1 == r.blocks.size()) break;
        const int a = w.back(), c = r.blocks[b + 1].front();
        s.gate(sim::gates::cnot(), {a, c}, "bell_basis");
        s.gate(sim::gates::h(), {a}, "bell_basis");
        const int rec = s.measure(proj, {a, c}, "bell", policy, false);
        r.defects.push_back({static_cast<int>(kept.size()), Pauli::I, rec});
        reuse.push_back({rec, a, c});
    }
    const auto table = ghz_outcome_defects();
    for (auto &d : r.defects) d.defect = table[static_cast<std::size_t>(s.record(d.record))];
    add_push_layer(r, kept, table, -1);
    // Recycling: reset the measured pair to |00>, then one sequential layer.
    for (const auto &[rec, a, c] : reuse) {
        s.conditional({a, c}, {rec}, [](std::span<const int> o) -> std::optional<Matrix> {
            if (o[0] == 0) return std::nullopt;
            const Matrix xa = (o[0] & 1) ? sim::gates::x() : Matrix::Identity(2, 2);
            const Matrix xc = (o[0] & 2) ? sim::gates::x() : Matrix::Identity(2, 2);
            return linalg::kron(xc, xa);
        }, "reset");
        r.recycled.push_back(a);
        r.recycled.push_back(c);
    }
    for (std::size_t k = 0; k < reuse.size(); ++k) {
        const auto &left = r.blocks[k], &right = r.blocks[k + 1];
        s.gate(sim::gates::cnot(), {left[left.size() - 2], left.back()}, "recycle");
        s.gate(sim::gates::cnot(), {right[1], right.front()}, "recycle");
    }
    return r;
}

/// Matrix-product site step on (memory, site): |b>|0> -> sum A^m_{ab} |a>|m>.
inline Matrix site_step(const MpsChain &c) {
    std::vector<std::pair<int, Vector>> cols;
    for (int b = 0; b < 2; ++b) {
        Vector v = Vector::Zero(4);
        for (int m = 0; m < 2; ++m)
            for (int a = 0; a < 2; ++a) v(a + 2 * m) = c.A[static_cast<std::size_t>(m)](a, b);
        cols.emplace_back(b, v);
    }
    return protocol::detail::complete_unitary(cols, 4);
}

inline VariantResult prepare_cluster(int N, OutcomePolicy &policy, bool simulate, OutcomePolicy *boundary) {
    VariantResult r;
    r.session = Session(simulate);
    r.kind = VariantKind::Cluster;
    r.N = N;
    auto &s = r.session;
    const auto chain = variant_tensors(VariantKind::Cluster);
    const Matrix V = site_step(chain);
    const int K = (N + 1) / 2;
    check_forced(policy, K - 1);
    std::vector<std::array<int, 2>> mems;
    for (int b = 0; b < K; ++b) {
        const int first = 2 * b + 1, last = std::min(2 * b + 2, N);
        const int L = s.add_wire(QubitLabel::memory(b == 0 ? Role::MemoryLeft : Role::Memory));
        const int R = s.add_wire(QubitLabel::memory(b == K - 1 ? Role::MemoryRight : Role::Memory));
        std::vector<int> w;
        for (int k = first; k <= last; ++k) w.push_back(s.add_wire(QubitLabel::site_qubit(k, 0)));
        s.gate(sim::gates::h(), {L}, "H");
        s.gate(sim::gates::cnot(), {L, R}, "CNOT");
        for (auto it = w.rbegin(); it != w.rend(); ++it) s.gate(V, {L, *it}, "A");
        r.sites.insert(r.sites.end(), w.begin(), w.end());
        std::vector<int> blk{L};
        blk.insert(blk.end(), w.begin(), w.end());
        blk.push_back(R);
        r.blocks.push_back(blk);
        mems.push_back({L, R});
    }
    for (int b = 0; b + 1 < K; ++b) {
        const int rec = s.measure(sim::bell_projectors(), {mems[static_cast<std::size_t>(b)][1], mems[static_cast<std::size_t>(b + 1)][0]},
                                  "bell", policy);
        r.defects.push_back({std::min(2 * b + 2, N), Pauli::I, rec});
    }
    const auto table = bell_outcome_defects();
    for (auto &d : r.defects) d.defect = table[static_cast<std::size_t>(s.record(d.record))];
    r.mem_left = mems.front()[0];
    r.mem_right = mems.back()[1];
    add_push_layer(r, r.sites, table, r.mem_left);
    // Boundaries <0| and |+>: a wrong outcome is a Z on the adjacent site.
    auto flip = [](std::span<const int> o) -> std::optional<Matrix> {
        if (o[0] == 0) return std::nullopt;
        return sim::gates::z();
    };
    auto own = OutcomePolicy::sample(0x9e3779b97f4a7c15ULL ^ static_cast<std::uint64_t>(N));
    auto &bpol = boundary ? *boundary : own;
    const int rl = s.measure(protocol::detail::z_projectors(), {r.mem_left}, "boundary", bpol);
    const Vector plus = Vector::Ones(2) / std::sqrt(2.0), minus = linalg::pauli_z() * plus;
    const int rr = s.measure({plus * plus.adjoint(), minus * minus.adjoint()}, {r.mem_right}, "boundary", bpol);
    s.conditional({r.sites.front()}, {rl}, flip, "boundary_fix");
    s.conditional({r.sites.back()}, {rr}, flip, "boundary_fix");
    return r;
}

} // namespace detail

/// Constant-depth fusion preparation; the policy decides one Bell outcome
/// per fusion. `boundary` (cluster only) decides the left Z and right X
/// readouts of the boundary memories.
inline VariantResult prepare_fusion_variant(VariantKind kind, int N, OutcomePolicy &policy, bool simulate = true,
                                            OutcomePolicy *boundary = nullptr) {
    if (N < 2) throw DimensionError("variant fusion preparation needs N >= 2");
    if (kind == VariantKind::Ghz) return detail::prepare_ghz(N, policy, simulate);
    return detail::prepare_cluster(N, policy, simulate, boundary);
}

inline VariantResult prepare_fusion_variant(VariantKind kind, int N, OutcomePolicy &&policy, bool simulate = true,
                                            OutcomePolicy *boundary = nullptr) {
    return prepare_fusion_variant(kind, N, policy, simulate, boundary);
}

/// Final site state, site k on qubit k - 1.
inline StateVector variant_state(const VariantResult &r) { return r.session.extract(r.sites); }

inline double variant_fidelity(const VariantResult &r) {
    return sim::fidelity(variant_state(r), variant_reference(r.kind, r.N));
}

} // namespace aklt::variants
