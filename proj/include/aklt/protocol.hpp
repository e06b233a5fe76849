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
 * Preparation of the AKLT state on qubits: the site unitary, sequential
 * preparation with one or two memory qubits, constant-depth preparation by
 * fusing two-site blocks with Bell measurements, defect correction (as gates
 * or as a Pauli frame), boundary enforcement, SWAP-test fusion and the
 * probabilistic triplet-projector baseline.
 *
 * Every preparation records its circuit in a sim::Session. With
 * simulate == false only the circuit is built, which is what the shot
 * sampler replays.
 */

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "aklt/error.hpp"
#include "aklt/linalg.hpp"
#include "aklt/mps.hpp"
#include "aklt/shots.hpp"
#include "aklt/sim.hpp"

namespace aklt::protocol {

using linalg::Pauli;
using mps::MpsChain;
using sim::OutcomePolicy;
using sim::QubitLabel;
using sim::Role;
using sim::Session;
using sim::StateVector;

enum class Method { Sequential, Fusion, Projector, SwapFusion };
enum class MemoryMode { Single, Dual };
enum class CorrectionMode { None, Unitary, Frame };

inline const char *method_name(Method m) {
    switch (m) {
    case Method::Sequential: return "sequential";
    case Method::Fusion: return "fusion";
    case Method::Projector: return "projector";
    case Method::SwapFusion: return "swap-fusion";
    }
    return "?";
}

inline Method method_from_name(const std::string &s) {
    if (s == "sequential") return Method::Sequential;
    if (s == "fusion") return Method::Fusion;
    if (s == "projector") return Method::Projector;
    if (s == "swap-fusion") return Method::SwapFusion;
    throw ConfigError("unknown preparation method '" + s + "'");
}

inline const char *correction_name(CorrectionMode m) {
    switch (m) {
    case CorrectionMode::None: return "none";
    case CorrectionMode::Unitary: return "unitary";
    case CorrectionMode::Frame: return "frame";
    }
    return "?";
}

inline CorrectionMode correction_from_name(const std::string &s) {
    if (s == "none") return CorrectionMode::None;
    if (s == "unitary") return CorrectionMode::Unitary;
    if (s == "frame") return CorrectionMode::Frame;
    throw ConfigError("unknown correction mode '" + s + "'");
}

// ---------------------------------------------------------------------------
// Small fixed matrices

namespace detail {

inline std::vector<Matrix> z_projectors() {
    Matrix p0 = Matrix::Zero(2, 2), p1 = Matrix::Zero(2, 2);
    p0(0, 0) = 1;
    p1(1, 1) = 1;
    return {p0, p1};
}

/// Unitary whose columns at the given indices are the given orthonormal
/// vectors. Remaining columns come from Gram-Schmidt over e_0, e_1, ... in
/// order, each rotated so its first nonzero entry is real and positive.
inline Matrix complete_unitary(const std::vector<std::pair<int, Vector>> &fixed, int dim) {
    Matrix u = Matrix::Zero(dim, dim);
    std::vector<char> filled(static_cast<std::size_t>(dim), 0);
    std::vector<Vector> basis;
    for (const auto &[col, v] : fixed) {
        if (v.size() != dim || col < 0 || col >= dim) throw DimensionError("complete_unitary: bad column");
        u.col(col) = v;
        filled[static_cast<std::size_t>(col)] = 1;
        basis.push_back(v);
    }
    int next = 0;
    for (int col = 0; col < dim; ++col) {
        if (filled[static_cast<std::size_t>(col)]) continue;
        for (;; ++next) {
            if (next >= dim) throw NumericalError("complete_unitary: fixed columns are not orthonormal");
            Vector v = Vector::Unit(dim, next);
            for (int pass = 0; pass < 2; ++pass)
                for (const auto &b : basis) v -= b * b.dot(v);
            const double n = v.norm();
            if (n > 1e-9) {
                v /= n;
                for (Eigen::Index i = 0; i < v.size(); ++i)
                    if (std::abs(v(i)) > 1e-12) {
                        v *= std::conj(v(i)) / std::abs(v(i));
                        break;
                    }
                u.col(col) = v;
                basis.push_back(v);
                ++next;
                break;
            }
        }
    }
    if (!linalg::is_unitary(u, 1e-12)) throw NumericalError("complete_unitary: result is not unitary");
    return u;
}

/// Controlled SWAP on (control, a, b) with control on local bit 0.
inline Matrix cswap() {
    Matrix m = Matrix::Identity(8, 8);
    m(3, 3) = 0;
    m(5, 5) = 0;
    m(3, 5) = 1;
    m(5, 3) = 1;
    return m;
}

/// Two-qubit singlet (|01> - |10>)/sqrt2 written |q1 q2>; equals Psi-.
inline Vector singlet_ket() { return sim::bell_state(sim::BellLabel::PsiMinus); }

inline Matrix antisymmetric_projector() { return singlet_ket() * singlet_ket().adjoint(); }
inline Matrix symmetric_projector() { return Matrix::Identity(4, 4) - antisymmetric_projector(); }

/// Maps the triplet states of a qubit pair onto the spin-1 encoding:
/// |00> -> +, (|01>+|10>)/sqrt2 -> 0, |11> -> -, singlet -> |11>.
inline Matrix triplet_encoder() {
    const double r = 1.0 / std::sqrt(2.0);
    Vector t_plus = Vector::Unit(4, 0), t_minus = Vector::Unit(4, 3), t_zero = Vector::Zero(4);
    t_zero(1) = r;
    t_zero(2) = r;
    using E = mps::Spin1Encoding;
    Matrix w = Matrix::Zero(4, 4);
    w += Vector::Unit(4, E::code(E::kPlus)) * t_plus.adjoint();
    w += Vector::Unit(4, E::code(E::kZero)) * t_zero.adjoint();
    w += Vector::Unit(4, E::code(E::kMinus)) * t_minus.adjoint();
    w += Vector::Unit(4, E::kSingletCode) * singlet_ket().adjoint();
    return w;
}

inline bool swaps_labels(Pauli p) { return p == Pauli::X || p == Pauli::Y; }

} // namespace detail

// ---------------------------------------------------------------------------
// Site unitary

/// Three-qubit unitary on (memory, slot 0, slot 1) with local index
/// mem + 2 * code. On the site input |0bar> it acts as
/// |j>|0bar> -> sum_m A^m |j> (x) |m>.
inline Matrix build_site_unitary(const MpsChain &c = mps::aklt_tensors()) {
    if (c.d != 3 || c.D != 2) throw DimensionError("site unitary needs a spin-1, bond-dimension-2 chain");
    if (!c.is_canonical()) throw NumericalError("site unitary needs canonical tensors");
    using E = mps::Spin1Encoding;
    std::vector<std::pair<int, Vector>> cols;
    for (int j = 0; j < 2; ++j) {
        Vector v = Vector::Zero(8);
        for (int m = 0; m < 3; ++m) {
            const Vector a = c.A[static_cast<std::size_t>(m)] * Vector::Unit(2, j);
            for (int i = 0; i < 2; ++i) v(i + 2 * E::code(m)) += a(i);
        }
        cols.emplace_back(j + 2 * E::code(E::kZero), v);
    }
    return detail::complete_unitary(cols, 8);
}

// ---------------------------------------------------------------------------
// Memory initialization

/// Initial two-memory state sum_ab Lambda_ab |a>_left |b>_right.
struct MemoryInit {
    Matrix lambda = mps::singlet_matrix();

    static MemoryInit singlet() { return {}; }

    void validate() const {
        if (lambda.rows() != 2 || lambda.cols() != 2) throw DimensionError("memory init must be 2x2");
        if (std::abs(lambda.norm() - 1.0) > 1e-10) throw NumericalError("memory init must have unit Frobenius norm");
    }
    bool is_singlet() const { return (lambda - mps::singlet_matrix()).norm() < 1e-12; }
};

namespace detail {

/// Prepares the memory pair (a, b) in the state given by Lambda.
inline void prepare_pair(Session &s, int a, int b, const MemoryInit &init) {
    init.validate();
    if (init.is_singlet()) {
        s.gate(sim::gates::h(), {a}, "h");
        s.gate(sim::gates::cnot(), {a, b}, "cx");
        s.gate(sim::gates::x(), {b}, "x");
        s.gate(sim::gates::z(), {a}, "z");
        return;
    }
    Vector v(4);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) v(i + 2 * j) = init.lambda(i, j);
    s.gate(complete_unitary({{0, v}}, 4), {a, b}, "init");
}

} // namespace detail

// ---------------------------------------------------------------------------
// Results

struct DefectEntry {
    int bond = 0;  ///< defect sits between sites bond and bond + 1
    sim::BellLabel label = sim::BellLabel::PsiMinus;
    Pauli defect = Pauli::I;
    int record = -1; ///< classical record of the fusion measurement
};

struct DefectRecord {
    std::vector<DefectEntry> entries;

    /// Phase-stripped product of all defects.
    Pauli total() const {
        Pauli p = Pauli::I;
        for (const auto &e : entries) p = linalg::pauli_product(p, e.defect);
        return p;
    }
    bool trivial() const { return effective().empty(); }
    /// Entries with a defect other than I.
    std::vector<DefectEntry> effective() const {
        std::vector<DefectEntry> out;
        for (const auto &e : entries)
            if (e.defect != Pauli::I) out.push_back(e);
        return out;
    }
};

struct Block {
    int left = -1, right = -1; ///< memory wires
    int first = 0, last = 0;   ///< site range (1-based, inclusive)
};

struct PreparationResult {
    Session session{true};
    MpsChain chain;
    Method method = Method::Sequential;
    MemoryMode memory_mode = MemoryMode::Single;
    int N = 0;
    std::vector<std::array<int, 2>> sites; ///< wires of site k at index k - 1
    int mem_left = -1, mem_right = -1;     ///< boundary memory wires (-1 once consumed)
    std::vector<int> consumed;             ///< memory wires absorbed by fusions
    std::vector<Block> blocks;
    DefectRecord defects;
    CorrectionMode correction = CorrectionMode::None;
    bool periodic = false;
    Matrix right_map; ///< reference amplitude <L| A...A right_map |R>; empty when none exists
    int rec_left = -1, rec_right = -1, rec_subspace = -1;
    std::vector<std::array<int, 2>> singlet_pairs; ///< wires known to sit in a product singlet
    std::vector<int> site_records;                 ///< readout record per site qubit

    int depth() const { return session.circuit().depth(); }
    int num_qubits() const { return session.circuit().num_wires(); }
    bool boundary_measured() const { return rec_left >= 0 || rec_subspace >= 0 || periodic; }
    bool memories_live() const { return mem_left >= 0 && mem_right >= 0 && rec_left < 0 && rec_subspace < 0; }

    std::vector<int> site_wires() const {
        std::vector<int> w;
        for (const auto &s : sites) {
            w.push_back(s[0]);
            w.push_back(s[1]);
        }
        return w;
    }
};

/// Product of the defects on bonds at or right of site k, given outcomes.
inline Pauli frame_for_site(const PreparationResult &r, std::span<const int> records, int k) {
    Pauli p = Pauli::I;
    for (const auto &e : r.defects.entries)
        if (e.bond >= k) p = linalg::pauli_product(p, sim::bell_outcome(records[static_cast<std::size_t>(e.record)]).defect);
    return p;
}

/// Product of all defects given outcomes; this is what the left memory carries.
inline Pauli frame_for_memory(const PreparationResult &r, std::span<const int> records) {
    return frame_for_site(r, records, 0);
}

// ---------------------------------------------------------------------------
// Sequential preparation

/// Sequential preparation with memory pair (a, b) initialized to Lambda.
/// Single mode: a runs over sites N..1. Dual mode: a runs over sites
/// ceil(N/2)..1 and b over ceil(N/2)+1..N.
inline PreparationResult prepare_sequential(int N, MemoryMode mode = MemoryMode::Single,
                                            const MemoryInit &init = MemoryInit::singlet(), bool simulate = true,
                                            const MpsChain &chain = mps::aklt_tensors()) {
    if (N < 1) throw DimensionError("prepare_sequential needs N >= 1");
    if (mode == MemoryMode::Dual && !mps::check_inversion(chain))
        throw NumericalError("dual-memory preparation needs inversion-symmetric tensors");
    PreparationResult r;
    r.session = Session(simulate);
    r.chain = chain;
    r.method = Method::Sequential;
    r.memory_mode = mode;
    r.N = N;
    auto &s = r.session;
    r.mem_left = s.add_wire(QubitLabel::memory(Role::MemoryLeft));
    r.mem_right = s.add_wire(QubitLabel::memory(Role::MemoryRight));
    for (int k = 1; k <= N; ++k)
        r.sites.push_back({s.add_wire(QubitLabel::site_qubit(k, 0)), s.add_wire(QubitLabel::site_qubit(k, 1))});
    detail::prepare_pair(s, r.mem_left, r.mem_right, init);
    const Matrix U = build_site_unitary(chain);
    auto apply = [&](int mem, int k) {
        const auto &w = r.sites[static_cast<std::size_t>(k - 1)];
        s.gate(U, {mem, w[0], w[1]}, "U");
    };
    if (mode == MemoryMode::Single) {
        for (int k = N; k >= 1; --k) apply(r.mem_left, k);
        r.right_map = init.lambda;
    } else {
        const int h = (N + 1) / 2;
        for (int t = 0; t < h; ++t) {
            apply(r.mem_left, h - t);
            if (h + 1 + t <= N) apply(r.mem_right, h + 1 + t);
        }
        if (init.is_singlet()) r.right_map = init.lambda;
    }
    r.blocks.push_back({r.mem_left, r.mem_right, 1, N});
    return r;
}

// ---------------------------------------------------------------------------
// Fusion preparation

/// Two-site blocks (the last one single-site for odd N), each prepared with
/// its own memory pair. With fuse == true neighbouring blocks are joined by a
/// Bell measurement of (right memory of block b, left memory of block b+1)
/// as soon as block b+1 exists, so few wires are alive at once.
inline PreparationResult prepare_blocks(int N, bool fuse, OutcomePolicy &policy, bool simulate = true) {
    if (N < 2) throw DimensionError("fusion preparation needs N >= 2");
    const int K = (N + 1) / 2;
    if (fuse && policy.is_forced() && policy.remaining() != static_cast<std::size_t>(K - 1))
        throw ConfigError("forced-outcome list length mismatch: expected " + std::to_string(K - 1) + ", got " +
                          std::to_string(policy.remaining()));
    PreparationResult r;
    r.session = Session(simulate);
    r.chain = mps::aklt_tensors();
    r.method = Method::Fusion;
    r.memory_mode = MemoryMode::Dual;
    r.N = N;
    auto &s = r.session;
    const Matrix U = build_site_unitary(r.chain);
    for (int b = 0; b < K; ++b) {
        QubitLabel ll = QubitLabel::memory(b == 0 ? Role::MemoryLeft : Role::Memory);
        QubitLabel rl = QubitLabel::memory(b == K - 1 ? Role::MemoryRight : Role::Memory);
        ll.slot = b;
        rl.slot = b;
        Block blk;
        blk.left = s.add_wire(ll);
        blk.right = s.add_wire(rl);
        blk.first = 2 * b + 1;
        blk.last = std::min(2 * b + 2, N);
        for (int k = blk.first; k <= blk.last; ++k)
            r.sites.push_back({s.add_wire(QubitLabel::site_qubit(k, 0)), s.add_wire(QubitLabel::site_qubit(k, 1))});
        detail::prepare_pair(s, blk.left, blk.right, MemoryInit::singlet());
        const auto &w1 = r.sites[static_cast<std::size_t>(blk.first - 1)];
        s.gate(U, {blk.left, w1[0], w1[1]}, "U");
        if (blk.last > blk.first) {
            const auto &w2 = r.sites[static_cast<std::size_t>(blk.last - 1)];
            s.gate(U, {blk.right, w2[0], w2[1]}, "U");
        }
        if (fuse && b > 0) {
            auto &prev = r.blocks.back();
            const int rec = s.measure(sim::bell_projectors(), {prev.right, blk.left}, "bell", policy);
            const auto o = sim::bell_outcome(s.record(rec));
            r.defects.entries.push_back({prev.last, o.label, o.defect, rec});
            r.consumed.push_back(prev.right);
            r.consumed.push_back(blk.left);
            prev.right = blk.right;
            prev.last = blk.last;
        } else {
            r.blocks.push_back(blk);
        }
    }
    r.mem_left = r.blocks.front().left;
    r.mem_right = r.blocks.back().right;
    r.right_map = r.chain.S;
    return r;
}

/// Constant-depth preparation: ceil(N/2) blocks and floor((N-1)/2) Bell
/// fusions. Defects are recorded, not corrected.
inline PreparationResult prepare_fusion(int N, OutcomePolicy &policy, bool simulate = true) {
    return prepare_blocks(N, true, policy, simulate);
}

inline PreparationResult prepare_fusion(int N, OutcomePolicy &&policy, bool simulate = true) {
    return prepare_blocks(N, true, policy, simulate);
}

/// Removes the recorded defects. Unitary mode pushes each defect B to the
/// left: U_B on every site left of the bond and B on the left memory, one
/// conditional gate per qubit group. Frame mode applies nothing; outcomes of
/// later Z-basis readouts are relabeled instead.
inline void correct_defects(PreparationResult &r, CorrectionMode mode) {
    if (r.correction != CorrectionMode::None) throw ConfigError("defects were already handled");
    if (r.boundary_measured()) throw ConfigError("defects must be handled before boundary enforcement");
    r.correction = mode;
    if (mode != CorrectionMode::Unitary || r.defects.entries.empty()) return;
    auto product = [](std::span<const int> outs) {
        Pauli p = Pauli::I;
        for (int o : outs) p = linalg::pauli_product(p, sim::bell_outcome(o).defect);
        return p;
    };
    for (int k = 1; k <= r.N; ++k) {
        std::vector<int> deps;
        for (const auto &e : r.defects.entries)
            if (e.bond >= k) deps.push_back(e.record);
        if (deps.empty()) continue;
        const auto &w = r.sites[static_cast<std::size_t>(k - 1)];
        r.session.conditional(
            {w[0], w[1]}, deps,
            [product](std::span<const int> outs) -> std::optional<Matrix> {
                const Pauli p = product(outs);
                if (p == Pauli::I) return std::nullopt;
                return mps::encoded_symmetry(p);
            },
            "U_B");
    }
    if (r.mem_left < 0) return;
    std::vector<int> deps;
    for (const auto &e : r.defects.entries) deps.push_back(e.record);
    r.session.conditional(
        {r.mem_left}, deps,
        [product](std::span<const int> outs) -> std::optional<Matrix> {
            const Pauli p = product(outs);
            if (p == Pauli::I) return std::nullopt;
            return linalg::pauli(p);
        },
        "B");
}

// ---------------------------------------------------------------------------
// Boundary enforcement

struct BoundaryTarget {
    enum class Kind { Outcomes, Subspace, Sample };
    Kind kind = Kind::Sample;
    int L = 0, R = 0;
    bool symmetric = false;
    std::uint64_t seed = 0;

    static BoundaryTarget outcomes(int L, int R) { return {Kind::Outcomes, L, R, false, 0}; }
    static BoundaryTarget subspace(bool symmetric) { return {Kind::Subspace, 0, 0, symmetric, 0}; }
    static BoundaryTarget sample(std::uint64_t seed) { return {Kind::Sample, 0, 0, false, seed}; }
};

inline bool left_memory_flipped(const PreparationResult &r) {
    return r.correction == CorrectionMode::Frame && r.session.simulating() &&
           detail::swaps_labels(frame_for_memory(r, r.session.records()));
}

/// Measures both boundary memories. Outcomes and Sample modes read them in
/// the Z basis; Subspace mode projects the pair onto the symmetric
/// (outcome 0) or antisymmetric (outcome 1) subspace. Requested outcomes are
/// the corrected ones, so in frame mode the raw left outcome may differ.
inline void enforce_boundary(PreparationResult &r, const BoundaryTarget &t) {
    if (!r.memories_live()) throw ConfigError("boundary memories are not available");
    auto &s = r.session;
    const auto z = detail::z_projectors();
    switch (t.kind) {
    case BoundaryTarget::Kind::Outcomes: {
        if (t.L < 0 || t.L > 1 || t.R < 0 || t.R > 1) throw ConfigError("boundary outcomes must be 0 or 1");
        const int flip = left_memory_flipped(r) ? 1 : 0;
        auto pl = OutcomePolicy::forced({t.L ^ flip});
        auto pr = OutcomePolicy::forced({t.R});
        r.rec_left = s.measure(z, {r.mem_left}, "mz_left", pl);
        r.rec_right = s.measure(z, {r.mem_right}, "mz_right", pr);
        break;
    }
    case BoundaryTarget::Kind::Sample: {
        auto pol = OutcomePolicy::sample(t.seed);
        r.rec_left = s.measure(z, {r.mem_left}, "mz_left", pol);
        r.rec_right = s.measure(z, {r.mem_right}, "mz_right", pol);
        break;
    }
    case BoundaryTarget::Kind::Subspace: {
        if (r.correction == CorrectionMode::Frame && !r.session.simulating())
            throw ConfigError("subspace boundary needs unitary defect correction");
        if (r.correction == CorrectionMode::Frame && frame_for_memory(r, s.records()) != Pauli::I)
            throw ConfigError("subspace boundary needs unitary defect correction");
        auto pol = OutcomePolicy::forced({t.symmetric ? 0 : 1});
        r.rec_subspace = s.measure({detail::symmetric_projector(), detail::antisymmetric_projector()},
                                   {r.mem_left, r.mem_right}, "exchange", pol, false);
        if (!t.symmetric) {
            r.singlet_pairs.push_back({r.mem_left, r.mem_right});
            r.periodic = true;
        }
        break;
    }
    }
}

/// Corrected (left, right) boundary outcomes after Z-basis enforcement.
inline std::pair<int, int> boundary_outcomes(const PreparationResult &r) {
    if (r.rec_left < 0 || r.rec_right < 0) throw ConfigError("boundaries were not measured in the Z basis");
    return {r.session.record(r.rec_left) ^ (left_memory_flipped(r) ? 1 : 0), r.session.record(r.rec_right)};
}

/// Probabilities of the corrected Z outcomes of the boundary memories,
/// indexed L + 2R, without measuring.
inline std::array<double, 4> boundary_distribution(const PreparationResult &r) {
    if (!r.memories_live()) throw ConfigError("boundary memories are not available");
    if (!r.session.simulating()) throw Error("boundary distribution needs a simulated session");
    std::vector<Matrix> proj;
    for (int k = 0; k < 4; ++k) proj.push_back(Matrix(Vector::Unit(4, k).asDiagonal()));
    sim::Register reg = r.session.reg();
    const std::array<int, 2> w{r.mem_left, r.mem_right};
    const auto p = reg.probabilities(proj, w);
    const int flip = left_memory_flipped(r) ? 1 : 0;
    std::array<double, 4> out{};
    for (int k = 0; k < 4; ++k) out[static_cast<std::size_t>(k ^ flip)] = p[static_cast<std::size_t>(k)];
    return out;
}

// ---------------------------------------------------------------------------
// SWAP-test fusion

/// SWAP test on a memory pair: ancilla H, controlled SWAP, H, Z readout.
/// Outcome 1 (antisymmetric) leaves the pair in a singlet, the same as a
/// Psi- Bell fusion. Outcome 0 (symmetric) maps the pair onto the spin-1
/// encoding and applies U_Y, turning it into a new site. The pair must be
/// (right memory of block b, left memory of block b+1), or (right, left)
/// boundary memories, which closes the chain periodically with the new site
/// last.
inline int swap_test_fusion(PreparationResult &r, int wire_a, int wire_b, OutcomePolicy &policy) {
    if (!r.session.simulating()) throw ConfigError("SWAP-test fusion needs a simulated session");
    if (r.boundary_measured()) throw ConfigError("boundary already enforced");
    int q1 = wire_a, q2 = wire_b;
    int inner = -1;
    bool edge = false;
    for (int attempt = 0; attempt < 2 && inner < 0 && !edge; ++attempt) {
        for (std::size_t b = 0; b + 1 < r.blocks.size(); ++b)
            if (r.blocks[b].right == q1 && r.blocks[b + 1].left == q2) inner = static_cast<int>(b);
        if (q1 == r.mem_right && q2 == r.mem_left) edge = true;
        if (inner < 0 && !edge) std::swap(q1, q2);
    }
    if (inner < 0 && !edge) throw ConfigError("SWAP-test pair is not an adjacent memory pair");
    auto &s = r.session;
    const int anc = s.add_wire(QubitLabel::ancilla());
    s.gate(sim::gates::h(), {anc}, "h");
    s.gate(detail::cswap(), {anc, q1, q2}, "cswap");
    s.gate(sim::gates::h(), {anc}, "h");
    const int rec = s.measure(detail::z_projectors(), {anc}, "swap_test", policy);
    const bool symmetric = s.record(rec) == 0;
    r.method = Method::SwapFusion;
    r.consumed.push_back(q1);
    r.consumed.push_back(q2);
    int new_site = -1;
    if (symmetric) {
        s.gate(detail::triplet_encoder(), {q1, q2}, "encode");
        s.gate(mps::encoded_symmetry(Pauli::Y), {q1, q2}, "U_Y");
        new_site = edge ? r.N + 1 : r.blocks[static_cast<std::size_t>(inner)].last + 1;
        r.sites.insert(r.sites.begin() + (new_site - 1), std::array<int, 2>{q1, q2});
        ++r.N;
        for (int k = 1; k <= r.N; ++k)
            for (int slot = 0; slot < 2; ++slot)
                s.relabel(r.sites[static_cast<std::size_t>(k - 1)][static_cast<std::size_t>(slot)],
                          QubitLabel::site_qubit(k, slot));
        for (auto &e : r.defects.entries)
            if (e.bond >= new_site) ++e.bond;
        for (auto &blk : r.blocks) {
            if (blk.first >= new_site) ++blk.first;
            if (blk.last >= new_site) ++blk.last;
        }
    } else {
        r.singlet_pairs.push_back({q1, q2});
    }
    if (edge) {
        r.periodic = true;
        r.mem_left = r.mem_right = -1;
    } else {
        auto &left = r.blocks[static_cast<std::size_t>(inner)];
        const auto &right = r.blocks[static_cast<std::size_t>(inner + 1)];
        left.right = right.right;
        left.last = right.last;
        r.blocks.erase(r.blocks.begin() + inner + 1);
    }
    return rec;
}

// ---------------------------------------------------------------------------
// States and references

/// Joint state of the sites (site k slots at qubits 2(k-1), 2(k-1)+1),
/// followed by the left and right memories while they are unmeasured.
inline StateVector prepared_state(const PreparationResult &r) {
    if (!r.session.simulating()) throw Error("no state: the session only records the circuit");
    std::vector<int> wires = r.site_wires();
    const bool with_mem = r.mem_left >= 0 && r.mem_right >= 0 && r.rec_left < 0 &&
                          (r.rec_subspace < 0 || r.session.record(r.rec_subspace) == 0);
    if (with_mem) {
        wires.push_back(r.mem_left);
        wires.push_back(r.mem_right);
    }
    const auto keep = wires.size();
    for (const auto &p : r.singlet_pairs) {
        wires.push_back(p[0]);
        wires.push_back(p[1]);
    }
    StateVector st = r.session.extract(wires);
    for (std::size_t k = r.singlet_pairs.size(); k-- > 0;) {
        const std::array<int, 2> pos{static_cast<int>(keep + 2 * k), static_cast<int>(keep + 2 * k + 1)};
        st.contract_out(detail::singlet_ket(), pos);
    }
    return st;
}

/// Matrix-product reference matching the boundary state of r, in the qubit
/// order of prepared_state.
inline StateVector reference_state(const PreparationResult &r) {
    if (r.periodic) return mps::contract_periodic(r.chain, r.N);
    if (r.right_map.size() == 0) throw Error("no matrix-product reference for this memory initialization");
    if (r.rec_left >= 0) {
        const auto [L, R] = boundary_outcomes(r);
        return mps::contract_open(r.chain, Vector::Unit(2, L), Vector(r.right_map * Vector::Unit(2, R)), r.N);
    }
    StateVector ref = mps::contract_with_memories(r.chain, r.N, r.right_map);
    if (r.rec_subspace >= 0) {
        const std::array<int, 2> mem{2 * r.N, 2 * r.N + 1};
        ref.apply_matrix(detail::symmetric_projector(), mem);
        return StateVector(ref.amplitudes(), ref.labels());
    }
    return ref;
}

/// Fidelity of the prepared state with its matrix-product reference.
inline double reference_fidelity(const PreparationResult &r) {
    return sim::fidelity(prepared_state(r), reference_state(r));
}

// ---------------------------------------------------------------------------
// Readout and shot sampling

/// Appends Z readouts of every site qubit.
inline void add_site_readout(PreparationResult &r, std::uint64_t seed = 0) {
    if (!r.site_records.empty()) throw ConfigError("sites were already read out");
    auto pol = OutcomePolicy::sample(seed);
    const auto z = detail::z_projectors();
    for (const auto &w : r.sites)
        for (int slot = 0; slot < 2; ++slot)
            r.site_records.push_back(r.session.measure(z, {w[static_cast<std::size_t>(slot)]}, "readout", pol));
}

/// Converts the classical records of one run into a bitstring, applying the
/// Pauli frame when defects are handled in post-processing.
inline std::uint64_t shot_bits(const PreparationResult &r, std::span<const int> records) {
    std::uint64_t bits = 0;
    const bool frame = r.correction == CorrectionMode::Frame;
    for (int k = 1; k <= r.N; ++k) {
        int b0 = records[static_cast<std::size_t>(r.site_records[static_cast<std::size_t>(2 * (k - 1))])];
        int b1 = records[static_cast<std::size_t>(r.site_records[static_cast<std::size_t>(2 * (k - 1) + 1)])];
        if (frame && detail::swaps_labels(frame_for_site(r, records, k))) std::swap(b0, b1);
        bits |= static_cast<std::uint64_t>(b0) << (2 * (k - 1));
        bits |= static_cast<std::uint64_t>(b1) << (2 * (k - 1) + 1);
    }
    if (r.rec_left >= 0 && r.rec_right >= 0) {
        int l = records[static_cast<std::size_t>(r.rec_left)];
        if (frame && detail::swaps_labels(frame_for_memory(r, records))) l ^= 1;
        bits |= static_cast<std::uint64_t>(l) << (2 * r.N);
        bits |= static_cast<std::uint64_t>(records[static_cast<std::size_t>(r.rec_right)]) << (2 * r.N + 1);
    }
    return bits;
}

/// Replays the recorded circuit for independent shots. Every site qubit must
/// have a readout (add_site_readout).
inline ShotRecord sample_shots(const PreparationResult &r, std::size_t shots, std::uint64_t seed,
                               const NoiseModel &model = {}) {
    if (r.site_records.size() != static_cast<std::size_t>(2 * r.N)) throw ConfigError("sites have no readout");
    ShotRecord out = ShotRecord::layout(r.N, r.rec_left >= 0 && r.rec_right >= 0);
    sim::Executor ex(r.session.circuit());
    const auto runs = ex.run(shots, seed, model);
    out.bits.reserve(runs.size());
    for (const auto &run : runs) out.bits.push_back(shot_bits(r, run.records));
    return out;
}

// ---------------------------------------------------------------------------
// Convenience pipelines

/// Fusion preparation with correction and Z-basis boundary enforcement.
inline PreparationResult fusion_pipeline(int N, OutcomePolicy &policy, CorrectionMode mode,
                                         const BoundaryTarget &boundary, bool simulate = true) {
    auto r = prepare_fusion(N, policy, simulate);
    correct_defects(r, mode);
    enforce_boundary(r, boundary);
    return r;
}

inline PreparationResult fusion_pipeline(int N, OutcomePolicy &&policy, CorrectionMode mode,
                                         const BoundaryTarget &boundary, bool simulate = true) {
    return fusion_pipeline(N, policy, mode, boundary, simulate);
}

/// Circuit used for shot sampling: preparation, boundary readout, site readout.
inline PreparationResult sampling_circuit(Method method, int N, CorrectionMode mode = CorrectionMode::Frame) {
    PreparationResult r;
    auto pol = OutcomePolicy::sample(0);
    if (method == Method::Sequential) {
        r = prepare_sequential(N, MemoryMode::Single, MemoryInit::singlet(), false);
    } else if (method == Method::Fusion) {
        if (N < 2) {
            r = prepare_sequential(N, MemoryMode::Dual, MemoryInit::singlet(), false);
        } else {
            r = prepare_fusion(N, pol, false);
            correct_defects(r, mode);
        }
    } else {
        throw ConfigError(std::string("no shot-sampling circuit for method ") + method_name(method));
    }
    enforce_boundary(r, BoundaryTarget::sample(0));
    add_site_readout(r);
    return r;
}

// ---------------------------------------------------------------------------
// Probabilistic projector baseline

struct ProjectorOutcome {
    bool success = false;
    double probability = 0.0; ///< probability of the realized outcome sequence
    std::optional<PreparationResult> result;
};

namespace detail {

inline PreparationResult projector_circuit(int N, OutcomePolicy &policy, bool simulate, bool finish) {
    if (N < 1) throw DimensionError("projector baseline needs N >= 1");
    PreparationResult r;
    r.session = Session(simulate);
    r.chain = mps::aklt_tensors();
    r.method = Method::Projector;
    r.N = N;
    auto &s = r.session;
    r.mem_left = s.add_wire(QubitLabel::memory(Role::MemoryLeft));
    for (int k = 1; k <= N; ++k)
        r.sites.push_back({s.add_wire(QubitLabel::site_qubit(k, 0)), s.add_wire(QubitLabel::site_qubit(k, 1))});
    r.mem_right = s.add_wire(QubitLabel::memory(Role::MemoryRight));
    prepare_pair(s, r.mem_left, r.sites[0][0], MemoryInit::singlet());
    for (int k = 1; k < N; ++k)
        prepare_pair(s, r.sites[static_cast<std::size_t>(k - 1)][1], r.sites[static_cast<std::size_t>(k)][0],
                     MemoryInit::singlet());
    prepare_pair(s, r.sites.back()[1], r.mem_right, MemoryInit::singlet());
    for (const auto &w : r.sites) {
        const int rec = s.measure({symmetric_projector(), antisymmetric_projector()}, {w[0], w[1]}, "triplet", policy,
                                  false);
        r.site_records.push_back(rec);
        if (simulate && s.record(rec) != 0) return r;
    }
    if (!finish) return r;
    for (const auto &w : r.sites) s.gate(triplet_encoder(), {w[0], w[1]}, "encode");
    s.gate(sim::gates::y(), {r.mem_left}, "y");
    s.gate(sim::gates::y(), {r.mem_right}, "y");
    r.right_map = r.chain.S;
    return r;
}

} // namespace detail

/// One trial of the triplet-projector construction: singlets between
/// neighbouring half-sites and the boundary memories, then a
/// triplet/singlet measurement per site. Success (all triplets) has
/// probability (3/4)^N.
inline ProjectorOutcome prepare_projector_baseline(int N, std::uint64_t seed) {
    auto pol = OutcomePolicy::sample(seed);
    auto r = detail::projector_circuit(N, pol, true, true);
    ProjectorOutcome out;
    out.probability = 1.0;
    out.success = true;
    for (int rec : r.site_records) {
        out.probability *= r.session.record_probability(rec);
        out.success = out.success && r.session.record(rec) == 0;
    }
    out.success = out.success && static_cast<int>(r.site_records.size()) == N;
    if (out.success) {
        r.site_records.clear();
        out.result = std::move(r);
    }
    return out;
}

/// Success count over independent trials (shot replay of the projection circuit).
inline std::size_t projector_successes(int N, std::size_t trials, std::uint64_t seed) {
    auto pol = OutcomePolicy::sample(0);
    const auto r = detail::projector_circuit(N, pol, false, false);
    sim::Executor ex(r.session.circuit());
    std::size_t ok = 0;
    for (const auto &shot : ex.run(trials, seed, NoiseModel{})) {
        bool all = true;
        for (int rec : r.site_records) all = all && shot.records[static_cast<std::size_t>(rec)] == 0;
        ok += all ? 1 : 0;
    }
    return ok;
}

} // namespace aklt::protocol
