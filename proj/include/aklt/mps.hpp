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
 * Matrix product states used as ground truth: AKLT tensors, open and
 * periodic contraction, transfer-operator expectation values and the
 * symmetry identities of the tensors.
 *
 * Spin-1 physical indices are ordered (+, 0, -). Amplitudes are
 * <L| A^{m_1} ... A^{m_N} |R> with site 1 on the left.
 */

#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <tuple>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "aklt/error.hpp"
#include "aklt/linalg.hpp"
#include "aklt/sim.hpp"

namespace aklt::mps {

using linalg::Pauli;

// ---------------------------------------------------------------------------
// Spin-1 encoding on two qubits

/// Two-qubit code of a spin-1 site: code = q0 + 2*q1 with q0 in slot 0.
/// |+> -> |q1 q0> = |10>, |0> -> |00>, |-> -> |01>, singlet |s> -> |11>.
struct Spin1Encoding {
    static constexpr int kPlus = 0, kZero = 1, kMinus = 2; // physical indices
    static constexpr int kSingletCode = 3;

    static constexpr int code(int m) {
        constexpr int table[3] = {2, 0, 1};
        return table[m];
    }
    /// Physical index of a code, or -1 for the encoded singlet.
    static constexpr int physical(int code) {
        constexpr int table[4] = {1, 2, 0, -1};
        return table[code];
    }
    /// S^z eigenvalue of a code (0 for the singlet).
    static constexpr int sz(int code) {
        constexpr int table[4] = {0, -1, 1, 0};
        return table[code];
    }
    /// Ket of the initial site state |0bar> in the two-qubit space.
    static Vector initial_state() { return Vector::Unit(4, code(kZero)); }
};

inline Matrix spin1_sz() {
    Matrix m = Matrix::Zero(3, 3);
    m(0, 0) = 1;
    m(2, 2) = -1;
    return m;
}
inline Matrix spin1_splus() {
    Matrix m = Matrix::Zero(3, 3);
    m(0, 1) = std::sqrt(2.0);
    m(1, 2) = std::sqrt(2.0);
    return m;
}
inline Matrix spin1_sx() { return 0.5 * (spin1_splus() + spin1_splus().adjoint()); }
inline Matrix spin1_sy() { return cplx(0, -0.5) * (spin1_splus() - spin1_splus().adjoint()); }

/// exp(i pi S^z) = diag(-1, 1, -1).
inline Matrix spin1_string() {
    Matrix m = Matrix::Identity(3, 3);
    m(0, 0) = -1;
    m(2, 2) = -1;
    return m;
}

/// Spin-1 representation U_B of the virtual Pauli B in the (+, 0, -) basis.
inline Matrix spin1_symmetry(Pauli b) {
    Matrix u = Matrix::Zero(3, 3);
    switch (b) {
    case Pauli::I: u = Matrix::Identity(3, 3); break;
    case Pauli::X: u(0, 2) = -1; u(1, 1) = -1; u(2, 0) = -1; break;
    case Pauli::Y: u(0, 2) = 1; u(1, 1) = -1; u(2, 0) = 1; break;
    case Pauli::Z: u(0, 0) = -1; u(1, 1) = 1; u(2, 2) = -1; break;
    }
    return u;
}

/// U_B lifted to the two-qubit encoding; the singlet code is left fixed.
inline Matrix encoded_symmetry(Pauli b) {
    const Matrix u = spin1_symmetry(b);
    Matrix e = Matrix::Zero(4, 4);
    for (int m = 0; m < 3; ++m)
        for (int n = 0; n < 3; ++n) e(Spin1Encoding::code(m), Spin1Encoding::code(n)) = u(m, n);
    e(3, 3) = 1;
    return e;
}

// ---------------------------------------------------------------------------
// Chains

struct MpsChain {
    std::string name;
    int d = 0; ///< physical dimension
    int D = 0; ///< bond dimension
    std::vector<Matrix> A;
    bool canonical = false;
    std::vector<Matrix> P; ///< triplet-coefficient matrices (AKLT only)
    Matrix S;              ///< singlet matrix (AKLT only)
    std::optional<Vector> left, right;

    Matrix channel(const Matrix &rho) const {
        Matrix out = Matrix::Zero(D, D);
        for (const auto &a : A) out += a * rho * a.adjoint();
        return out;
    }

    bool is_canonical(double tol = 1e-12) const {
        Matrix sum = Matrix::Zero(D, D);
        for (const auto &a : A) sum += a.adjoint() * a;
        return (sum - Matrix::Identity(D, D)).norm() < tol;
    }
};

inline Matrix singlet_matrix() {
    Matrix s(2, 2);
    const double r = 1.0 / std::sqrt(2.0);
    s << 0, r, -r, 0;
    return s;
}

inline MpsChain aklt_tensors() {
    MpsChain c;
    c.name = "aklt";
    c.d = 3;
    c.D = 2;
    Matrix sp = Matrix::Zero(2, 2), sm = Matrix::Zero(2, 2);
    sp(0, 1) = 1; // sigma+ = |0><1|
    sm(1, 0) = 1; // sigma- = |1><0|
    c.A = {std::sqrt(2.0 / 3.0) * sp, -std::sqrt(1.0 / 3.0) * linalg::pauli_z(), -std::sqrt(2.0 / 3.0) * sm};
    c.S = singlet_matrix();
    const Matrix s_inv = c.S.inverse();
    for (const auto &a : c.A) c.P.push_back(a * s_inv);
    c.canonical = c.is_canonical();
    return c;
}

// ---------------------------------------------------------------------------
// Spin-basis states

/// Amplitudes over d^N product configurations; site 1 is the least
/// significant base-d digit.
struct SiteState {
    int d = 0;
    int N = 0;
    Vector amps;

    int digit(std::size_t index, int site) const {
        for (int k = 1; k < site; ++k) index /= static_cast<std::size_t>(d);
        return static_cast<int>(index % static_cast<std::size_t>(d));
    }
};

namespace detail {

inline std::size_t ipow(std::size_t b, int e) {
    std::size_t r = 1;
    for (int k = 0; k < e; ++k) r *= b;
    return r;
}

// Depth-first product of matrices over all configurations.
inline void dfs(const MpsChain &c, int N, int k, const Matrix &acc, std::size_t index, std::size_t stride,
                const std::function<void(std::size_t, const Matrix &)> &leaf) {
    if (k == N) {
        leaf(index, acc);
        return;
    }
    for (int m = 0; m < c.d; ++m) {
        const Matrix next = acc * c.A[static_cast<std::size_t>(m)];
        dfs(c, N, k + 1, next, index + static_cast<std::size_t>(m) * stride, stride * static_cast<std::size_t>(c.d), leaf);
    }
}

} // namespace detail

/// Unnormalized amplitudes <L| A...A |R> (L enters as a bra).
inline SiteState contract_amplitudes(const MpsChain &c, const Vector &L, const Vector &R, int N) {
    if (N < 1) throw DimensionError("chain length must be at least 1");
    if (L.size() != c.D || R.size() != c.D) throw DimensionError("boundary vector dimension mismatch");
    SiteState s{c.d, N, Vector::Zero(static_cast<Eigen::Index>(detail::ipow(static_cast<std::size_t>(c.d), N)))};
    const Matrix start = L.adjoint();
    detail::dfs(c, N, 0, start, 0, 1, [&](std::size_t idx, const Matrix &row) { s.amps(static_cast<Eigen::Index>(idx)) = (row * R)(0, 0); });
    return s;
}

/// Unnormalized amplitudes Tr(A...A).
inline SiteState contract_trace_amplitudes(const MpsChain &c, int N) {
    if (N < 1) throw DimensionError("chain length must be at least 1");
    SiteState s{c.d, N, Vector::Zero(static_cast<Eigen::Index>(detail::ipow(static_cast<std::size_t>(c.d), N)))};
    detail::dfs(c, N, 0, Matrix::Identity(c.D, c.D), 0, 1,
                [&](std::size_t idx, const Matrix &m) { s.amps(static_cast<Eigen::Index>(idx)) = m.trace(); });
    return s;
}

inline SiteState normalized(SiteState s) {
    const double n = s.amps.norm();
    if (!(n > 1e-14)) throw NumericalError("zero-norm contraction (invalid boundary choice)");
    s.amps /= n;
    return s;
}

/// Qubits per site used when mapping a spin-basis state onto qubits.
inline int qubits_per_site(int d) {
    switch (d) {
    case 2: return 1;
    case 3: return 2;
    case 4: return 2;
    default: throw DimensionError("unsupported physical dimension " + std::to_string(d));
    }
}

/// Maps a spin-basis state onto qubits (spin-1 sites use Spin1Encoding;
/// qubit (k-1)*q + slot belongs to site k).
inline sim::StateVector to_qubits(const SiteState &s) {
    const int q = qubits_per_site(s.d);
    const int n = q * s.N;
    Vector out = Vector::Zero(Eigen::Index{1} << n);
    for (std::size_t idx = 0; idx < static_cast<std::size_t>(s.amps.size()); ++idx) {
        std::size_t rest = idx, qi = 0;
        for (int k = 0; k < s.N; ++k) {
            const int m = static_cast<int>(rest % static_cast<std::size_t>(s.d));
            rest /= static_cast<std::size_t>(s.d);
            const int code = s.d == 3 ? Spin1Encoding::code(m) : m;
            qi |= static_cast<std::size_t>(code) << (q * k);
        }
        out(static_cast<Eigen::Index>(qi)) = s.amps(static_cast<Eigen::Index>(idx));
    }
    std::vector<sim::QubitLabel> labels;
    for (int k = 1; k <= s.N; ++k)
        for (int slot = 0; slot < q; ++slot) {
            auto l = sim::QubitLabel::site_qubit(k, slot);
            l.wire = static_cast<int>(labels.size());
            labels.push_back(l);
        }
    return sim::StateVector(std::move(out), std::move(labels));
}

inline sim::StateVector contract_open(const MpsChain &c, const Vector &L, const Vector &R, int N) {
    return to_qubits(normalized(contract_amplitudes(c, L, R, N)));
}

inline sim::StateVector contract_open(const MpsChain &c, int L, int R, int N) {
    if (L < 0 || L >= c.D || R < 0 || R >= c.D) throw DimensionError("boundary index out of range");
    return contract_open(c, Vector::Unit(c.D, L), Vector::Unit(c.D, R), N);
}

inline sim::StateVector contract_periodic(const MpsChain &c, int N) {
    return to_qubits(normalized(contract_trace_amplitudes(c, N)));
}

/// Sites plus both boundary memories: amplitude of (m, L, R) is
/// <L| A...A right_map |R>. Qubit order: sites, then left and right memory.
inline sim::StateVector contract_with_memories(const MpsChain &c, int N, const Matrix &right_map) {
    const int q = qubits_per_site(c.d);
    const int ns = q * N;
    Vector out = Vector::Zero(Eigen::Index{1} << (ns + 2));
    for (int L = 0; L < c.D; ++L)
        for (int R = 0; R < c.D; ++R) {
            const Vector rv = right_map * Vector::Unit(c.D, R);
            const SiteState s = contract_amplitudes(c, Vector::Unit(c.D, L), rv, N);
            for (std::size_t idx = 0; idx < static_cast<std::size_t>(s.amps.size()); ++idx) {
                std::size_t rest = idx, qi = 0;
                for (int k = 0; k < N; ++k) {
                    const int m = static_cast<int>(rest % static_cast<std::size_t>(c.d));
                    rest /= static_cast<std::size_t>(c.d);
                    qi |= static_cast<std::size_t>(c.d == 3 ? Spin1Encoding::code(m) : m) << (q * k);
                }
                qi |= static_cast<std::size_t>(L) << ns;
                qi |= static_cast<std::size_t>(R) << (ns + 1);
                out(static_cast<Eigen::Index>(qi)) += s.amps(static_cast<Eigen::Index>(idx));
            }
        }
    std::vector<sim::QubitLabel> labels;
    for (int k = 1; k <= N; ++k)
        for (int slot = 0; slot < q; ++slot) labels.push_back(sim::QubitLabel::site_qubit(k, slot));
    labels.push_back(sim::QubitLabel::memory(sim::Role::MemoryLeft));
    labels.push_back(sim::QubitLabel::memory(sim::Role::MemoryRight));
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i].wire = static_cast<int>(i);
    if (!(out.norm() > 1e-14)) throw NumericalError("zero-norm contraction");
    return sim::StateVector(std::move(out), std::move(labels));
}

// ---------------------------------------------------------------------------
// Transfer operators

/// E_O = sum_{m m'} O_{m m'} conj(A^m) (x) A^{m'}.
inline Matrix transfer(const MpsChain &c, const Matrix &op) {
    if (op.rows() != c.d || op.cols() != c.d) throw DimensionError("operator dimension mismatch");
    Matrix e = Matrix::Zero(c.D * c.D, c.D * c.D);
    for (int m = 0; m < c.d; ++m)
        for (int n = 0; n < c.d; ++n)
            if (op(m, n) != cplx(0))
                e += op(m, n) * linalg::kron(Matrix(c.A[static_cast<std::size_t>(m)].conjugate()), c.A[static_cast<std::size_t>(n)]);
    return e;
}

inline Matrix transfer(const MpsChain &c) { return transfer(c, Matrix::Identity(c.d, c.d)); }

/// Two-site transfer operator for an operator on (site a, site b) with
/// index a + d*b.
inline Matrix transfer2(const MpsChain &c, const Matrix &op) {
    const int d = c.d;
    if (op.rows() != d * d || op.cols() != d * d) throw DimensionError("two-site operator dimension mismatch");
    Matrix e = Matrix::Zero(c.D * c.D, c.D * c.D);
    for (int m1 = 0; m1 < d; ++m1)
        for (int m2 = 0; m2 < d; ++m2)
            for (int n1 = 0; n1 < d; ++n1)
                for (int n2 = 0; n2 < d; ++n2) {
                    const cplx v = op(m1 + d * m2, n1 + d * n2);
                    if (v == cplx(0)) continue;
                    const Matrix bra = (c.A[static_cast<std::size_t>(m1)] * c.A[static_cast<std::size_t>(m2)]).conjugate();
                    const Matrix ket = c.A[static_cast<std::size_t>(n1)] * c.A[static_cast<std::size_t>(n2)];
                    e += v * linalg::kron(bra, ket);
                }
    return e;
}

inline Matrix matrix_power(Matrix m, long long k) {
    Matrix r = Matrix::Identity(m.rows(), m.cols());
    while (k > 0) {
        if (k & 1) r = r * m;
        m = m * m;
        k >>= 1;
    }
    return r;
}

/// Power of a transfer-type operator. Long powers go through the eigenbasis,
/// with eigenvalues of modulus 1 (to round-off) held exactly on the unit
/// circle so that k-fold round-off growth does not leak into the fixed modes.
inline Matrix transfer_power(const Matrix &m, long long k) {
    if (k <= 64) return matrix_power(m, k);
    Eigen::ComplexEigenSolver<Matrix> es(m);
    const Matrix V = es.eigenvectors();
    Eigen::PartialPivLU<Matrix> lu(V);
    const Matrix Vinv = lu.inverse();
    Vector lam = es.eigenvalues();
    const double scale = std::max(1.0, m.norm());
    if (!Vinv.allFinite() || (V * lam.asDiagonal() * Vinv - m).norm() > 1e-12 * scale) return matrix_power(m, k);
    for (Eigen::Index a = 0; a < lam.size(); ++a) {
        const double r = std::abs(lam(a));
        if (std::abs(r - 1.0) < 1e-10) lam(a) /= r;
        lam(a) = r < 1e-300 ? cplx(0) : std::pow(lam(a), static_cast<double>(k));
    }
    return V * lam.asDiagonal() * Vinv;
}

/// Spin-1 two-site AKLT bond Hamiltonian S.S + (S.S)^2 / 3, index a + 3b.
inline Matrix aklt_bond_hamiltonian() {
    const Matrix sx = spin1_sx(), sy = spin1_sy(), sz = spin1_sz();
    const Matrix ss = linalg::kron(sx, sx) + linalg::kron(sy, sy) + linalg::kron(sz, sz);
    return ss + ss * ss / 3.0;
}

enum class Observable { StringOrder, ZZCorrelator, EnergyPerSite };

struct Geometry {
    enum class Kind { Open, Periodic, Infinite };
    Kind kind = Kind::Infinite;
    int N = 0;
    Vector L, R; ///< open boundaries (kets; L enters as a bra)

    static Geometry infinite() { return {}; }
    static Geometry periodic(int N) { return {Kind::Periodic, N, {}, {}}; }
    static Geometry open(int N, Vector L, Vector R) { return {Kind::Open, N, std::move(L), std::move(R)}; }
};

namespace detail {

// Left/right fixed points of the transfer operator, normalized so l.r = 1.
inline std::pair<Eigen::RowVectorXcd, Vector> fixed_points(const Matrix &E) {
    Eigen::ComplexEigenSolver<Matrix> right(E), left(E.transpose());
    auto dominant = [](const Eigen::ComplexEigenSolver<Matrix> &es) {
        Eigen::Index best = 0;
        for (Eigen::Index k = 1; k < es.eigenvalues().size(); ++k)
            if (std::abs(es.eigenvalues()(k)) > std::abs(es.eigenvalues()(best))) best = k;
        return best;
    };
    const Eigen::Index br = dominant(right), bl = dominant(left);
    if (std::abs(std::abs(right.eigenvalues()(br)) - 1.0) > 1e-9)
        throw NumericalError("transfer operator is not normalized (dominant eigenvalue != 1)");
    Vector r = right.eigenvectors().col(br);
    Eigen::RowVectorXcd l = left.eigenvectors().col(bl).transpose();
    const cplx norm = (l * r)(0, 0);
    if (std::abs(norm) < 1e-14) throw NumericalError("degenerate transfer operator fixed points");
    l /= norm;
    return {l, r};
}

} // namespace detail

/// Exact expectation of a transfer-operator observable. String order and the
/// ZZ correlator use endpoints i and j = i + ell - 1 (1-based, ell >= 2);
/// energy per site uses the bond (i, i+1) for periodic and infinite chains
/// and the bond average for open chains.
inline double transfer_matrix_observable(const MpsChain &c, Observable obs, int i, int ell, const Geometry &g) {
    if (c.d != 3) throw DimensionError("spin-1 observables need a d = 3 chain");
    const Matrix E = transfer(c);
    Eigen::RowVectorXcd lvec;
    Vector rvec;
    bool trace = false;
    if (g.kind == Geometry::Kind::Open) {
        if (g.L.size() != c.D || g.R.size() != c.D) throw DimensionError("open boundary dimension mismatch");
        lvec = linalg::kron(Vector(g.L), Vector(g.L.conjugate())).transpose();
        rvec = linalg::kron(Vector(g.R.conjugate()), Vector(g.R));
    } else if (g.kind == Geometry::Kind::Periodic) {
        trace = true;
    } else {
        std::tie(lvec, rvec) = detail::fixed_points(E);
    }
    const bool finite = g.kind != Geometry::Kind::Infinite;
    if (finite && g.N < 2) throw DimensionError("chain too short");

    auto close = [&](const Matrix &m) -> cplx {
        if (trace) return m.trace();
        return (lvec * m * rvec)(0, 0);
    };
    auto E_pow = [&](long long k) { return transfer_power(E, k); };

    if (obs == Observable::EnergyPerSite) {
        const Matrix Eh = transfer2(c, aklt_bond_hamiltonian());
        if (g.kind == Geometry::Kind::Open) {
            const int N = g.N;
            const cplx norm = close(E_pow(N));
            cplx acc = 0;
            for (int b = 1; b < N; ++b) acc += close(E_pow(b - 1) * Eh * E_pow(N - b - 1));
            return (acc / norm).real() / (N - 1);
        }
        if (g.kind == Geometry::Kind::Periodic) return (close(Eh * E_pow(g.N - 2)) / close(E_pow(g.N))).real();
        return close(Eh).real();
    }

    if (ell < 2 || i < 1) throw DimensionError("observable span out of range");
    const int j = i + ell - 1;
    if (finite && j > g.N) throw DimensionError("observable span exceeds chain length");
    const Matrix Ez = transfer(c, spin1_sz());
    Matrix inner;
    if (obs == Observable::StringOrder) {
        const Matrix Es = transfer(c, spin1_string());
        inner = Ez * transfer_power(Es, ell - 2) * Ez;
    } else {
        inner = Ez * E_pow(ell - 2) * Ez;
    }
    if (!finite) return close(inner).real();
    const cplx value = close(E_pow(i - 1) * inner * E_pow(g.N - j));
    return (value / close(E_pow(g.N))).real();
}

// ---------------------------------------------------------------------------
// Symmetry identities

/// Phase theta with sum_{m'} U_{m m'} A^{m'} = e^{i theta} B^dagger A^m B for
/// all m, or nothing when the relation does not hold to tol.
inline std::optional<double> symmetry_phase(const std::vector<Matrix> &A, const Matrix &U, const Matrix &B,
                                            double tol = 1e-10) {
    const auto d = static_cast<Eigen::Index>(A.size());
    if (U.rows() != d || U.cols() != d) throw DimensionError("physical operator dimension mismatch");
    std::optional<cplx> phase;
    for (Eigen::Index m = 0; m < d; ++m) {
        Matrix lhs = Matrix::Zero(A[0].rows(), A[0].cols());
        for (Eigen::Index n = 0; n < d; ++n) lhs += U(m, n) * A[static_cast<std::size_t>(n)];
        const Matrix rhs = B.adjoint() * A[static_cast<std::size_t>(m)] * B;
        if (rhs.norm() < tol) {
            if (lhs.norm() > tol) return std::nullopt;
            continue;
        }
        if (!phase) {
            Eigen::Index r, col;
            rhs.cwiseAbs().maxCoeff(&r, &col);
            phase = lhs(r, col) / rhs(r, col);
            if (std::abs(std::abs(*phase) - 1.0) > 1e-8) return std::nullopt;
        }
        if ((lhs - *phase * rhs).norm() > tol) return std::nullopt;
    }
    return phase ? std::arg(*phase) : 0.0;
}

/// theta_B for the AKLT relation with U_B the spin-1 representation of B.
inline double check_symmetry(const MpsChain &c, Pauli b) {
    if (c.d != 3 || c.D != 2) throw DimensionError("check_symmetry needs a spin-1, bond-dimension-2 chain");
    const auto theta = symmetry_phase(c.A, spin1_symmetry(b), linalg::pauli(b));
    if (!theta) throw NumericalError(std::string("symmetry relation violated for B = ") + linalg::pauli_char(b));
    return *theta;
}

/// (A^m)^T = -Y A^m Y for every m.
inline bool check_inversion(const MpsChain &c, double tol = 1e-10) {
    if (c.D != 2) return false;
    const Matrix Y = linalg::pauli_y();
    for (const auto &a : c.A)
        if ((Matrix(a.transpose()) + Y * a * Y).norm() > tol) return false;
    return true;
}

} // namespace aklt::mps
