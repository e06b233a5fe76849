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
 * Dense complex linear algebra on small Hilbert spaces: density matrices,
 * partial traces, fidelities, spectra and McWeeny purification.
 *
 * Bit convention used throughout the library: qubit 0 is the least
 * significant bit of a basis-state index.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "aklt/error.hpp"

namespace aklt {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

namespace linalg {

inline constexpr double kHermitianTol = 1e-10;
inline constexpr double kTraceTol = 1e-10;
inline constexpr double kNegativeEigTol = 1e-9;
inline constexpr double kClipThreshold = 1e-12;

// ---------------------------------------------------------------------------
// Small helpers

inline Matrix kron(const Matrix &a, const Matrix &b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

inline Vector kron(const Vector &a, const Vector &b) {
    Vector out(a.size() * b.size());
    for (Eigen::Index i = 0; i < a.size(); ++i)
        out.segment(i * b.size(), b.size()) = a(i) * b;
    return out;
}

inline bool is_hermitian(const Matrix &m, double tol = kHermitianTol) {
    return m.rows() == m.cols() && (m - m.adjoint()).norm() < tol;
}

inline bool is_unitary(const Matrix &m, double tol = 1e-10) {
    if (m.rows() != m.cols()) return false;
    return (m.adjoint() * m - Matrix::Identity(m.rows(), m.cols())).norm() < tol;
}

/// Number of qubits n with 2^n == dim, or -1.
inline int qubits_for_dim(Eigen::Index dim) {
    int n = 0;
    while ((Eigen::Index{1} << n) < dim) ++n;
    return (Eigen::Index{1} << n) == dim ? n : -1;
}

// Pauli matrices, sigma^z = diag(1, -1) so that |0> is the +1 eigenstate.
inline Matrix pauli_i() { return Matrix::Identity(2, 2); }
inline Matrix pauli_x() {
    Matrix m(2, 2);
    m << 0, 1, 1, 0;
    return m;
}
inline Matrix pauli_y() {
    Matrix m(2, 2);
    m << 0, cplx(0, -1), cplx(0, 1), 0;
    return m;
}
inline Matrix pauli_z() {
    Matrix m(2, 2);
    m << 1, 0, 0, -1;
    return m;
}

/// Single-qubit Pauli labels. Values double as indices into pauli().
enum class Pauli : int { I = 0, X = 1, Y = 2, Z = 3 };

inline Matrix pauli(Pauli p) {
    switch (p) {
    case Pauli::I: return pauli_i();
    case Pauli::X: return pauli_x();
    case Pauli::Y: return pauli_y();
    case Pauli::Z: return pauli_z();
    }
    return pauli_i();
}

inline char pauli_char(Pauli p) { return "IXYZ"[static_cast<int>(p)]; }

inline Pauli pauli_from_char(char c) {
    switch (c) {
    case 'I': return Pauli::I;
    case 'X': return Pauli::X;
    case 'Y': return Pauli::Y;
    case 'Z': return Pauli::Z;
    default: throw ConfigError(std::string("unknown Pauli label '") + c + "'");
    }
}

/// Phase-stripped product a*b of two Paulis.
inline Pauli pauli_product(Pauli a, Pauli b) {
    // Paulis map onto (x, z) bit pairs; the product XORs them.
    auto bits = [](Pauli p) {
        switch (p) {
        case Pauli::I: return 0;
        case Pauli::X: return 1;
        case Pauli::Z: return 2;
        case Pauli::Y: return 3;
        }
        return 0;
    };
    constexpr Pauli from_bits[4] = {Pauli::I, Pauli::X, Pauli::Z, Pauli::Y};
    return from_bits[bits(a) ^ bits(b)];
}

/// Identify m as a Pauli up to a global phase; returns false if it is not one.
inline bool match_pauli(const Matrix &m, Pauli &out, double tol = 1e-9) {
    if (m.rows() != 2 || m.cols() != 2 || m.norm() < tol) return false;
    const Matrix n = m / m.norm() * std::sqrt(2.0);
    for (int k = 0; k < 4; ++k) {
        const Matrix p = pauli(static_cast<Pauli>(k));
        const cplx overlap = (p.adjoint() * n).trace() / 2.0;
        if (std::abs(std::abs(overlap) - 1.0) < tol) {
            out = static_cast<Pauli>(k);
            return true;
        }
    }
    return false;
}

// ---------------------------------------------------------------------------
// DensityMatrix

/// A Hermitian, unit-trace matrix on a 2^n-dimensional space. Positivity is
/// not enforced at construction: linear-inversion tomography produces slightly
/// non-physical matrices, which is_physical() reports.
class DensityMatrix {
  public:
    DensityMatrix() : m_(Matrix::Identity(1, 1)) {}

    explicit DensityMatrix(Matrix m) : m_(std::move(m)) {
        if (m_.rows() != m_.cols() || m_.rows() == 0)
            throw DimensionError("density matrix must be square and non-empty");
        if (qubits_for_dim(m_.rows()) < 0)
            throw DimensionError("density matrix dimension must be a power of two");
        if (!is_hermitian(m_)) throw NumericalError("density matrix is not Hermitian");
        if (std::abs(m_.trace().real() - 1.0) > kTraceTol)
            throw NumericalError("density matrix trace is " + std::to_string(m_.trace().real()));
    }

    /// Renormalizes the trace and symmetrizes before validating.
    static DensityMatrix normalized(const Matrix &m) {
        if (m.rows() != m.cols()) throw DimensionError("density matrix must be square");
        if (!is_hermitian(m, 1e-8)) throw NumericalError("matrix is not Hermitian");
        const double tr = m.trace().real();
        if (!(std::abs(tr) > 0.0)) throw NumericalError("matrix has zero trace");
        Matrix h = 0.5 * (m + m.adjoint()) / tr;
        return DensityMatrix(std::move(h));
    }

    static DensityMatrix pure(const Vector &psi) {
        const double n = psi.norm();
        if (!(n > 0.0)) throw NumericalError("zero vector has no density matrix");
        const Vector v = psi / n;
        return normalized(v * v.adjoint());
    }

    const Matrix &matrix() const { return m_; }
    Eigen::Index dim() const { return m_.rows(); }
    int num_qubits() const { return qubits_for_dim(m_.rows()); }

    bool is_physical() const {
        Eigen::SelfAdjointEigenSolver<Matrix> es(m_, Eigen::EigenvaluesOnly);
        return es.eigenvalues().minCoeff() >= -kNegativeEigTol;
    }

  private:
    Matrix m_;
};

// ---------------------------------------------------------------------------
// Fidelity

/// |<a|b>|^2 for (not necessarily normalized) pure states.
inline double fidelity(const Vector &a, const Vector &b) {
    if (a.size() != b.size()) throw DimensionError("fidelity: dimension mismatch");
    const double na = a.squaredNorm(), nb = b.squaredNorm();
    if (!(na > 0.0 && nb > 0.0)) throw NumericalError("fidelity: zero vector");
    return std::clamp(std::norm(a.dot(b)) / (na * nb), 0.0, 1.0);
}

inline double fidelity(const DensityMatrix &rho, const Vector &psi) {
    if (rho.dim() != psi.size()) throw DimensionError("fidelity: dimension mismatch");
    const double n = psi.squaredNorm();
    if (!(n > 0.0)) throw NumericalError("fidelity: zero vector");
    return std::clamp((psi.dot(rho.matrix() * psi)).real() / n, 0.0, 1.0);
}

inline double fidelity(const Vector &psi, const DensityMatrix &rho) { return fidelity(rho, psi); }

namespace detail {
inline Matrix psd_sqrt(const Matrix &m) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(m);
    Eigen::VectorXd ev = es.eigenvalues();
    const double cut = kClipThreshold * std::max(1.0, ev.cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < ev.size(); ++i) ev(i) = ev(i) > cut ? std::sqrt(ev(i)) : 0.0;
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}
} // namespace detail

/// Uhlmann fidelity (Tr sqrt(sqrt(a) b sqrt(a)))^2.
inline double fidelity(const DensityMatrix &a, const DensityMatrix &b) {
    if (a.dim() != b.dim()) throw DimensionError("fidelity: dimension mismatch");
    const Matrix sa = detail::psd_sqrt(a.matrix());
    Matrix inner = sa * b.matrix() * sa;
    inner = 0.5 * (inner + inner.adjoint());
    Eigen::SelfAdjointEigenSolver<Matrix> es(inner, Eigen::EigenvaluesOnly);
    // Round-off eigenvalues near zero would otherwise contribute O(sqrt(eps)).
    const Eigen::VectorXd ev = es.eigenvalues();
    const double cut = kClipThreshold * std::max(1.0, ev.cwiseAbs().maxCoeff());
    double root = 0.0;
    for (Eigen::Index i = 0; i < ev.size(); ++i)
        if (ev(i) > cut) root += std::sqrt(ev(i));
    return std::clamp(root * root, 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Partial trace

namespace detail {
inline void check_keep(std::span<const int> keep, int n) {
    std::vector<bool> seen(static_cast<std::size_t>(std::max(n, 0)), false);
    for (int q : keep) {
        if (q < 0 || q >= n) throw DimensionError("partial_trace: qubit index out of range");
        if (seen[static_cast<std::size_t>(q)]) throw DimensionError("partial_trace: repeated qubit");
        seen[static_cast<std::size_t>(q)] = true;
    }
}

// Maps (kept index a, traced index c) to a full basis index.
struct SplitIndex {
    std::vector<std::size_t> kept_part, traced_part;
    SplitIndex(std::span<const int> keep, int n) {
        std::vector<int> traced;
        for (int q = 0; q < n; ++q)
            if (std::find(keep.begin(), keep.end(), q) == keep.end()) traced.push_back(q);
        kept_part.assign(std::size_t{1} << keep.size(), 0);
        traced_part.assign(std::size_t{1} << traced.size(), 0);
        for (std::size_t a = 0; a < kept_part.size(); ++a)
            for (std::size_t k = 0; k < keep.size(); ++k)
                if ((a >> k) & 1U) kept_part[a] |= std::size_t{1} << keep[k];
        for (std::size_t c = 0; c < traced_part.size(); ++c)
            for (std::size_t k = 0; k < traced.size(); ++k)
                if ((c >> k) & 1U) traced_part[c] |= std::size_t{1} << traced[k];
    }
};
} // namespace detail

/// Reduced state on `keep` (keep[0] becomes the least significant qubit).
inline DensityMatrix partial_trace(const DensityMatrix &rho, std::span<const int> keep, int n) {
    if (rho.num_qubits() != n) throw DimensionError("partial_trace: qubit count mismatch");
    detail::check_keep(keep, n);
    const detail::SplitIndex split(keep, n);
    const auto dk = static_cast<Eigen::Index>(split.kept_part.size());
    Matrix out = Matrix::Zero(dk, dk);
    const Matrix &m = rho.matrix();
    for (Eigen::Index a = 0; a < dk; ++a)
        for (Eigen::Index b = 0; b < dk; ++b) {
            cplx acc = 0;
            for (std::size_t c : split.traced_part)
                acc += m(static_cast<Eigen::Index>(split.kept_part[a] | c),
                         static_cast<Eigen::Index>(split.kept_part[b] | c));
            out(a, b) = acc;
        }
    return DensityMatrix::normalized(out);
}

/// Reduced density matrix of a pure state, without forming |psi><psi|.
inline DensityMatrix reduced_density(const Vector &psi, std::span<const int> keep, int n) {
    if (psi.size() != (Eigen::Index{1} << n)) throw DimensionError("reduced_density: size mismatch");
    detail::check_keep(keep, n);
    const detail::SplitIndex split(keep, n);
    const auto dk = static_cast<Eigen::Index>(split.kept_part.size());
    const auto dt = static_cast<Eigen::Index>(split.traced_part.size());
    Matrix block(dk, dt);
    for (Eigen::Index a = 0; a < dk; ++a)
        for (Eigen::Index c = 0; c < dt; ++c)
            block(a, c) = psi(static_cast<Eigen::Index>(split.kept_part[static_cast<std::size_t>(a)] |
                                                        split.traced_part[static_cast<std::size_t>(c)]));
    return DensityMatrix::normalized(block * block.adjoint());
}

// ---------------------------------------------------------------------------
// Spectrum

struct Spectrum {
    std::vector<double> eigenvalues;         // descending, clipped to [0, 1]
    std::vector<double> entanglement_levels; // -ln(lambda) for lambda above the clip threshold
    double entropy_base2 = 0.0;
};

inline Spectrum spectrum(const DensityMatrix &rho) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(rho.matrix(), Eigen::EigenvaluesOnly);
    Spectrum s;
    const auto &ev = es.eigenvalues();
    for (Eigen::Index i = ev.size() - 1; i >= 0; --i) s.eigenvalues.push_back(std::clamp(ev(i), 0.0, 1.0));
    for (double l : s.eigenvalues) {
        if (l <= kClipThreshold) continue;
        s.entanglement_levels.push_back(-std::log(l));
        s.entropy_base2 -= l * std::log2(l);
    }
    return s;
}

// ---------------------------------------------------------------------------
// McWeeny purification

struct PurifyResult {
    DensityMatrix rho;
    int iterations = 0;
    bool rank_one = false; ///< true iff the iteration reached an idempotent rank-1 matrix
};

/// Iterates rho <- 3 rho^2 - 2 rho^3 (trace renormalized every step) until
/// ||rho^2 - rho||_F < tol. Degenerate leading eigenvalues are fixed points;
/// in that case the stationary matrix is returned with rank_one == false.
inline PurifyResult mcweeny_purify(const DensityMatrix &input, double tol = 1e-12, int max_iter = 200) {
    Matrix rho = input.matrix();
    auto residual = [](const Matrix &r) { return (r * r - r).norm(); };
    const double initial = residual(rho);
    double best = initial;
    if (initial < tol) return {input, 0, true};
    for (int it = 1; it <= max_iter; ++it) {
        const Matrix sq = rho * rho;
        Matrix next = 3.0 * sq - 2.0 * sq * rho;
        next = 0.5 * (next + next.adjoint());
        const double tr = next.trace().real();
        if (!(tr > 0.0)) throw NumericalError("mcweeny_purify: trace collapsed to zero");
        next /= tr;
        const double step = (next - rho).norm();
        rho = std::move(next);
        const double r = residual(rho);
        best = std::min(best, r);
        if (r < tol) return {DensityMatrix::normalized(rho), it, true};
        if (step < tol) return {DensityMatrix::normalized(rho), it, false};
    }
    if (!(best < initial)) throw NumericalError("mcweeny_purify: residual never decreased");
    return {DensityMatrix::normalized(rho), max_iter, false};
}

} // namespace linalg
} // namespace aklt
