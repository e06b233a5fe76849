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
 * String order, spin-1 post-selection, Pauli tomography, boundary-memory
 * spectra and correlation-length fits.
 */

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <boost/math/tools/minima.hpp>

#include "aklt/error.hpp"
#include "aklt/linalg.hpp"
#include "aklt/mps.hpp"
#include "aklt/protocol.hpp"
#include "aklt/shots.hpp"
#include "aklt/sim.hpp"

namespace aklt::observables {

using linalg::DensityMatrix;
using linalg::Pauli;
using linalg::Spectrum;
using sim::StateVector;

/// Value with its standard error and the number of shots behind it.
struct Estimate {
    double value = 0.0;
    double std_error = 0.0;
    std::size_t shots = 0;
};

// ---------------------------------------------------------------------------
// String order

namespace detail {

inline void check_span(int N, int i, int ell) {
    if (ell < 2 || i < 1 || i + ell - 1 > N)
        throw DimensionError("string order span (i=" + std::to_string(i) + ", l=" + std::to_string(ell) +
                             ") out of range for N=" + std::to_string(N));
}

// S^z_i exp(i pi sum S^z) S^z_j for one configuration, given S^z per site.
template <class Sz> int string_value(int i, int ell, Sz &&sz) {
    const int j = i + ell - 1;
    int v = sz(i) * sz(j);
    if (v == 0) return 0;
    for (int k = i + 1; k < j; ++k)
        if (sz(k) != 0) v = -v;
    return v;
}

} // namespace detail

/// Exact string order of a state whose site k occupies qubits 2(k-1) and
/// 2(k-1)+1; remaining qubits are traced out. `flip[k-1]` exchanges the
/// labels of site k (a frame-mode X or Y defect), which negates its S^z.
inline double string_order(const StateVector &st, int N, int i, int ell, const std::vector<bool> &flip = {}) {
    detail::check_span(N, i, ell);
    if (st.num_qubits() < 2 * N) throw DimensionError("state has fewer than 2N qubits");
    if (!flip.empty() && static_cast<int>(flip.size()) != N) throw DimensionError("frame flags must cover N sites");
    const auto &a = st.amplitudes();
    double acc = 0.0, norm = 0.0;
    for (Eigen::Index idx = 0; idx < a.size(); ++idx) {
        const double p = std::norm(a(idx));
        if (p == 0.0) continue;
        norm += p;
        const auto x = static_cast<std::size_t>(idx);
        const int v = detail::string_value(i, ell, [&](int k) {
            const int s = mps::Spin1Encoding::sz(static_cast<int>((x >> (2 * (k - 1))) & 3u));
            return !flip.empty() && flip[static_cast<std::size_t>(k - 1)] ? -s : s;
        });
        acc += p * v;
    }
    return acc / norm;
}

/// Exact string order of a spin-1 state in the (+, 0, -) basis.
inline double string_order(const mps::SiteState &s, int i, int ell) {
    if (s.d != 3) throw DimensionError("string order needs spin-1 sites");
    detail::check_span(s.N, i, ell);
    double acc = 0.0, norm = 0.0;
    std::vector<int> sz(static_cast<std::size_t>(s.N) + 1);
    for (Eigen::Index idx = 0; idx < s.amps.size(); ++idx) {
        const double p = std::norm(s.amps(idx));
        if (p == 0.0) continue;
        auto rest = static_cast<std::size_t>(idx);
        for (int k = 1; k <= s.N; ++k, rest /= 3) sz[static_cast<std::size_t>(k)] = 1 - static_cast<int>(rest % 3);
        norm += p;
        acc += p * detail::string_value(i, ell, [&](int k) { return sz[static_cast<std::size_t>(k)]; });
    }
    return acc / norm;
}

/// Exact string order of an open chain with both boundary memories traced
/// out, evaluated on spin-1 amplitudes (scales to N = 14 without the
/// 2N-qubit register).
inline double string_order_traced_boundaries(const mps::MpsChain &c, int N, int i, int ell) {
    detail::check_span(N, i, ell);
    double acc = 0.0, norm = 0.0;
    for (int L = 0; L < c.D; ++L)
        for (int R = 0; R < c.D; ++R) {
            const auto s = mps::contract_amplitudes(c, Vector::Unit(c.D, L), Vector::Unit(c.D, R), N);
            const double w = s.amps.squaredNorm();
            if (w == 0.0) continue;
            acc += w * string_order(s, i, ell);
            norm += w;
        }
    return acc / norm;
}

/// Per-site label flips of a frame-mode preparation (all false otherwise).
inline std::vector<bool> frame_flips(const protocol::PreparationResult &r) {
    std::vector<bool> flip(static_cast<std::size_t>(r.N), false);
    if (r.correction != protocol::CorrectionMode::Frame) return flip;
    const auto &recs = r.session.records();
    for (int k = 1; k <= r.N; ++k)
        flip[static_cast<std::size_t>(k - 1)] = protocol::detail::swaps_labels(protocol::frame_for_site(r, recs, k));
    return flip;
}

/// Exact string order of a prepared state, with the frame applied.
inline double string_order(const protocol::PreparationResult &r, int i, int ell) {
    return string_order(protocol::prepared_state(r), r.N, i, ell, frame_flips(r));
}

/// Shot estimate; the standard error is that of the sample mean.
inline Estimate string_order(const ShotRecord &s, int i, int ell) {
    detail::check_span(s.N, i, ell);
    if (s.size() == 0) throw Error("string order of an empty shot set");
    double sum = 0.0, sq = 0.0;
    for (std::size_t k = 0; k < s.size(); ++k) {
        const int v = detail::string_value(i, ell, [&](int site) { return s.site_sz(k, site); });
        sum += v;
        sq += v * v;
    }
    const double n = static_cast<double>(s.size()), mean = sum / n;
    const double var = n > 1 ? std::max(sq - n * mean * mean, 0.0) / (n - 1) : 0.0;
    return {mean, std::sqrt(var / n), s.size()};
}

// ---------------------------------------------------------------------------
// Post-selection

struct Filtered {
    ShotRecord shots;
    double rejection_rate = 0.0;
};

namespace detail {
template <class Keep> Filtered filter(const ShotRecord &in, Keep &&keep) {
    Filtered out{in, 0.0};
    out.shots.bits.clear();
    for (std::size_t k = 0; k < in.size(); ++k)
        if (keep(k)) out.shots.bits.push_back(in.bits[k]);
    if (in.size() > 0)
        out.rejection_rate = static_cast<double>(in.size() - out.shots.size()) / static_cast<double>(in.size());
    return out;
}
} // namespace detail

/// Drops shots in which any site reads the encoded singlet |11>.
inline Filtered postselect_spin1(const ShotRecord &s) {
    return detail::filter(s, [&](std::size_t k) {
        for (int site = 1; site <= s.N; ++site)
            if (s.site_code(k, site) == mps::Spin1Encoding::kSingletCode) return false;
        return true;
    });
}

/// Drops shots whose boundary outcomes contradict the measured total
/// magnetization, S^z_tot = 1 - L - R.
inline Filtered postselect_boundary(const ShotRecord &s) {
    if (!s.has_memories) throw Error("boundary post-selection needs memory outcomes");
    return detail::filter(s, [&](std::size_t k) {
        int sz = 0;
        for (int site = 1; site <= s.N; ++site) sz += s.site_sz(k, site);
        return sz == 1 - s.memory_left(k) - s.memory_right(k);
    });
}

// ---------------------------------------------------------------------------
// Tomography

/// Measurement settings for k qubits: setting index t has base-3 digit q
/// equal to 0, 1, 2 for X, Y, Z on target q.
inline std::vector<std::vector<Pauli>> tomography_settings(int k) {
    if (k < 1 || k > 8) throw DimensionError("tomography supports 1 to 8 qubits");
    std::size_t count = 1;
    for (int q = 0; q < k; ++q) count *= 3;
    std::vector<std::vector<Pauli>> out(count, std::vector<Pauli>(static_cast<std::size_t>(k)));
    for (std::size_t t = 0; t < count; ++t) {
        std::size_t rest = t;
        for (int q = 0; q < k; ++q, rest /= 3) out[t][static_cast<std::size_t>(q)] = static_cast<Pauli>(1 + rest % 3);
    }
    return out;
}

/// Rotation taking the eigenbasis of p onto the Z basis (+1 -> |0>).
inline Matrix basis_rotation(Pauli p) {
    const Matrix h = sim::gates::h();
    switch (p) {
    case Pauli::X: return h;
    case Pauli::Y: {
        Matrix sdg = Matrix::Identity(2, 2);
        sdg(1, 1) = cplx(0, -1);
        return h * sdg;
    }
    default: return Matrix::Identity(2, 2);
    }
}

/// Outcome counts per setting; bit q of an outcome index is target q.
struct TomographyData {
    int k = 0;
    std::vector<std::vector<std::uint64_t>> counts;
};

namespace detail {

// Multinomial draw through sequential binomials.
inline std::vector<std::uint64_t> multinomial(const std::vector<double> &probs, std::uint64_t n, std::mt19937_64 &rng) {
    std::vector<std::uint64_t> out(probs.size(), 0);
    double rest = 1.0;
    for (std::size_t k = 0; k < probs.size() && n > 0; ++k) {
        if (k + 1 == probs.size() || rest <= 0.0) {
            out[k] = n;
            break;
        }
        const double p = std::clamp(probs[k] / rest, 0.0, 1.0);
        std::binomial_distribution<std::uint64_t> b(n, p);
        out[k] = b(rng);
        n -= out[k];
        rest -= probs[k];
    }
    return out;
}

inline int popcount(std::size_t x) {
    int c = 0;
    for (; x; x &= x - 1) ++c;
    return c;
}

} // namespace detail

/// Draws `shots` outcomes per setting from the exact distribution of rho.
inline TomographyData sample_tomography(const DensityMatrix &rho, std::uint64_t shots, std::uint64_t seed) {
    const int k = rho.num_qubits();
    const auto settings = tomography_settings(k);
    TomographyData data{k, {}};
    std::mt19937_64 rng(seed);
    for (const auto &set : settings) {
        Matrix u = basis_rotation(set[0]);
        for (int q = 1; q < k; ++q) u = linalg::kron(basis_rotation(set[static_cast<std::size_t>(q)]), u);
        const Matrix rot = u * rho.matrix() * u.adjoint();
        std::vector<double> probs(static_cast<std::size_t>(rot.rows()));
        for (Eigen::Index i = 0; i < rot.rows(); ++i) probs[static_cast<std::size_t>(i)] = std::max(rot(i, i).real(), 0.0);
        data.counts.push_back(detail::multinomial(probs, shots, rng));
    }
    return data;
}

/// Same, for the reduced state of st on `targets`.
inline TomographyData sample_tomography(const StateVector &st, std::span<const int> targets, std::uint64_t shots,
                                        std::uint64_t seed) {
    return sample_tomography(linalg::reduced_density(st.amplitudes(), targets, st.num_qubits()), shots, seed);
}

/// Replays a recorded preparation (usually noisy) once per setting with the
/// target wires rotated and read out. The boundary and site readouts of r,
/// if any, stay in the circuit.
inline TomographyData sample_tomography(const protocol::PreparationResult &r, std::span<const int> wires,
                                        std::uint64_t shots, std::uint64_t seed, const NoiseModel &model) {
    const int k = static_cast<int>(wires.size());
    const auto settings = tomography_settings(k);
    TomographyData data{k, {}};
    for (std::size_t t = 0; t < settings.size(); ++t) {
        sim::Circuit c = r.session.circuit();
        std::vector<int> recs;
        for (int q = 0; q < k; ++q) {
            const int w = wires[static_cast<std::size_t>(q)];
            const Pauli p = settings[t][static_cast<std::size_t>(q)];
            if (p != Pauli::Z) c.add_gate(basis_rotation(p), {w}, "tomo_basis");
            recs.push_back(c.add_measure(protocol::detail::z_projectors(), {w}, "tomo", true));
        }
        sim::Executor ex(c);
        std::vector<std::uint64_t> counts(std::size_t{1} << k, 0);
        for (const auto &shot : ex.run(shots, seed + 7919 * t, model)) {
            std::size_t o = 0;
            for (int q = 0; q < k; ++q)
                o |= static_cast<std::size_t>(shot.records[static_cast<std::size_t>(recs[static_cast<std::size_t>(q)])]) << q;
            ++counts[o];
        }
        data.counts.push_back(std::move(counts));
    }
    return data;
}

/// Expectations of all 4^k Pauli strings (base-4 digit q = I, X, Y, Z on
/// target q). Each string averages every setting that measures its support.
inline std::vector<double> pauli_expectations(const TomographyData &d) {
    const auto settings = tomography_settings(d.k);
    if (d.counts.size() != settings.size()) throw ConfigError("incomplete Pauli measurement set");
    const std::size_t outcomes = std::size_t{1} << d.k;
    std::size_t strings = 1;
    for (int q = 0; q < d.k; ++q) strings *= 4;
    std::vector<double> sum(strings, 0.0);
    std::vector<int> hits(strings, 0);
    for (std::size_t t = 0; t < settings.size(); ++t) {
        const auto &c = d.counts[t];
        if (c.size() != outcomes) throw ConfigError("setting has the wrong number of outcomes");
        std::uint64_t n = 0;
        for (auto x : c) n += x;
        if (n == 0) throw ConfigError("incomplete Pauli measurement set (empty setting)");
        for (std::size_t mask = 0; mask < outcomes; ++mask) {
            double e = 0.0;
            for (std::size_t o = 0; o < outcomes; ++o)
                e += (detail::popcount(o & mask) % 2 ? -1.0 : 1.0) * static_cast<double>(c[o]);
            std::size_t idx = 0, place = 1;
            for (int q = 0; q < d.k; ++q, place *= 4)
                if ((mask >> q) & 1u) idx += place * static_cast<std::size_t>(settings[t][static_cast<std::size_t>(q)]);
            sum[idx] += e / static_cast<double>(n);
            ++hits[idx];
        }
    }
    for (std::size_t i = 0; i < strings; ++i) sum[i] /= hits[i];
    return sum;
}

inline Matrix pauli_string(std::size_t idx, int k) {
    Matrix m = Matrix::Identity(1, 1);
    for (int q = 0; q < k; ++q, idx /= 4) m = linalg::kron(linalg::pauli(static_cast<Pauli>(idx % 4)), m);
    return m;
}

inline std::vector<double> exact_pauli_expectations(const DensityMatrix &rho) {
    const int k = rho.num_qubits();
    std::size_t strings = 1;
    for (int q = 0; q < k; ++q) strings *= 4;
    std::vector<double> out(strings);
    for (std::size_t i = 0; i < strings; ++i) out[i] = (rho.matrix() * pauli_string(i, k)).trace().real();
    return out;
}

/// rho = sum_P <P> P / 2^k.
inline Matrix linear_inversion(std::span<const double> expectations, int k) {
    std::size_t strings = 1;
    for (int q = 0; q < k; ++q) strings *= 4;
    if (expectations.size() != strings) throw ConfigError("incomplete Pauli expectation set");
    const auto dim = Eigen::Index{1} << k;
    Matrix rho = Matrix::Zero(dim, dim);
    for (std::size_t i = 0; i < strings; ++i)
        if (expectations[i] != 0.0) rho += expectations[i] * pauli_string(i, k);
    return rho / static_cast<double>(dim);
}

struct TomographyOptions {
    bool project_spin1 = false;
    std::vector<std::array<int, 2>> spin1_pairs; ///< target positions (slot 0, slot 1) of each site
    bool purify = false;
};

struct TomographyResult {
    Matrix raw;          ///< linear inversion, before any projection
    DensityMatrix rho;   ///< after projection, renormalization and purification
    double likelihood = 0.0;     ///< Tr(raw rho) when purified
    double rejection_rate = 0.0; ///< weight removed by the spin-1 projection
    int iterations = 0;
};

/// Projector removing the encoded singlet |11> from each listed pair.
inline Matrix spin1_projector(const std::vector<std::array<int, 2>> &pairs, int k) {
    const auto dim = Eigen::Index{1} << k;
    Matrix p = Matrix::Zero(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
        bool keep = true;
        for (const auto &pr : pairs) {
            if (pr[0] < 0 || pr[1] < 0 || pr[0] >= k || pr[1] >= k) throw DimensionError("spin-1 pair out of range");
            if (((i >> pr[0]) & 1) && ((i >> pr[1]) & 1)) keep = false;
        }
        if (keep) p(i, i) = 1.0;
    }
    return p;
}

inline TomographyResult tomography(std::span<const double> expectations, int k, const TomographyOptions &opt = {}) {
    TomographyResult out;
    out.raw = linear_inversion(expectations, k);
    Matrix rho = out.raw;
    if (opt.project_spin1) {
        const Matrix p = spin1_projector(opt.spin1_pairs, k);
        rho = p * rho * p;
        out.rejection_rate = std::clamp(1.0 - rho.trace().real(), 0.0, 1.0);
    }
    out.rho = DensityMatrix::normalized(rho);
    if (opt.purify) {
        const auto pr = linalg::mcweeny_purify(out.rho);
        out.rho = pr.rho;
        out.iterations = pr.iterations;
        out.likelihood = (out.raw * out.rho.matrix()).trace().real();
    } else {
        out.likelihood = (out.raw * out.rho.matrix()).trace().real();
    }
    return out;
}

inline TomographyResult tomography(const TomographyData &d, const TomographyOptions &opt = {}) {
    const auto e = pauli_expectations(d);
    return tomography(e, d.k, opt);
}

// ---------------------------------------------------------------------------
// Boundary-memory spectra

/// Spectra of the memory pair (left memory = qubit 0, right = qubit 1).
struct MemorySpectrum {
    DensityMatrix rho_lr;
    Spectrum joint;
    std::array<double, 2> p_left{};
    std::array<Spectrum, 2> conditioned;
    std::vector<double> conditioned_mean; ///< descending eigenvalues, weighted by p_left
    double entropy = 0.0;                 ///< S(rho_LR) in bits
};

inline MemorySpectrum memory_spectrum(const DensityMatrix &rho_lr) {
    if (rho_lr.num_qubits() != 2) throw DimensionError("memory spectrum needs a two-qubit state");
    MemorySpectrum out;
    out.rho_lr = rho_lr;
    out.joint = linalg::spectrum(rho_lr);
    out.entropy = out.joint.entropy_base2;
    out.conditioned_mean.assign(2, 0.0);
    const Matrix &m = rho_lr.matrix();
    for (int L = 0; L < 2; ++L) {
        // Rows/columns with qubit 0 = L; the right memory is qubit 1.
        Matrix block(2, 2);
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) block(a, b) = m(L + 2 * a, L + 2 * b);
        const double p = block.trace().real();
        out.p_left[static_cast<std::size_t>(L)] = p;
        if (p <= linalg::kClipThreshold) continue;
        out.conditioned[static_cast<std::size_t>(L)] = linalg::spectrum(DensityMatrix::normalized(block));
        for (int k = 0; k < 2; ++k)
            out.conditioned_mean[static_cast<std::size_t>(k)] +=
                p * out.conditioned[static_cast<std::size_t>(L)].eigenvalues[static_cast<std::size_t>(k)];
    }
    const double total = out.p_left[0] + out.p_left[1];
    for (double &x : out.conditioned_mean) x /= total;
    return out;
}

/// Exact reduced state of the two unmeasured boundary memories.
inline DensityMatrix memory_state(const protocol::PreparationResult &r) {
    if (!r.memories_live()) throw ConfigError("boundary memories were already consumed");
    const auto st = protocol::prepared_state(r);
    const std::array<int, 2> keep{2 * r.N, 2 * r.N + 1};
    return linalg::reduced_density(st.amplitudes(), keep, st.num_qubits());
}

/// A chain of ell sites with live boundary memories, prepared by `method`
/// (fusion uses unitary correction so the left memory carries no frame).
inline protocol::PreparationResult spectrum_preparation(protocol::Method method, int ell, std::uint64_t seed = 0,
                                                        bool simulate = true) {
    using protocol::Method;
    if (method == Method::Sequential) return protocol::prepare_sequential(ell, protocol::MemoryMode::Single,
                                                                          protocol::MemoryInit::singlet(), simulate);
    if (method == Method::Fusion) {
        if (ell < 2)
            return protocol::prepare_sequential(ell, protocol::MemoryMode::Dual, protocol::MemoryInit::singlet(),
                                                simulate);
        auto pol = sim::OutcomePolicy::sample(seed);
        auto r = protocol::prepare_fusion(ell, pol, simulate);
        protocol::correct_defects(r, protocol::CorrectionMode::Unitary);
        return r;
    }
    throw ConfigError(std::string("no spectrum preparation for method ") + protocol::method_name(method));
}

/// Schmidt spectrum of a pure state across the cut (part | rest). The
/// reduced matrix is formed on the smaller side; eigenvalues are padded with
/// zeros to the dimension of `part`.
inline Spectrum schmidt_spectrum(const StateVector &st, std::span<const int> part) {
    const int n = st.num_qubits();
    if (2 * static_cast<int>(part.size()) <= n)
        return linalg::spectrum(linalg::reduced_density(st.amplitudes(), part, n));
    std::vector<int> rest;
    for (int q = 0; q < n; ++q)
        if (std::find(part.begin(), part.end(), q) == part.end()) rest.push_back(q);
    auto s = linalg::spectrum(linalg::reduced_density(st.amplitudes(), rest, n));
    s.eigenvalues.resize(std::size_t{1} << part.size(), 0.0);
    return s;
}

// ---------------------------------------------------------------------------
// Correlation-length fit

struct SpectrumPoint {
    double ell = 0.0;
    double plus = 0.5;  ///< larger eigenvalue
    double minus = 0.5; ///< smaller eigenvalue
};

struct FitResult {
    double xi = 0.0;
    double A = 0.0;
    double residual = 0.0; ///< sum of squared residuals over both branches
};

/// Joint least-squares fit of plus = 1/2 + A e^{-l/xi}, minus = 1/2 - A e^{-l/xi}.
inline FitResult fit_correlation_length(std::span<const SpectrumPoint> pts) {
    std::vector<double> ells;
    for (const auto &p : pts) ells.push_back(p.ell);
    std::sort(ells.begin(), ells.end());
    if (std::unique(ells.begin(), ells.end()) - ells.begin() < 3) throw ConfigError("fit needs at least 3 distinct l");
    bool signal = false;
    for (const auto &p : pts) signal = signal || p.plus != 0.5 || p.minus != 0.5;
    if (!signal) throw NumericalError("all eigenvalues equal 1/2: correlation length is unidentifiable");

    // For fixed xi the optimal A is linear; minimize the profile over log xi.
    auto amplitude = [&](double xi) {
        double num = 0.0, den = 0.0;
        for (const auto &p : pts) {
            const double e = std::exp(-p.ell / xi);
            num += ((p.plus - 0.5) - (p.minus - 0.5)) * e;
            den += 2.0 * e * e;
        }
        return den > 0.0 ? num / den : 0.0;
    };
    auto sse = [&](double xi) {
        const double A = amplitude(xi);
        double s = 0.0;
        for (const auto &p : pts) {
            const double m = A * std::exp(-p.ell / xi);
            s += std::pow(p.plus - 0.5 - m, 2) + std::pow(p.minus - 0.5 + m, 2);
        }
        return s;
    };
    auto profile = [&](double t) { return sse(std::exp(t)); };
    const double lo = std::log(1e-3), hi = std::log(1e3);
    const int grid = 400;
    int best = 0;
    double best_val = std::numeric_limits<double>::infinity();
    for (int g = 0; g <= grid; ++g) {
        const double v = profile(lo + (hi - lo) * g / grid);
        if (v < best_val) best_val = v, best = g;
    }
    const double a = lo + (hi - lo) * std::max(best - 1, 0) / grid;
    const double b = lo + (hi - lo) * std::min(best + 1, grid) / grid;
    const auto [t, val] = boost::math::tools::brent_find_minima(profile, a, b, std::numeric_limits<double>::digits);
    FitResult out;
    out.xi = std::exp(t);
    out.A = amplitude(out.xi);
    out.residual = val;
    if (!(out.xi > 0.0) || !std::isfinite(out.xi)) throw NumericalError("correlation-length fit failed");
    return out;
}

// ---------------------------------------------------------------------------
// CSV output

inline std::string format_number(double x) {
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    if (std::isnan(x)) return "nan";
    if (x == 0.0) x = 0.0; // drop the sign of -0
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

struct StringOrderRow {
    std::string method;
    int N = 0, i = 0, ell = 0;
    double value = 0.0, std_error = 0.0;
    std::uint64_t shots = 0, seed = 0;
};

inline void write_string_order_csv(std::ostream &os, const std::vector<StringOrderRow> &rows) {
    os << "method,N,i,l,value,stderr,shots,seed\n";
    for (const auto &r : rows)
        os << r.method << ',' << r.N << ',' << r.i << ',' << r.ell << ',' << format_number(r.value) << ','
           << format_number(r.std_error) << ',' << r.shots << ',' << r.seed << '\n';
}

struct SpectrumRow {
    std::string method;
    int ell = 0, index = 0;
    double lambda = 0.0;
};

inline void write_spectrum_csv(std::ostream &os, const std::vector<SpectrumRow> &rows) {
    os << "method,l,eigenvalue_index,lambda,minus_ln_lambda\n";
    for (const auto &r : rows) {
        const double level = r.lambda > 0.0 ? -std::log(r.lambda) : std::numeric_limits<double>::infinity();
        os << r.method << ',' << r.ell << ',' << r.index << ',' << format_number(r.lambda) << ','
           << format_number(level) << '\n';
    }
}

} // namespace aklt::observables
