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
 * The acceptance suite: twelve end-to-end criteria, each reduced to one
 * pass/fail line. Shared by the `acceptance` binary and `aklt_cli selftest`.
 */

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "aklt/aklt.hpp"

namespace aklt::selftest {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
};

namespace detail {

using linalg::Pauli;
using protocol::BoundaryTarget;
using protocol::CorrectionMode;
using protocol::Method;
using sim::OutcomePolicy;

inline std::string fmt(const char *f, double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, x);
    return buf;
}

inline std::vector<int> base4(int code, int count) {
    std::vector<int> out;
    for (int k = 0; k < count; ++k, code /= 4) out.push_back(code % 4);
    return out;
}

/// Pure-state fidelity oracle, independent of the library's fidelity helpers.
inline double overlap(const Vector &a, const Vector &b) {
    return std::norm(a.dot(b)) / (a.squaredNorm() * b.squaredNorm());
}

inline CriterionResult fusion_determinism() {
    int states = 0;
    double worst = 1.0;
    for (int N = 2; N <= 6; ++N) {
        const int f = (N - 1) / 2;
        for (int c = 0; c < (1 << (2 * f)); ++c)
            for (int b = 0; b < 4; ++b) {
                const auto r = protocol::fusion_pipeline(N, OutcomePolicy::forced(base4(c, f)), CorrectionMode::Unitary,
                                                         BoundaryTarget::outcomes(b & 1, b >> 1));
                worst = std::min(worst, protocol::reference_fidelity(r));
                ++states;
            }
    }
    return {1, "fusion determinism", worst >= 1 - 1e-10,
            std::to_string(states) + " forced outcome/boundary combinations, N=2..6, min fidelity 1-" +
                fmt("%.1e", 1 - worst)};
}

inline CriterionResult constant_depth() {
    std::vector<int> fusion, sequential;
    for (int N = 2; N <= 8; ++N) {
        auto pol = OutcomePolicy::sample(0);
        auto f = protocol::prepare_fusion(N, pol, false);
        protocol::correct_defects(f, CorrectionMode::Frame);
        protocol::enforce_boundary(f, BoundaryTarget::sample(0));
        fusion.push_back(f.depth());
        auto s = protocol::prepare_sequential(N, protocol::MemoryMode::Single, protocol::MemoryInit::singlet(), false);
        protocol::enforce_boundary(s, BoundaryTarget::sample(0));
        sequential.push_back(s.depth());
    }
    const bool flat = std::all_of(fusion.begin(), fusion.end(), [&](int d) { return d == fusion.front(); });
    const bool rising = std::adjacent_find(sequential.begin(), sequential.end(), std::greater_equal<>()) == sequential.end();
    std::ostringstream os;
    os << "fusion depth " << fusion.front() << " for N=2..8; sequential depth " << sequential.front() << ".."
       << sequential.back();
    return {2, "constant depth", flat && rising, os.str()};
}

inline CriterionResult string_order() {
    const auto c = mps::aklt_tensors();
    const double inf = mps::transfer_matrix_observable(c, mps::Observable::StringOrder, 1, 1000000, mps::Geometry::infinite());
    const double n14 = observables::string_order_traced_boundaries(c, 14, 1, 14);
    const double exact6 = observables::string_order_traced_boundaries(c, 6, 1, 6);
    const auto est = observables::string_order(protocol::sample_shots(protocol::sampling_circuit(Method::Fusion, 6), 100000, 3), 1, 6);
    const double z = std::abs(est.value - exact6) / est.std_error;
    const bool ok = std::abs(inf + 4.0 / 9.0) <= 1e-12 && std::abs(n14 + 4.0 / 9.0) <= 2e-3 && z < 4.0;
    return {3, "string order", ok,
            "infinite " + fmt("%.15f", inf) + ", N=14 " + fmt("%.6f", n14) + ", shots N=6 " + fmt("%.4f", est.value) +
                " (" + fmt("%.2f", z) + " SE from exact)"};
}

inline CriterionResult correlation_length() {
    std::vector<observables::SpectrumPoint> pts;
    for (int l = 1; l <= 8; ++l) {
        const auto ms = observables::memory_spectrum(observables::memory_state(observables::spectrum_preparation(Method::Fusion, l, 3)));
        pts.push_back({static_cast<double>(l), ms.conditioned_mean[0], ms.conditioned_mean[1]});
    }
    const double xi = observables::fit_correlation_length(pts).xi;
    const double target = 1.0 / std::log(3.0);
    const double rel = std::abs(xi - target) / target;
    return {4, "correlation length", rel <= 5e-3, "xi " + fmt("%.6f", xi) + " (relative error " + fmt("%.1e", rel) + ")"};
}

/// Entropy gap 2 - S of the memory pair from its closed-form Werner spectrum.
inline double werner_gap(int ell) {
    const double x = std::pow(-1.0 / 3.0, ell);
    const double odd = (1 + 3 * x) / 4, triple = (1 - x) / 4;
    return 2.0 + odd * std::log2(odd) + 3 * triple * std::log2(triple);
}

inline CriterionResult entanglement_spectrum() {
    bool ok = true;
    double worst_spread = 0.0, worst_ratio = 0.0, prev_entropy = 0.0, prev_gap = 0.0;
    std::string why;
    for (int ell = 1; ell <= 8; ++ell) {
        const auto ms = observables::memory_spectrum(observables::memory_state(observables::spectrum_preparation(Method::Fusion, ell, 1)));
        auto ev = ms.joint.eigenvalues;
        std::sort(ev.begin(), ev.end());
        // The degenerate triple is either the lowest or the highest three.
        const double low = ev[2] - ev[0], high = ev[3] - ev[1];
        const double spread = std::min(low, high);
        const double apart = low < high ? ev[3] - ev[2] : ev[1] - ev[0];
        worst_spread = std::max(worst_spread, spread);
        if (!(spread < 1e-10 && apart > 1e-10)) ok = false, why = " triple broken at l=" + std::to_string(ell);
        if (ms.entropy <= prev_entropy || ms.entropy >= 2.0) ok = false, why = " entropy not rising at l=" + std::to_string(ell);
        const double gap = 2.0 - ms.entropy;
        if (ell >= 4) {
            const double ratio = gap / prev_gap;
            const double oracle = werner_gap(ell) / werner_gap(ell - 1);
            worst_ratio = std::max(worst_ratio, std::abs(ratio - oracle));
            if (std::abs(ratio - oracle) > 1e-6) ok = false, why = " gap ratio off at l=" + std::to_string(ell);
        }
        prev_entropy = ms.entropy;
        prev_gap = gap;
    }
    return {5, "entanglement spectrum", ok,
            "max triple spread " + fmt("%.1e", worst_spread) + ", S(8) " + fmt("%.6f", prev_entropy) +
                " bits, gap ratio vs oracle within " + fmt("%.1e", worst_ratio) +
                ", gap ratio at l=8 " + fmt("%.6f", werner_gap(8) / werner_gap(7)) + why};
}

/// Projects the middle pair of |Phi+>_{x a} |Phi+>_{b y} onto each Bell
/// state and reads off the 2x2 map left over between x and y.
inline CriterionResult table_one() {
    Vector phi = Vector::Zero(4);
    phi(0) = phi(3) = 1.0 / std::sqrt(2.0);
    const Vector pairs = linalg::kron(phi, phi); // qubits x=0, a=1 | b=2, y=3
    int matched = 0;
    for (int k = 0; k < 4; ++k) {
        auto pol = OutcomePolicy::forced({k});
        const auto res = sim::bell_measure(sim::StateVector(pairs, std::vector<sim::QubitLabel>(4)), 1, 2, pol);
        const Vector bell = sim::bell_state(static_cast<sim::BellLabel>(k));
        Matrix M = Matrix::Zero(2, 2);
        for (int x = 0; x < 2; ++x)
            for (int y = 0; y < 2; ++y)
                for (int a = 0; a < 2; ++a)
                    for (int b = 0; b < 2; ++b)
                        M(x, y) += std::conj(bell(a + 2 * b)) * res.state.amplitudes()(x + 2 * a + 4 * b + 8 * y);
        M *= std::sqrt(2.0) / M.norm();
        Pauli m, d;
        const auto row = sim::bell_outcome(k);
        if (linalg::match_pauli(M, m) && m == row.inserted && linalg::match_pauli(linalg::pauli_y() * M, d) && d == row.defect)
            ++matched;
    }
    return {6, "Bell fusion table", matched == 4, std::to_string(matched) + "/4 rows reproduced up to phase"};
}

inline CriterionResult symmetries() {
    const auto c = mps::aklt_tensors();
    bool ok = true;
    std::string phases;
    for (int b = 0; b < 4; ++b) {
        const double theta = mps::check_symmetry(c, static_cast<Pauli>(b));
        ok = ok && std::abs(std::sin(theta)) < 1e-12;
        phases += std::cos(theta) > 0 ? '+' : '-';
    }
    const bool inversion = mps::check_inversion(c);
    const auto cl = variants::variant_tensors(variants::VariantKind::Cluster);
    double worst = 0.0;
    for (int b = 0; b < 4; ++b) {
        const Matrix B = linalg::pauli(static_cast<Pauli>(b));
        const Matrix &U = variants::pair_symmetry(static_cast<Pauli>(b));
        if (!linalg::is_unitary(U, 1e-12)) worst = 1.0;
        for (int n = 0; n < 4; ++n) {
            Matrix lhs = Matrix::Zero(2, 2);
            for (int np = 0; np < 4; ++np) lhs += U(n, np) * variants::paired_tensor(cl, np);
            worst = std::max(worst, (lhs - B * variants::paired_tensor(cl, n) * B).norm());
        }
    }
    return {7, "symmetry relations", ok && inversion && worst < 1e-12,
            "phases (I,X,Y,Z) " + phases + ", inversion " + (inversion ? "holds" : "fails") +
                ", cluster pair residual " + fmt("%.1e", worst)};
}

inline CriterionResult projector_baseline() {
    const std::size_t trials = 100000;
    bool ok = true;
    std::string detail;
    for (int N : {1, 2, 4}) {
        const double p = std::pow(0.75, N);
        const auto hits = protocol::projector_successes(N, trials, 4242 + static_cast<std::uint64_t>(N));
        const double z = std::abs(static_cast<double>(hits) - trials * p) / std::sqrt(trials * p * (1 - p));
        ok = ok && z < 3.0;
        detail += (detail.empty() ? "" : ", ") + std::string("N=") + std::to_string(N) + " rate " +
                  fmt("%.5f", static_cast<double>(hits) / trials) + " (" + fmt("%.2f", z) + " sigma)";
    }
    return {8, "projector baseline", ok, detail};
}

inline CriterionResult teleportation() {
    using teleport::Options;
    double worst = 1.0;
    int runs = 0;
    for (int N = 1; N <= 6; ++N)
        for (const Options &opt : {Options{Method::Sequential, CorrectionMode::None}, Options{Method::Fusion, CorrectionMode::Frame}})
            for (const auto &[name, t] : teleport::canonical_targets()) {
                worst = std::min(worst, teleport::teleport(N, t, opt, 11 * static_cast<std::uint64_t>(N), 3).raw_fidelity);
                ++runs;
            }
    // Every site-outcome sequence leaves a Pauli image of the target.
    const auto generic = teleport::Target::from_bloch(1.1, 0.7);
    int paths = 0, pauli = 0;
    for (int N = 1; N <= 4; ++N) {
        int combos = 1;
        for (int k = 0; k < N; ++k) combos *= 3;
        for (int c = 0; c < combos; ++c) {
            std::vector<char> seq;
            for (int k = 0, x = c; k < N; ++k, x /= 3) seq.push_back("xyz"[x % 3]);
            auto fp = OutcomePolicy::sample(0);
            auto sites = teleport::forced_sites(seq);
            const auto path = teleport::run_path(N, generic, {Method::Sequential, CorrectionMode::None}, fp, sites);
            ++paths;
            pauli += linalg::fidelity(path.raw, Vector(linalg::pauli(path.lambda) * generic.psi)) > 1 - 1e-10;
        }
    }
    // Defect absorption: every forced fusion outcome at N=4, all correction modes.
    int absorbed = 0, fused = 0;
    for (int o = 0; o < 4; ++o)
        for (auto mode : {CorrectionMode::None, CorrectionMode::Frame, CorrectionMode::Unitary})
            for (std::uint64_t seed = 0; seed < 4; ++seed) {
                auto fp = OutcomePolicy::forced({o});
                auto sites = OutcomePolicy::sample(seed);
                const auto path = teleport::run_path(4, generic, {Method::Fusion, mode}, fp, sites);
                ++fused;
                absorbed += path.fidelity > 1 - 1e-10 &&
                            linalg::fidelity(path.raw, Vector(linalg::pauli(path.lambda) * generic.psi)) > 1 - 1e-10;
            }
    return {9, "teleportation", worst >= 1 - 1e-10 && pauli == paths && absorbed == fused,
            std::to_string(runs) + " runs min raw fidelity 1-" + fmt("%.1e", 1 - worst) + ", Pauli byproduct " +
                std::to_string(pauli) + "/" + std::to_string(paths) + ", fusion absorption " + std::to_string(absorbed) +
                "/" + std::to_string(fused)};
}

inline Vector ghz_vector(int N) {
    Vector v = Vector::Zero(Eigen::Index{1} << N);
    v(0) = v(v.size() - 1) = 1.0 / std::sqrt(2.0);
    return v;
}

inline Vector cluster_vector(int N) {
    sim::StateVector st(N);
    for (int q = 0; q < N; ++q) st.apply_unitary(sim::gates::h(), std::array<int, 1>{q});
    for (int q = 0; q + 1 < N; ++q) st.apply_unitary(sim::gates::cz(), std::array<int, 2>{q, q + 1});
    return st.amplitudes();
}

inline CriterionResult variant_states() {
    using variants::VariantKind;
    double worst = 1.0;
    int states = 0;
    for (int N = 2; N <= 6; ++N) {
        const int fg = static_cast<int>(variants::detail::ghz_block_sizes(N).size()) - 1;
        for (int c = 0; c < (1 << (2 * fg)); ++c) {
            const auto r = variants::prepare_fusion_variant(VariantKind::Ghz, N, OutcomePolicy::forced(base4(c, fg)));
            worst = std::min(worst, overlap(variants::variant_state(r).amplitudes(), ghz_vector(N)));
            ++states;
        }
        const int fc = (N + 1) / 2 - 1;
        for (int c = 0; c < (1 << (2 * fc)); ++c)
            for (int b = 0; b < 4; ++b) {
                auto boundary = OutcomePolicy::forced({b & 1, b >> 1});
                const auto r = variants::prepare_fusion_variant(VariantKind::Cluster, N, OutcomePolicy::forced(base4(c, fc)),
                                                                true, &boundary);
                worst = std::min(worst, overlap(variants::variant_state(r).amplitudes(), cluster_vector(N)));
                ++states;
            }
    }
    return {10, "GHZ and cluster variants", worst >= 1 - 1e-10,
            std::to_string(states) + " forced GHZ/cluster preparations, N=2..6, min fidelity 1-" + fmt("%.1e", 1 - worst)};
}

inline CriterionResult noise_reproduction() {
    const auto model = noise::decay_benchmark_model();
    const auto seq = noise::decay_length(Method::Sequential, 6, model, 100000, 61);
    const auto fus = noise::decay_length(Method::Fusion, 6, model, 100000, 61);
    const bool direction = fus.fit.length > seq.fit.length;

    const int N = 6;
    const double p = 0.05;
    const double exact = observables::string_order(protocol::prepare_sequential(N), 1, N);
    NoiseModel flips;
    flips.p_ro = p;
    const auto shots = noise::run_noisy(Method::Sequential, N, flips, 100000, 62);
    const double raw = std::abs(observables::string_order(shots, 1, N).value - exact);
    const double mitigated = std::abs(noise::mitigated_string_order(shots, 1, N, p) - exact);
    const bool mitigation = raw >= 5 * mitigated;
    return {11, "noise reproduction", direction && mitigation,
            "decay length sequential " + fmt("%.2f", seq.fit.length) + " vs fusion " + fmt("%.2f", fus.fit.length) +
                (direction ? " (fusion longer)" : " (fusion NOT longer)") + "; mitigation bias " + fmt("%.4f", raw) +
                " -> " + fmt("%.4f", mitigated) + " (" + fmt("%.1f", raw / std::max(mitigated, 1e-300)) + "x)"};
}

inline CriterionResult mcweeny() {
    std::mt19937_64 rng(12);
    std::normal_distribution<double> g;
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        Matrix a(4, 4);
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) a(i, j) = cplx(g(rng), g(rng));
        Matrix rho = a * a.adjoint();
        rho /= rho.trace().real();
        const auto r = linalg::mcweeny_purify(linalg::DensityMatrix(rho));
        worst = std::max(worst, (rho * r.rho.matrix() - r.rho.matrix() * rho).norm());
    }
    Matrix mix = Matrix::Zero(2, 2);
    mix(0, 0) = 0.9;
    mix(1, 1) = 0.1;
    const auto r = linalg::mcweeny_purify(linalg::DensityMatrix(mix), 1e-12);
    const double idem = (r.rho.matrix() * r.rho.matrix() - r.rho.matrix()).norm();
    const double f = std::abs(r.rho.matrix()(0, 0));
    return {12, "McWeeny purification", worst < 1e-9 && r.rank_one && idem < 1e-12 && f > 1 - 1e-12,
            "max commutator " + fmt("%.1e", worst) + ", 0.9/0.1 mixture pure after " + std::to_string(r.iterations) +
                " iterations (||rho^2-rho|| " + fmt("%.1e", idem) + ")"};
}

} // namespace detail

using Criterion = std::function<CriterionResult()>;

inline std::vector<Criterion> criteria() {
    return {detail::fusion_determinism, detail::constant_depth,   detail::string_order,       detail::correlation_length,
            detail::entanglement_spectrum, detail::table_one,    detail::symmetries,         detail::projector_baseline,
            detail::teleportation,      detail::variant_states,   detail::noise_reproduction, detail::mcweeny};
}

inline std::string format_line(const CriterionResult &r) {
    char head[96];
    std::snprintf(head, sizeof head, "%s %2d  %-26s", r.pass ? "PASS" : "FAIL", r.id, r.name.c_str());
    char tail[32];
    std::snprintf(tail, sizeof tail, " [%.1fs]", r.seconds);
    return head + r.detail + tail;
}

/// Runs the selected criteria (all when `only` is empty) and prints one line
/// per criterion as it finishes.
inline std::vector<CriterionResult> run(std::ostream &os, const std::set<int> &only = {}) {
    std::vector<CriterionResult> out;
    const auto all = criteria();
    for (std::size_t k = 0; k < all.size(); ++k) {
        const int id = static_cast<int>(k) + 1;
        if (!only.empty() && !only.count(id)) continue;
        const auto start = std::chrono::steady_clock::now();
        CriterionResult r;
        try {
            r = all[k]();
        } catch (const std::exception &e) {
            r = {id, "criterion " + std::to_string(id), false, std::string("error: ") + e.what()};
        }
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        os << format_line(r) << std::endl;
        out.push_back(std::move(r));
    }
    return out;
}

inline bool all_passed(const std::vector<CriterionResult> &rs) {
    return std::all_of(rs.begin(), rs.end(), [](const CriterionResult &r) { return r.pass; });
}

} // namespace aklt::selftest
