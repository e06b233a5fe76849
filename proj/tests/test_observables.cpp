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

#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "aklt/observables.hpp"

namespace {

using aklt::Matrix;
using aklt::Vector;
using aklt::linalg::DensityMatrix;
using aklt::sim::OutcomePolicy;
namespace mps = aklt::mps;
namespace obs = aklt::observables;
namespace protocol = aklt::protocol;
using protocol::BoundaryTarget;
using protocol::Method;

TEST(StringOrder, LongOpenChainApproachesInfiniteValue) {
    const auto c = mps::aklt_tensors();
    const double inf = mps::transfer_matrix_observable(c, mps::Observable::StringOrder, 1, 1000, mps::Geometry::infinite());
    EXPECT_NEAR(inf, -4.0 / 9.0, 1e-12);
    EXPECT_NEAR(obs::string_order_traced_boundaries(c, 14, 1, 14), -4.0 / 9.0, 2e-3);
    EXPECT_NEAR(obs::string_order_traced_boundaries(c, 14, 3, 9), -4.0 / 9.0, 2e-3);
}

TEST(StringOrder, FlatAcrossStartingSite) {
    const auto r = protocol::prepare_sequential(6);
    for (int ell = 2; ell <= 5; ++ell) {
        const double first = obs::string_order(r, 1, ell);
        for (int i = 2; i + ell - 1 <= 6; ++i) EXPECT_NEAR(obs::string_order(r, i, ell), first, 1e-10);
    }
}

TEST(StringOrder, EdgeToEdgeMatchesTransferOracle) {
    const auto c = mps::aklt_tensors();
    for (int L = 0; L < 2; ++L)
        for (int R = 0; R < 2; ++R) {
            auto r = protocol::prepare_sequential(6);
            protocol::enforce_boundary(r, BoundaryTarget::outcomes(L, R));
            const auto g = mps::Geometry::open(6, Vector::Unit(2, L), r.right_map * Vector::Unit(2, R));
            const double oracle = mps::transfer_matrix_observable(c, mps::Observable::StringOrder, 1, 6, g);
            EXPECT_NEAR(obs::string_order(r, 1, 6), oracle, 1e-10);
        }
}

TEST(StringOrder, FrameFlipsRestoreCorrectedValue) {
    for (int o = 0; o < 4; ++o) {
        auto frame = protocol::fusion_pipeline(6, OutcomePolicy::forced({o, 3}), protocol::CorrectionMode::Frame,
                                               BoundaryTarget::outcomes(0, 0));
        auto unitary = protocol::fusion_pipeline(6, OutcomePolicy::forced({o, 3}), protocol::CorrectionMode::Unitary,
                                                 BoundaryTarget::outcomes(0, 0));
        EXPECT_NEAR(obs::string_order(frame, 1, 6), obs::string_order(unitary, 1, 6), 1e-10) << o;
        EXPECT_NEAR(obs::string_order(frame, 2, 4), obs::string_order(unitary, 2, 4), 1e-10) << o;
    }
}

TEST(StringOrder, SpanErrors) {
    const auto r = protocol::prepare_sequential(3);
    EXPECT_THROW(obs::string_order(r, 2, 3), aklt::DimensionError);
    EXPECT_THROW(obs::string_order(r, 0, 2), aklt::DimensionError);
    EXPECT_THROW(obs::string_order(r, 1, 1), aklt::DimensionError);
    aklt::ShotRecord empty = aklt::ShotRecord::layout(3, true);
    EXPECT_THROW(obs::string_order(empty, 1, 3), aklt::Error);
}

TEST(StringOrder, ShotEstimatesConvergeToExact) {
    const auto c = mps::aklt_tensors();
    for (int N = 2; N <= 6; ++N) {
        const double exact = obs::string_order_traced_boundaries(c, N, 1, N);
        for (auto method : {Method::Sequential, Method::Fusion}) {
            const auto r = protocol::sampling_circuit(method, N);
            const auto est = obs::string_order(protocol::sample_shots(r, 100000, 100 + N), 1, N);
            EXPECT_LT(std::abs(est.value - exact), 4 * est.std_error) << "N=" << N << " " << protocol::method_name(method);
        }
    }
}

TEST(PostSelection, NoiselessShotsAreAllKept) {
    const auto r = protocol::sampling_circuit(Method::Fusion, 5);
    const auto s = protocol::sample_shots(r, 5000, 2);
    EXPECT_EQ(obs::postselect_spin1(s).rejection_rate, 0.0);
    EXPECT_EQ(obs::postselect_boundary(s).rejection_rate, 0.0);
    EXPECT_EQ(obs::postselect_boundary(s).shots.size(), 5000u);
}

TEST(PostSelection, AllSingletShotsAreRejected) {
    auto s = aklt::ShotRecord::layout(3, false);
    s.bits.assign(10, 0x3Fu);
    const auto f = obs::postselect_spin1(s);
    EXPECT_EQ(f.rejection_rate, 1.0);
    EXPECT_EQ(f.shots.size(), 0u);
    EXPECT_THROW(obs::postselect_boundary(s), aklt::Error);
}

// Closed-form rejection under independent readout flips: a site coded c
// reads |11> with probability p^2 (c = 00) or p(1-p) (c = 01, 10).
TEST(PostSelection, ReadoutFlipRejectionMatchesBinomialModel) {
    const int N = 4;
    const double p = 0.02;
    const auto exact = protocol::prepared_state(protocol::prepare_sequential(N));
    double accept = 0.0;
    const auto &a = exact.amplitudes();
    for (Eigen::Index idx = 0; idx < a.size(); ++idx) {
        double keep = std::norm(a(idx));
        for (int k = 0; k < N; ++k) {
            const int code = static_cast<int>((idx >> (2 * k)) & 3);
            keep *= 1.0 - (code == 0 ? p * p : p * (1 - p));
        }
        accept += keep;
    }
    const double expected = 1.0 - accept;
    const std::size_t shots = 100000;
    aklt::NoiseModel m;
    m.p_ro = p;
    const auto s = protocol::sample_shots(protocol::sampling_circuit(Method::Sequential, N), shots, 21, m);
    const double rate = obs::postselect_spin1(s).rejection_rate;
    EXPECT_LT(std::abs(rate - expected), 3 * std::sqrt(expected * (1 - expected) / shots));
}

TEST(Tomography, ExactExpectationsReproducePureState) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g;
    Vector psi(8);
    for (auto &x : psi) x = {g(rng), g(rng)};
    psi.normalize();
    const auto rho = DensityMatrix::pure(psi);
    const auto res = obs::tomography(obs::exact_pauli_expectations(rho), 3);
    EXPECT_LT((res.rho.matrix() - rho.matrix()).norm(), 1e-12);
    EXPECT_NEAR(res.rho.matrix().trace().real(), 1.0, 1e-14);
}

TEST(Tomography, IncompleteSetsAreRejected) {
    obs::TomographyData d{2, {}};
    d.counts.assign(8, std::vector<std::uint64_t>(4, 1));
    EXPECT_THROW(obs::pauli_expectations(d), aklt::ConfigError);
    d.counts.assign(9, std::vector<std::uint64_t>(4, 1));
    d.counts[4].assign(4, 0);
    EXPECT_THROW(obs::pauli_expectations(d), aklt::ConfigError);
    std::vector<double> short_list(15, 0.0);
    EXPECT_THROW(obs::linear_inversion(short_list, 2), aklt::ConfigError);
}

TEST(Tomography, SampledPeriodicPairPurifiesToReference) {
    auto r = protocol::prepare_sequential(2, protocol::MemoryMode::Dual);
    protocol::enforce_boundary(r, BoundaryTarget::subspace(false));
    const auto st = protocol::prepared_state(r);
    ASSERT_EQ(st.num_qubits(), 4);
    const std::array<int, 4> targets{0, 1, 2, 3};
    const auto data = obs::sample_tomography(st, targets, 100000, 17);
    obs::TomographyOptions opt;
    opt.project_spin1 = true;
    opt.spin1_pairs = {{0, 1}, {2, 3}};
    opt.purify = true;
    const auto res = obs::tomography(data, opt);
    EXPECT_NEAR(res.rho.matrix().trace().real(), 1.0, 1e-12);
    EXPECT_GE(aklt::linalg::fidelity(res.rho, st.amplitudes()), 0.999);
    EXPECT_GT(res.likelihood, 0.9);
    EXPECT_LT(res.rejection_rate, 0.01);
    // Unprocessed inversion still has unit trace.
    EXPECT_NEAR(obs::tomography(data).rho.matrix().trace().real(), 1.0, 1e-12);
}

TEST(Tomography, CircuitReplayMatchesExactSampling) {
    // Noise-free circuit replay estimates the same memory state.
    const auto dry = obs::spectrum_preparation(Method::Sequential, 3, 0, false);
    const std::array<int, 2> mem{dry.mem_left, dry.mem_right};
    const auto res = obs::tomography(obs::sample_tomography(dry, mem, 20000, 3, aklt::NoiseModel{}));
    const auto exact = obs::memory_state(obs::spectrum_preparation(Method::Sequential, 3));
    EXPECT_LT((res.rho.matrix() - exact.matrix()).norm(), 0.03);
}

// Memory-pair state from powers of the transfer matrix sum_m A^m (x) conj(A^m)
// acting on the singlet right boundary, independent of any circuit.
DensityMatrix transfer_oracle_pair(int ell) {
    const auto c = mps::aklt_tensors();
    Matrix E = Matrix::Zero(4, 4);
    for (const auto &a : c.A) E += aklt::linalg::kron(a, Matrix(a.conjugate()));
    Matrix P = Matrix::Identity(4, 4);
    for (int k = 0; k < ell; ++k) P = P * E;
    // rho[(L,R),(L',R')] with L the least significant qubit.
    Matrix rho = Matrix::Zero(4, 4);
    for (int L = 0; L < 2; ++L)
        for (int Lp = 0; Lp < 2; ++Lp)
            for (int R = 0; R < 2; ++R)
                for (int Rp = 0; Rp < 2; ++Rp)
                    for (int b = 0; b < 2; ++b)
                        for (int bp = 0; bp < 2; ++bp)
                            rho(L + 2 * R, Lp + 2 * Rp) += P(2 * L + Lp, 2 * b + bp) * c.S(b, R) * std::conj(c.S(bp, Rp));
    return DensityMatrix::normalized(rho);
}

TEST(MemorySpectrum, MatchesTransferOracle) {
    for (int ell = 1; ell <= 8; ++ell) {
        const auto oracle = transfer_oracle_pair(ell);
        const auto prepared = obs::memory_state(obs::spectrum_preparation(Method::Sequential, ell));
        EXPECT_LT((oracle.matrix() - prepared.matrix()).norm(), 1e-12) << ell;
    }
}

// The entropy gap 2 - S shrinks by the oracle ratio, which tends to 1/9.
TEST(MemorySpectrum, EntropyGapRatioFollowsOracle) {
    auto gap = [](const DensityMatrix &rho) { return 2.0 - aklt::linalg::spectrum(rho).entropy_base2; };
    for (int ell = 4; ell <= 8; ++ell) {
        const double oracle = gap(transfer_oracle_pair(ell)) / gap(transfer_oracle_pair(ell - 1));
        const double measured = gap(obs::memory_state(obs::spectrum_preparation(Method::Fusion, ell, 1))) /
                                gap(obs::memory_state(obs::spectrum_preparation(Method::Fusion, ell - 1, 1)));
        EXPECT_NEAR(measured, oracle, 1e-6) << ell;
        if (ell >= 6) {
            EXPECT_NEAR(measured, 1.0 / 9.0, 1e-3) << ell;
        }
    }
}

TEST(MemorySpectrum, WernerStructure) {
    double prev_entropy = 0.0, prev_gap = 0.0, prev_dev = 0.0;
    for (int ell = 1; ell <= 8; ++ell) {
        for (auto method : {Method::Sequential, Method::Fusion}) {
            const auto ms = obs::memory_spectrum(obs::memory_state(obs::spectrum_preparation(method, ell, ell)));
            const auto &ev = ms.joint.eigenvalues;
            // Three degenerate eigenvalues: 1/4 - x/4 with x = (-1/3)^l, and 1/4 + 3x/4.
            const double x = std::pow(-1.0 / 3.0, ell);
            std::vector<double> sorted = ev;
            std::sort(sorted.begin(), sorted.end());
            const double odd = (1 + 3 * x) / 4, triple = (1 - x) / 4;
            std::vector<double> expect{odd, triple, triple, triple};
            std::sort(expect.begin(), expect.end());
            for (int k = 0; k < 4; ++k) EXPECT_NEAR(sorted[static_cast<std::size_t>(k)], expect[static_cast<std::size_t>(k)], 1e-12);
            const double dev = ms.conditioned_mean[0] - 0.5;
            EXPECT_NEAR(dev, 0.5 * std::pow(3.0, -ell), 1e-12);
            if (method != Method::Sequential) continue;
            EXPECT_GT(ms.entropy, prev_entropy);
            EXPECT_LT(ms.entropy, 2.0);
            const double gap = 2.0 - ms.entropy;
            if (ell >= 2) {
                EXPECT_LT(gap, prev_gap);
            }
            if (ell >= 3) {
                EXPECT_NEAR(dev / prev_dev, 1.0 / 3.0, 1e-6);
            }
            prev_entropy = ms.entropy;
            prev_gap = gap;
            prev_dev = dev;
        }
    }
}

TEST(MemorySpectrum, ConsumedMemoriesThrow) {
    auto r = protocol::prepare_sequential(3);
    protocol::enforce_boundary(r, BoundaryTarget::sample(1));
    EXPECT_THROW(obs::memory_state(r), aklt::ConfigError);
}

// The right memory after l sites carries the entanglement of the cut after
// site l in any longer chain.
TEST(MemorySpectrum, RightMemoryMatchesPhysicalCut) {
    const int N = 7;
    const auto full = protocol::prepared_state(protocol::prepare_sequential(N));
    for (int ell = 1; ell < N; ++ell) {
        const auto part = protocol::prepared_state(protocol::prepare_sequential(ell));
        const std::array<int, 1> right{2 * ell + 1};
        const auto mem = obs::schmidt_spectrum(part, right);
        std::vector<int> left{2 * N};
        for (int q = 0; q < 2 * ell; ++q) left.push_back(q);
        const auto cut = obs::schmidt_spectrum(full, left);
        for (std::size_t k = 0; k < 2; ++k) EXPECT_NEAR(mem.eigenvalues[k], cut.eigenvalues[k], 1e-10);
        for (std::size_t k = 2; k < cut.eigenvalues.size(); ++k) EXPECT_NEAR(cut.eigenvalues[k], 0.0, 1e-10);
    }
}

// Parametric bootstrap over the exact outcome distribution sets the scale.
TEST(MemorySpectrum, TomographyAgreesWithExactWithinSamplingError) {
    for (int ell : {1, 2, 4}) {
        const auto exact = obs::memory_state(obs::spectrum_preparation(Method::Sequential, ell));
        const auto ms = obs::memory_spectrum(exact);
        const std::uint64_t shots = 100000;
        auto estimate = [&](std::uint64_t seed) {
            return obs::memory_spectrum(obs::tomography(obs::sample_tomography(exact, shots, seed)).rho).conditioned_mean[0];
        };
        std::vector<double> boot;
        for (std::uint64_t b = 0; b < 40; ++b) boot.push_back(estimate(1000 + b));
        double mean = 0, var = 0;
        for (double v : boot) mean += v / boot.size();
        for (double v : boot) var += (v - mean) * (v - mean) / (boot.size() - 1);
        const double sigma = std::sqrt(var);
        EXPECT_LT(std::abs(estimate(7) - ms.conditioned_mean[0]), 3 * sigma) << ell;
    }
}

TEST(Fit, RecoversSyntheticModel) {
    std::vector<obs::SpectrumPoint> pts;
    for (int l = 1; l <= 8; ++l) {
        const double e = 0.45 * std::exp(-l / 0.9102);
        pts.push_back({static_cast<double>(l), 0.5 + e, 0.5 - e});
    }
    const auto f = obs::fit_correlation_length(pts);
    EXPECT_NEAR(f.xi, 0.9102, 1e-6);
    EXPECT_NEAR(f.A, 0.45, 1e-6);
    EXPECT_LT(f.residual, 1e-20);
}

TEST(Fit, ExactSpectraGiveAkltCorrelationLength) {
    std::vector<obs::SpectrumPoint> pts;
    for (int l = 1; l <= 8; ++l) {
        const auto ms = obs::memory_spectrum(obs::memory_state(obs::spectrum_preparation(Method::Fusion, l, 3)));
        pts.push_back({static_cast<double>(l), ms.conditioned_mean[0], ms.conditioned_mean[1]});
    }
    const auto f = obs::fit_correlation_length(pts);
    EXPECT_LT(std::abs(f.xi - 1.0 / std::log(3.0)) / (1.0 / std::log(3.0)), 5e-3);
}

TEST(Fit, DegenerateInputsThrow) {
    std::vector<obs::SpectrumPoint> one{{1, 0.7, 0.3}, {1, 0.7, 0.3}, {1, 0.7, 0.3}};
    EXPECT_THROW(obs::fit_correlation_length(one), aklt::ConfigError);
    std::vector<obs::SpectrumPoint> flat{{1, 0.5, 0.5}, {2, 0.5, 0.5}, {3, 0.5, 0.5}};
    EXPECT_THROW(obs::fit_correlation_length(flat), aklt::NumericalError);
}

TEST(Csv, Schemas) {
    std::ostringstream a, b;
    obs::write_string_order_csv(a, {{"fusion", 6, 1, 6, -0.4444, 0.002, 100000, 7}});
    EXPECT_EQ(a.str(), "method,N,i,l,value,stderr,shots,seed\nfusion,6,1,6,-0.4444,0.002,100000,7\n");
    obs::write_spectrum_csv(b, {{"sequential", 2, 0, 1.0}});
    EXPECT_EQ(b.str(), "method,l,eigenvalue_index,lambda,minus_ln_lambda\nsequential,2,0,1,0\n");
}

} // namespace
