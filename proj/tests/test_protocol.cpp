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
#include <vector>

#include <gtest/gtest.h>

#include "aklt/protocol.hpp"

namespace {

using aklt::cplx;
using aklt::Matrix;
using aklt::Vector;
using aklt::linalg::Pauli;
using aklt::sim::OutcomePolicy;
using aklt::sim::StateVector;
namespace mps = aklt::mps;
namespace protocol = aklt::protocol;
using protocol::BoundaryTarget;
using protocol::CorrectionMode;
using protocol::MemoryMode;

constexpr double kFidTol = 1e-10;

std::vector<int> digits(int code, int count) {
    std::vector<int> out;
    for (int k = 0; k < count; ++k, code /= 4) out.push_back(code % 4);
    return out;
}

TEST(SiteUnitary, ColumnsMatchTensors) {
    const Matrix U = protocol::build_site_unitary();
    EXPECT_TRUE(aklt::linalg::is_unitary(U, 1e-12));
    // Input |1>_mem |0bar>: local index 1. Output sqrt(2/3)|0>|+> + sqrt(1/3)|1>|0bar>.
    Vector expect = Vector::Zero(8);
    expect(0 + 2 * 2) = std::sqrt(2.0 / 3.0);
    expect(1 + 2 * 0) = std::sqrt(1.0 / 3.0);
    EXPECT_LT((U.col(1) - expect).norm(), 1e-14);
    // Never the encoded singlet from |0bar> inputs.
    for (int j = 0; j < 2; ++j) {
        EXPECT_EQ(U(6, j), cplx(0));
        EXPECT_EQ(U(7, j), cplx(0));
    }
    EXPECT_NEAR((U.leftCols(2).adjoint() * U.leftCols(2) - Matrix::Identity(2, 2)).norm(), 0.0, 1e-14);
    EXPECT_EQ((U - protocol::build_site_unitary()).norm(), 0.0);
}

TEST(SiteUnitary, CompletionColumnsAreCanonical) {
    const Matrix U = protocol::build_site_unitary();
    for (int col = 2; col < 8; ++col) {
        for (int i = 0; i < 8; ++i) {
            if (std::abs(U(i, col)) > 1e-12) {
                EXPECT_NEAR(U(i, col).imag(), 0.0, 1e-14);
                EXPECT_GT(U(i, col).real(), 0.0);
                break;
            }
        }
    }
}

TEST(Sequential, MatchesReferenceSingleAndDual) {
    for (int N = 1; N <= 5; ++N) {
        for (auto mode : {MemoryMode::Single, MemoryMode::Dual}) {
            const auto r = protocol::prepare_sequential(N, mode);
            EXPECT_EQ(r.num_qubits(), 2 * N + 2);
            EXPECT_GT(protocol::reference_fidelity(r), 1 - kFidTol) << "N=" << N;
        }
    }
}

TEST(Sequential, SingleAndDualAgreeAfterSameBoundary) {
    for (int N = 1; N <= 5; ++N)
        for (int L = 0; L < 2; ++L)
            for (int R = 0; R < 2; ++R) {
                auto a = protocol::prepare_sequential(N, MemoryMode::Single);
                auto b = protocol::prepare_sequential(N, MemoryMode::Dual);
                protocol::enforce_boundary(a, BoundaryTarget::outcomes(L, R));
                protocol::enforce_boundary(b, BoundaryTarget::outcomes(L, R));
                EXPECT_GT(aklt::sim::fidelity(protocol::prepared_state(a), protocol::prepared_state(b)), 1 - kFidTol);
            }
}

TEST(Sequential, DualWithSingletProjectionIsPeriodic) {
    auto r = protocol::prepare_sequential(2, MemoryMode::Dual);
    protocol::enforce_boundary(r, BoundaryTarget::subspace(false));
    const auto st = protocol::prepared_state(r);
    EXPECT_GT(aklt::sim::fidelity(st, mps::contract_periodic(mps::aklt_tensors(), 2)), 1 - kFidTol);
}

TEST(Sequential, DualRejectsTensorsWithoutInversionSymmetry) {
    auto c = mps::aklt_tensors();
    c.A[0](0, 0) += 1e-3;
    EXPECT_THROW(protocol::prepare_sequential(3, MemoryMode::Dual, protocol::MemoryInit::singlet(), true, c),
                 aklt::NumericalError);
}

TEST(Sequential, GeneralMemoryInitFollowsLambda) {
    Matrix lambda(2, 2);
    lambda << 0.5, cplx(0, 0.5), 0.5, -0.5;
    protocol::MemoryInit init{lambda};
    const auto r = protocol::prepare_sequential(3, MemoryMode::Single, init);
    const auto ref = mps::contract_with_memories(mps::aklt_tensors(), 3, lambda);
    EXPECT_GT(aklt::sim::fidelity(protocol::prepared_state(r), ref), 1 - kFidTol);
    protocol::MemoryInit bad{Matrix::Identity(2, 2)};
    EXPECT_THROW(protocol::prepare_sequential(2, MemoryMode::Single, bad), aklt::NumericalError);
}

TEST(Fusion, ResourceCounts) {
    for (int N = 2; N <= 8; ++N) {
        auto pol = OutcomePolicy::sample(1);
        const auto r = protocol::prepare_fusion(N, pol, false);
        EXPECT_EQ(r.num_qubits(), 3 * N + (N % 2)) << N;
        EXPECT_EQ(static_cast<int>(r.defects.entries.size()), (N - 1) / 2) << N;
        for (std::size_t k = 1; k < r.defects.entries.size(); ++k)
            EXPECT_LT(r.defects.entries[k - 1].bond, r.defects.entries[k].bond);
    }
}

TEST(Fusion, AllSingletOutcomesNeedNoCorrection) {
    auto r = protocol::prepare_fusion(4, OutcomePolicy::forced({3}));
    EXPECT_TRUE(r.defects.trivial());
    EXPECT_GT(protocol::reference_fidelity(r), 1 - kFidTol);
    auto seq = protocol::prepare_sequential(4, MemoryMode::Single);
    EXPECT_GT(aklt::sim::fidelity(protocol::prepared_state(r), protocol::prepared_state(seq)), 1 - kFidTol);
}

TEST(Fusion, PhiPlusRecordsYDefect) {
    auto r = protocol::prepare_fusion(4, OutcomePolicy::forced({0}));
    ASSERT_EQ(r.defects.entries.size(), 1u);
    EXPECT_EQ(r.defects.entries[0].bond, 2);
    EXPECT_EQ(r.defects.entries[0].defect, Pauli::Y);
    EXPECT_EQ(r.defects.entries[0].label, aklt::sim::BellLabel::PhiPlus);
    EXPECT_LT(protocol::reference_fidelity(r), 0.99);
    protocol::correct_defects(r, CorrectionMode::Unitary);
    EXPECT_GT(protocol::reference_fidelity(r), 1 - kFidTol);
}

TEST(Fusion, ForcedListLengthMismatchThrows) {
    EXPECT_THROW(protocol::prepare_fusion(4, OutcomePolicy::forced({0, 1})), aklt::ConfigError);
    EXPECT_THROW(protocol::prepare_fusion(6, OutcomePolicy::forced({0})), aklt::ConfigError);
}

TEST(Fusion, InterChainBellOutcomesAreUniform) {
    // Two independent blocks: probability of each Bell outcome before fusing.
    auto pol = OutcomePolicy::sample(0);
    auto r = protocol::prepare_blocks(4, false, pol);
    const std::array<int, 2> pair{r.blocks[0].right, r.blocks[1].left};
    const auto probs = r.session.reg().probabilities(aklt::sim::bell_projectors(), pair);
    for (double p : probs) EXPECT_NEAR(p, 0.25, 1e-10);
}

TEST(Fusion, SampledOutcomeDistributionUniform) {
    auto pol = OutcomePolicy::sample(0);
    const auto r = protocol::prepare_fusion(4, pol, false);
    aklt::sim::Executor ex(r.session.circuit());
    const std::size_t shots = 100000;
    std::array<int, 4> counts{};
    for (const auto &s : ex.run(shots, 99, aklt::NoiseModel{})) ++counts[static_cast<std::size_t>(s.records[0])];
    const double sigma = std::sqrt(shots * 0.25 * 0.75);
    for (int c : counts) EXPECT_LT(std::abs(c - shots * 0.25), 3 * sigma);
}

TEST(Fusion, DeterminismAllForcedOutcomes) {
    for (int N = 2; N <= 8; ++N) {
        const int f = (N - 1) / 2;
        const int combos = 1 << (2 * f);
        for (int c = 0; c < combos; ++c) {
            auto pol = OutcomePolicy::forced(digits(c, f));
            const auto boundary = BoundaryTarget::outcomes(c % 2, (c / 2 + N) % 2);
            const auto r = protocol::fusion_pipeline(N, pol, CorrectionMode::Unitary, boundary);
            ASSERT_GT(protocol::reference_fidelity(r), 1 - kFidTol) << "N=" << N << " combo=" << c;
        }
    }
}

TEST(Fusion, SingleDefectsAndIdentityAreHandled) {
    for (int o = 0; o < 4; ++o) {
        auto r = protocol::prepare_fusion(4, OutcomePolicy::forced({o}));
        const auto before = r.session.circuit().instructions().size();
        protocol::correct_defects(r, CorrectionMode::Unitary);
        EXPECT_GT(protocol::reference_fidelity(r), 1 - kFidTol);
        EXPECT_GT(r.session.circuit().instructions().size(), before);
    }
    auto r = protocol::prepare_fusion(4, OutcomePolicy::forced({0}));
    protocol::correct_defects(r, CorrectionMode::Frame);
    EXPECT_THROW(protocol::correct_defects(r, CorrectionMode::Unitary), aklt::ConfigError);
}

// Frame mode: the uncorrected state, read out with swapped site labels,
// has exactly the Z-basis distribution of the corrected reference.
TEST(Fusion, FrameModeReproducesDiagonalStatistics) {
    for (int N : {3, 4, 5, 6}) {
        const int f = (N - 1) / 2;
        for (int c = 0; c < (1 << (2 * f)); ++c)
            for (int L = 0; L < 2; ++L) {
                auto pol = OutcomePolicy::forced(digits(c, f));
                auto r = protocol::fusion_pipeline(N, pol, CorrectionMode::Frame, BoundaryTarget::outcomes(L, 1));
                const auto st = protocol::prepared_state(r);
                const auto ref = protocol::reference_state(r);
                const auto &recs = r.session.records();
                Eigen::VectorXd relabeled = Eigen::VectorXd::Zero(st.amplitudes().size());
                for (Eigen::Index i = 0; i < st.amplitudes().size(); ++i) {
                    auto j = static_cast<std::size_t>(i);
                    for (int k = 1; k <= N; ++k) {
                        if (!aklt::protocol::detail::swaps_labels(protocol::frame_for_site(r, recs, k))) continue;
                        const std::size_t b0 = (j >> (2 * (k - 1))) & 1u, b1 = (j >> (2 * (k - 1) + 1)) & 1u;
                        j &= ~(std::size_t{3} << (2 * (k - 1)));
                        j |= (b1 | (b0 << 1)) << (2 * (k - 1));
                    }
                    relabeled(static_cast<Eigen::Index>(j)) += std::norm(st.amplitudes()(i));
                }
                const Eigen::VectorXd target = ref.amplitudes().cwiseAbs2();
                EXPECT_LT((relabeled - target).cwiseAbs().maxCoeff(), 1e-12) << "N=" << N << " combo=" << c;
                EXPECT_EQ(protocol::boundary_outcomes(r).first, L);
            }
    }
}

double edge_string_order(const aklt::ShotRecord &s, double *se) {
    double sum = 0, sq = 0;
    for (std::size_t k = 0; k < s.size(); ++k) {
        int v = s.site_sz(k, 1) * s.site_sz(k, s.N);
        for (int j = 2; j < s.N; ++j) v *= (s.site_sz(k, j) == 0 ? 1 : -1);
        sum += v;
        sq += v * v;
    }
    const double n = static_cast<double>(s.size()), mean = sum / n;
    *se = std::sqrt(std::max(sq / n - mean * mean, 0.0) / n);
    return mean;
}

TEST(Fusion, FrameAndUnitaryShotEstimatesAgree) {
    const auto frame = protocol::sampling_circuit(protocol::Method::Fusion, 6, CorrectionMode::Frame);
    const auto unitary = protocol::sampling_circuit(protocol::Method::Fusion, 6, CorrectionMode::Unitary);
    double se_f, se_u;
    const double f = edge_string_order(protocol::sample_shots(frame, 100000, 3), &se_f);
    const double u = edge_string_order(protocol::sample_shots(unitary, 100000, 4), &se_u);
    EXPECT_LT(std::abs(f - u), 3 * std::hypot(se_f, se_u));
}

TEST(Fusion, ShotsConserveBoundaryMagnetization) {
    for (auto method : {protocol::Method::Sequential, protocol::Method::Fusion}) {
        const auto r = protocol::sampling_circuit(method, 5);
        const auto s = protocol::sample_shots(r, 2000, 11);
        for (std::size_t k = 0; k < s.size(); ++k) {
            int sz = 0;
            for (int j = 1; j <= s.N; ++j) {
                ASSERT_NE(s.site_code(k, j), 3);
                sz += s.site_sz(k, j);
            }
            EXPECT_EQ(sz, 1 - s.memory_left(k) - s.memory_right(k));
        }
    }
}

TEST(Depth, FusionConstantSequentialIncreasing) {
    int fusion_depth = -1, last_seq = -1;
    for (int N = 2; N <= 8; ++N) {
        auto pol = OutcomePolicy::sample(0);
        auto f = protocol::prepare_fusion(N, pol, false);
        protocol::correct_defects(f, CorrectionMode::Frame);
        protocol::enforce_boundary(f, BoundaryTarget::sample(0));
        if (fusion_depth < 0) fusion_depth = f.depth();
        EXPECT_EQ(f.depth(), fusion_depth) << N;
        auto s = protocol::prepare_sequential(N, MemoryMode::Single, protocol::MemoryInit::singlet(), false);
        protocol::enforce_boundary(s, BoundaryTarget::sample(0));
        EXPECT_GT(s.depth(), last_seq);
        EXPECT_EQ(s.depth(), N + 4);
        last_seq = s.depth();
    }
    EXPECT_EQ(fusion_depth, 5);
    auto p4 = OutcomePolicy::sample(0), p8 = OutcomePolicy::sample(0);
    EXPECT_EQ(protocol::prepare_fusion(4, p4, false).depth(), protocol::prepare_fusion(8, p8, false).depth());
}

TEST(Boundary, AllZOutcomesPossible) {
    for (int N = 2; N <= 6; ++N) {
        const auto r = protocol::prepare_sequential(N);
        const auto p = protocol::boundary_distribution(r);
        double sum = 0;
        for (double x : p) {
            EXPECT_GT(x, 1e-3);
            sum += x;
        }
        EXPECT_NEAR(sum, 1.0, 1e-10);
    }
}

TEST(Boundary, EdgeBellOutcomesApproachQuarter) {
    double prev = 1.0;
    for (int N = 2; N <= 9; ++N) {
        const auto r = protocol::prepare_sequential(N, MemoryMode::Dual);
        const std::array<int, 2> w{r.mem_left, r.mem_right};
        auto reg = r.session.reg();
        const auto p = reg.probabilities(aklt::sim::bell_projectors(), w);
        double dev = 0;
        for (double x : p) dev = std::max(dev, std::abs(x - 0.25));
        EXPECT_LT(dev, prev);
        prev = dev;
    }
    EXPECT_LT(prev, 1e-3);
}

TEST(Boundary, EnforcementErrors) {
    auto r = protocol::prepare_sequential(3);
    protocol::enforce_boundary(r, BoundaryTarget::outcomes(0, 1));
    EXPECT_THROW(protocol::enforce_boundary(r, BoundaryTarget::outcomes(0, 1)), aklt::ConfigError);
    // At N = 1 each (L, R) pair selects one of A^+, A^0, A^- and stays possible.
    auto one = protocol::prepare_sequential(1);
    const auto p = protocol::boundary_distribution(one);
    for (double x : p) EXPECT_GT(x, 0.0);
}

TEST(SwapTest, AntisymmetricOutcomeEqualsPsiMinusFusion) {
    auto pol = OutcomePolicy::sample(0);
    auto blocks = protocol::prepare_blocks(4, false, pol);
    auto anti = OutcomePolicy::forced({1});
    protocol::swap_test_fusion(blocks, blocks.blocks[0].right, blocks.blocks[1].left, anti);
    auto fused = protocol::prepare_fusion(4, OutcomePolicy::forced({3}));
    EXPECT_GT(aklt::sim::fidelity(protocol::prepared_state(blocks), protocol::prepared_state(fused)), 1 - kFidTol);
    EXPECT_EQ(blocks.N, 4);
}

TEST(SwapTest, SymmetricOutcomeAddsSite) {
    for (int N : {3, 4}) {
        auto pol = OutcomePolicy::sample(0);
        auto blocks = protocol::prepare_blocks(N, false, pol);
        auto sym = OutcomePolicy::forced({0});
        protocol::swap_test_fusion(blocks, blocks.blocks[0].right, blocks.blocks[1].left, sym);
        EXPECT_EQ(blocks.N, N + 1);
        EXPECT_GT(protocol::reference_fidelity(blocks), 1 - kFidTol) << N;
    }
    // Three blocks joined by two SWAP tests, every outcome pair.
    for (int c = 0; c < 4; ++c) {
        auto pol = OutcomePolicy::sample(0);
        auto r = protocol::prepare_blocks(5, false, pol);
        auto first = OutcomePolicy::forced({c % 2}), second = OutcomePolicy::forced({c / 2});
        protocol::swap_test_fusion(r, r.blocks[0].right, r.blocks[1].left, first);
        protocol::swap_test_fusion(r, r.blocks[1].left, r.blocks[0].right, second);
        EXPECT_EQ(r.N, 5 + (c % 2 == 0) + (c / 2 == 0));
        protocol::enforce_boundary(r, BoundaryTarget::outcomes(1, 0));
        EXPECT_GT(protocol::reference_fidelity(r), 1 - kFidTol) << c;
    }
}

TEST(SwapTest, EdgeMemoriesClosePeriodicChain) {
    for (int N = 2; N <= 5; ++N) {
        for (int outcome = 0; outcome < 2; ++outcome) {
            auto r = protocol::prepare_sequential(N, MemoryMode::Dual);
            auto pol = OutcomePolicy::forced({outcome});
            protocol::swap_test_fusion(r, r.mem_right, r.mem_left, pol);
            EXPECT_TRUE(r.periodic);
            EXPECT_EQ(r.N, outcome == 0 ? N + 1 : N);
            EXPECT_GT(aklt::sim::fidelity(protocol::prepared_state(r), mps::contract_periodic(r.chain, r.N)),
                      1 - kFidTol);
        }
    }
}

TEST(SwapTest, EdgeProbabilitiesMatchExactOracle) {
    // N = 1 has no singlet component: Tr(A^m) = 0 for every m.
    for (int N = 2; N <= 6; ++N) {
        const auto ref = mps::contract_with_memories(mps::aklt_tensors(), N, mps::singlet_matrix());
        Vector v = ref.amplitudes();
        StateVector projected = ref;
        const std::array<int, 2> mem{2 * N, 2 * N + 1};
        projected.apply_matrix(protocol::detail::antisymmetric_projector(), mem);
        const double p_anti = projected.amplitudes().squaredNorm();
        auto r = protocol::prepare_sequential(N, MemoryMode::Single);
        auto pol = OutcomePolicy::forced({1});
        const int rec = protocol::swap_test_fusion(r, r.mem_right, r.mem_left, pol);
        EXPECT_NEAR(r.session.record_probability(rec), p_anti, 1e-12) << N;
    }
}

TEST(Projector, SuccessRates) {
    for (int N : {1, 4}) {
        const std::size_t trials = 100000;
        const double p = std::pow(0.75, N);
        const auto ok = protocol::projector_successes(N, trials, 1234 + N);
        const double sigma = std::sqrt(trials * p * (1 - p));
        EXPECT_LT(std::abs(static_cast<double>(ok) - trials * p), 3 * sigma) << N;
    }
}

TEST(Projector, SuccessfulTrialMatchesReference) {
    for (int N = 1; N <= 4; ++N) {
        int found = 0;
        for (std::uint64_t seed = 0; seed < 200 && found < 2; ++seed) {
            auto out = protocol::prepare_projector_baseline(N, seed);
            if (!out.success) {
                EXPECT_FALSE(out.result.has_value());
                continue;
            }
            ++found;
            EXPECT_NEAR(out.probability, std::pow(0.75, N), 1e-10);
            EXPECT_GT(protocol::reference_fidelity(*out.result), 1 - kFidTol) << N;
        }
        EXPECT_EQ(found, 2);
    }
}

TEST(Circuit, JsonExportListsInstructions) {
    auto r = protocol::prepare_fusion(4, OutcomePolicy::forced({1}));
    protocol::correct_defects(r, CorrectionMode::Unitary);
    const auto j = r.session.circuit().to_json();
    EXPECT_EQ(j["depth"].get<int>(), r.depth());
    bool saw_bell = false, saw_cond = false;
    for (const auto &in : j["instructions"]) {
        saw_bell = saw_bell || in["tag"] == "bell";
        saw_cond = saw_cond || in["kind"] == "conditional";
    }
    EXPECT_TRUE(saw_bell);
    EXPECT_TRUE(saw_cond);
}

} // namespace
