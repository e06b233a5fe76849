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

#include "aklt/teleport.hpp"

namespace {

using aklt::Matrix;
using aklt::Vector;
using aklt::linalg::Pauli;
using aklt::sim::OutcomePolicy;
namespace tp = aklt::teleport;
namespace protocol = aklt::protocol;
using protocol::CorrectionMode;
using protocol::Method;

constexpr double kFidTol = 1e-10;

tp::Options fusion(CorrectionMode c) { return {Method::Fusion, c}; }
tp::Options sequential() { return {Method::Sequential, CorrectionMode::None}; }

// Written out independently of the header's tables.
Pauli letter_pauli(char c) { return c == 'x' ? Pauli::X : c == 'y' ? Pauli::Y : Pauli::Z; }

std::vector<char> letters(int code, int n) {
    std::vector<char> out;
    for (int k = 0; k < n; ++k, code /= 3) out.push_back("xyz"[code % 3]);
    return out;
}

/// The Pauli P with P psi proportional to v, if any.
std::optional<Pauli> identify(const Vector &v, const Vector &psi) {
    for (int p = 0; p < 4; ++p)
        if (std::abs((aklt::linalg::pauli(static_cast<Pauli>(p)) * psi).dot(v)) > 1 - 1e-9) return static_cast<Pauli>(p);
    return std::nullopt;
}

// No two Paulis map this state onto the same ray.
tp::Target generic() { return tp::Target::from_bloch(1.1, 0.7); }

Vector top_eigvec(const aklt::linalg::DensityMatrix &rho) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(rho.matrix());
    return es.eigenvectors().col(rho.dim() - 1);
}

TEST(BasisTransform, MapsTeleportationBasisToComputationalStates) {
    const Matrix T = tp::site_basis_transform();
    EXPECT_LT((T * T.adjoint() - Matrix::Identity(4, 4)).norm(), 1e-14);
    // x -> |10>, y -> |00>, z -> |01>, s -> |11> with index q0 + 2 q1.
    const std::vector<std::pair<char, int>> expect{{'x', 2}, {'y', 0}, {'z', 1}, {'s', 3}};
    for (const auto &[label, code] : expect) {
        const Vector out = T * tp::basis_state(label);
        EXPECT_NEAR(std::abs(out(code)), 1.0, 1e-14) << label;
        EXPECT_EQ(tp::outcome_label(code), label);
    }
    // x, y, z, s form an orthonormal basis.
    Matrix B(4, 4);
    int c = 0;
    for (char l : {'x', 'y', 'z', 's'}) B.col(c++) = tp::basis_state(l);
    EXPECT_LT((B.adjoint() * B - Matrix::Identity(4, 4)).norm(), 1e-14);
    EXPECT_THROW(tp::basis_state('q'), aklt::ConfigError);
    EXPECT_THROW(tp::label_pauli('s'), aklt::ConfigError);
}

TEST(Target, BlochRoundTripAndPerp) {
    for (const auto &[name, t] : tp::canonical_targets()) {
        EXPECT_NEAR(t.psi.norm(), 1.0, 1e-14) << name;
        const auto u = tp::Target::from_bloch(t.theta(), t.phi());
        EXPECT_NEAR(std::abs(u.psi.dot(t.psi)), 1.0, 1e-12) << name;
        EXPECT_NEAR(std::abs(t.perp().dot(t.psi)), 0.0, 1e-14) << name;
    }
    Vector bad(2);
    bad << 1.0, 1.0;
    EXPECT_THROW(tp::Target::from_vector(bad), aklt::ConfigError);
}

TEST(Teleport, UnitFidelityForAllTargetsAndLengths) {
    for (int N = 1; N <= 6; ++N)
        for (const auto &opt : {sequential(), fusion(CorrectionMode::None), fusion(CorrectionMode::Unitary),
                                fusion(CorrectionMode::Frame)})
            for (const auto &[name, t] : tp::canonical_targets()) {
                const auto rep = tp::teleport(N, t, opt, 17 * static_cast<std::uint64_t>(N), 3);
                ASSERT_GT(rep.raw_fidelity, 1 - kFidTol) << "N=" << N << " target " << name;
                EXPECT_NEAR(rep.acceptance_rate, 0.5, 1e-10);
            }
}

// Every site-outcome sequence, checked against the Pauli the state itself
// reveals.
TEST(Teleport, ByproductMatchesStateForAllOutcomeSequences) {
    const auto t = generic();
    for (int N = 1; N <= 3; ++N) {
        int combos = 1;
        for (int k = 0; k < N; ++k) combos *= 3;
        for (int c = 0; c < combos; ++c) {
            const auto seq = letters(c, N);
            auto fp = OutcomePolicy::sample(0);
            auto sites = tp::forced_sites(seq);
            const auto path = tp::run_path(N, t, sequential(), fp, sites);
            Pauli expect = Pauli::I;
            for (char l : seq) expect = aklt::linalg::pauli_product(expect, letter_pauli(l));
            const auto seen = identify(top_eigvec(path.raw), t.psi);
            ASSERT_TRUE(seen.has_value()) << "N=" << N << " combo=" << c;
            EXPECT_EQ(*seen, expect) << "N=" << N << " combo=" << c;
            EXPECT_EQ(path.lambda, expect);
            EXPECT_EQ(path.labels, seq);
            EXPECT_GT(path.fidelity, 1 - kFidTol);
        }
    }
}

TEST(Teleport, SingletSiteOutcomeIsImpossible) {
    const auto t = tp::canonical_targets()[0].second;
    auto fp = OutcomePolicy::sample(0);
    auto sites = tp::forced_sites({'s', 'x'});
    EXPECT_THROW(tp::run_path(2, t, sequential(), fp, sites), aklt::ZeroProbabilityError);
}

TEST(Teleport, FusionDefectsAreAbsorbedIntoByproduct) {
    const auto t = generic();
    for (int N = 2; N <= 4; ++N) {
        const int f = (N - 1) / 2;
        for (int c = 0; c < (1 << (2 * f)); ++c)
            for (auto mode : {CorrectionMode::None, CorrectionMode::Frame, CorrectionMode::Unitary})
                for (std::uint64_t seed = 0; seed < 4; ++seed) {
                    std::vector<int> outs;
                    for (int k = 0, x = c; k < f; ++k, x /= 4) outs.push_back(x % 4);
                    auto fp = OutcomePolicy::forced(outs);
                    auto sites = OutcomePolicy::sample(seed);
                    const auto path = tp::run_path(N, t, fusion(mode), fp, sites);
                    ASSERT_GT(path.fidelity, 1 - kFidTol) << "N=" << N << " combo=" << c;
                    EXPECT_EQ(identify(top_eigvec(path.raw), t.psi), path.lambda);
                }
    }
}

// Replayed trajectories: the left memory is always a Pauli image of psi.
TEST(Teleport, ReplayedPathsAlwaysCarryPauliByproduct) {
    const auto t = generic();
    for (const auto &opt : {sequential(), fusion(CorrectionMode::None)}) {
        auto fp = OutcomePolicy::sample(0), tgt = OutcomePolicy::sample(0), sites = OutcomePolicy::sample(0);
        const auto c = tp::build(tp::resource(4, opt, fp, false), t, tgt, sites);
        aklt::sim::Executor ex(c.r.session.circuit());
        std::size_t accepted = 0, bad = 0;
        const std::array<int, 1> left{c.r.mem_left};
        ex.run(10000, 5, aklt::NoiseModel{}, [&](std::size_t, const aklt::sim::Register &reg, const std::vector<int> &recs) {
            if (recs[static_cast<std::size_t>(c.rec_target)] != 0) return;
            ++accepted;
            const auto lambda = tp::byproduct(c, recs);
            const Vector v = reg.extract(left).amplitudes();
            if (!lambda || identify(v, t.psi) != *lambda) ++bad;
        });
        EXPECT_EQ(bad, 0u);
        EXPECT_GT(accepted, 4000u);
    }
}

TEST(Teleport, AcceptanceMatchesReducedStateOracle) {
    const int N = 3;
    for (const auto &opt : {sequential(), fusion(CorrectionMode::None)}) {
        const auto t = tp::canonical_targets()[2].second;
        // Oracle: weight of perp in the right-memory marginal of the reference state.
        const auto ref = aklt::mps::contract_with_memories(aklt::mps::aklt_tensors(), N, aklt::mps::singlet_matrix());
        const std::array<int, 1> keep{2 * N + 1};
        const auto rho = aklt::linalg::reduced_density(ref.amplitudes(), keep, 2 * N + 2);
        const Vector perp = t.perp();
        const double p = (perp.adjoint() * rho.matrix() * perp)(0).real();
        EXPECT_NEAR(tp::exact_acceptance(N, t, opt), p, 1e-12);
        const std::size_t shots = 100000;
        const auto rep = tp::teleport_shots(N, t, opt, shots, 21);
        const double sigma = std::sqrt(p * (1 - p) / (3.0 * shots));
        EXPECT_LT(std::abs(rep.acceptance_rate - p), 3 * sigma);
        EXPECT_EQ(rep.spin1_rejection, 0.0);
        EXPECT_GT(rep.purified_fidelity, 0.999);
        EXPECT_GT(rep.raw_fidelity, 0.99);
    }
}

TEST(Teleport, PurificationNeverLowersFidelityUnderNoise) {
    aklt::NoiseModel m;
    m.p2 = 0.02;
    m.p1 = 0.005;
    m.p_ro = 0.01;
    for (const auto &[name, t] : tp::canonical_targets()) {
        const auto rep = tp::teleport_shots(3, t, fusion(CorrectionMode::Unitary), 4000, 3, m);
        EXPECT_GE(rep.purified_fidelity, rep.raw_fidelity - 1e-12) << name;
        EXPECT_LT(rep.raw_fidelity, 0.999) << name;
        EXPECT_GT(rep.spin1_rejection, 0.0) << name;
    }
}

TEST(Teleport, ReportJson) {
    const auto rep = tp::teleport(2, tp::canonical_targets()[1].second, sequential(), 7, 5);
    const auto j = rep.to_json();
    for (const char *key : {"N", "psi", "prep", "raw_fidelity", "purified_fidelity", "lambda_histogram",
                            "acceptance_rate", "seed"})
        EXPECT_TRUE(j.contains(key)) << key;
    EXPECT_NEAR(j["psi"]["theta"].get<double>(), M_PI, 1e-12);
    std::size_t total = 0;
    for (const auto &[k, v] : j["lambda_histogram"].items()) total += v.get<std::size_t>();
    EXPECT_EQ(total, 5u);
    EXPECT_THROW(tp::teleport(0, tp::canonical_targets()[0].second, sequential(), 0), aklt::DimensionError);
    EXPECT_THROW(tp::teleport(2, tp::canonical_targets()[0].second, {Method::Projector, CorrectionMode::None}, 0),
                 aklt::ConfigError);
}

} // namespace
