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
 * Noise-model configuration, noisy shot sampling, readout-error mitigation
 * and the string-order decay-length experiment.
 *
 * The channel itself is a stochastic Pauli unraveling carried out by the
 * executor: depolarizing Paulis after every gate (p1 per qubit of
 * single-qubit gates, p2 per adjacent wire pair of multi-qubit gates and
 * non-diagonal measurements), Z flips accumulated over idle layers, and
 * symmetric bit flips on reported outcomes.
 */

#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "aklt/error.hpp"
#include "aklt/linalg.hpp"
#include "aklt/observables.hpp"
#include "aklt/protocol.hpp"
#include "aklt/shots.hpp"
#include "aklt/sim.hpp"

namespace aklt::noise {

using protocol::Method;
using protocol::PreparationResult;

// ---------------------------------------------------------------------------
// Configuration

inline nlohmann::json to_json(const NoiseModel &m) {
    return {{"p1", m.p1}, {"p2", m.p2}, {"p_ro", m.p_ro}, {"idle_dephase", m.idle_dephase}};
}

/// Missing keys default to zero; unknown keys and out-of-range values are
/// errors.
inline NoiseModel model_from_json(const nlohmann::json &j) {
    if (!j.is_object()) throw ConfigError("noise model must be a JSON object");
    NoiseModel m;
    for (const auto &[key, value] : j.items()) {
        if (!value.is_number()) throw ConfigError("noise parameter '" + key + "' must be a number");
        const double v = value.get<double>();
        if (key == "p1") m.p1 = v;
        else if (key == "p2") m.p2 = v;
        else if (key == "p_ro") m.p_ro = v;
        else if (key == "idle_dephase") m.idle_dephase = v;
        else throw ConfigError("unknown noise parameter '" + key + "'");
    }
    m.validate();
    return m;
}

inline NoiseModel load_model(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open noise model file " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception &e) {
        throw ConfigError("noise model file " + path + ": " + e.what());
    }
    return model_from_json(j);
}

/// The fixed configuration of the decay-length comparison.
inline NoiseModel decay_benchmark_model() {
    NoiseModel m;
    m.p2 = 0.01;
    m.idle_dephase = 0.02;
    return m;
}

// ---------------------------------------------------------------------------
// Noisy sampling

/// Trajectories of a recorded circuit (which must read out every site).
inline ShotRecord run_noisy(const PreparationResult &r, const NoiseModel &model, std::size_t shots, std::uint64_t seed) {
    if (shots < 1) throw ConfigError("run_noisy needs at least one shot");
    return protocol::sample_shots(r, shots, seed, model);
}

inline ShotRecord run_noisy(Method method, int N, const NoiseModel &model, std::size_t shots, std::uint64_t seed) {
    return run_noisy(protocol::sampling_circuit(method, N), model, shots, seed);
}

// ---------------------------------------------------------------------------
// Readout mitigation

/// Confusion matrix C(reported, true) of a symmetric flip with probability p.
inline Eigen::Matrix2d flip_confusion(double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("flip probability must lie in [0, 1]");
    Eigen::Matrix2d c;
    c << 1 - p, p, p, 1 - p;
    return c;
}

namespace detail {

/// Applies a 2x2 matrix along bit q of a 2^n probability vector.
inline void apply_axis(std::vector<double> &v, int q, const Eigen::Matrix2d &m) {
    const std::size_t step = std::size_t{1} << q;
    for (std::size_t base = 0; base < v.size(); ++base) {
        if (base & step) continue;
        const double a = v[base], b = v[base | step];
        v[base] = m(0, 0) * a + m(0, 1) * b;
        v[base | step] = m(1, 0) * a + m(1, 1) * b;
    }
}

inline int check_layout(std::size_t size, std::size_t n) {
    const int bits = static_cast<int>(n);
    if (size != (std::size_t{1} << bits)) throw DimensionError("probability vector must have 2^n entries for n confusion matrices");
    return bits;
}

} // namespace detail

/// Forward flip channel (one confusion matrix per bit, bit q = qubit q).
inline std::vector<double> apply_confusion(std::vector<double> probs, const std::vector<Eigen::Matrix2d> &confusion) {
    const int n = detail::check_layout(probs.size(), confusion.size());
    for (int q = 0; q < n; ++q) detail::apply_axis(probs, q, confusion[static_cast<std::size_t>(q)]);
    return probs;
}

/// Tensor-product inverse of the confusion matrices; negative entries are
/// clipped and the result renormalized.
inline std::vector<double> readout_mitigate(std::vector<double> probs, const std::vector<Eigen::Matrix2d> &confusion) {
    const int n = detail::check_layout(probs.size(), confusion.size());
    for (int q = 0; q < n; ++q) {
        const auto &c = confusion[static_cast<std::size_t>(q)];
        if (std::abs(c.determinant()) < 1e-12) throw NumericalError("singular confusion matrix on bit " + std::to_string(q));
        detail::apply_axis(probs, q, c.inverse());
    }
    double total = 0.0;
    for (double &p : probs) {
        p = std::max(p, 0.0);
        total += p;
    }
    if (!(total > 0.0)) throw NumericalError("mitigated distribution has zero weight");
    for (double &p : probs) p /= total;
    return probs;
}

/// Empirical distribution of the 2N site bits.
inline std::vector<double> site_distribution(const ShotRecord &s) {
    if (s.N > 12) throw DimensionError("site distributions are limited to N <= 12");
    if (s.size() == 0) throw Error("empty shot record");
    const int bits = 2 * s.N;
    std::vector<double> p(std::size_t{1} << bits, 0.0);
    const std::uint64_t mask = (std::uint64_t{1} << bits) - 1;
    for (auto b : s.bits) p[static_cast<std::size_t>(b & mask)] += 1.0;
    for (double &x : p) x /= static_cast<double>(s.size());
    return p;
}

/// Site-bit distribution of an exact state (site k at qubits 2(k-1), 2(k-1)+1).
inline std::vector<double> site_distribution(const sim::StateVector &st, int N) {
    const auto &a = st.amplitudes();
    std::vector<double> p(std::size_t{1} << (2 * N), 0.0);
    const std::size_t mask = p.size() - 1;
    for (Eigen::Index i = 0; i < a.size(); ++i) p[static_cast<std::size_t>(i) & mask] += std::norm(a(i));
    return p;
}

inline double string_order(std::span<const double> probs, int N, int i, int ell) {
    observables::detail::check_span(N, i, ell);
    if (probs.size() != (std::size_t{1} << (2 * N))) throw DimensionError("distribution does not cover 2N site bits");
    double acc = 0.0;
    for (std::size_t x = 0; x < probs.size(); ++x) {
        if (probs[x] == 0.0) continue;
        acc += probs[x] * observables::detail::string_value(i, ell, [&](int k) {
                   return mps::Spin1Encoding::sz(static_cast<int>((x >> (2 * (k - 1))) & 3u));
               });
    }
    return acc;
}

/// String order after inverting a symmetric readout flip p on every site bit.
inline double mitigated_string_order(const ShotRecord &s, int i, int ell, double p_ro) {
    const std::vector<Eigen::Matrix2d> conf(static_cast<std::size_t>(2 * s.N), flip_confusion(p_ro));
    return string_order(readout_mitigate(site_distribution(s), conf), s.N, i, ell);
}

// ---------------------------------------------------------------------------
// Decay length

struct DecayPoint {
    int ell = 0;
    double value = 0.0; ///< position-averaged string order
    double std_error = 0.0;
};

struct DecayFit {
    double length = 0.0; ///< +inf when the profile does not decay
    double amplitude = 0.0;
    double slope = 0.0;
};

/// String order per span length, averaged per shot over every start site.
inline std::vector<DecayPoint> string_order_profile(const ShotRecord &s, int lmin = 2) {
    if (s.size() < 2) throw Error("string order profile needs at least two shots");
    std::vector<DecayPoint> out;
    for (int ell = lmin; ell <= s.N; ++ell) {
        const int starts = s.N - ell + 1;
        double sum = 0.0, sq = 0.0;
        for (std::size_t k = 0; k < s.size(); ++k) {
            double v = 0.0;
            for (int i = 1; i <= starts; ++i)
                v += observables::detail::string_value(i, ell, [&](int site) { return s.site_sz(k, site); });
            v /= starts;
            sum += v;
            sq += v * v;
        }
        const double n = static_cast<double>(s.size()), mean = sum / n;
        out.push_back({ell, mean, std::sqrt(std::max(sq - n * mean * mean, 0.0) / (n - 1) / n)});
    }
    return out;
}

/// Weighted least squares of ln|O(l)| = ln A - l / length.
inline DecayFit fit_decay(std::span<const DecayPoint> pts) {
    double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    int used = 0;
    for (const auto &p : pts) {
        const double a = std::abs(p.value);
        if (!(a > 0.0)) continue;
        const double rel = p.std_error > 0.0 ? p.std_error / a : 1e-6;
        const double w = 1.0 / (rel * rel);
        sw += w;
        sx += w * p.ell;
        sy += w * std::log(a);
        sxx += w * p.ell * p.ell;
        sxy += w * p.ell * std::log(a);
        ++used;
    }
    if (used < 2) throw NumericalError("decay fit needs two nonzero points");
    const double den = sw * sxx - sx * sx;
    if (!(std::abs(den) > 0.0)) throw NumericalError("decay fit needs two distinct lengths");
    DecayFit f;
    f.slope = (sw * sxy - sx * sy) / den;
    f.amplitude = std::exp((sy - f.slope * sx) / sw);
    f.length = f.slope < 0.0 ? -1.0 / f.slope : std::numeric_limits<double>::infinity();
    return f;
}

struct DecayResult {
    Method method = Method::Sequential;
    int N = 0;
    std::vector<DecayPoint> profile;
    DecayFit fit;
};

inline DecayResult decay_length(Method method, int N, const NoiseModel &model, std::size_t shots, std::uint64_t seed) {
    DecayResult r;
    r.method = method;
    r.N = N;
    r.profile = string_order_profile(run_noisy(method, N, model, shots, seed));
    r.fit = fit_decay(r.profile);
    return r;
}

} // namespace aklt::noise
