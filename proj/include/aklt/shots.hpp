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
 * Sampled classical outcomes of site and boundary-memory readouts.
 */

#pragma once

#include <cstdint>
#include <vector>

#include "aklt/error.hpp"
#include "aklt/mps.hpp"
#include "aklt/sim.hpp"

namespace aklt {

/// One bitstring per shot. Bit q of a bitstring is the outcome of labels[q].
/// Site k occupies bits 2(k-1) (slot 0) and 2(k-1)+1 (slot 1); when boundary
/// memories were read out they follow as bits 2N (left) and 2N+1 (right).
struct ShotRecord {
    int N = 0;
    bool has_memories = false;
    std::vector<sim::QubitLabel> labels;
    std::vector<std::uint64_t> bits;

    std::size_t size() const { return bits.size(); }
    int num_qubits() const { return static_cast<int>(labels.size()); }

    int bit(std::size_t shot, int q) const { return static_cast<int>((bits.at(shot) >> q) & 1u); }

    /// Encoded two-qubit code of site k (1-based).
    int site_code(std::size_t shot, int k) const {
        if (k < 1 || k > N) throw DimensionError("site index out of range");
        return static_cast<int>((bits.at(shot) >> (2 * (k - 1))) & 3u);
    }
    int site_sz(std::size_t shot, int k) const { return mps::Spin1Encoding::sz(site_code(shot, k)); }

    int memory_left(std::size_t shot) const {
        if (!has_memories) throw Error("shot record carries no boundary memories");
        return bit(shot, 2 * N);
    }
    int memory_right(std::size_t shot) const {
        if (!has_memories) throw Error("shot record carries no boundary memories");
        return bit(shot, 2 * N + 1);
    }

    static ShotRecord layout(int N, bool memories) {
        ShotRecord r;
        r.N = N;
        r.has_memories = memories;
        for (int k = 1; k <= N; ++k)
            for (int s = 0; s < 2; ++s) r.labels.push_back(sim::QubitLabel::site_qubit(k, s));
        if (memories) {
            r.labels.push_back(sim::QubitLabel::memory(sim::Role::MemoryLeft));
            r.labels.push_back(sim::QubitLabel::memory(sim::Role::MemoryRight));
        }
        for (std::size_t q = 0; q < r.labels.size(); ++q) r.labels[q].wire = static_cast<int>(q);
        if (r.labels.size() > 64) throw DimensionError("shot records hold at most 64 qubits");
        return r;
    }
};

} // namespace aklt
