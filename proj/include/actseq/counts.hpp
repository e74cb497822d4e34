#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "actseq/diary.hpp"

namespace actseq {

/// Disjoint run-length bins covering [1, inf); the last bin is open-ended.
struct RunLengthBins {
    /// Strictly increasing lower bounds; first must be 1. Bin m covers
    /// [lower_bounds[m], lower_bounds[m+1]) and the last bin [last, inf).
    std::vector<int> lower_bounds;

    int count() const { return static_cast<int>(lower_bounds.size()); }

    int bin_of(int run_len) const {
        int m = count() - 1;
        while (m > 0 && run_len < lower_bounds[m]) --m;
        return m;
    }

    /// {1},{2},{3},{4-6},{7-12},{13-36},{37+}: 10/20/30 minutes, then
    /// 40-60, 70-120, 130-360, >360. Geometric-style spacing keeps every
    /// bin populated while separating short and long dwells.
    static RunLengthBins defaults() { return {{1, 2, 3, 4, 7, 13, 37}}; }

    static RunLengthBins validated(std::vector<int> bounds);
};

/// Maps 1-based slots to coarse day-part blocks whose pooled counts act as
/// shrinkage priors.
struct BlockMap {
    std::vector<int> slot_block;      // slot_block[t-1] = block of slot t
    std::vector<std::string> labels;  // one per block

    int count() const { return static_cast<int>(labels.size()); }
    int block_of_slot(int slot_1based) const { return slot_block[slot_1based - 1]; }

    /// The four day-part blocks over the 144-slot day that starts at 4 a.m.:
    /// NIGHT = slots 1-12 and 109-144 (10:00 p.m.-5:50 a.m.),
    /// MORNING = 13-48, AFTERNOON = 49-84, EVENING = 85-108.
    static BlockMap dayparts();

    /// Everything in one block; used by small test instances.
    static BlockMap single(int num_slots);
};

/// Design-weighted sufficient statistics. Slot-level tables are per group;
/// block-level tables pool across every group (the prototypes are shared).
/// Transition index t runs over source slots 1..T-1 (stored 0-based).
/// Immutable once built.
struct CountTables {
    int K = 0;  // states
    int T = 0;  // slots per day
    int M = 0;  // run-length bins
    int B = 0;  // blocks
    std::vector<std::string> groups;
    BlockMap block_map;  // the map the block tables were pooled with

    std::vector<double> transitions;        // C  [g][t][s][s2], t in 0..T-2
    std::vector<double> exposures;          // N  [g][t][s][m]
    std::vector<double> exits;              // E  [g][t][s][m]
    std::vector<double> initial;            // C0 [g][s]
    std::vector<double> block_transitions;  // Cb [b][s][s2]
    std::vector<double> block_exposures;    // Nb [b][s][m]
    std::vector<double> block_exits;        // Eb [b][s][m]
    std::vector<double> group_weight;       // [g]

    int num_groups() const { return static_cast<int>(groups.size()); }

    size_t c_idx(int g, int t, int s, int s2) const {
        return ((static_cast<size_t>(g) * (T - 1) + t) * K + s) * K + s2;
    }
    size_t ne_idx(int g, int t, int s, int m) const {
        return ((static_cast<size_t>(g) * (T - 1) + t) * K + s) * M + m;
    }
    size_t c0_idx(int g, int s) const { return static_cast<size_t>(g) * K + s; }
    size_t cb_idx(int b, int s, int s2) const {
        return (static_cast<size_t>(b) * K + s) * K + s2;
    }
    size_t nb_idx(int b, int s, int m) const { return (static_cast<size_t>(b) * K + s) * M + m; }

    bool same_shape(const CountTables& other) const;
};

/// Accumulates the weighted counts of one grid. Requires groups assigned.
/// Sharded across respondents into `workers` contiguous ranges (0 = machine
/// parallelism) and merged in shard order, so the result depends only on the
/// worker count, not on scheduling; across worker counts cells agree to
/// floating-point reassociation (~1e-15 relative).
CountTables accumulate(const DiaryGrid& grid, const RunLengthBins& bins, const BlockMap& blocks,
                       int num_states = kNumStates, int workers = 0);

/// Cellwise sum of two same-shape tables (associative, commutative).
CountTables merge(const CountTables& a, const CountTables& b);

/// Audit dump: one row per nonzero cell (table,g,t,s,s2,m,value).
void write_counts_csv(const CountTables& counts, const std::string& path);

namespace serial_ref {

/// Single-pass reference accumulation, kept independent of the sharded
/// kernel for shard-invariance and merge tests.
CountTables accumulate(const DiaryGrid& grid, const RunLengthBins& bins, const BlockMap& blocks,
                       int num_states = kNumStates);

}  // namespace serial_ref

}  // namespace actseq
