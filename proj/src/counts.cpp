#include "actseq/counts.hpp"

#include <algorithm>
#include <fstream>

#include <omp.h>

#include "actseq/csv.hpp"
#include "actseq/errors.hpp"

namespace actseq {

RunLengthBins RunLengthBins::validated(std::vector<int> bounds) {
    if (bounds.empty() || bounds.front() != 1) {
        throw InputError("run-length bins must start at 1");
    }
    for (size_t i = 1; i < bounds.size(); ++i) {
        if (bounds[i] <= bounds[i - 1]) {
            throw InputError("run-length bin bounds must be strictly increasing");
        }
    }
    return {std::move(bounds)};
}

BlockMap BlockMap::dayparts() {
    BlockMap map;
    map.labels = {"NIGHT", "MORNING", "AFTERNOON", "EVENING"};
    map.slot_block.resize(kSlotsPerDay);
    for (int t = 1; t <= kSlotsPerDay; ++t) {
        int b;
        if (t <= 12 || t >= 109) b = 0;        // NIGHT
        else if (t <= 48) b = 1;               // MORNING
        else if (t <= 84) b = 2;               // AFTERNOON
        else b = 3;                            // EVENING
        map.slot_block[t - 1] = b;
    }
    return map;
}

BlockMap BlockMap::single(int num_slots) {
    BlockMap map;
    map.labels = {"ALL_DAY"};
    map.slot_block.assign(static_cast<size_t>(num_slots), 0);
    return map;
}

bool CountTables::same_shape(const CountTables& other) const {
    return K == other.K && T == other.T && M == other.M && B == other.B &&
           groups == other.groups && block_map.slot_block == other.block_map.slot_block;
}

namespace {

CountTables make_empty(const DiaryGrid& grid, const RunLengthBins& bins, const BlockMap& blocks,
                       int num_states) {
    if (grid.group_labels.empty()) {
        throw InvariantError("accumulate: grid has no groups assigned");
    }
    if (static_cast<int>(blocks.slot_block.size()) < grid.slots - 1) {
        throw InvariantError("accumulate: block map shorter than the slot horizon");
    }
    CountTables c;
    c.K = num_states;
    c.T = grid.slots;
    c.M = bins.count();
    c.B = blocks.count();
    c.groups = grid.group_labels;
    c.block_map = blocks;
    const size_t G = c.groups.size();
    c.transitions.assign(G * (c.T - 1) * c.K * c.K, 0.0);
    c.exposures.assign(G * (c.T - 1) * c.K * c.M, 0.0);
    c.exits.assign(G * (c.T - 1) * c.K * c.M, 0.0);
    c.initial.assign(G * c.K, 0.0);
    c.block_transitions.assign(static_cast<size_t>(c.B) * c.K * c.K, 0.0);
    c.block_exposures.assign(static_cast<size_t>(c.B) * c.K * c.M, 0.0);
    c.block_exits.assign(static_cast<size_t>(c.B) * c.K * c.M, 0.0);
    c.group_weight.assign(G, 0.0);
    return c;
}

void add_respondent(CountTables& c, const DiaryGrid& grid, const RunLengthBins& bins, int i) {
    const int g = grid.group[i];
    if (g < 0) throw InvariantError("accumulate: respondent without group: " + grid.ids[i]);
    const double w = grid.weights[i];
    const auto states = grid.states_of(i);
    const auto runs = grid.run_len_of(i);
    if (states[0] >= c.K) throw InvariantError("accumulate: state id out of range");

    c.group_weight[g] += w;
    c.initial[c.c0_idx(g, states[0])] += w;
    for (int t = 0; t + 1 < grid.slots; ++t) {
        const int s = states[t];
        const int s2 = states[t + 1];
        if (s >= c.K || s2 >= c.K) throw InvariantError("accumulate: state id out of range");
        const int m = bins.bin_of(runs[t]);
        c.transitions[c.c_idx(g, t, s, s2)] += w;
        c.exposures[c.ne_idx(g, t, s, m)] += w;
        if (s2 != s) c.exits[c.ne_idx(g, t, s, m)] += w;
    }
}

/// Block tables = sums of the slot-level cells across all groups and the
/// slots of each block, in fixed (g, t) order so the identity is exact.
void finalize_blocks(CountTables& c, const BlockMap& blocks) {
    std::fill(c.block_transitions.begin(), c.block_transitions.end(), 0.0);
    std::fill(c.block_exposures.begin(), c.block_exposures.end(), 0.0);
    std::fill(c.block_exits.begin(), c.block_exits.end(), 0.0);
    for (int g = 0; g < c.num_groups(); ++g) {
        for (int t = 0; t + 1 < c.T; ++t) {
            const int b = blocks.block_of_slot(t + 1);
            for (int s = 0; s < c.K; ++s) {
                for (int s2 = 0; s2 < c.K; ++s2) {
                    c.block_transitions[c.cb_idx(b, s, s2)] +=
                        c.transitions[c.c_idx(g, t, s, s2)];
                }
                for (int m = 0; m < c.M; ++m) {
                    c.block_exposures[c.nb_idx(b, s, m)] += c.exposures[c.ne_idx(g, t, s, m)];
                    c.block_exits[c.nb_idx(b, s, m)] += c.exits[c.ne_idx(g, t, s, m)];
                }
            }
        }
    }
}

void add_cells(CountTables& into, const CountTables& from) {
    for (size_t i = 0; i < into.transitions.size(); ++i) into.transitions[i] += from.transitions[i];
    for (size_t i = 0; i < into.exposures.size(); ++i) into.exposures[i] += from.exposures[i];
    for (size_t i = 0; i < into.exits.size(); ++i) into.exits[i] += from.exits[i];
    for (size_t i = 0; i < into.initial.size(); ++i) into.initial[i] += from.initial[i];
    for (size_t i = 0; i < into.group_weight.size(); ++i)
        into.group_weight[i] += from.group_weight[i];
}

}  // namespace

CountTables accumulate(const DiaryGrid& grid, const RunLengthBins& bins, const BlockMap& blocks,
                       int num_states, int workers) {
    const int n = grid.size();
    const int nw = std::max(1, std::min(workers > 0 ? workers : omp_get_max_threads(), n > 0 ? n : 1));
    std::vector<CountTables> partials(nw);

#pragma omp parallel for num_threads(nw) schedule(static)
    for (int shard = 0; shard < nw; ++shard) {
        CountTables part = make_empty(grid, bins, blocks, num_states);
        const int lo = static_cast<int>(static_cast<long>(n) * shard / nw);
        const int hi = static_cast<int>(static_cast<long>(n) * (shard + 1) / nw);
        for (int i = lo; i < hi; ++i) add_respondent(part, grid, bins, i);
        partials[shard] = std::move(part);
    }

    CountTables total = std::move(partials[0]);
    for (int shard = 1; shard < nw; ++shard) add_cells(total, partials[shard]);
    finalize_blocks(total, blocks);
    return total;
}

CountTables merge(const CountTables& a, const CountTables& b) {
    if (!a.same_shape(b)) throw InvariantError("merge: count table shapes differ");
    CountTables out = a;
    add_cells(out, b);
    for (size_t i = 0; i < out.block_transitions.size(); ++i) {
        out.block_transitions[i] += b.block_transitions[i];
    }
    for (size_t i = 0; i < out.block_exposures.size(); ++i) {
        out.block_exposures[i] += b.block_exposures[i];
        out.block_exits[i] += b.block_exits[i];
    }
    return out;
}

void write_counts_csv(const CountTables& c, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write counts dump: " + path);
    std::vector<std::string> row = {"table", "g", "t", "s", "s2", "m", "value"};
    csv::write_row(out, row);
    auto emit = [&](const char* table, const std::string& g, int t, int s, int s2, int m,
                    double v) {
        if (v == 0.0) return;
        row = {table,
               g,
               t >= 0 ? std::to_string(t) : "",
               std::to_string(s),
               s2 >= 0 ? std::to_string(s2) : "",
               m >= 0 ? std::to_string(m) : "",
               csv::format_double(v)};
        csv::write_row(out, row);
    };
    for (int g = 0; g < c.num_groups(); ++g) {
        for (int t = 0; t + 1 < c.T; ++t) {
            for (int s = 0; s < c.K; ++s) {
                for (int s2 = 0; s2 < c.K; ++s2)
                    emit("C", c.groups[g], t + 1, s, s2, -1, c.transitions[c.c_idx(g, t, s, s2)]);
                for (int m = 0; m < c.M; ++m) {
                    emit("N", c.groups[g], t + 1, s, -1, m, c.exposures[c.ne_idx(g, t, s, m)]);
                    emit("E", c.groups[g], t + 1, s, -1, m, c.exits[c.ne_idx(g, t, s, m)]);
                }
            }
        }
        for (int s = 0; s < c.K; ++s) emit("C0", c.groups[g], -1, s, -1, -1, c.initial[c.c0_idx(g, s)]);
    }
    for (int b = 0; b < c.B; ++b) {
        const std::string bg = "block" + std::to_string(b);
        for (int s = 0; s < c.K; ++s) {
            for (int s2 = 0; s2 < c.K; ++s2)
                emit("Cb", bg, -1, s, s2, -1, c.block_transitions[c.cb_idx(b, s, s2)]);
            for (int m = 0; m < c.M; ++m) {
                emit("Nb", bg, -1, s, -1, m, c.block_exposures[c.nb_idx(b, s, m)]);
                emit("Eb", bg, -1, s, -1, m, c.block_exits[c.nb_idx(b, s, m)]);
            }
        }
    }
}

namespace serial_ref {

CountTables accumulate(const DiaryGrid& grid, const RunLengthBins& bins, const BlockMap& blocks,
                       int num_states) {
    CountTables c = make_empty(grid, bins, blocks, num_states);
    for (int i = 0; i < grid.size(); ++i) add_respondent(c, grid, bins, i);
    finalize_blocks(c, blocks);
    return c;
}

}  // namespace serial_ref

}  // namespace actseq
