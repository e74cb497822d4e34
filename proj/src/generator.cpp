#include "actseq/generator.hpp"

#include <omp.h>

#include "actseq/errors.hpp"
#include "actseq/rng.hpp"

namespace actseq {

void one_step_distribution(const ModelParams& p, int s, int ell, int g, int t,
                           std::span<double> out) {
    if (t < 1 || t >= p.T) {
        throw InputError("one_step_distribution: slot " + std::to_string(t) +
                         " out of [1, " + std::to_string(p.T - 1) + "]");
    }
    if (ell < 1) throw InputError("one_step_distribution: run length must be >= 1");
    const auto row = p.theta_row(g, t - 1, s);
    if (p.mode == ModelMode::Markov) {
        std::copy(row.begin(), row.end(), out.begin());
        return;
    }
    const int m = p.bins.bin_of(ell);
    const double h = p.hazard[p.hazard_idx(g, t - 1, s, m)];
    const double leave = 1.0 - row[s];
    if (leave < 1e-9) {
        // Degenerate self-row: uniform over the other states.
        const double each = h / (p.K - 1);
        for (int s2 = 0; s2 < p.K; ++s2) out[s2] = each;
    } else {
        for (int s2 = 0; s2 < p.K; ++s2) out[s2] = h * (row[s2] / leave);
    }
    out[s] = 1.0 - h;
}

std::vector<double> one_step_distribution(const ModelParams& p, int s, int ell, int g, int t) {
    std::vector<double> out(static_cast<size_t>(p.K));
    one_step_distribution(p, s, ell, g, t, out);
    return out;
}

namespace {

/// Inverse-CDF draw from the conditional destination distribution
/// phi = row/(1 - row[s]) off the diagonal, without materializing phi.
/// Identical draw semantics to sample_categorical over the phi vector.
int sample_destination(std::span<const double> row, int s, double u) {
    const int K = static_cast<int>(row.size());
    const double leave = 1.0 - row[s];
    double cum = 0.0;
    int last_positive = -1;
    if (leave < 1e-9) {
        const double each = 1.0 / (row.size() - 1);
        for (int i = 0; i < K; ++i) {
            if (i == s) continue;
            last_positive = i;
            cum += each;
            if (u < cum) return i;
        }
        return last_positive;
    }
    for (int i = 0; i < K; ++i) {
        const double prob = i == s ? 0.0 : row[i] / leave;
        if (prob > 0.0) last_positive = i;
        cum += prob;
        if (u < cum) return i;
    }
    return last_positive >= 0 ? last_positive : K - 1;
}

void generate_day_into(const ModelParams& p, int g, std::uint64_t seed, std::uint8_t* out) {
    SplitMix64 rng(seed);
    const std::span<const double> pi{p.pi.data() + p.pi_idx(g, 0), static_cast<size_t>(p.K)};
    int s = sample_categorical(pi, rng.next_double());
    out[0] = static_cast<std::uint8_t>(s);
    int run = 1;
    for (int t = 1; t < p.T; ++t) {
        const auto row = p.theta_row(g, t - 1, s);
        int next;
        if (p.mode == ModelMode::Markov) {
            next = sample_categorical(row, rng.next_double());
        } else {
            const int m = p.bins.bin_of(run);
            const double h = p.hazard[p.hazard_idx(g, t - 1, s, m)];
            next = rng.next_double() < h ? sample_destination(row, s, rng.next_double()) : s;
        }
        run = (next == s) ? run + 1 : 1;
        s = next;
        out[t] = static_cast<std::uint8_t>(s);
    }
}

void check_group(const ModelParams& p, int g) {
    if (g < 0 || g >= p.num_groups()) {
        throw InputError("unknown group index " + std::to_string(g) + " (model has " +
                         std::to_string(p.num_groups()) + ")");
    }
}

}  // namespace

std::vector<std::uint8_t> generate_day(const ModelParams& p, int g, std::uint64_t seed) {
    check_group(p, g);
    std::vector<std::uint8_t> day(static_cast<size_t>(p.T));
    generate_day_into(p, g, seed, day.data());
    return day;
}

std::vector<std::uint8_t> generate_batch(const ModelParams& p, int g, int n, std::uint64_t seed,
                                         int workers) {
    check_group(p, g);
    if (n < 1) throw InputError("generate_batch: n must be >= 1");
    std::vector<std::uint8_t> out(static_cast<size_t>(n) * p.T);
    const int nw = workers > 0 ? workers : omp_get_max_threads();
#pragma omp parallel for num_threads(nw) schedule(static)
    for (int j = 0; j < n; ++j) {
        generate_day_into(p, g, child_seed(seed, static_cast<std::uint64_t>(j)),
                          out.data() + static_cast<size_t>(j) * p.T);
    }
    return out;
}

DiaryGrid grid_from_sequences(const std::vector<std::uint8_t>& sequences, int slots,
                              const Covariates& covs, const std::string& id_prefix) {
    if (slots <= 0 || sequences.size() % static_cast<size_t>(slots) != 0) {
        throw InvariantError("grid_from_sequences: sequence buffer is not a multiple of slots");
    }
    DiaryGrid grid;
    grid.slots = slots;
    const int n = static_cast<int>(sequences.size() / static_cast<size_t>(slots));
    for (int i = 0; i < n; ++i) {
        grid.push_row(id_prefix + std::to_string(i), 1.0, covs,
                      {sequences.data() + static_cast<size_t>(i) * slots,
                       static_cast<size_t>(slots)});
    }
    return grid;
}

namespace serial_ref {

std::vector<std::uint8_t> generate_batch(const ModelParams& p, int g, int n, std::uint64_t seed) {
    check_group(p, g);
    std::vector<std::uint8_t> out(static_cast<size_t>(n) * p.T);
    for (int j = 0; j < n; ++j) {
        generate_day_into(p, g, child_seed(seed, static_cast<std::uint64_t>(j)),
                          out.data() + static_cast<size_t>(j) * p.T);
    }
    return out;
}

}  // namespace serial_ref

}  // namespace actseq
