#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "actseq/counts.hpp"
#include "actseq/diary.hpp"
#include "actseq/estimator.hpp"
#include "actseq/rng.hpp"

namespace actseq::test {

inline Covariates default_covs() {
    return {"Male", "South", "Employed", "Weekday", 2, "2023-03-15"};
}

/// Grid from explicit state rows (any horizon), S0 group pre-assigned.
inline DiaryGrid make_grid(const std::vector<std::vector<std::uint8_t>>& rows,
                           const std::vector<double>& weights, int slots) {
    DiaryGrid grid;
    grid.slots = slots;
    for (size_t i = 0; i < rows.size(); ++i) {
        grid.push_row("r" + std::to_string(i), weights[i], default_covs(),
                      {rows[i].data(), rows[i].size()});
    }
    grid.group_labels = {"ALL"};
    for (int& g : grid.group) g = 0;
    return grid;
}

inline DiaryGrid make_grid_unit_weights(const std::vector<std::vector<std::uint8_t>>& rows,
                                        int slots) {
    return make_grid(rows, std::vector<double>(rows.size(), 1.0), slots);
}

/// A random small instance for posterior oracle checks: K<=3, T<=4, M<=2,
/// up to 6 respondents with uneven weights, 1-2 groups, 1-2 blocks.
struct TinyInstance {
    int K = 2;
    DiaryGrid grid;
    RunLengthBins bins;
    BlockMap blocks;
    Hyperparams hp;
};

inline TinyInstance random_tiny_instance(SplitMix64& rng) {
    TinyInstance inst;
    inst.K = 2 + static_cast<int>(rng.next_double() * 2.0);        // 2..3
    const int T = 2 + static_cast<int>(rng.next_double() * 3.0);   // 2..4
    const int M = 1 + static_cast<int>(rng.next_double() * 2.0);   // 1..2
    const int n = 1 + static_cast<int>(rng.next_double() * 6.0);   // 1..6
    const int G = 1 + static_cast<int>(rng.next_double() * 2.0);   // 1..2
    const int B = 1 + static_cast<int>(rng.next_double() * 2.0);   // 1..2

    inst.bins = M == 1 ? RunLengthBins{{1}} : RunLengthBins{{1, 2}};
    inst.blocks.labels.resize(B);
    for (int b = 0; b < B; ++b) inst.blocks.labels[b] = "B" + std::to_string(b);
    inst.blocks.slot_block.resize(T);
    for (int t = 0; t < T; ++t) {
        inst.blocks.slot_block[t] = B == 1 ? 0 : static_cast<int>(rng.next_double() * B);
    }

    inst.grid.slots = T;
    std::vector<std::uint8_t> row(T);
    for (int i = 0; i < n; ++i) {
        for (int t = 0; t < T; ++t) {
            row[t] = static_cast<std::uint8_t>(rng.next_double() * inst.K);
        }
        inst.grid.push_row("r" + std::to_string(i), 0.25 + 4.0 * rng.next_double(),
                           default_covs(), row);
    }
    inst.grid.group_labels.clear();
    for (int g = 0; g < G; ++g) inst.grid.group_labels.push_back("G" + std::to_string(g));
    for (int i = 0; i < n; ++i) {
        inst.grid.group[i] = G == 1 ? 0 : static_cast<int>(rng.next_double() * G);
    }

    inst.hp.k = 0.1 + 3.0 * rng.next_double();
    for (int b = 0; b < B; ++b) {
        inst.hp.tau.push_back(0.2 + 10.0 * rng.next_double());
        inst.hp.kappa.push_back(0.2 + 10.0 * rng.next_double());
    }
    return inst;
}

/// Posterior-mean closed forms computed the long way, straight from raw
/// weighted indicator sums over the grid, with the unsimplified Dirichlet and
/// Beta mean expressions (alpha'/sum alpha', alpha'/(alpha'+beta')). Entirely
/// independent of CountTables/estimator internals.
struct BruteForceFit {
    std::vector<double> theta;   // [g][t][s][s2]
    std::vector<double> hazard;  // [g][t][s][m]
    std::vector<double> pi;      // [g][s]
};

inline BruteForceFit brute_force_appendix_b(const DiaryGrid& grid, int K,
                                            const RunLengthBins& bins, const BlockMap& blocks,
                                            const Hyperparams& hp) {
    const int T = grid.slots;
    const int M = bins.count();
    const int B = blocks.count();
    const int G = static_cast<int>(grid.group_labels.size());
    const int n = grid.size();

    auto C = [&](int g, int t, int s, int s2) {  // t is 1-based source slot
        double sum = 0.0;
        for (int i = 0; i < n; ++i) {
            if (grid.group[i] != g) continue;
            const auto st = grid.states_of(i);
            if (st[t - 1] == s && st[t] == s2) sum += grid.weights[i];
        }
        return sum;
    };
    auto N = [&](int g, int t, int s, int m) {
        double sum = 0.0;
        for (int i = 0; i < n; ++i) {
            if (grid.group[i] != g) continue;
            const auto st = grid.states_of(i);
            const auto rl = grid.run_len_of(i);
            if (st[t - 1] == s && bins.bin_of(rl[t - 1]) == m) sum += grid.weights[i];
        }
        return sum;
    };
    auto E = [&](int g, int t, int s, int m) {
        double sum = 0.0;
        for (int i = 0; i < n; ++i) {
            if (grid.group[i] != g) continue;
            const auto st = grid.states_of(i);
            const auto rl = grid.run_len_of(i);
            if (st[t - 1] == s && st[t] != s && bins.bin_of(rl[t - 1]) == m) {
                sum += grid.weights[i];
            }
        }
        return sum;
    };

    BruteForceFit fit;
    fit.theta.assign(static_cast<size_t>(G) * (T - 1) * K * K, 0.0);
    fit.hazard.assign(static_cast<size_t>(G) * (T - 1) * K * M, 0.0);
    fit.pi.assign(static_cast<size_t>(G) * K, 0.0);

    for (int g = 0; g < G; ++g) {
        for (int t = 1; t < T; ++t) {
            const int b = blocks.block_of_slot(t);
            for (int s = 0; s < K; ++s) {
                // Block prototype row: pooled over all groups and the block's
                // slots on the fly.
                std::vector<double> cb(static_cast<size_t>(K), 0.0);
                double cb_sum = 0.0;
                for (int g2 = 0; g2 < G; ++g2) {
                    for (int t2 = 1; t2 < T; ++t2) {
                        if (blocks.block_of_slot(t2) != b) continue;
                        for (int s2 = 0; s2 < K; ++s2) {
                            cb[s2] += C(g2, t2, s, s2);
                        }
                    }
                }
                for (double v : cb) cb_sum += v;
                std::vector<double> theta_bar(static_cast<size_t>(K));
                for (int s2 = 0; s2 < K; ++s2) {
                    theta_bar[s2] = cb_sum > 0.0 ? cb[s2] / cb_sum : 1.0 / K;
                }

                std::vector<double> alpha(static_cast<size_t>(K));
                double alpha_sum = 0.0;
                for (int s2 = 0; s2 < K; ++s2) {
                    alpha[s2] = C(g, t, s, s2) + hp.tau[b] * theta_bar[s2] + hp.k / K;
                    alpha_sum += alpha[s2];
                }
                for (int s2 = 0; s2 < K; ++s2) {
                    fit.theta[((static_cast<size_t>(g) * (T - 1) + (t - 1)) * K + s) * K + s2] =
                        alpha[s2] / alpha_sum;
                }

                for (int m = 0; m < M; ++m) {
                    double nb = 0.0, eb = 0.0;
                    for (int g2 = 0; g2 < G; ++g2) {
                        for (int t2 = 1; t2 < T; ++t2) {
                            if (blocks.block_of_slot(t2) != b) continue;
                            nb += N(g2, t2, s, m);
                            eb += E(g2, t2, s, m);
                        }
                    }
                    double h_bar = nb > 0.0 ? eb / nb : 0.5;
                    h_bar = std::min(std::max(h_bar, 1e-6), 1.0 - 1e-6);
                    const double a_post = hp.kappa[b] * h_bar + E(g, t, s, m);
                    const double b_post =
                        hp.kappa[b] * (1.0 - h_bar) + (N(g, t, s, m) - E(g, t, s, m));
                    fit.hazard[((static_cast<size_t>(g) * (T - 1) + (t - 1)) * K + s) * M + m] =
                        a_post / (a_post + b_post);
                }
            }
        }
        std::vector<double> c0(static_cast<size_t>(K), 0.0);
        for (int i = 0; i < n; ++i) {
            if (grid.group[i] == g) c0[grid.states_of(i)[0]] += grid.weights[i];
        }
        double denom = 0.0;
        for (int s = 0; s < K; ++s) denom += c0[s] + hp.k / K;
        for (int s = 0; s < K; ++s) {
            fit.pi[static_cast<size_t>(g) * K + s] = (c0[s] + hp.k / K) / denom;
        }
    }
    return fit;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double worst = 0.0;
    for (size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
    return worst;
}

}  // namespace actseq::test
