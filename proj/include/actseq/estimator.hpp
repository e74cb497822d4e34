#pragma once

#include <span>
#include <string>
#include <vector>

#include "actseq/counts.hpp"
#include "actseq/diary.hpp"

namespace actseq {

/// Shrinkage hyperparameters. tau (router) and kappa (hazard) are per block;
/// k is the uniform smoothing mass shared by the router and the initial
/// distribution. All must be strictly positive for a valid fit.
struct Hyperparams {
    std::vector<double> tau;
    double k = 1.0;
    std::vector<double> kappa;

    /// tau = kappa = 20, k = 1 for every block: a slot needs on the order of
    /// 20 effective observations before it outweighs its block prior.
    static Hyperparams defaults(int num_blocks);

    void validate(int num_blocks) const;
};

enum class ModelMode { Markov, SemiMarkov };

const char* mode_name(ModelMode mode);
ModelMode mode_from_name(const std::string& name);

/// Fitted posterior-mean parameter bundle.
///   pi[g][s]          initial state probabilities
///   theta[g][t][s][s2] router posteriors, t over source slots 1..T-1
///   hazard[g][t][s][m] exit probabilities (semi-Markov only)
struct ModelParams {
    ModelMode mode = ModelMode::SemiMarkov;
    int K = 0;
    int T = 0;
    int M = 0;
    std::vector<std::string> groups;
    RunLengthBins bins;
    BlockMap blocks;
    Hyperparams hp;
    std::string spec_id;
    std::string covariate;
    std::string taxonomy_version = kTaxonomyVersion;

    std::vector<double> pi;
    std::vector<double> theta;
    std::vector<double> hazard;

    int num_groups() const { return static_cast<int>(groups.size()); }
    size_t pi_idx(int g, int s) const { return static_cast<size_t>(g) * K + s; }
    size_t theta_idx(int g, int t, int s, int s2) const {
        return ((static_cast<size_t>(g) * (T - 1) + t) * K + s) * K + s2;
    }
    size_t hazard_idx(int g, int t, int s, int m) const {
        return ((static_cast<size_t>(g) * (T - 1) + t) * K + s) * M + m;
    }
    /// Router row for (group g, source slot t+1 zero-based t, state s).
    std::span<const double> theta_row(int g, int t, int s) const {
        return {theta.data() + theta_idx(g, t, s, 0), static_cast<size_t>(K)};
    }
    int group_index(const std::string& label) const;
};

/// Block prototype router: row-normalized pooled block counts. An all-zero
/// row falls back to the uniform row 1/K. Returns [b][s][s2].
std::vector<double> prototype_router(const CountTables& counts);

/// Slot-level router posterior mean:
///   (C + tau_b * theta_bar + k/K) / (sum_j C + tau_b + k),  b = block(t).
/// Returns [g][t][s][s2].
std::vector<double> posterior_router(const CountTables& counts,
                                     const std::vector<double>& theta_bar, const Hyperparams& hp);

/// Block prototype hazard Eb/Nb, 0.5 where the block has no exposure, and
/// clamped to [1e-6, 1-1e-6]. Returns [b][s][m].
std::vector<double> prototype_hazard(const CountTables& counts);

/// Hazard posterior mean (E + kappa_b * h_bar) / (N + kappa_b).
/// Returns [g][t][s][m].
std::vector<double> posterior_hazard(const CountTables& counts, const std::vector<double>& h_bar,
                                     const Hyperparams& hp);

/// Smoothed initial distribution (C0 + k/K) / (group weight + k). Uniform
/// when a group is empty. Returns [g][s].
std::vector<double> initial_distribution(const CountTables& counts, const Hyperparams& hp);

/// Conditional destination distribution phi[s2] = theta[s2] / (1 - theta[s])
/// for s2 != s; entry s is 0. Throws InvariantError when 1 - theta[s] < 1e-9
/// (cannot condition on leaving); callers that must stay total use
/// destination_or_uniform.
std::vector<double> destination_distribution(std::span<const double> theta_row, int s);

/// destination_distribution with the degenerate-row fallback: uniform over
/// the K-1 other states.
std::vector<double> destination_or_uniform(std::span<const double> theta_row, int s);

/// Full fit: accumulate -> prototypes -> posteriors -> initial distributions.
/// Assigns groups per `spec` (rejecting unbinnable respondents is the
/// caller's job; any here is an error) and fails on an empty stratum.
ModelParams fit(const DiaryGrid& train, const CovariateSpec& spec, const Hyperparams& hp,
                ModelMode mode, const RunLengthBins& bins, const BlockMap& blocks,
                int workers = 0);

/// Checks the ModelParams invariants (rows sum to 1 within 1e-12, theta > 0,
/// hazard in (0,1)); throws InvariantError with the offending cell.
void validate(const ModelParams& params);

}  // namespace actseq
