#pragma once

#include <cstdint>
#include <vector>

#include "actseq/estimator.hpp"

namespace actseq {

/// One-step transition distribution from state s at 1-based slot t with
/// current run length ell:
///   semi-Markov: P(stay) = 1 - h, P(s2 != s) = h * phi[s2], m = bin(ell);
///   Markov: the router row itself.
/// The vector sums to 1 (phi rows are exact simplex renormalizations).
std::vector<double> one_step_distribution(const ModelParams& params, int s, int ell, int g,
                                          int t);

/// Same, written into a caller-owned buffer of size K (hot loops score
/// millions of transitions; this variant does not allocate).
void one_step_distribution(const ModelParams& params, int s, int ell, int g, int t,
                           std::span<double> out);

/// Simulates one 24-hour sequence for group g. Draw order (one SplitMix64
/// stream per day, seeded with `seed`): first the initial state, then per
/// slot a hazard uniform and, only on exit, a destination uniform. Markov
/// mode draws the next state directly from the router row each slot.
std::vector<std::uint8_t> generate_day(const ModelParams& params, int g, std::uint64_t seed);

/// n days; day j uses child_seed(seed, j), so the batch is reproducible and
/// independent of worker count and scheduling. Output is row-major n x T.
std::vector<std::uint8_t> generate_batch(const ModelParams& params, int g, int n,
                                         std::uint64_t seed, int workers = 0);

/// Wraps generated sequences in a DiaryGrid (weights 1, synthetic ids,
/// covariates copied from `covs`), ready for counting or evaluation.
DiaryGrid grid_from_sequences(const std::vector<std::uint8_t>& sequences, int slots,
                              const Covariates& covs, const std::string& id_prefix);

namespace serial_ref {

/// Loop-per-day reference used to pin the parallel batch kernel.
std::vector<std::uint8_t> generate_batch(const ModelParams& params, int g, int n,
                                         std::uint64_t seed);

}  // namespace serial_ref

}  // namespace actseq
