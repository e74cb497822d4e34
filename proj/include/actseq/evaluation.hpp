#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "actseq/estimator.hpp"

namespace actseq {

/// Per-respondent numerators kept for paired bootstrap resampling.
struct RespondentMetrics {
    double weight = 0.0;
    int n_transitions = 0;
    double sum_nll = 0.0;      // sum over transitions of -log p(observed)
    int n_top1_correct = 0;
    int n_floored = 0;         // probabilities clipped at the 1e-300 floor
};

struct EvalReport {
    std::string model_id;
    double nll = 0.0;   // weighted sum_nll / weighted transitions
    double top1 = 0.0;  // weighted correct / weighted transitions
    std::vector<std::string> respondent_ids;
    std::vector<RespondentMetrics> per_respondent;
    long n_floored = 0;
};

/// Scores held-out diaries with one-step probabilities (router row in Markov
/// mode; hazard-composed distribution with the observed run length in
/// semi-Markov mode). Transitions run over slots 1..T-1. Argmax ties break
/// toward the lowest state id. Unseen groups are an error. Parallel across
/// respondents; output independent of worker count.
EvalReport evaluate(const ModelParams& params, const DiaryGrid& test,
                    const std::string& model_id = "", int workers = 0);

struct CIRecord {
    std::string pair;    // "<model_a>/<model_b>"
    std::string metric;  // "nll" | "top1"
    double mean_delta = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    int B = 0;
    double alpha = 0.0;
    std::uint64_t seed = 0;
};

struct BootstrapResult {
    CIRecord nll;
    CIRecord top1;
    std::vector<std::string> warnings;
};

/// Percentile bootstrap over respondents for Delta = metric(a) - metric(b).
/// Each replicate resamples respondents with replacement (replicate r uses
/// child_seed(seed, r)) and recomputes both ratio-of-weighted-sums metrics
/// from the stored numerators/denominators. CI bounds are the alpha/2 and
/// 1-alpha/2 empirical quantiles with linear interpolation between order
/// statistics. Requires identical respondent sets in a and b.
BootstrapResult paired_bootstrap(const EvalReport& a, const EvalReport& b, int B, double alpha,
                                 std::uint64_t seed, int workers = 0);

/// Whole-sequence likelihood ratio implied by a per-transition NLL gap:
/// exp(delta_nll * steps), steps defaulting to the 143 transitions of a day.
double likelihood_ratio(double delta_nll, int steps = 143);

struct ComparisonRow {
    std::string id;
    std::string mode;
    double nll = 0.0;
    double top1 = 0.0;
    std::optional<double> delta_nll_vs_baseline;  // baseline rows carry nullopt
};

struct Comparison {
    std::vector<ComparisonRow> rows;
    std::vector<CIRecord> covariate_cis;  // baseline vs variant, per mode family
    std::vector<CIRecord> hazard_cis;     // Markov vs semi-Markov, same spec
};

/// Evaluates every model on one shared holdout and emits comparison rows
/// plus bootstrap CIs. The first Markov model is the Markov baseline, the
/// first semi-Markov model the semi-Markov baseline; models with the same
/// spec id across modes form the hazard pairs. Deltas are
/// NLL(baseline) - NLL(variant) and NLL(markov) - NLL(semi), so positive
/// means the second model is better.
Comparison compare_models(const std::vector<std::pair<std::string, const ModelParams*>>& models,
                          const DiaryGrid& test, int B, double alpha, std::uint64_t seed,
                          int workers = 0);

/// One point of an empirical survival curve: P(dwell >= duration).
struct SurvivalPoint {
    int duration = 0;
    double survival = 0.0;
};

/// Weighted Kaplan-Meier survival of within-day dwell spells of a state.
/// Spells cut off by the end of the diary are right-censored. Curve spans
/// d = 1 .. max observed duration + 1; empty when the state never occurs.
std::vector<SurvivalPoint> dwell_survival(const DiaryGrid& grid, int state);

/// Weighted empirical P(next = s_to | current = s_from at slot t) per source
/// slot. Slots with zero exposure give nullopt (missing, not zero).
std::vector<std::optional<double>> transition_timeseries(const DiaryGrid& grid, int s_from,
                                                         int s_to);

struct OccupancyCurves {
    std::vector<std::string> groups;
    std::vector<std::vector<double>> curves;  // [group][slot]
};

/// Weighted P(in `state` at slot t), one curve per group of the spec.
OccupancyCurves occupancy_curves(const DiaryGrid& grid, int state, const CovariateSpec& spec);

namespace serial_ref {

/// Single-threaded evaluation, kept as the oracle for the parallel kernel.
EvalReport evaluate(const ModelParams& params, const DiaryGrid& test,
                    const std::string& model_id = "");

}  // namespace serial_ref

}  // namespace actseq
