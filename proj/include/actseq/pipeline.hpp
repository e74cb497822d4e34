#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "actseq/estimator.hpp"

namespace actseq {

/// One config drives the whole pipeline; command-line flags override single
/// fields. Every output manifest echoes the config and all seeds.
struct RunConfig {
    std::string episodes_csv;
    std::string rules_json;  // empty = bundled defaults
    std::string output_dir = "out";
    std::string grid_csv;    // empty = <output_dir>/grid.csv

    std::string spec_id = "S0";
    ModelMode mode = ModelMode::SemiMarkov;
    double tau = 20.0;
    double k = 1.0;
    double kappa = 20.0;
    std::vector<double> tau_per_block;    // optional per-block override
    std::vector<double> kappa_per_block;  // optional per-block override
    std::vector<int> bin_lower_bounds = RunLengthBins::defaults().lower_bounds;

    double test_fraction = 0.2;
    std::uint64_t seed_split = 1;
    std::uint64_t seed_fit = 2;
    std::uint64_t seed_generate = 3;
    std::uint64_t seed_bootstrap = 4;
    int bootstrap_B = 2000;
    double bootstrap_alpha = 0.05;

    /// "joint" stratifies the train/test split by the combined label of all
    /// six covariates; a spec id (S0..S6) stratifies by that grouping alone.
    std::string stratify_by = "S0";
    int workers = 0;

    RunLengthBins bins() const;
    Hyperparams hyperparams(int num_blocks) const;
};

RunConfig load_config(const std::string& path);
void apply_config_json(RunConfig& config, const nlohmann::json& doc, const std::string& origin);

/// Canonical JSON echo of a config (stable key order; used for manifests and
/// hashing).
nlohmann::ordered_json config_json(const RunConfig& config);

/// FNV-1a hash (hex) of the canonical config serialization.
std::string config_hash(const RunConfig& config);

/// Model id used on disk and in reports: spec id plus "-H" for semi-Markov.
std::string model_id(const std::string& spec_id, ModelMode mode);

/// build-grid: episodes -> grid.csv + rejects.csv + summary.json + manifest.
/// Fails (InputError) when no respondent survives ingestion.
void cmd_build_grid(const RunConfig& config);

/// fit: grid -> model bundle under <output_dir>/models/<model-id>/.
/// The train side comes from the seeded stratified split; respondents not
/// binnable under every covariate spec are set aside first so that all
/// models fitted from one grid share one holdout. With dump_counts, the
/// training count tables land in the bundle as counts.csv (one row per
/// nonzero cell) for auditing.
std::string cmd_fit(const RunConfig& config, bool dump_counts = false);

/// evaluate: bundle + grid -> eval_summary.csv + eval_respondents.csv.
/// The holdout is recomputed from the split settings recorded in the bundle
/// manifest, not from the current config.
void cmd_evaluate(const RunConfig& config, const std::string& bundle_dir);

/// bootstrap: two bundles + grid -> ci.csv with ΔNLL and ΔTop-1 records.
void cmd_bootstrap(const RunConfig& config, const std::string& bundle_a,
                   const std::string& bundle_b);

/// run-matrix: fits S0..S6 in both modes (14 models), evaluates all on the
/// shared holdout, writes comparison.csv, ci_covariates.csv, ci_hazard.csv.
void cmd_run_matrix(const RunConfig& config);

/// generate: bundle -> synthetic diaries CSV ("wide" = one row per diary,
/// "long" = one row per slot).
void cmd_generate(const RunConfig& config, const std::string& bundle_dir,
                  const std::string& group, int n, const std::string& format,
                  const std::string& out_csv);

/// diagnostics: grid -> survival.csv, occupancy.csv, transitions.csv.
void cmd_diagnostics(const RunConfig& config);

/// map-codes: codes CSV (code6, description) -> mapping CSV + coverage
/// report on stdout.
void cmd_map_codes(const RunConfig& config, const std::string& codes_csv,
                   const std::string& out_csv);

}  // namespace actseq
