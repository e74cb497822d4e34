#include "actseq/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include "actseq/csv.hpp"
#include "actseq/errors.hpp"
#include "actseq/evaluation.hpp"
#include "actseq/generator.hpp"
#include "actseq/model_io.hpp"
#include "actseq/rng.hpp"
#include "actseq/taxonomy.hpp"

namespace actseq {

namespace fs = std::filesystem;

RunLengthBins RunConfig::bins() const { return RunLengthBins::validated(bin_lower_bounds); }

Hyperparams RunConfig::hyperparams(int num_blocks) const {
    Hyperparams hp;
    hp.k = k;
    hp.tau = tau_per_block.empty() ? std::vector<double>(static_cast<size_t>(num_blocks), tau)
                                   : tau_per_block;
    hp.kappa = kappa_per_block.empty()
                   ? std::vector<double>(static_cast<size_t>(num_blocks), kappa)
                   : kappa_per_block;
    hp.validate(num_blocks);
    return hp;
}

void apply_config_json(RunConfig& c, const nlohmann::json& doc, const std::string& origin) {
    if (!doc.is_object()) throw InputError(origin + ": config must be a JSON object");
    try {
        if (doc.contains("episodes_csv")) c.episodes_csv = doc.at("episodes_csv");
        if (doc.contains("rules_json")) c.rules_json = doc.at("rules_json");
        if (doc.contains("output_dir")) c.output_dir = doc.at("output_dir");
        if (doc.contains("grid_csv")) c.grid_csv = doc.at("grid_csv");
        if (doc.contains("spec")) c.spec_id = doc.at("spec");
        if (doc.contains("mode")) c.mode = mode_from_name(doc.at("mode"));
        if (doc.contains("hyperparams")) {
            const auto& hp = doc.at("hyperparams");
            if (hp.contains("tau")) c.tau = hp.at("tau");
            if (hp.contains("k")) c.k = hp.at("k");
            if (hp.contains("kappa")) c.kappa = hp.at("kappa");
            if (hp.contains("tau_per_block"))
                c.tau_per_block = hp.at("tau_per_block").get<std::vector<double>>();
            if (hp.contains("kappa_per_block"))
                c.kappa_per_block = hp.at("kappa_per_block").get<std::vector<double>>();
        }
        if (doc.contains("bins")) c.bin_lower_bounds = doc.at("bins").get<std::vector<int>>();
        if (doc.contains("test_fraction")) c.test_fraction = doc.at("test_fraction");
        if (doc.contains("seeds")) {
            const auto& seeds = doc.at("seeds");
            if (seeds.contains("split")) c.seed_split = seeds.at("split");
            if (seeds.contains("fit")) c.seed_fit = seeds.at("fit");
            if (seeds.contains("generate")) c.seed_generate = seeds.at("generate");
            if (seeds.contains("bootstrap")) c.seed_bootstrap = seeds.at("bootstrap");
        }
        if (doc.contains("bootstrap")) {
            const auto& boot = doc.at("bootstrap");
            if (boot.contains("B")) c.bootstrap_B = boot.at("B");
            if (boot.contains("alpha")) c.bootstrap_alpha = boot.at("alpha");
        }
        if (doc.contains("stratify_by")) c.stratify_by = doc.at("stratify_by");
        if (doc.contains("workers")) c.workers = doc.at("workers");
    } catch (const nlohmann::json::exception& e) {
        throw InputError(origin + ": " + e.what());
    }
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open config: " + path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw InputError(path + ": " + e.what());
    }
    RunConfig config;
    apply_config_json(config, doc, path);
    return config;
}

nlohmann::ordered_json config_json(const RunConfig& c) {
    nlohmann::ordered_json j;
    j["episodes_csv"] = c.episodes_csv;
    j["rules_json"] = c.rules_json;
    j["output_dir"] = c.output_dir;
    j["grid_csv"] = c.grid_csv;
    j["spec"] = c.spec_id;
    j["mode"] = mode_name(c.mode);
    j["hyperparams"] = {{"tau", c.tau},
                        {"k", c.k},
                        {"kappa", c.kappa},
                        {"tau_per_block", c.tau_per_block},
                        {"kappa_per_block", c.kappa_per_block}};
    j["bins"] = c.bin_lower_bounds;
    j["test_fraction"] = c.test_fraction;
    j["seeds"] = {{"split", c.seed_split},
                  {"fit", c.seed_fit},
                  {"generate", c.seed_generate},
                  {"bootstrap", c.seed_bootstrap}};
    j["bootstrap"] = {{"B", c.bootstrap_B}, {"alpha", c.bootstrap_alpha}};
    j["stratify_by"] = c.stratify_by;
    j["workers"] = c.workers;
    return j;
}

std::string config_hash(const RunConfig& c) {
    const std::string text = config_json(c).dump();
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string model_id(const std::string& spec_id, ModelMode mode) {
    return mode == ModelMode::SemiMarkov ? spec_id + "-H" : spec_id;
}

namespace {

std::string grid_path(const RunConfig& c) {
    return c.grid_csv.empty() ? (fs::path(c.output_dir) / "grid.csv").string() : c.grid_csv;
}

void write_json_file(const fs::path& path, const nlohmann::ordered_json& doc) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    out << doc.dump(2) << "\n";
}

/// Every command leaves its own manifest (manifest_<command>.json) so that
/// commands sharing one output directory never clobber each other's record.
/// Deliberately contains nothing that varies between identical runs (no
/// timestamps, no hostnames).
void write_manifest(const RunConfig& c, const std::string& command, const fs::path& dir,
                    std::vector<std::string> outputs,
                    nlohmann::ordered_json extra = nlohmann::ordered_json::object()) {
    nlohmann::ordered_json m;
    m["tool"] = "actseq";
    m["command"] = command;
    m["config"] = config_json(c);
    m["config_hash"] = config_hash(c);
    m["outputs"] = outputs;
    for (auto& [key, value] : extra.items()) m[key] = value;
    std::string name = "manifest_" + command + ".json";
    for (char& ch : name) if (ch == '-') ch = '_';
    write_json_file(dir / name, m);
}

RuleSet rules_for(const RunConfig& c) {
    return c.rules_json.empty() ? default_rules() : load_rules(c.rules_json);
}

/// Respondents binnable under every covariate spec. Filtering once up front
/// gives all models fitted from one grid the same respondent universe, so
/// their holdouts pair exactly in the bootstrap.
std::pair<DiaryGrid, std::vector<RejectedRespondent>> filter_binnable(const DiaryGrid& grid) {
    DiaryGrid kept = grid;
    std::vector<RejectedRespondent> rejects;
    for (const CovariateSpec& spec : all_covariate_specs()) {
        auto result = assign_groups(kept, spec);
        for (auto& r : result.rejects) rejects.push_back(std::move(r));
        kept = std::move(result.grid);
    }
    kept.group_labels.clear();
    for (int& g : kept.group) g = -1;
    return {std::move(kept), std::move(rejects)};
}

SplitResult split_for(const DiaryGrid& grid, std::uint64_t seed_split, double test_fraction,
                      const std::string& stratify_by) {
    if (stratify_by == "joint") return split_joint(grid, test_fraction, seed_split);
    return split(grid, test_fraction, covariate_spec(stratify_by), seed_split);
}

nlohmann::ordered_json split_settings_json(const RunConfig& c) {
    return {{"seed_split", c.seed_split},
            {"test_fraction", c.test_fraction},
            {"stratify_by", c.stratify_by}};
}

/// Split settings recorded when the bundle was fitted; evaluation must
/// reconstruct that exact holdout.
struct SplitSettings {
    std::uint64_t seed_split;
    double test_fraction;
    std::string stratify_by;
};

SplitSettings split_settings_from_bundle(const std::string& bundle_dir) {
    const auto manifest = load_manifest(bundle_dir);
    try {
        const auto& s = manifest.at("provenance").at("split");
        return {s.at("seed_split").get<std::uint64_t>(), s.at("test_fraction").get<double>(),
                s.at("stratify_by").get<std::string>()};
    } catch (const nlohmann::json::exception& e) {
        throw InputError(bundle_dir + ": manifest lacks split provenance: " + e.what());
    }
}

ModelParams fit_one(const RunConfig& c, const DiaryGrid& train, const std::string& spec_id,
                    ModelMode mode) {
    const CovariateSpec& spec = covariate_spec(spec_id);
    const BlockMap blocks = BlockMap::dayparts();
    return fit(train, spec, c.hyperparams(blocks.count()), mode, c.bins(), blocks, c.workers);
}

void save_bundle(const RunConfig& c, const ModelParams& params, const fs::path& dir,
                 int n_train, int n_test) {
    nlohmann::ordered_json provenance;
    provenance["grid_csv"] = grid_path(c);
    provenance["split"] = split_settings_json(c);
    provenance["seed_fit"] = c.seed_fit;
    provenance["config_hash"] = config_hash(c);
    provenance["n_train"] = n_train;
    provenance["n_test"] = n_test;
    save_model(params, dir.string(), provenance);
}

void write_eval_csvs(const EvalReport& report, const fs::path& dir, const std::string& stem) {
    {
        std::ofstream out(dir / (stem + "_summary.csv"), std::ios::binary);
        std::vector<std::string> row = {"model", "nll", "top1", "n_respondents", "n_floored"};
        csv::write_row(out, row);
        row = {report.model_id, csv::format_double(report.nll), csv::format_double(report.top1),
               std::to_string(report.per_respondent.size()), std::to_string(report.n_floored)};
        csv::write_row(out, row);
    }
    {
        std::ofstream out(dir / (stem + "_respondents.csv"), std::ios::binary);
        std::vector<std::string> row = {"respondent_id", "weight", "n_transitions", "sum_nll",
                                        "n_top1_correct"};
        csv::write_row(out, row);
        for (size_t i = 0; i < report.per_respondent.size(); ++i) {
            const RespondentMetrics& m = report.per_respondent[i];
            row = {report.respondent_ids[i], csv::format_double(m.weight),
                   std::to_string(m.n_transitions), csv::format_double(m.sum_nll),
                   std::to_string(m.n_top1_correct)};
            csv::write_row(out, row);
        }
    }
}

void write_ci_csv(const std::vector<CIRecord>& records, const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    std::vector<std::string> row = {"pair", "metric", "mean", "lo", "hi", "B", "alpha", "seed"};
    csv::write_row(out, row);
    for (const CIRecord& r : records) {
        row = {r.pair,
               r.metric,
               csv::format_double(r.mean_delta),
               csv::format_double(r.lo),
               csv::format_double(r.hi),
               std::to_string(r.B),
               csv::format_double(r.alpha),
               std::to_string(r.seed)};
        csv::write_row(out, row);
    }
}

}  // namespace

void cmd_build_grid(const RunConfig& c) {
    if (c.episodes_csv.empty()) throw InputError("build-grid: episodes_csv not set");
    fs::create_directories(c.output_dir);
    const RuleSet rules = rules_for(c);
    IngestResult ingest = ingest_episodes(c.episodes_csv);
    save_rejects(ingest.rejects, (fs::path(c.output_dir) / "rejects.csv").string());
    if (ingest.accepted.empty()) {
        throw InputError("build-grid: no respondent survived ingestion (see rejects.csv)");
    }
    const DiaryGrid grid = discretize(ingest.accepted, rules, c.workers);
    save_grid(grid, grid_path(c));

    // Summary: respondent count plus weight totals per covariate group.
    nlohmann::ordered_json summary;
    summary["n_respondents"] = grid.size();
    summary["n_rejected"] = ingest.rejects.size();
    double total_weight = 0.0;
    for (double w : grid.weights) total_weight += w;
    summary["total_weight"] = total_weight;
    for (const CovariateSpec& spec : all_covariate_specs()) {
        if (spec.id == "S0") continue;
        std::map<std::string, double> weight_by_group;
        for (int i = 0; i < grid.size(); ++i) {
            auto label = group_label(grid.covariates[i], spec);
            weight_by_group[label.value_or("<unbinnable>")] += grid.weights[i];
        }
        summary["weight_by_" + spec.covariate] = weight_by_group;
    }
    write_json_file(fs::path(c.output_dir) / "summary.json", summary);
    write_manifest(c, "build-grid", c.output_dir,
                   {"grid.csv", "rejects.csv", "summary.json"},
                   {{"episodes_csv", c.episodes_csv}});
}

std::string cmd_fit(const RunConfig& c, bool dump_counts) {
    const DiaryGrid grid = load_grid(grid_path(c));
    auto [binnable, dropped] = filter_binnable(grid);
    SplitResult parts = split_for(binnable, c.seed_split, c.test_fraction, c.stratify_by);
    for (const auto& w : parts.warnings) std::cerr << "warning: " << w << "\n";

    const ModelParams params = fit_one(c, parts.train, c.spec_id, c.mode);
    const std::string id = model_id(c.spec_id, c.mode);
    const fs::path dir = fs::path(c.output_dir) / "models" / id;
    save_bundle(c, params, dir, parts.train.size(), parts.test.size());
    if (dump_counts) {
        const GroupAssignResult assigned =
            assign_groups(parts.train, covariate_spec(c.spec_id));
        const CountTables counts =
            accumulate(assigned.grid, c.bins(), BlockMap::dayparts(), kNumStates, c.workers);
        write_counts_csv(counts, (dir / "counts.csv").string());
    }
    return dir.string();
}

void cmd_evaluate(const RunConfig& c, const std::string& bundle_dir) {
    const ModelParams params = load_model(bundle_dir);
    const SplitSettings ss = split_settings_from_bundle(bundle_dir);
    const DiaryGrid grid = load_grid(grid_path(c));
    auto [binnable, dropped] = filter_binnable(grid);
    SplitResult parts = split_for(binnable, ss.seed_split, ss.test_fraction, ss.stratify_by);

    const std::string id = model_id(params.spec_id, params.mode);
    const EvalReport report = evaluate(params, parts.test, id, c.workers);
    fs::create_directories(c.output_dir);
    write_eval_csvs(report, c.output_dir, "eval");
    write_manifest(c, "evaluate", c.output_dir, {"eval_summary.csv", "eval_respondents.csv"},
                   {{"bundle", bundle_dir},
                    {"n_test", parts.test.size()},
                    {"split", {{"seed_split", ss.seed_split},
                               {"test_fraction", ss.test_fraction},
                               {"stratify_by", ss.stratify_by}}}});
}

void cmd_bootstrap(const RunConfig& c, const std::string& bundle_a, const std::string& bundle_b) {
    const ModelParams pa = load_model(bundle_a);
    const ModelParams pb = load_model(bundle_b);
    const SplitSettings sa = split_settings_from_bundle(bundle_a);
    const SplitSettings sb = split_settings_from_bundle(bundle_b);
    if (sa.seed_split != sb.seed_split || sa.test_fraction != sb.test_fraction ||
        sa.stratify_by != sb.stratify_by) {
        throw InputError("bootstrap: bundles were fitted with different splits; their holdouts "
                         "cannot be paired");
    }
    const DiaryGrid grid = load_grid(grid_path(c));
    auto [binnable, dropped] = filter_binnable(grid);
    SplitResult parts = split_for(binnable, sa.seed_split, sa.test_fraction, sa.stratify_by);

    const EvalReport ra = evaluate(pa, parts.test, model_id(pa.spec_id, pa.mode), c.workers);
    const EvalReport rb = evaluate(pb, parts.test, model_id(pb.spec_id, pb.mode), c.workers);
    BootstrapResult boot =
        paired_bootstrap(ra, rb, c.bootstrap_B, c.bootstrap_alpha, c.seed_bootstrap, c.workers);
    for (const auto& w : boot.warnings) std::cerr << "warning: " << w << "\n";

    fs::create_directories(c.output_dir);
    write_ci_csv({boot.nll, boot.top1}, fs::path(c.output_dir) / "ci.csv");
    write_manifest(c, "bootstrap", c.output_dir, {"ci.csv"},
                   {{"bundle_a", bundle_a}, {"bundle_b", bundle_b}});
}

void cmd_run_matrix(const RunConfig& c) {
    const DiaryGrid grid = load_grid(grid_path(c));
    auto [binnable, dropped] = filter_binnable(grid);
    SplitResult parts = split_for(binnable, c.seed_split, c.test_fraction, c.stratify_by);
    for (const auto& w : parts.warnings) std::cerr << "warning: " << w << "\n";

    // All seven specs, Markov family first, then the -H family.
    std::vector<ModelParams> fitted;
    std::vector<std::string> ids;
    fitted.reserve(14);
    for (ModelMode mode : {ModelMode::Markov, ModelMode::SemiMarkov}) {
        for (const CovariateSpec& spec : all_covariate_specs()) {
            fitted.push_back(fit_one(c, parts.train, spec.id, mode));
            ids.push_back(model_id(spec.id, mode));
            const fs::path dir = fs::path(c.output_dir) / "models" / ids.back();
            save_bundle(c, fitted.back(), dir, parts.train.size(), parts.test.size());
        }
    }

    std::vector<std::pair<std::string, const ModelParams*>> models;
    for (size_t i = 0; i < fitted.size(); ++i) models.emplace_back(ids[i], &fitted[i]);
    const Comparison cmp = compare_models(models, parts.test, c.bootstrap_B, c.bootstrap_alpha,
                                          c.seed_bootstrap, c.workers);

    fs::create_directories(c.output_dir);
    {
        std::ofstream out(fs::path(c.output_dir) / "comparison.csv", std::ios::binary);
        std::vector<std::string> row = {"model", "mode", "nll", "delta_nll_vs_baseline", "top1"};
        csv::write_row(out, row);
        for (const ComparisonRow& r : cmp.rows) {
            row = {r.id, r.mode, csv::format_double(r.nll),
                   r.delta_nll_vs_baseline ? csv::format_double(*r.delta_nll_vs_baseline) : "",
                   csv::format_double(r.top1)};
            csv::write_row(out, row);
        }
    }
    write_ci_csv(cmp.covariate_cis, fs::path(c.output_dir) / "ci_covariates.csv");
    write_ci_csv(cmp.hazard_cis, fs::path(c.output_dir) / "ci_hazard.csv");
    write_manifest(c, "run-matrix", c.output_dir,
                   {"comparison.csv", "ci_covariates.csv", "ci_hazard.csv"},
                   {{"n_train", parts.train.size()},
                    {"n_test", parts.test.size()},
                    {"n_unbinnable", dropped.size()},
                    {"models", ids}});
}

void cmd_generate(const RunConfig& c, const std::string& bundle_dir, const std::string& group,
                  int n, const std::string& format, const std::string& out_csv) {
    const ModelParams params = load_model(bundle_dir);
    const int g = params.group_index(group);
    if (g < 0) {
        std::string known;
        for (const auto& label : params.groups) known += (known.empty() ? "" : ", ") + label;
        throw InputError("generate: unknown group '" + group + "' (model has: " + known + ")");
    }
    if (format != "wide" && format != "long") {
        throw InputError("generate: format must be 'wide' or 'long'");
    }
    const auto days = generate_batch(params, g, n, c.seed_generate, c.workers);

    fs::create_directories(fs::path(out_csv).parent_path().empty()
                               ? fs::path(".")
                               : fs::path(out_csv).parent_path());
    std::ofstream out(out_csv, std::ios::binary);
    if (!out) throw InputError("cannot write " + out_csv);
    std::vector<std::string> row;
    if (format == "wide") {
        row = {"synth_id", "group"};
        for (int t = 1; t <= params.T; ++t) row.push_back("s" + std::to_string(t));
        csv::write_row(out, row);
        for (int j = 0; j < n; ++j) {
            row = {"G" + std::to_string(j), group};
            for (int t = 0; t < params.T; ++t) {
                row.push_back(std::to_string(int(days[static_cast<size_t>(j) * params.T + t])));
            }
            csv::write_row(out, row);
        }
    } else {
        row = {"synth_id", "slot", "state"};
        csv::write_row(out, row);
        for (int j = 0; j < n; ++j) {
            for (int t = 0; t < params.T; ++t) {
                row = {"G" + std::to_string(j), std::to_string(t + 1),
                       std::to_string(int(days[static_cast<size_t>(j) * params.T + t]))};
                csv::write_row(out, row);
            }
        }
    }
}

void cmd_diagnostics(const RunConfig& c) {
    const DiaryGrid grid = load_grid(grid_path(c));
    fs::create_directories(c.output_dir);
    const auto& names = state_names();

    {
        std::ofstream out(fs::path(c.output_dir) / "survival.csv", std::ios::binary);
        std::vector<std::string> row = {"state", "duration", "survival"};
        csv::write_row(out, row);
        for (int s = 0; s < kNumStates; ++s) {
            for (const SurvivalPoint& pt : dwell_survival(grid, s)) {
                row = {names[s], std::to_string(pt.duration), csv::format_double(pt.survival)};
                csv::write_row(out, row);
            }
        }
    }
    {
        const CovariateSpec& spec = covariate_spec(c.spec_id == "S0" ? "S2" : c.spec_id);
        std::ofstream out(fs::path(c.output_dir) / "occupancy.csv", std::ios::binary);
        std::vector<std::string> row = {"state", "group", "slot", "probability"};
        csv::write_row(out, row);
        for (int s = 0; s < kNumStates; ++s) {
            const OccupancyCurves curves = occupancy_curves(grid, s, spec);
            for (size_t g = 0; g < curves.groups.size(); ++g) {
                for (int t = 0; t < grid.slots; ++t) {
                    row = {names[s], curves.groups[g], std::to_string(t + 1),
                           csv::format_double(curves.curves[g][t])};
                    csv::write_row(out, row);
                }
            }
        }
    }
    {
        // The motivating example pair: the morning exit from sleep.
        std::ofstream out(fs::path(c.output_dir) / "transitions.csv", std::ios::binary);
        std::vector<std::string> row = {"from", "to", "slot", "probability", "exposed"};
        csv::write_row(out, row);
        const auto series = transition_timeseries(grid, state::SLEEP, state::PERSONAL_CARE);
        for (size_t t = 0; t < series.size(); ++t) {
            row = {names[state::SLEEP], names[state::PERSONAL_CARE], std::to_string(t + 1),
                   series[t] ? csv::format_double(*series[t]) : "", series[t] ? "1" : "0"};
            csv::write_row(out, row);
        }
    }
    write_manifest(c, "diagnostics", c.output_dir,
                   {"survival.csv", "occupancy.csv", "transitions.csv"});
}

void cmd_map_codes(const RunConfig& c, const std::string& codes_csv, const std::string& out_csv) {
    const RuleSet rules = rules_for(c);
    csv::Reader reader(codes_csv);
    const int c_code = reader.require_column("code6");
    const int c_desc = reader.column("description");
    std::vector<std::pair<std::string, std::string>> universe;
    while (reader.next()) {
        universe.emplace_back(reader.field(c_code),
                              c_desc >= 0 ? reader.field(c_desc) : std::string());
    }

    std::ofstream out(out_csv, std::ios::binary);
    if (!out) throw InputError("cannot write " + out_csv);
    std::vector<std::string> row = {"code6", "description", "state", "tier"};
    csv::write_row(out, row);
    for (const auto& [code, desc] : universe) {
        const MapOutcome outcome = map_code_traced(code, desc, rules);
        row = {code, desc, state_names()[static_cast<size_t>(outcome.state)],
               tier_name(outcome.tier)};
        csv::write_row(out, row);
    }

    const CoverageReport report = validate_rules(rules, universe);
    std::cout << "codes: " << report.total() << "\n"
              << "  exact:          " << report.exact << "\n"
              << "  prefix4:        " << report.prefix4 << "\n"
              << "  prefix2:        " << report.prefix2 << "\n"
              << "  keyword:        " << report.keyword << "\n"
              << "  fallback_major: " << report.fallback_major << "\n"
              << "  default:        " << report.defaulted << "\n";
    if (!report.defaulted_codes.empty()) {
        std::cout << "codes falling through to default (review these):\n";
        for (const auto& code : report.defaulted_codes) std::cout << "  " << code << "\n";
    }
}

}  // namespace actseq
