#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "actseq/errors.hpp"
#include "actseq/fixture.hpp"
#include "actseq/pipeline.hpp"

namespace {

struct CommonOpts {
    std::string config_path;
    std::string output_dir;
    std::string grid_csv;
    std::string spec;
    std::string mode;
    int workers = -1;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("-c,--config", opts.config_path, "JSON config file");
    cmd->add_option("--output-dir", opts.output_dir, "output directory (overrides config)");
    cmd->add_option("--grid", opts.grid_csv, "grid CSV (overrides config)");
    cmd->add_option("--spec", opts.spec, "covariate spec S0..S6 (overrides config)");
    cmd->add_option("--mode", opts.mode, "MARKOV or SEMI_MARKOV (overrides config)");
    cmd->add_option("--workers", opts.workers, "worker threads (0 = machine parallelism)");
}

actseq::RunConfig make_config(const CommonOpts& opts) {
    actseq::RunConfig config;
    if (!opts.config_path.empty()) config = actseq::load_config(opts.config_path);
    if (!opts.output_dir.empty()) config.output_dir = opts.output_dir;
    if (!opts.grid_csv.empty()) config.grid_csv = opts.grid_csv;
    if (!opts.spec.empty()) config.spec_id = opts.spec;
    if (!opts.mode.empty()) config.mode = actseq::mode_from_name(opts.mode);
    if (opts.workers >= 0) config.workers = opts.workers;
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Semi-Markov modeling of daily activity diaries: grid building, fitting, "
                 "generation, evaluation and bootstrap comparison"};
    app.require_subcommand(1);

    CommonOpts opts;
    std::string episodes_csv, bundle, bundle_b, group = "ALL", format = "wide";
    std::string out_csv, codes_csv;
    int n = 100;
    std::uint64_t fixture_seed = 20240501;
    int fixture_n = 600;
    std::uint64_t seed_override = 0;
    bool seed_set = false;

    auto* build = app.add_subcommand("build-grid", "episodes CSV -> discretized grid + rejects");
    add_common(build, opts);
    build->add_option("--episodes", episodes_csv, "episode CSV (overrides config)");

    bool dump_counts = false;
    auto* fit = app.add_subcommand("fit", "fit one model bundle from the grid");
    add_common(fit, opts);
    fit->add_flag("--dump-counts", dump_counts, "also write the training count tables");

    auto* evaluate = app.add_subcommand("evaluate", "score a bundle on its holdout");
    add_common(evaluate, opts);
    evaluate->add_option("--bundle", bundle, "model bundle directory")->required();

    auto* bootstrap = app.add_subcommand("bootstrap", "paired bootstrap CI between two bundles");
    add_common(bootstrap, opts);
    bootstrap->add_option("--bundle-a", bundle, "first bundle")->required();
    bootstrap->add_option("--bundle-b", bundle_b, "second bundle")->required();

    auto* matrix = app.add_subcommand("run-matrix",
                                      "fit S0..S6 in both modes, compare on one holdout");
    add_common(matrix, opts);

    auto* generate = app.add_subcommand("generate", "sample synthetic diaries from a bundle");
    add_common(generate, opts);
    generate->add_option("--bundle", bundle, "model bundle directory")->required();
    generate->add_option("--group", group, "group label (default ALL)");
    generate->add_option("-n,--num", n, "number of diaries");
    generate->add_option("--format", format, "wide | long");
    generate->add_option("--out", out_csv, "output CSV")->required();
    generate->add_option("--seed", seed_override, "generation seed (overrides config)")
        ->each([&](const std::string&) { seed_set = true; });

    auto* diagnostics = app.add_subcommand("diagnostics",
                                           "dwell survival, occupancy and transition series");
    add_common(diagnostics, opts);

    auto* map_codes = app.add_subcommand("map-codes", "map a code list through the rules");
    add_common(map_codes, opts);
    map_codes->add_option("--codes", codes_csv, "CSV with code6[,description]")->required();
    map_codes->add_option("--out", out_csv, "mapping output CSV")->required();

    auto* fixture = app.add_subcommand("make-fixture", "write the synthetic episode fixture");
    fixture->add_option("--out", out_csv, "output episode CSV")->required();
    fixture->add_option("--n", fixture_n, "number of respondents");
    fixture->add_option("--seed", fixture_seed, "fixture seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (fixture->parsed()) {
            actseq::write_fixture_episodes(out_csv, {fixture_n, fixture_seed});
            return 0;
        }
        actseq::RunConfig config = make_config(opts);
        if (build->parsed()) {
            if (!episodes_csv.empty()) config.episodes_csv = episodes_csv;
            actseq::cmd_build_grid(config);
        } else if (fit->parsed()) {
            const std::string dir = actseq::cmd_fit(config, dump_counts);
            std::cout << dir << "\n";
        } else if (evaluate->parsed()) {
            actseq::cmd_evaluate(config, bundle);
        } else if (bootstrap->parsed()) {
            actseq::cmd_bootstrap(config, bundle, bundle_b);
        } else if (matrix->parsed()) {
            actseq::cmd_run_matrix(config);
        } else if (generate->parsed()) {
            if (seed_set) config.seed_generate = seed_override;
            actseq::cmd_generate(config, bundle, group, n, format, out_csv);
        } else if (diagnostics->parsed()) {
            actseq::cmd_diagnostics(config);
        } else if (map_codes->parsed()) {
            actseq::cmd_map_codes(config, codes_csv, out_csv);
        }
    } catch (const actseq::InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
