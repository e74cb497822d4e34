#include "actseq/model_io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "actseq/csv.hpp"
#include "actseq/errors.hpp"

namespace actseq {

namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    out << text;
    if (!out) throw InputError("I/O error writing " + path.string());
}

nlohmann::json read_json(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw InputError(path.string() + ": " + e.what());
    }
}

}  // namespace

void save_model(const ModelParams& p, const std::string& dir,
                const nlohmann::ordered_json& provenance) {
    fs::create_directories(dir);
    nlohmann::ordered_json manifest;
    manifest["format_version"] = 1;
    manifest["mode"] = mode_name(p.mode);
    manifest["spec"] = {{"id", p.spec_id}, {"covariate", p.covariate}, {"groups", p.groups}};
    manifest["K"] = p.K;
    manifest["T"] = p.T;
    manifest["M"] = p.M;
    manifest["bins"] = p.bins.lower_bounds;
    manifest["blocks"] = {{"labels", p.blocks.labels}, {"slot_block", p.blocks.slot_block}};
    manifest["hyperparams"] = {{"tau", p.hp.tau}, {"k", p.hp.k}, {"kappa", p.hp.kappa}};
    manifest["taxonomy_version"] = p.taxonomy_version;
    if (!provenance.is_null() && !provenance.empty()) manifest["provenance"] = provenance;
    write_text(fs::path(dir) / "manifest.json", manifest.dump(2) + "\n");

    {
        std::ofstream out(fs::path(dir) / "pi.csv", std::ios::binary);
        std::vector<std::string> row = {"g", "s", "value"};
        csv::write_row(out, row);
        for (int g = 0; g < p.num_groups(); ++g) {
            for (int s = 0; s < p.K; ++s) {
                row = {p.groups[g], std::to_string(s), csv::format_double(p.pi[p.pi_idx(g, s)])};
                csv::write_row(out, row);
            }
        }
    }
    {
        std::ofstream out(fs::path(dir) / "theta.csv", std::ios::binary);
        std::vector<std::string> row = {"g", "t", "s", "s2", "value"};
        csv::write_row(out, row);
        for (int g = 0; g < p.num_groups(); ++g) {
            for (int t = 0; t + 1 < p.T; ++t) {
                for (int s = 0; s < p.K; ++s) {
                    for (int s2 = 0; s2 < p.K; ++s2) {
                        row = {p.groups[g], std::to_string(t + 1), std::to_string(s),
                               std::to_string(s2),
                               csv::format_double(p.theta[p.theta_idx(g, t, s, s2)])};
                        csv::write_row(out, row);
                    }
                }
            }
        }
    }
    if (p.mode == ModelMode::SemiMarkov) {
        std::ofstream out(fs::path(dir) / "hazard.csv", std::ios::binary);
        std::vector<std::string> row = {"g", "t", "s", "m", "value"};
        csv::write_row(out, row);
        for (int g = 0; g < p.num_groups(); ++g) {
            for (int t = 0; t + 1 < p.T; ++t) {
                for (int s = 0; s < p.K; ++s) {
                    for (int m = 0; m < p.M; ++m) {
                        row = {p.groups[g], std::to_string(t + 1), std::to_string(s),
                               std::to_string(m),
                               csv::format_double(p.hazard[p.hazard_idx(g, t, s, m)])};
                        csv::write_row(out, row);
                    }
                }
            }
        }
    }
}

nlohmann::ordered_json load_manifest(const std::string& dir) {
    return nlohmann::ordered_json::parse(read_json(fs::path(dir) / "manifest.json").dump());
}

ModelParams load_model(const std::string& dir) {
    const nlohmann::json manifest = read_json(fs::path(dir) / "manifest.json");
    ModelParams p;
    try {
        p.mode = mode_from_name(manifest.at("mode").get<std::string>());
        p.spec_id = manifest.at("spec").at("id").get<std::string>();
        p.covariate = manifest.at("spec").at("covariate").get<std::string>();
        p.groups = manifest.at("spec").at("groups").get<std::vector<std::string>>();
        p.K = manifest.at("K").get<int>();
        p.T = manifest.at("T").get<int>();
        p.M = manifest.at("M").get<int>();
        p.bins = RunLengthBins::validated(manifest.at("bins").get<std::vector<int>>());
        p.blocks.labels = manifest.at("blocks").at("labels").get<std::vector<std::string>>();
        p.blocks.slot_block = manifest.at("blocks").at("slot_block").get<std::vector<int>>();
        p.hp.tau = manifest.at("hyperparams").at("tau").get<std::vector<double>>();
        p.hp.k = manifest.at("hyperparams").at("k").get<double>();
        p.hp.kappa = manifest.at("hyperparams").at("kappa").get<std::vector<double>>();
        p.taxonomy_version = manifest.at("taxonomy_version").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw InputError(dir + "/manifest.json: " + e.what());
    }
    if (p.M != p.bins.count()) throw InputError(dir + ": M does not match the bin list");

    const int G = p.num_groups();
    p.pi.assign(static_cast<size_t>(G) * p.K, -1.0);
    p.theta.assign(static_cast<size_t>(G) * (p.T - 1) * p.K * p.K, -1.0);
    if (p.mode == ModelMode::SemiMarkov) {
        p.hazard.assign(static_cast<size_t>(G) * (p.T - 1) * p.K * p.M, -1.0);
    }

    auto group_of = [&](const std::string& label, const std::string& where) {
        const int g = p.group_index(label);
        if (g < 0) throw InputError(where + ": unknown group '" + label + "'");
        return g;
    };
    auto to_int = [&](const std::string& s, int lo, int hi, const std::string& where) {
        int v;
        try {
            v = std::stoi(s);
        } catch (...) {
            throw InputError(where + ": bad integer '" + s + "'");
        }
        if (v < lo || v > hi) throw InputError(where + ": index " + s + " out of range");
        return v;
    };

    {
        csv::Reader reader((fs::path(dir) / "pi.csv").string());
        const int cg = reader.require_column("g");
        const int cs = reader.require_column("s");
        const int cv = reader.require_column("value");
        while (reader.next()) {
            const std::string where = reader.path() + ":" + std::to_string(reader.record_number());
            const int g = group_of(reader.field(cg), where);
            const int s = to_int(reader.field(cs), 0, p.K - 1, where);
            p.pi[p.pi_idx(g, s)] = std::stod(reader.field(cv));
        }
    }
    {
        csv::Reader reader((fs::path(dir) / "theta.csv").string());
        const int cg = reader.require_column("g");
        const int ct = reader.require_column("t");
        const int cs = reader.require_column("s");
        const int cs2 = reader.require_column("s2");
        const int cv = reader.require_column("value");
        while (reader.next()) {
            const std::string where = reader.path() + ":" + std::to_string(reader.record_number());
            const int g = group_of(reader.field(cg), where);
            const int t = to_int(reader.field(ct), 1, p.T - 1, where);
            const int s = to_int(reader.field(cs), 0, p.K - 1, where);
            const int s2 = to_int(reader.field(cs2), 0, p.K - 1, where);
            p.theta[p.theta_idx(g, t - 1, s, s2)] = std::stod(reader.field(cv));
        }
    }
    if (p.mode == ModelMode::SemiMarkov) {
        csv::Reader reader((fs::path(dir) / "hazard.csv").string());
        const int cg = reader.require_column("g");
        const int ct = reader.require_column("t");
        const int cs = reader.require_column("s");
        const int cm = reader.require_column("m");
        const int cv = reader.require_column("value");
        while (reader.next()) {
            const std::string where = reader.path() + ":" + std::to_string(reader.record_number());
            const int g = group_of(reader.field(cg), where);
            const int t = to_int(reader.field(ct), 1, p.T - 1, where);
            const int s = to_int(reader.field(cs), 0, p.K - 1, where);
            const int m = to_int(reader.field(cm), 0, p.M - 1, where);
            p.hazard[p.hazard_idx(g, t - 1, s, m)] = std::stod(reader.field(cv));
        }
    }

    for (double v : p.pi)
        if (v < 0.0) throw InputError(dir + "/pi.csv: missing cells");
    for (double v : p.theta)
        if (v < 0.0) throw InputError(dir + "/theta.csv: missing cells");
    for (double v : p.hazard)
        if (v < 0.0) throw InputError(dir + "/hazard.csv: missing cells");
    validate(p);
    return p;
}

}  // namespace actseq
