#include "actseq/diary.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

#include <omp.h>

#include "actseq/csv.hpp"
#include "actseq/errors.hpp"
#include "actseq/rng.hpp"

namespace actseq {

namespace {

constexpr int kMinutesPerDay = 1440;

std::optional<long> parse_long(const std::string& s) {
    long v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
    return v;
}

std::optional<double> parse_double(const std::string& s) {
    if (s.empty()) return std::nullopt;
    try {
        size_t used = 0;
        double v = std::stod(s, &used);
        if (used != s.size()) return std::nullopt;
        return v;
    } catch (...) {
        return std::nullopt;
    }
}

/// Month from an ISO-8601 date, or 0 on malformed input.
int month_of(const std::string& iso_date) {
    if (iso_date.size() < 7 || iso_date[4] != '-') return 0;
    auto m = parse_long(iso_date.substr(5, 2));
    if (!m || *m < 1 || *m > 12) return 0;
    return static_cast<int>(*m);
}

}  // namespace

IngestResult ingest_episodes(const std::string& path) {
    csv::Reader reader(path);
    const int c_id = reader.require_column("respondent_id");
    const int c_line = reader.require_column("line_no");
    const int c_start = reader.require_column("start_minute");
    const int c_dur = reader.require_column("duration_min");
    const int c_code = reader.require_column("code6");
    const int c_desc = reader.require_column("description");
    const int c_weight = reader.require_column("weight");
    const int c_sex = reader.require_column("sex");
    const int c_region = reader.require_column("region");
    const int c_emp = reader.require_column("employment");
    const int c_day = reader.require_column("day_type");
    const int c_hh = reader.require_column("hh_size");
    const int c_date = reader.require_column("diary_date");
    const size_t n_cols = reader.header().size();

    // Rows grouped per respondent, in file order.
    struct Pending {
        RespondentEpisodes resp;
        std::string reject_reason;  // first problem wins
    };
    std::vector<std::string> order;
    std::map<std::string, Pending> pending;

    while (reader.next()) {
        if (reader.row().size() != n_cols) {
            throw InputError(path + ": record " + std::to_string(reader.record_number()) +
                             " has " + std::to_string(reader.row().size()) + " fields, expected " +
                             std::to_string(n_cols));
        }
        const std::string& id = reader.field(c_id);
        auto it = pending.find(id);
        if (it == pending.end()) {
            it = pending.emplace(id, Pending{}).first;
            it->second.resp.id = id;
            order.push_back(id);
        }
        Pending& p = it->second;
        if (!p.reject_reason.empty()) continue;

        auto fail = [&](const std::string& why) {
            p.reject_reason = why + " (record " + std::to_string(reader.record_number()) + ")";
        };

        auto line = parse_long(reader.field(c_line));
        auto start = parse_long(reader.field(c_start));
        auto dur = parse_long(reader.field(c_dur));
        auto weight = parse_double(reader.field(c_weight));
        auto hh = parse_long(reader.field(c_hh));
        if (!line) { fail("unparseable line_no"); continue; }
        if (!start || *start < 0 || *start >= kMinutesPerDay) { fail("start_minute out of [0,1439]"); continue; }
        if (!dur || *dur < 1) { fail("duration_min must be >= 1"); continue; }
        if (!weight) { fail("unparseable weight"); continue; }
        if (*weight <= 0) { fail("non-positive weight"); continue; }
        if (!hh) { fail("unparseable hh_size"); continue; }

        const std::string& code = reader.field(c_code);
        if (code.size() != 6 ||
            !std::all_of(code.begin(), code.end(), [](unsigned char c) { return std::isdigit(c); })) {
            fail("malformed code6 '" + code + "'");
            continue;
        }

        if (p.resp.episodes.empty()) {
            p.resp.weight = *weight;
            p.resp.covs = Covariates{reader.field(c_sex),  reader.field(c_region),
                                     reader.field(c_emp),  reader.field(c_day),
                                     static_cast<int>(*hh), reader.field(c_date)};
        } else if (*weight != p.resp.weight) {
            fail("inconsistent weight across episodes");
            continue;
        }
        p.resp.episodes.push_back(Episode{static_cast<int>(*line), static_cast<int>(*start),
                                          static_cast<int>(*dur), code, reader.field(c_desc)});
    }

    IngestResult result;
    for (const auto& id : order) {
        Pending& p = pending.at(id);
        if (p.reject_reason.empty()) {
            auto& eps = p.resp.episodes;
            std::sort(eps.begin(), eps.end(),
                      [](const Episode& a, const Episode& b) { return a.line_no < b.line_no; });
            int cursor = 0;
            for (const Episode& e : eps) {
                if (e.start_minute != cursor) {
                    p.reject_reason = "episode overlap or gap at line " + std::to_string(e.line_no);
                    break;
                }
                cursor += e.duration_min;
            }
            if (p.reject_reason.empty() && cursor != kMinutesPerDay) {
                p.reject_reason =
                    "coverage gap: total duration " + std::to_string(cursor) + " != 1440";
            }
        }
        if (p.reject_reason.empty()) {
            result.accepted.push_back(std::move(p.resp));
        } else {
            result.rejects.push_back({id, p.reject_reason});
        }
    }
    return result;
}

void DiaryGrid::push_row(std::string id, double weight, Covariates covs,
                         std::span<const std::uint8_t> row_states) {
    if (static_cast<int>(row_states.size()) != slots) {
        throw InvariantError("push_row: expected " + std::to_string(slots) + " slots, got " +
                             std::to_string(row_states.size()));
    }
    ids.push_back(std::move(id));
    weights.push_back(weight);
    covariates.push_back(std::move(covs));
    group.push_back(-1);
    states.insert(states.end(), row_states.begin(), row_states.end());
    run_len.resize(states.size());
    const size_t base = states.size() - slots;
    for (int t = 0; t < slots; ++t) {
        run_len[base + t] =
            (t > 0 && states[base + t] == states[base + t - 1])
                ? static_cast<std::int16_t>(run_len[base + t - 1] + 1)
                : std::int16_t{1};
    }
}

void recompute_run_lengths(DiaryGrid& grid) {
    grid.run_len.resize(grid.states.size());
    for (int i = 0; i < grid.size(); ++i) {
        const size_t base = static_cast<size_t>(i) * grid.slots;
        for (int t = 0; t < grid.slots; ++t) {
            grid.run_len[base + t] =
                (t > 0 && grid.states[base + t] == grid.states[base + t - 1])
                    ? static_cast<std::int16_t>(grid.run_len[base + t - 1] + 1)
                    : std::int16_t{1};
        }
    }
}

DiaryGrid discretize(const std::vector<RespondentEpisodes>& respondents, const RuleSet& rules,
                     int workers) {
    const int n = static_cast<int>(respondents.size());
    DiaryGrid grid;
    grid.ids.resize(n);
    grid.weights.resize(n);
    grid.covariates.resize(n);
    grid.group.assign(n, -1);
    grid.states.resize(static_cast<size_t>(n) * kSlotsPerDay);

    const int nw = workers > 0 ? workers : omp_get_max_threads();
#pragma omp parallel for num_threads(nw) schedule(static)
    for (int i = 0; i < n; ++i) {
        const RespondentEpisodes& r = respondents[i];
        grid.ids[i] = r.id;
        grid.weights[i] = r.weight;
        grid.covariates[i] = r.covs;

        // Episode state ids, precomputed once per respondent.
        std::vector<int> ep_state(r.episodes.size());
        for (size_t e = 0; e < r.episodes.size(); ++e) {
            ep_state[e] = map_code(r.episodes[e].code6, r.episodes[e].description, rules);
        }

        std::uint8_t* out = grid.states.data() + static_cast<size_t>(i) * kSlotsPerDay;
        size_t e = 0;  // episodes are contiguous and sorted; scan forward
        for (int t = 0; t < kSlotsPerDay; ++t) {
            const int slot_begin = t * kMinutesPerSlot;
            const int slot_end = slot_begin + kMinutesPerSlot;
            while (e + 1 < r.episodes.size() &&
                   r.episodes[e].start_minute + r.episodes[e].duration_min <= slot_begin) {
                ++e;
            }
            // Majority occupancy over this slot's 10 minutes; the earlier-
            // starting episode wins ties (strict > keeps the first maximum).
            int best_state = ep_state[e];
            int best_overlap = 0;
            for (size_t j = e; j < r.episodes.size(); ++j) {
                const Episode& ep = r.episodes[j];
                if (ep.start_minute >= slot_end) break;
                const int lo = std::max(ep.start_minute, slot_begin);
                const int hi = std::min(ep.start_minute + ep.duration_min, slot_end);
                if (hi - lo > best_overlap) {
                    best_overlap = hi - lo;
                    best_state = ep_state[j];
                }
            }
            out[t] = static_cast<std::uint8_t>(best_state);
        }
    }
    recompute_run_lengths(grid);
    return grid;
}

const std::vector<CovariateSpec>& all_covariate_specs() {
    static const std::vector<CovariateSpec> specs = {
        {"S0", "none", {"ALL"}},
        {"S1", "region", {"Northeast", "Midwest", "South", "West"}},
        {"S2", "sex", {"Male", "Female"}},
        {"S3", "employment", {"Employed", "Not employed", "Not in work force"}},
        {"S4", "day_type", {"Weekday", "Weekend"}},
        {"S5", "hh_size", {"1", "2", "3", "4+"}},
        {"S6", "quarter", {"Winter", "Spring", "Summer", "Fall"}},
    };
    return specs;
}

const CovariateSpec& covariate_spec(const std::string& id) {
    for (const auto& spec : all_covariate_specs()) {
        if (spec.id == id) return spec;
    }
    throw InputError("unknown covariate spec '" + id + "' (expected S0..S6)");
}

std::optional<std::string> group_label(const Covariates& covs, const CovariateSpec& spec) {
    auto known = [&](const std::string& v) -> std::optional<std::string> {
        for (const auto& g : spec.groups) {
            if (g == v) return g;
        }
        return std::nullopt;
    };
    if (spec.id == "S0") return "ALL";
    if (spec.id == "S1") return known(covs.region);
    if (spec.id == "S2") return known(covs.sex);
    if (spec.id == "S3") return known(covs.employment);
    if (spec.id == "S4") return known(covs.day_type);
    if (spec.id == "S5") {
        if (covs.hh_size < 1) return std::nullopt;
        if (covs.hh_size >= 4) return "4+";
        return std::to_string(covs.hh_size);
    }
    if (spec.id == "S6") {
        // Calendar quarters: Q1=Winter, Q2=Spring, Q3=Summer, Q4=Fall.
        const int m = month_of(covs.diary_date);
        if (m == 0) return std::nullopt;
        return spec.groups[static_cast<size_t>((m - 1) / 3)];
    }
    return std::nullopt;
}

namespace {

DiaryGrid select_rows(const DiaryGrid& grid, const std::vector<int>& rows) {
    DiaryGrid out;
    out.slots = grid.slots;
    out.group_labels = grid.group_labels;
    out.ids.reserve(rows.size());
    for (int i : rows) {
        out.ids.push_back(grid.ids[i]);
        out.weights.push_back(grid.weights[i]);
        out.covariates.push_back(grid.covariates[i]);
        out.group.push_back(grid.group[i]);
        const size_t base = static_cast<size_t>(i) * grid.slots;
        out.states.insert(out.states.end(), grid.states.begin() + base,
                          grid.states.begin() + base + grid.slots);
        out.run_len.insert(out.run_len.end(), grid.run_len.begin() + base,
                           grid.run_len.begin() + base + grid.slots);
    }
    return out;
}

SplitResult split_by_labels(const DiaryGrid& grid, double test_fraction,
                            const std::vector<std::string>& labels, std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw InputError("test_fraction must be in (0, 1)");
    }
    // Strata in first-appearance order so the split does not depend on label
    // lexicography.
    std::vector<std::string> stratum_names;
    std::vector<std::vector<int>> strata;
    std::map<std::string, size_t> index;
    for (int i = 0; i < grid.size(); ++i) {
        auto [it, inserted] = index.try_emplace(labels[i], strata.size());
        if (inserted) {
            stratum_names.push_back(labels[i]);
            strata.emplace_back();
        }
        strata[it->second].push_back(i);
    }

    SplitResult result;
    std::vector<int> train_rows, test_rows;
    for (size_t s = 0; s < strata.size(); ++s) {
        std::vector<int>& members = strata[s];
        if (members.size() < 2) {
            result.warnings.push_back("stratum '" + stratum_names[s] +
                                      "' has fewer than 2 respondents; assigned wholly to train");
            train_rows.insert(train_rows.end(), members.begin(), members.end());
            continue;
        }
        // Fisher-Yates with a per-stratum child stream keeps the assignment
        // independent of how other strata shuffle.
        SplitMix64 rng(child_seed(seed, s));
        for (size_t i = members.size() - 1; i > 0; --i) {
            size_t j = static_cast<size_t>(rng.next_double() * static_cast<double>(i + 1));
            if (j > i) j = i;
            std::swap(members[i], members[j]);
        }
        auto n_test = static_cast<size_t>(
            std::llround(test_fraction * static_cast<double>(members.size())));
        n_test = std::min(n_test, members.size() - 1);
        test_rows.insert(test_rows.end(), members.begin(), members.begin() + n_test);
        train_rows.insert(train_rows.end(), members.begin() + n_test, members.end());
    }
    std::sort(train_rows.begin(), train_rows.end());
    std::sort(test_rows.begin(), test_rows.end());
    result.train = select_rows(grid, train_rows);
    result.test = select_rows(grid, test_rows);
    return result;
}

}  // namespace

SplitResult split(const DiaryGrid& grid, double test_fraction, const CovariateSpec& spec,
                  std::uint64_t seed) {
    std::vector<std::string> labels(grid.size());
    for (int i = 0; i < grid.size(); ++i) {
        auto label = group_label(grid.covariates[i], spec);
        if (!label) {
            throw InputError("respondent '" + grid.ids[i] + "' is unbinnable under spec " +
                             spec.id + "; filter with assign_groups first");
        }
        labels[i] = *label;
    }
    return split_by_labels(grid, test_fraction, labels, seed);
}

SplitResult split_joint(const DiaryGrid& grid, double test_fraction, std::uint64_t seed) {
    std::vector<std::string> labels(grid.size());
    for (int i = 0; i < grid.size(); ++i) {
        std::string joint;
        for (const auto& spec : all_covariate_specs()) {
            if (spec.id == "S0") continue;
            auto label = group_label(grid.covariates[i], spec);
            joint += label.value_or("?");
            joint += '|';
        }
        labels[i] = std::move(joint);
    }
    return split_by_labels(grid, test_fraction, labels, seed);
}

GroupAssignResult assign_groups(const DiaryGrid& grid, const CovariateSpec& spec) {
    GroupAssignResult result;
    std::vector<int> keep;
    std::vector<int> assigned;
    keep.reserve(grid.size());
    for (int i = 0; i < grid.size(); ++i) {
        auto label = group_label(grid.covariates[i], spec);
        if (!label) {
            result.rejects.push_back(
                {grid.ids[i], "missing or unbinnable " + spec.covariate + " for spec " + spec.id});
            continue;
        }
        const auto it = std::find(spec.groups.begin(), spec.groups.end(), *label);
        keep.push_back(i);
        assigned.push_back(static_cast<int>(it - spec.groups.begin()));
    }
    result.grid = select_rows(grid, keep);
    result.grid.group_labels = spec.groups;
    for (size_t k = 0; k < keep.size(); ++k) result.grid.group[k] = assigned[k];
    return result;
}

void save_grid(const DiaryGrid& grid, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write grid file: " + path);
    std::vector<std::string> row = {"respondent_id", "weight",   "sex",     "region",
                                    "employment",    "day_type", "hh_size", "diary_date"};
    for (int t = 1; t <= grid.slots; ++t) row.push_back("s" + std::to_string(t));
    csv::write_row(out, row);
    for (int i = 0; i < grid.size(); ++i) {
        row.clear();
        const Covariates& c = grid.covariates[i];
        row = {grid.ids[i], csv::format_double(grid.weights[i]),
               c.sex,       c.region,
               c.employment, c.day_type,
               std::to_string(c.hh_size), c.diary_date};
        for (std::uint8_t s : grid.states_of(i)) row.push_back(std::to_string(int(s)));
        csv::write_row(out, row);
    }
    if (!out) throw InputError("I/O error writing grid file: " + path);
}

DiaryGrid load_grid(const std::string& path) {
    csv::Reader reader(path);
    const int c_id = reader.require_column("respondent_id");
    const int c_weight = reader.require_column("weight");
    const int c_sex = reader.require_column("sex");
    const int c_region = reader.require_column("region");
    const int c_emp = reader.require_column("employment");
    const int c_day = reader.require_column("day_type");
    const int c_hh = reader.require_column("hh_size");
    const int c_date = reader.require_column("diary_date");
    std::vector<int> slot_cols(kSlotsPerDay);
    for (int t = 1; t <= kSlotsPerDay; ++t) {
        slot_cols[t - 1] = reader.require_column("s" + std::to_string(t));
    }

    DiaryGrid grid;
    std::vector<std::uint8_t> row_states(kSlotsPerDay);
    while (reader.next()) {
        auto weight = parse_double(reader.field(c_weight));
        auto hh = parse_long(reader.field(c_hh));
        if (!weight || *weight <= 0 || !hh) {
            throw InputError(path + ": record " + std::to_string(reader.record_number()) +
                             ": bad weight or hh_size");
        }
        for (int t = 0; t < kSlotsPerDay; ++t) {
            auto v = parse_long(reader.field(slot_cols[t]));
            if (!v || *v < 0 || *v >= kNumStates) {
                throw InputError(path + ": record " + std::to_string(reader.record_number()) +
                                 ": bad state id in column s" + std::to_string(t + 1));
            }
            row_states[t] = static_cast<std::uint8_t>(*v);
        }
        grid.push_row(reader.field(c_id), *weight,
                      Covariates{reader.field(c_sex), reader.field(c_region),
                                 reader.field(c_emp), reader.field(c_day),
                                 static_cast<int>(*hh), reader.field(c_date)},
                      row_states);
    }
    return grid;
}

void save_rejects(const std::vector<RejectedRespondent>& rejects, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write rejects report: " + path);
    std::vector<std::string> row = {"respondent_id", "reason"};
    csv::write_row(out, row);
    for (const auto& r : rejects) {
        row = {r.id, r.reason};
        csv::write_row(out, row);
    }
}

}  // namespace actseq
