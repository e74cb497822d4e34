#include "actseq/fixture.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>

#include "actseq/csv.hpp"
#include "actseq/errors.hpp"
#include "actseq/generator.hpp"
#include "actseq/rng.hpp"

namespace actseq {

namespace {

using StateArray = std::array<double, kNumStates>;

// Destination attraction per day-part block (unnormalized). Indexed by the
// canonical state order: COOKING, DISHWASHING, LAUNDRY_IRONING,
// ELECTRIC_CLEANING, SCREENS_LEISURE, ADMIN_ON_DEVICES, ELECTRIC_APPLIANCE,
// SLEEP, EATING_DRINKING, PERSONAL_CARE, CARE_AT_HOME, QUIET_SOCIAL,
// EXERCISE_NO_MACHINE, OUT_OF_HOME.
constexpr std::array<StateArray, 4> kBlockAttraction = {{
    // NIGHT
    {0.3, 0.1, 0.1, 0.1, 3.0, 0.2, 0.1, 30.0, 0.5, 1.0, 0.3, 1.0, 0.1, 2.0},
    // MORNING
    {3.0, 1.0, 0.6, 0.5, 2.0, 1.0, 0.3, 1.0, 4.0, 6.0, 1.5, 1.5, 0.5, 12.0},
    // AFTERNOON
    {1.2, 0.8, 0.6, 0.5, 2.5, 1.0, 0.5, 0.8, 2.5, 1.0, 1.5, 1.5, 0.5, 14.0},
    // EVENING
    {4.5, 2.0, 0.8, 0.5, 8.0, 1.0, 0.4, 2.0, 5.0, 1.5, 1.5, 2.5, 0.6, 3.0},
}};

// Base exit probability per (state, run-length bin); bins are the defaults
// {1},{2},{3},{4-6},{7-12},{13-36},{37+}. Rising profiles give strongly
// non-geometric dwells (cooking peaks at 20-30 min, sleep near 8 h).
constexpr std::array<std::array<double, 7>, kNumStates> kBaseHazard = {{
    {0.15, 0.35, 0.55, 0.75, 0.90, 0.95, 0.95},  // COOKING
    {0.45, 0.65, 0.80, 0.90, 0.95, 0.95, 0.95},  // DISHWASHING
    {0.30, 0.45, 0.60, 0.80, 0.90, 0.95, 0.95},  // LAUNDRY_IRONING
    {0.35, 0.50, 0.65, 0.85, 0.92, 0.95, 0.95},  // ELECTRIC_CLEANING
    {0.12, 0.18, 0.25, 0.35, 0.45, 0.60, 0.75},  // SCREENS_LEISURE
    {0.30, 0.45, 0.60, 0.80, 0.90, 0.95, 0.95},  // ADMIN_ON_DEVICES
    {0.35, 0.50, 0.65, 0.85, 0.92, 0.95, 0.95},  // ELECTRIC_APPLIANCE
    {0.03, 0.03, 0.03, 0.04, 0.05, 0.06, 0.35},  // SLEEP
    {0.20, 0.40, 0.60, 0.80, 0.92, 0.95, 0.95},  // EATING_DRINKING
    {0.30, 0.50, 0.70, 0.85, 0.93, 0.95, 0.95},  // PERSONAL_CARE
    {0.20, 0.35, 0.50, 0.70, 0.85, 0.92, 0.95},  // CARE_AT_HOME
    {0.20, 0.30, 0.40, 0.55, 0.70, 0.85, 0.90},  // QUIET_SOCIAL
    {0.25, 0.40, 0.55, 0.75, 0.90, 0.95, 0.95},  // EXERCISE_NO_MACHINE
    {0.05, 0.06, 0.07, 0.09, 0.12, 0.18, 0.30},  // OUT_OF_HOME
}};

double hazard_block_factor(int block, int s) {
    if (s == state::SLEEP) {
        // Wake-up pressure during the day.
        constexpr double f[4] = {1.0, 6.0, 4.0, 2.0};
        return f[block];
    }
    if (s == state::OUT_OF_HOME) {
        // Coming home toward the evening and night.
        constexpr double f[4] = {3.0, 0.8, 0.6, 2.5};
        return f[block];
    }
    return 1.0;
}

StateArray variant_attraction(int block, bool female, bool weekend) {
    StateArray a = kBlockAttraction[static_cast<size_t>(block)];
    if (female) {
        a[state::COOKING] *= 1.8;
        a[state::DISHWASHING] *= 1.6;
        a[state::LAUNDRY_IRONING] *= 2.0;
        a[state::ELECTRIC_CLEANING] *= 1.6;
        a[state::CARE_AT_HOME] *= 1.7;
    } else {
        a[state::ELECTRIC_APPLIANCE] *= 1.8;
        a[state::SCREENS_LEISURE] *= 1.15;
    }
    if (weekend) {
        a[state::OUT_OF_HOME] *= 0.45;
        a[state::SCREENS_LEISURE] *= 1.4;
        a[state::QUIET_SOCIAL] *= 1.3;
        a[state::ELECTRIC_CLEANING] *= 1.4;
        a[state::LAUNDRY_IRONING] *= 1.4;
    }
    return a;
}

}  // namespace

ModelParams seed_model() {
    ModelParams p;
    p.mode = ModelMode::SemiMarkov;
    p.K = kNumStates;
    p.T = kSlotsPerDay;
    p.bins = RunLengthBins::defaults();
    p.M = p.bins.count();
    p.blocks = BlockMap::dayparts();
    p.hp = Hyperparams::defaults(p.blocks.count());
    p.groups = {"Male|Weekday", "Male|Weekend", "Female|Weekday", "Female|Weekend"};
    p.spec_id = "seed";
    p.covariate = "sex|day_type";

    const int G = p.num_groups();
    p.pi.assign(static_cast<size_t>(G) * p.K, 0.0);
    p.theta.assign(static_cast<size_t>(G) * (p.T - 1) * p.K * p.K, 0.0);
    p.hazard.assign(static_cast<size_t>(G) * (p.T - 1) * p.K * p.M, 0.0);

    for (int g = 0; g < G; ++g) {
        const bool weekend = (g % 2) == 1;
        const bool female = g >= 2;

        p.pi[p.pi_idx(g, state::SLEEP)] = 0.86;
        p.pi[p.pi_idx(g, state::OUT_OF_HOME)] = 0.06;
        p.pi[p.pi_idx(g, state::SCREENS_LEISURE)] = 0.04;
        p.pi[p.pi_idx(g, state::PERSONAL_CARE)] = 0.02;
        p.pi[p.pi_idx(g, state::QUIET_SOCIAL)] = 0.02;

        for (int t = 0; t + 1 < p.T; ++t) {
            const int b = p.blocks.block_of_slot(t + 1);
            const StateArray attraction = variant_attraction(b, female, weekend);
            for (int s = 0; s < p.K; ++s) {
                double denom = 0.0;
                for (int s2 = 0; s2 < p.K; ++s2) {
                    if (s2 != s) denom += attraction[s2];
                }
                // Self mass 0.5, the rest proportional to attraction; the
                // destination distribution phi is then exactly the
                // normalized attraction row.
                for (int s2 = 0; s2 < p.K; ++s2) {
                    p.theta[p.theta_idx(g, t, s, s2)] =
                        s2 == s ? 0.5 : 0.5 * attraction[s2] / denom;
                }
                for (int m = 0; m < p.M; ++m) {
                    const double h = kBaseHazard[s][m] * hazard_block_factor(b, s);
                    p.hazard[p.hazard_idx(g, t, s, m)] = std::clamp(h, 0.02, 0.95);
                }
            }
        }
    }
    validate(p);
    return p;
}

namespace {

struct StateCode {
    const char* code;
    const char* description;
};

// Representative episode codes per state; each maps back to its state under
// the default rules (exact, prefix, keyword and fallback tiers all covered).
constexpr std::array<StateCode, kNumStates> kStateCodes = {{
    {"020201", "Food and drink preparation"},
    {"020203", "Kitchen and food clean-up"},
    {"020301", "Laundry"},
    {"020101", "Interior cleaning"},
    {"120303", "Television and movies"},
    {"020901", "Financial management"},
    {"020801", "Appliance and tool set-up and repair"},
    {"010101", "Sleeping"},
    {"110101", "Eating and drinking"},
    {"010201", "Washing, dressing and grooming"},
    {"030101", "Physical care for household children"},
    {"120101", "Socializing and communicating"},
    {"130199", "Doing yoga and stretching"},
    {"050101", "Working at main job"},
}};

constexpr std::array<StateCode, 3> kOutOfHomeCodes = {{
    {"050101", "Working at main job"},
    {"070101", "Grocery shopping"},
    {"180501", "Travel related to work"},
}};

// 2023 calendar (non-leap); 2023-01-01 was a Sunday.
constexpr std::array<int, 12> kDaysPerMonth = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};

std::string iso_date_2023(int day_of_year) {
    int month = 0;
    int day = day_of_year;
    while (day >= kDaysPerMonth[month]) {
        day -= kDaysPerMonth[month];
        ++month;
    }
    char buf[24];
    std::snprintf(buf, sizeof(buf), "2023-%02d-%02d", month + 1, day + 1);
    return buf;
}

bool is_weekend_2023(int day_of_year) {
    const int dow = day_of_year % 7;  // 0 = Sunday
    return dow == 0 || dow == 6;
}

int draw_weighted(SplitMix64& rng, std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    double u = rng.next_double() * total;
    for (size_t i = 0; i < weights.size(); ++i) {
        u -= weights[i];
        if (u < 0.0) return static_cast<int>(i);
    }
    return static_cast<int>(weights.size()) - 1;
}

}  // namespace

std::vector<RespondentEpisodes> make_fixture_respondents(const FixtureSpec& spec) {
    if (spec.n_respondents < 1) throw InputError("fixture: n_respondents must be >= 1");
    const ModelParams model = seed_model();

    // Independent child streams: covariates, day sequences, boundary jitter.
    const std::uint64_t cov_seed = child_seed(spec.seed, 0);
    const std::uint64_t day_seed = child_seed(spec.seed, 1);
    const std::uint64_t jitter_seed = child_seed(spec.seed, 2);

    constexpr double kRegionShare[4] = {0.17, 0.21, 0.38, 0.24};
    constexpr double kEmploymentShare[3] = {0.60, 0.05, 0.35};
    constexpr double kHhSizeShare[6] = {0.28, 0.35, 0.16, 0.13, 0.05, 0.03};

    std::vector<RespondentEpisodes> out;
    out.reserve(static_cast<size_t>(spec.n_respondents));
    for (int i = 0; i < spec.n_respondents; ++i) {
        SplitMix64 covs_rng(child_seed(cov_seed, static_cast<std::uint64_t>(i)));
        RespondentEpisodes r;
        char idbuf[16];
        std::snprintf(idbuf, sizeof(idbuf), "R%06d", i + 1);
        r.id = idbuf;

        const bool female = covs_rng.next_double() < 0.5;
        const int day_of_year = static_cast<int>(covs_rng.next_double() * 365.0);
        const bool weekend = is_weekend_2023(day_of_year);
        const CovariateSpec& region_spec = covariate_spec("S1");
        const CovariateSpec& employment_spec = covariate_spec("S3");
        r.covs.sex = female ? "Female" : "Male";
        r.covs.region = region_spec.groups[draw_weighted(covs_rng, kRegionShare)];
        r.covs.employment = employment_spec.groups[draw_weighted(covs_rng, kEmploymentShare)];
        r.covs.day_type = weekend ? "Weekend" : "Weekday";
        r.covs.hh_size = 1 + draw_weighted(covs_rng, kHhSizeShare);
        r.covs.diary_date = iso_date_2023(day_of_year);
        // Lognormal person-day weight around 800 (Box-Muller).
        const double u1 = std::max(covs_rng.next_double(), 1e-12);
        const double u2 = covs_rng.next_double();
        const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
        r.weight = std::round(std::exp(std::log(800.0) + 0.5 * z) * 10.0) / 10.0;
        if (r.weight <= 0.0) r.weight = 1.0;

        const int g = (female ? 2 : 0) + (weekend ? 1 : 0);
        const auto day = generate_day(model, g, child_seed(day_seed, static_cast<std::uint64_t>(i)));

        // Runs -> episodes. Interior boundaries get +/-2-minute jitter, small
        // enough that every slot keeps its majority state.
        SplitMix64 jitter_rng(child_seed(jitter_seed, static_cast<std::uint64_t>(i)));
        std::vector<int> bounds = {0};
        std::vector<int> run_state;
        int t = 0;
        while (t < kSlotsPerDay) {
            int end = t;
            while (end + 1 < kSlotsPerDay && day[end + 1] == day[t]) ++end;
            run_state.push_back(day[t]);
            bounds.push_back((end + 1) * kMinutesPerSlot);
            t = end + 1;
        }
        for (size_t b = 1; b + 1 < bounds.size(); ++b) {
            bounds[b] += static_cast<int>(jitter_rng.next_double() * 5.0) - 2;
        }
        int out_rotation = 0;
        for (size_t k = 0; k < run_state.size(); ++k) {
            Episode ep;
            ep.line_no = static_cast<int>(k) + 1;
            ep.start_minute = bounds[k];
            ep.duration_min = bounds[k + 1] - bounds[k];
            const int s = run_state[k];
            if (s == state::OUT_OF_HOME) {
                const StateCode& sc = kOutOfHomeCodes[out_rotation++ % kOutOfHomeCodes.size()];
                ep.code6 = sc.code;
                ep.description = sc.description;
            } else {
                ep.code6 = kStateCodes[static_cast<size_t>(s)].code;
                ep.description = kStateCodes[static_cast<size_t>(s)].description;
            }
            r.episodes.push_back(std::move(ep));
        }
        out.push_back(std::move(r));
    }
    return out;
}

void write_fixture_episodes(const std::string& path, const FixtureSpec& spec) {
    const auto respondents = make_fixture_respondents(spec);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write fixture: " + path);
    std::vector<std::string> row = {"respondent_id", "line_no",  "start_minute", "duration_min",
                                    "code6",         "description", "weight",    "sex",
                                    "region",        "employment",  "day_type",  "hh_size",
                                    "diary_date"};
    csv::write_row(out, row);
    for (const RespondentEpisodes& r : respondents) {
        char weight_buf[32];
        std::snprintf(weight_buf, sizeof(weight_buf), "%.1f", r.weight);
        for (const Episode& e : r.episodes) {
            row = {r.id,
                   std::to_string(e.line_no),
                   std::to_string(e.start_minute),
                   std::to_string(e.duration_min),
                   e.code6,
                   e.description,
                   weight_buf,
                   r.covs.sex,
                   r.covs.region,
                   r.covs.employment,
                   r.covs.day_type,
                   std::to_string(r.covs.hh_size),
                   r.covs.diary_date};
            csv::write_row(out, row);
        }
    }
}

}  // namespace actseq
