#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "actseq/taxonomy.hpp"

namespace actseq {

/// Raw covariate values carried per respondent. Binning into model groups
/// happens later, per CovariateSpec.
struct Covariates {
    std::string sex;         // Male | Female
    std::string region;      // Northeast | Midwest | South | West
    std::string employment;  // Employed | Not employed | Not in work force
    std::string day_type;    // Weekday | Weekend
    int hh_size = 0;
    std::string diary_date;  // ISO-8601 (YYYY-MM-DD)
};

struct Episode {
    int line_no = 0;
    int start_minute = 0;  // minutes from 4:00 a.m., in [0, 1439]
    int duration_min = 0;  // >= 1
    std::string code6;
    std::string description;
};

struct RespondentEpisodes {
    std::string id;
    double weight = 0.0;
    Covariates covs;
    std::vector<Episode> episodes;  // sorted by line_no, contiguous, 1440 min total
};

struct RejectedRespondent {
    std::string id;
    std::string reason;
};

struct IngestResult {
    std::vector<RespondentEpisodes> accepted;
    std::vector<RejectedRespondent> rejects;
};

/// Reads the episode CSV (columns respondent_id, line_no, start_minute,
/// duration_min, code6, description, weight, sex, region, employment,
/// day_type, hh_size, diary_date). A missing column fails the whole file;
/// anything wrong with one respondent's rows rejects that respondent with a
/// reason and keeps the rest.
IngestResult ingest_episodes(const std::string& path);

/// One diary day = 144 ten-minute slots starting at 4:00 a.m.
inline constexpr int kSlotsPerDay = 144;
inline constexpr int kMinutesPerSlot = 10;

/// Column-oriented store of discretized diaries. `slots` defaults to 144;
/// tests may build smaller grids (the counting and estimation code is generic
/// over the horizon).
struct DiaryGrid {
    int slots = kSlotsPerDay;
    std::vector<std::string> ids;
    std::vector<double> weights;
    std::vector<Covariates> covariates;
    std::vector<int> group;                 // -1 until assign_groups
    std::vector<std::string> group_labels;  // labels behind `group`, per active spec
    std::vector<std::uint8_t> states;       // n * slots, state ids
    std::vector<std::int16_t> run_len;      // n * slots, run length at each slot

    int size() const { return static_cast<int>(ids.size()); }
    std::span<const std::uint8_t> states_of(int i) const {
        return {states.data() + static_cast<size_t>(i) * slots, static_cast<size_t>(slots)};
    }
    std::span<const std::int16_t> run_len_of(int i) const {
        return {run_len.data() + static_cast<size_t>(i) * slots, static_cast<size_t>(slots)};
    }

    /// Appends one respondent row; recomputes run lengths from the states.
    void push_row(std::string id, double weight, Covariates covs,
                  std::span<const std::uint8_t> row_states);
};

/// Recomputes run_len from states for every row (run_len[0]=1; +1 on repeat,
/// reset to 1 on change).
void recompute_run_lengths(DiaryGrid& grid);

/// Discretizes episode diaries onto the slot grid. Slot t (1-based) covers
/// minutes [(t-1)*10, t*10); its state is the state of the episode covering
/// the majority of those minutes, ties broken toward the earlier-starting
/// episode. Parallel across respondents; output order matches input order.
DiaryGrid discretize(const std::vector<RespondentEpisodes>& respondents, const RuleSet& rules,
                     int workers = 0);

/// A Table-2 grouping scheme: S0 (ungrouped) through S6 (quarter/season).
struct CovariateSpec {
    std::string id;
    std::string covariate;
    std::vector<std::string> groups;
};

/// The seven canonical specs. Throws InputError for an unknown id.
const CovariateSpec& covariate_spec(const std::string& id);
const std::vector<CovariateSpec>& all_covariate_specs();

/// Group label of one respondent under a spec, or nullopt when the covariate
/// value is missing or unbinnable.
std::optional<std::string> group_label(const Covariates& covs, const CovariateSpec& spec);

struct GroupAssignResult {
    DiaryGrid grid;  // only respondents that binned successfully
    std::vector<RejectedRespondent> rejects;
};

/// Binds grid.group/group_labels to the spec's groups. Pure: returns a new
/// grid; respondents that cannot be binned are dropped into `rejects`.
GroupAssignResult assign_groups(const DiaryGrid& grid, const CovariateSpec& spec);

struct SplitResult {
    DiaryGrid train;
    DiaryGrid test;
    std::vector<std::string> warnings;
};

/// Seeded stratified split; strata are the spec's groups. Respondents land on
/// exactly one side. A stratum with fewer than 2 respondents goes wholly to
/// train (with a warning). Deterministic in (grid order, spec, seed).
SplitResult split(const DiaryGrid& grid, double test_fraction, const CovariateSpec& spec,
                  std::uint64_t seed);

/// Same split machinery, stratified by the joint label of all six covariates.
/// Used when several models must share one holdout.
SplitResult split_joint(const DiaryGrid& grid, double test_fraction, std::uint64_t seed);

/// Grid artifact IO (CSV with covariate columns + s1..s144). Run lengths are
/// derived data and recomputed on load.
void save_grid(const DiaryGrid& grid, const std::string& path);
DiaryGrid load_grid(const std::string& path);

void save_rejects(const std::vector<RejectedRespondent>& rejects, const std::string& path);

}  // namespace actseq
