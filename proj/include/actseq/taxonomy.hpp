#pragma once

#include <array>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace actseq {

/// Number of activity states in the model alphabet (K).
inline constexpr int kNumStates = 14;

/// Canonical state ids. The ordering follows the taxonomy table: at-home
/// electric activities first, then at-home non-electric, then the out-of-home
/// catch-all. OUT_OF_HOME doubles as the mapping fallback.
namespace state {
inline constexpr int COOKING = 0;
inline constexpr int DISHWASHING = 1;
inline constexpr int LAUNDRY_IRONING = 2;
inline constexpr int ELECTRIC_CLEANING = 3;
inline constexpr int SCREENS_LEISURE = 4;
inline constexpr int ADMIN_ON_DEVICES = 5;
inline constexpr int ELECTRIC_APPLIANCE = 6;
inline constexpr int SLEEP = 7;
inline constexpr int EATING_DRINKING = 8;
inline constexpr int PERSONAL_CARE = 9;
inline constexpr int CARE_AT_HOME = 10;
inline constexpr int QUIET_SOCIAL = 11;
inline constexpr int EXERCISE_NO_MACHINE = 12;
inline constexpr int OUT_OF_HOME = 13;
}  // namespace state

const std::array<std::string, kNumStates>& state_names();

/// State id for a canonical name, or -1 if unknown.
int state_id(std::string_view name);

/// Version tag recorded in model bundles; bump when the state set changes.
inline constexpr const char* kTaxonomyVersion = "taxonomy-14-v1";

/// Code-to-state mapping rules. Applied in tier order:
/// exact -> prefix4 -> prefix2 -> keyword -> fallback_major -> default.
/// A 4-digit prefix outranks a 2-digit one (more specific wins). Keywords are
/// case-insensitive substring matches over the episode description, checked
/// in list order. Immutable after load; safe to share across threads.
struct RuleSet {
    std::map<std::string, int> exact;                   // 6-digit code -> state
    std::map<std::string, int> prefix4;                 // 4-digit prefix -> state
    std::map<std::string, int> prefix2;                 // 2-digit prefix -> state
    std::vector<std::pair<std::string, int>> keywords;  // ordered (keyword, state)
    std::map<std::string, int> fallback_major;          // 2-digit prefix -> state
    int default_state = state::OUT_OF_HOME;
};

enum class MapTier { Exact, Prefix4, Prefix2, Keyword, FallbackMajor, Default };

const char* tier_name(MapTier tier);

/// Bundled default rules (identical to data/rules_default.json).
RuleSet default_rules();

/// Loads and validates a rules config (JSON). Throws InputError naming the
/// offending field on schema or state-name problems.
RuleSet load_rules(const std::string& path);

/// Parses rules from JSON text; `origin` labels error messages.
RuleSet parse_rules(const std::string& json_text, const std::string& origin);

struct MapOutcome {
    int state;
    MapTier tier;
};

/// Maps one 6-digit code (+ free-text description) to a state. Pure function;
/// total over well-formed codes. Throws InputError on a malformed code.
int map_code(std::string_view code6, std::string_view description, const RuleSet& rules);

MapOutcome map_code_traced(std::string_view code6, std::string_view description,
                           const RuleSet& rules);

/// Per-tier capture counts over a code universe, plus the codes that fell
/// through to the default (flagged for rule review).
struct CoverageReport {
    long exact = 0;
    long prefix4 = 0;
    long prefix2 = 0;
    long keyword = 0;
    long fallback_major = 0;
    long defaulted = 0;
    std::vector<std::string> defaulted_codes;

    long total() const { return exact + prefix4 + prefix2 + keyword + fallback_major + defaulted; }
};

CoverageReport validate_rules(const RuleSet& rules,
                              const std::vector<std::pair<std::string, std::string>>& universe);

}  // namespace actseq
