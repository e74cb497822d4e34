#include "actseq/taxonomy.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "actseq/errors.hpp"

namespace actseq {

const std::array<std::string, kNumStates>& state_names() {
    static const std::array<std::string, kNumStates> names = {
        "COOKING",        "DISHWASHING",      "LAUNDRY_IRONING",  "ELECTRIC_CLEANING",
        "SCREENS_LEISURE", "ADMIN_ON_DEVICES", "ELECTRIC_APPLIANCE", "SLEEP",
        "EATING_DRINKING", "PERSONAL_CARE",    "CARE_AT_HOME",     "QUIET_SOCIAL",
        "EXERCISE_NO_MACHINE", "OUT_OF_HOME",
    };
    return names;
}

int state_id(std::string_view name) {
    const auto& names = state_names();
    for (int i = 0; i < kNumStates; ++i) {
        if (names[static_cast<size_t>(i)] == name) return i;
    }
    return -1;
}

const char* tier_name(MapTier tier) {
    switch (tier) {
        case MapTier::Exact: return "exact";
        case MapTier::Prefix4: return "prefix4";
        case MapTier::Prefix2: return "prefix2";
        case MapTier::Keyword: return "keyword";
        case MapTier::FallbackMajor: return "fallback_major";
        case MapTier::Default: return "default";
    }
    return "?";
}

namespace {

bool all_digits(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

int require_state(const std::string& name, const std::string& where) {
    int id = state_id(name);
    if (id < 0) throw InputError(where + ": unknown state name '" + name + "'");
    return id;
}

void require_prefix(const std::string& p, size_t len, const std::string& where) {
    if (p.size() != len || !all_digits(p)) {
        throw InputError(where + ": prefix '" + p + "' must be " + std::to_string(len) +
                         " decimal digits");
    }
}

}  // namespace

RuleSet parse_rules(const std::string& json_text, const std::string& origin) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw InputError(origin + ": JSON parse error: " + e.what());
    }
    if (!doc.is_object()) throw InputError(origin + ": rules document must be a JSON object");

    RuleSet rules;
    auto read_map = [&](const char* key, size_t digits, std::map<std::string, int>& out) {
        if (!doc.contains(key)) return;
        const auto& obj = doc.at(key);
        if (!obj.is_object()) throw InputError(origin + ": '" + key + "' must be an object");
        for (auto it = obj.begin(); it != obj.end(); ++it) {
            const std::string where = origin + ": " + key + "." + it.key();
            require_prefix(it.key(), digits, where);
            if (!it.value().is_string()) throw InputError(where + ": state must be a string");
            out[it.key()] = require_state(it.value().get<std::string>(), where);
        }
    };
    read_map("exact", 6, rules.exact);
    read_map("prefix4", 4, rules.prefix4);
    read_map("prefix2", 2, rules.prefix2);
    read_map("fallback_major", 2, rules.fallback_major);

    if (doc.contains("keywords")) {
        const auto& arr = doc.at("keywords");
        if (!arr.is_array()) throw InputError(origin + ": 'keywords' must be an array");
        for (size_t i = 0; i < arr.size(); ++i) {
            const auto& entry = arr[i];
            const std::string where = origin + ": keywords[" + std::to_string(i) + "]";
            if (!entry.is_array() || entry.size() != 2 || !entry[0].is_string() ||
                !entry[1].is_string()) {
                throw InputError(where + ": expected [keyword, state] string pair");
            }
            std::string kw = lower(entry[0].get<std::string>());
            if (kw.empty()) throw InputError(where + ": empty keyword");
            rules.keywords.emplace_back(std::move(kw),
                                        require_state(entry[1].get<std::string>(), where));
        }
    }

    if (doc.contains("default")) {
        if (!doc.at("default").is_string())
            throw InputError(origin + ": 'default' must be a state name string");
        rules.default_state =
            require_state(doc.at("default").get<std::string>(), origin + ": default");
    }
    return rules;
}

RuleSet load_rules(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open rules file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_rules(ss.str(), path);
}

// Encodes the documented sample rules (020101 -> ELECTRIC_CLEANING, 01 ->
// PERSONAL_CARE, 0203 -> LAUNDRY_IRONING, cook/oven/microwave keywords,
// OUT_OF_HOME default) and a best-effort completion over the ATUS major
// categories. The complete production rule tables were never published;
// treat this as a curated, editable starting point (data/rules_default.json).
RuleSet default_rules() {
    static const char* kDefaultRulesJson = R"JSON({
  "exact": {
    "010101": "SLEEP",
    "010102": "SLEEP",
    "020101": "ELECTRIC_CLEANING",
    "020203": "DISHWASHING",
    "120301": "QUIET_SOCIAL",
    "120312": "QUIET_SOCIAL",
    "120313": "QUIET_SOCIAL"
  },
  "prefix4": {
    "0101": "SLEEP",
    "0202": "COOKING",
    "0203": "LAUNDRY_IRONING",
    "0208": "ELECTRIC_APPLIANCE",
    "0209": "ADMIN_ON_DEVICES",
    "1201": "QUIET_SOCIAL",
    "1203": "SCREENS_LEISURE"
  },
  "prefix2": {
    "01": "PERSONAL_CARE",
    "03": "CARE_AT_HOME",
    "11": "EATING_DRINKING"
  },
  "keywords": [
    ["cook", "COOKING"],
    ["oven", "COOKING"],
    ["microwave", "COOKING"],
    ["dishwash", "DISHWASHING"],
    ["kitchen clean", "DISHWASHING"],
    ["laundry", "LAUNDRY_IRONING"],
    ["ironing", "LAUNDRY_IRONING"],
    ["vacuum", "ELECTRIC_CLEANING"],
    ["television", "SCREENS_LEISURE"],
    ["computer", "SCREENS_LEISURE"],
    ["video game", "SCREENS_LEISURE"],
    ["telephone", "SCREENS_LEISURE"],
    ["email", "ADMIN_ON_DEVICES"],
    ["financial", "ADMIN_ON_DEVICES"],
    ["printer", "ADMIN_ON_DEVICES"],
    ["scanner", "ADMIN_ON_DEVICES"],
    ["power tool", "ELECTRIC_APPLIANCE"],
    ["yoga", "EXERCISE_NO_MACHINE"],
    ["calisthenics", "EXERCISE_NO_MACHINE"],
    ["stretching", "EXERCISE_NO_MACHINE"],
    ["sleep", "SLEEP"],
    ["napping", "SLEEP"],
    ["reading", "QUIET_SOCIAL"],
    ["relaxing", "QUIET_SOCIAL"]
  ],
  "fallback_major": {
    "02": "QUIET_SOCIAL",
    "04": "OUT_OF_HOME",
    "05": "OUT_OF_HOME",
    "06": "OUT_OF_HOME",
    "07": "OUT_OF_HOME",
    "08": "OUT_OF_HOME",
    "09": "OUT_OF_HOME",
    "10": "OUT_OF_HOME",
    "12": "QUIET_SOCIAL",
    "13": "OUT_OF_HOME",
    "14": "OUT_OF_HOME",
    "15": "OUT_OF_HOME",
    "16": "SCREENS_LEISURE",
    "18": "OUT_OF_HOME",
    "50": "OUT_OF_HOME"
  },
  "default": "OUT_OF_HOME"
})JSON";
    return parse_rules(kDefaultRulesJson, "builtin default rules");
}

MapOutcome map_code_traced(std::string_view code6, std::string_view description,
                           const RuleSet& rules) {
    if (code6.size() != 6 || !all_digits(code6)) {
        throw InputError("malformed activity code '" + std::string(code6) +
                         "': expected 6 decimal digits");
    }
    const std::string code(code6);
    if (auto it = rules.exact.find(code); it != rules.exact.end())
        return {it->second, MapTier::Exact};
    if (auto it = rules.prefix4.find(code.substr(0, 4)); it != rules.prefix4.end())
        return {it->second, MapTier::Prefix4};
    if (auto it = rules.prefix2.find(code.substr(0, 2)); it != rules.prefix2.end())
        return {it->second, MapTier::Prefix2};
    if (!description.empty() && !rules.keywords.empty()) {
        const std::string desc = lower(description);
        for (const auto& [kw, st] : rules.keywords) {
            if (desc.find(kw) != std::string::npos) return {st, MapTier::Keyword};
        }
    }
    if (auto it = rules.fallback_major.find(code.substr(0, 2)); it != rules.fallback_major.end())
        return {it->second, MapTier::FallbackMajor};
    return {rules.default_state, MapTier::Default};
}

int map_code(std::string_view code6, std::string_view description, const RuleSet& rules) {
    return map_code_traced(code6, description, rules).state;
}

CoverageReport validate_rules(const RuleSet& rules,
                              const std::vector<std::pair<std::string, std::string>>& universe) {
    CoverageReport report;
    for (const auto& [code, desc] : universe) {
        switch (map_code_traced(code, desc, rules).tier) {
            case MapTier::Exact: ++report.exact; break;
            case MapTier::Prefix4: ++report.prefix4; break;
            case MapTier::Prefix2: ++report.prefix2; break;
            case MapTier::Keyword: ++report.keyword; break;
            case MapTier::FallbackMajor: ++report.fallback_major; break;
            case MapTier::Default:
                ++report.defaulted;
                report.defaulted_codes.push_back(code);
                break;
        }
    }
    return report;
}

}  // namespace actseq
