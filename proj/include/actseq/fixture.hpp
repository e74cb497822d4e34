#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "actseq/diary.hpp"
#include "actseq/estimator.hpp"

namespace actseq {

/// Hand-built semi-Markov seed model used to synthesize the bundled fixture
/// dataset: block-constant routers and run-length hazards with four
/// behavioral variants (sex x day-type), day-part structure (sleep at night,
/// morning routine, weekday work, evening cooking/leisure). Groups are
/// "Male|Weekday", "Male|Weekend", "Female|Weekday", "Female|Weekend".
/// Passes validate(); usable anywhere a known-truth bundle is handy.
ModelParams seed_model();

struct FixtureSpec {
    int n_respondents = 600;
    std::uint64_t seed = 20240501;
};

/// Synthesizes episode diaries: covariates and weights from documented draw
/// order, day sequences from seed_model(), runs converted to episodes with
/// representative activity codes and +/-2-minute boundary jitter (small
/// enough that majority-of-slot discretization reproduces the generated
/// sequence exactly).
std::vector<RespondentEpisodes> make_fixture_respondents(const FixtureSpec& spec);

/// Writes make_fixture_respondents as an episode CSV.
void write_fixture_episodes(const std::string& path, const FixtureSpec& spec);

}  // namespace actseq
