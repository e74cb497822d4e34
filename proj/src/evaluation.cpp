#include "actseq/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <omp.h>

#include "actseq/errors.hpp"
#include "actseq/generator.hpp"
#include "actseq/rng.hpp"

namespace actseq {

namespace {

constexpr double kProbFloor = 1e-300;

/// Group index per respondent under the params' spec; throws on unseen.
std::vector<int> resolve_groups(const ModelParams& p, const DiaryGrid& test) {
    const CovariateSpec& spec = covariate_spec(p.spec_id);
    std::vector<int> groups(test.size());
    for (int i = 0; i < test.size(); ++i) {
        auto label = group_label(test.covariates[i], spec);
        const int g = label ? p.group_index(*label) : -1;
        if (g < 0) {
            throw InputError("evaluate: respondent '" + test.ids[i] +
                             "' has no group in the model (spec " + p.spec_id + ", value '" +
                             label.value_or("<unbinnable>") + "')");
        }
        groups[i] = g;
    }
    return groups;
}

RespondentMetrics score_respondent(const ModelParams& p, const DiaryGrid& test, int i, int g) {
    RespondentMetrics m;
    m.weight = test.weights[i];
    const auto states = test.states_of(i);
    const auto runs = test.run_len_of(i);
    std::vector<double> dist(static_cast<size_t>(p.K));
    for (int t = 1; t < test.slots; ++t) {
        const int s = states[t - 1];
        const int observed = states[t];
        one_step_distribution(p, s, runs[t - 1], g, t, dist);
        double prob = dist[observed];
        if (prob < kProbFloor) {
            prob = kProbFloor;
            ++m.n_floored;
        }
        m.sum_nll += -std::log(prob);
        int best = 0;  // scan keeps the lowest state id on ties
        for (int s2 = 1; s2 < p.K; ++s2) {
            if (dist[s2] > dist[best]) best = s2;
        }
        if (best == observed) ++m.n_top1_correct;
        ++m.n_transitions;
    }
    return m;
}

EvalReport finalize_report(std::string model_id, const DiaryGrid& test,
                           std::vector<RespondentMetrics> per_respondent) {
    EvalReport report;
    report.model_id = std::move(model_id);
    report.respondent_ids = test.ids;
    report.per_respondent = std::move(per_respondent);
    double num_nll = 0.0, num_top1 = 0.0, den = 0.0;
    for (const RespondentMetrics& m : report.per_respondent) {
        num_nll += m.weight * m.sum_nll;
        num_top1 += m.weight * m.n_top1_correct;
        den += m.weight * m.n_transitions;
        report.n_floored += m.n_floored;
    }
    if (den <= 0.0) throw InputError("evaluate: no transitions to score");
    report.nll = num_nll / den;
    report.top1 = num_top1 / den;
    return report;
}

}  // namespace

EvalReport evaluate(const ModelParams& p, const DiaryGrid& test, const std::string& model_id,
                    int workers) {
    if (test.size() == 0) throw InputError("evaluate: empty test grid");
    if (test.slots != p.T) throw InvariantError("evaluate: grid horizon differs from the model");
    const std::vector<int> groups = resolve_groups(p, test);
    std::vector<RespondentMetrics> metrics(test.size());
    const int nw = workers > 0 ? workers : omp_get_max_threads();
#pragma omp parallel for num_threads(nw) schedule(static)
    for (int i = 0; i < test.size(); ++i) {
        metrics[i] = score_respondent(p, test, i, groups[i]);
    }
    return finalize_report(model_id, test, std::move(metrics));
}

namespace serial_ref {

EvalReport evaluate(const ModelParams& p, const DiaryGrid& test, const std::string& model_id) {
    if (test.size() == 0) throw InputError("evaluate: empty test grid");
    if (test.slots != p.T) throw InvariantError("evaluate: grid horizon differs from the model");
    const std::vector<int> groups = resolve_groups(p, test);
    std::vector<RespondentMetrics> metrics(test.size());
    for (int i = 0; i < test.size(); ++i) {
        metrics[i] = score_respondent(p, test, i, groups[i]);
    }
    return finalize_report(model_id, test, std::move(metrics));
}

}  // namespace serial_ref

namespace {

/// Linear-interpolation empirical quantile over a sorted sample.
double quantile_sorted(const std::vector<double>& sorted, double q) {
    const size_t n = sorted.size();
    if (n == 1) return sorted[0];
    const double pos = q * static_cast<double>(n - 1);
    const size_t lo = static_cast<size_t>(pos);
    if (lo + 1 >= n) return sorted[n - 1];
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace

BootstrapResult paired_bootstrap(const EvalReport& a, const EvalReport& b, int B, double alpha,
                                 std::uint64_t seed, int workers) {
    if (a.respondent_ids != b.respondent_ids) {
        throw InputError("paired_bootstrap: models were evaluated on different respondent sets");
    }
    if (B < 1) throw InputError("paired_bootstrap: B must be >= 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("paired_bootstrap: alpha must be in (0,1)");

    BootstrapResult result;
    if (B < 100) {
        result.warnings.push_back("bootstrap B=" + std::to_string(B) +
                                  " is small; percentile CIs will be unstable");
    }

    const int n = static_cast<int>(a.per_respondent.size());
    std::vector<double> delta_nll(B), delta_top1(B);
    const int nw = workers > 0 ? workers : omp_get_max_threads();
#pragma omp parallel for num_threads(nw) schedule(static)
    for (int r = 0; r < B; ++r) {
        SplitMix64 rng(child_seed(seed, static_cast<std::uint64_t>(r)));
        double nll_a = 0.0, nll_b = 0.0, top_a = 0.0, top_b = 0.0, den = 0.0;
        for (int draw = 0; draw < n; ++draw) {
            int i = static_cast<int>(rng.next_double() * n);
            if (i >= n) i = n - 1;
            const RespondentMetrics& ma = a.per_respondent[i];
            const RespondentMetrics& mb = b.per_respondent[i];
            nll_a += ma.weight * ma.sum_nll;
            nll_b += mb.weight * mb.sum_nll;
            top_a += ma.weight * ma.n_top1_correct;
            top_b += mb.weight * mb.n_top1_correct;
            den += ma.weight * ma.n_transitions;
        }
        delta_nll[r] = (nll_a - nll_b) / den;
        delta_top1[r] = (top_a - top_b) / den;
    }

    auto summarize = [&](std::vector<double>& deltas, const char* metric) {
        CIRecord rec;
        rec.pair = a.model_id + "/" + b.model_id;
        rec.metric = metric;
        rec.B = B;
        rec.alpha = alpha;
        rec.seed = seed;
        double mean = 0.0;
        for (double d : deltas) mean += d;
        rec.mean_delta = mean / B;
        std::sort(deltas.begin(), deltas.end());
        rec.lo = quantile_sorted(deltas, alpha / 2.0);
        rec.hi = quantile_sorted(deltas, 1.0 - alpha / 2.0);
        return rec;
    };
    result.nll = summarize(delta_nll, "nll");
    result.top1 = summarize(delta_top1, "top1");
    return result;
}

double likelihood_ratio(double delta_nll, int steps) {
    if (steps < 1) throw InputError("likelihood_ratio: steps must be >= 1");
    return std::exp(delta_nll * steps);
}

Comparison compare_models(const std::vector<std::pair<std::string, const ModelParams*>>& models,
                          const DiaryGrid& test, int B, double alpha, std::uint64_t seed,
                          int workers) {
    Comparison cmp;
    std::vector<EvalReport> reports;
    reports.reserve(models.size());
    int markov_baseline = -1, semi_baseline = -1;
    for (size_t i = 0; i < models.size(); ++i) {
        const auto& [id, params] = models[i];
        reports.push_back(evaluate(*params, test, id, workers));
        if (params->mode == ModelMode::Markov && markov_baseline < 0) {
            markov_baseline = static_cast<int>(i);
        }
        if (params->mode == ModelMode::SemiMarkov && semi_baseline < 0) {
            semi_baseline = static_cast<int>(i);
        }
    }

    for (size_t i = 0; i < models.size(); ++i) {
        const bool markov = models[i].second->mode == ModelMode::Markov;
        const int base = markov ? markov_baseline : semi_baseline;
        ComparisonRow row;
        row.id = models[i].first;
        row.mode = mode_name(models[i].second->mode);
        row.nll = reports[i].nll;
        row.top1 = reports[i].top1;
        if (base >= 0 && static_cast<int>(i) != base) {
            row.delta_nll_vs_baseline = reports[base].nll - reports[i].nll;
        }
        cmp.rows.push_back(std::move(row));
    }

    std::uint64_t pair_index = 0;
    auto run_pair = [&](int ia, int ib, std::vector<CIRecord>& out) {
        const std::uint64_t pair_seed = child_seed(seed, pair_index++);
        BootstrapResult boot = paired_bootstrap(reports[ia], reports[ib], B, alpha, pair_seed,
                                                workers);
        out.push_back(boot.nll);
        out.push_back(boot.top1);
    };

    // Covariate ablations: baseline vs every other model of the same family.
    for (size_t i = 0; i < models.size(); ++i) {
        const bool markov = models[i].second->mode == ModelMode::Markov;
        const int base = markov ? markov_baseline : semi_baseline;
        if (base >= 0 && static_cast<int>(i) != base) {
            run_pair(base, static_cast<int>(i), cmp.covariate_cis);
        }
    }
    // Hazard pairs: Markov vs semi-Markov sharing a spec id.
    std::map<std::string, std::pair<int, int>> by_spec;  // spec -> (markov, semi)
    for (size_t i = 0; i < models.size(); ++i) {
        auto& slot = by_spec.try_emplace(models[i].second->spec_id, -1, -1).first->second;
        (models[i].second->mode == ModelMode::Markov ? slot.first : slot.second) =
            static_cast<int>(i);
    }
    for (const auto& [spec_id, pair] : by_spec) {
        if (pair.first >= 0 && pair.second >= 0) {
            run_pair(pair.first, pair.second, cmp.hazard_cis);
        }
    }
    return cmp;
}

std::vector<SurvivalPoint> dwell_survival(const DiaryGrid& grid, int state) {
    // Collect completed (event) and censored spell durations with weights.
    struct Spell {
        int length;
        double weight;
        bool completed;
    };
    std::vector<Spell> spells;
    for (int i = 0; i < grid.size(); ++i) {
        const auto states = grid.states_of(i);
        const double w = grid.weights[i];
        int t = 0;
        while (t < grid.slots) {
            if (states[t] != state) {
                ++t;
                continue;
            }
            int end = t;
            while (end + 1 < grid.slots && states[end + 1] == state) ++end;
            spells.push_back({end - t + 1, w, end + 1 < grid.slots});
            t = end + 1;
        }
    }
    if (spells.empty()) return {};

    int max_len = 0;
    for (const Spell& s : spells) max_len = std::max(max_len, s.length);
    std::vector<double> events(max_len + 1, 0.0);       // completed spells of length d
    std::vector<double> censored_at(max_len + 1, 0.0);  // spells cut off at length d
    double at_risk = 0.0;
    for (const Spell& s : spells) {
        (s.completed ? events : censored_at)[s.length] += s.weight;
        at_risk += s.weight;
    }

    // S(d) = P(duration >= d) = prod_{j<d} (1 - events(j)/at_risk(j)).
    // A spell censored at length d was never exposed to an observable exit at
    // duration d (its last slot is the day's last slot, which has no outgoing
    // transition), so it leaves the risk set before the hazard at d.
    std::vector<SurvivalPoint> curve;
    double survival = 1.0;
    for (int d = 1; d <= max_len + 1; ++d) {
        curve.push_back({d, survival});
        if (d > max_len) break;
        at_risk -= censored_at[d];
        if (at_risk > 0.0) survival *= 1.0 - events[d] / at_risk;
        at_risk -= events[d];
    }
    return curve;
}

std::vector<std::optional<double>> transition_timeseries(const DiaryGrid& grid, int s_from,
                                                         int s_to) {
    std::vector<std::optional<double>> out(static_cast<size_t>(grid.slots - 1));
    for (int t = 0; t + 1 < grid.slots; ++t) {
        double exposed = 0.0, moved = 0.0;
        for (int i = 0; i < grid.size(); ++i) {
            const auto states = grid.states_of(i);
            if (states[t] != s_from) continue;
            exposed += grid.weights[i];
            if (states[t + 1] == s_to) moved += grid.weights[i];
        }
        if (exposed > 0.0) out[t] = moved / exposed;
    }
    return out;
}

OccupancyCurves occupancy_curves(const DiaryGrid& grid, int state, const CovariateSpec& spec) {
    OccupancyCurves out;
    out.groups = spec.groups;
    out.curves.assign(spec.groups.size(), std::vector<double>(grid.slots, 0.0));
    std::vector<double> group_weight(spec.groups.size(), 0.0);
    std::vector<int> member(grid.size(), -1);
    for (int i = 0; i < grid.size(); ++i) {
        auto label = group_label(grid.covariates[i], spec);
        if (!label) continue;
        for (size_t g = 0; g < spec.groups.size(); ++g) {
            if (spec.groups[g] == *label) {
                member[i] = static_cast<int>(g);
                group_weight[g] += grid.weights[i];
                break;
            }
        }
    }
    for (int i = 0; i < grid.size(); ++i) {
        if (member[i] < 0) continue;
        const auto states = grid.states_of(i);
        for (int t = 0; t < grid.slots; ++t) {
            if (states[t] == state) out.curves[member[i]][t] += grid.weights[i];
        }
    }
    for (size_t g = 0; g < out.curves.size(); ++g) {
        if (group_weight[g] <= 0.0) continue;
        for (double& v : out.curves[g]) v /= group_weight[g];
    }
    return out;
}

}  // namespace actseq
