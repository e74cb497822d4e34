#include "actseq/estimator.hpp"

#include <algorithm>
#include <cmath>

#include "actseq/errors.hpp"

namespace actseq {

namespace {
constexpr double kHazardClampLo = 1e-6;
constexpr double kHazardClampHi = 1.0 - 1e-6;
constexpr double kDegenerateRowEps = 1e-9;
constexpr double kRowSumTol = 1e-12;
}  // namespace

Hyperparams Hyperparams::defaults(int num_blocks) {
    Hyperparams hp;
    hp.tau.assign(static_cast<size_t>(num_blocks), 20.0);
    hp.k = 1.0;
    hp.kappa.assign(static_cast<size_t>(num_blocks), 20.0);
    return hp;
}

void Hyperparams::validate(int num_blocks) const {
    if (static_cast<int>(tau.size()) != num_blocks ||
        static_cast<int>(kappa.size()) != num_blocks) {
        throw InvariantError("hyperparams: tau/kappa need one entry per block");
    }
    for (double v : tau)
        if (!(v > 0)) throw InvariantError("hyperparams: tau must be > 0");
    for (double v : kappa)
        if (!(v > 0)) throw InvariantError("hyperparams: kappa must be > 0");
    if (!(k > 0)) throw InvariantError("hyperparams: k must be > 0");
}

const char* mode_name(ModelMode mode) {
    return mode == ModelMode::Markov ? "MARKOV" : "SEMI_MARKOV";
}

ModelMode mode_from_name(const std::string& name) {
    if (name == "MARKOV") return ModelMode::Markov;
    if (name == "SEMI_MARKOV") return ModelMode::SemiMarkov;
    throw InputError("unknown mode '" + name + "' (expected MARKOV or SEMI_MARKOV)");
}

int ModelParams::group_index(const std::string& label) const {
    for (int g = 0; g < num_groups(); ++g) {
        if (groups[g] == label) return g;
    }
    return -1;
}

std::vector<double> prototype_router(const CountTables& c) {
    std::vector<double> bar(static_cast<size_t>(c.B) * c.K * c.K);
    const double uniform = 1.0 / c.K;
    for (int b = 0; b < c.B; ++b) {
        for (int s = 0; s < c.K; ++s) {
            double row_sum = 0.0;
            for (int s2 = 0; s2 < c.K; ++s2) row_sum += c.block_transitions[c.cb_idx(b, s, s2)];
            for (int s2 = 0; s2 < c.K; ++s2) {
                bar[c.cb_idx(b, s, s2)] =
                    row_sum > 0.0 ? c.block_transitions[c.cb_idx(b, s, s2)] / row_sum : uniform;
            }
        }
    }
    return bar;
}

std::vector<double> posterior_router(const CountTables& c, const std::vector<double>& theta_bar,
                                     const Hyperparams& hp) {
    std::vector<double> theta(c.transitions.size());
    const double k_over_K = hp.k / c.K;
    for (int g = 0; g < c.num_groups(); ++g) {
        for (int t = 0; t + 1 < c.T; ++t) {
            const int b = c.block_map.block_of_slot(t + 1);
            const double tau = hp.tau[b];
            for (int s = 0; s < c.K; ++s) {
                double row_count = 0.0;
                for (int s2 = 0; s2 < c.K; ++s2) row_count += c.transitions[c.c_idx(g, t, s, s2)];
                const double denom = row_count + tau + hp.k;
                for (int s2 = 0; s2 < c.K; ++s2) {
                    theta[c.c_idx(g, t, s, s2)] =
                        (c.transitions[c.c_idx(g, t, s, s2)] + tau * theta_bar[c.cb_idx(b, s, s2)] +
                         k_over_K) /
                        denom;
                }
            }
        }
    }
    return theta;
}

std::vector<double> prototype_hazard(const CountTables& c) {
    std::vector<double> bar(static_cast<size_t>(c.B) * c.K * c.M);
    for (int b = 0; b < c.B; ++b) {
        for (int s = 0; s < c.K; ++s) {
            for (int m = 0; m < c.M; ++m) {
                const double n = c.block_exposures[c.nb_idx(b, s, m)];
                const double e = c.block_exits[c.nb_idx(b, s, m)];
                const double h = n > 0.0 ? e / n : 0.5;
                bar[c.nb_idx(b, s, m)] = std::clamp(h, kHazardClampLo, kHazardClampHi);
            }
        }
    }
    return bar;
}

std::vector<double> posterior_hazard(const CountTables& c, const std::vector<double>& h_bar,
                                     const Hyperparams& hp) {
    std::vector<double> hazard(c.exposures.size());
    for (int g = 0; g < c.num_groups(); ++g) {
        for (int t = 0; t + 1 < c.T; ++t) {
            const int b = c.block_map.block_of_slot(t + 1);
            const double kappa = hp.kappa[b];
            for (int s = 0; s < c.K; ++s) {
                for (int m = 0; m < c.M; ++m) {
                    const size_t i = c.ne_idx(g, t, s, m);
                    hazard[i] = (c.exits[i] + kappa * h_bar[c.nb_idx(b, s, m)]) /
                                (c.exposures[i] + kappa);
                }
            }
        }
    }
    return hazard;
}

std::vector<double> initial_distribution(const CountTables& c, const Hyperparams& hp) {
    std::vector<double> pi(c.initial.size());
    const double k_over_K = hp.k / c.K;
    for (int g = 0; g < c.num_groups(); ++g) {
        const double denom = c.group_weight[g] + hp.k;
        for (int s = 0; s < c.K; ++s) {
            pi[c.c0_idx(g, s)] = (c.initial[c.c0_idx(g, s)] + k_over_K) / denom;
        }
    }
    return pi;
}

std::vector<double> destination_distribution(std::span<const double> theta_row, int s) {
    const double stay = theta_row[s];
    if (1.0 - stay < kDegenerateRowEps) {
        throw InvariantError("destination_distribution: self-transition probability ~1, cannot "
                             "condition on leaving");
    }
    std::vector<double> phi(theta_row.size(), 0.0);
    const double leave = 1.0 - stay;
    for (size_t s2 = 0; s2 < theta_row.size(); ++s2) {
        if (static_cast<int>(s2) != s) phi[s2] = theta_row[s2] / leave;
    }
    return phi;
}

std::vector<double> destination_or_uniform(std::span<const double> theta_row, int s) {
    if (1.0 - theta_row[s] < kDegenerateRowEps) {
        std::vector<double> phi(theta_row.size(), 1.0 / (theta_row.size() - 1));
        phi[s] = 0.0;
        return phi;
    }
    return destination_distribution(theta_row, s);
}

ModelParams fit(const DiaryGrid& train, const CovariateSpec& spec, const Hyperparams& hp,
                ModelMode mode, const RunLengthBins& bins, const BlockMap& blocks, int workers) {
    if (train.size() == 0) throw InputError("fit: empty training grid");
    hp.validate(blocks.count());

    auto assigned = assign_groups(train, spec);
    if (!assigned.rejects.empty()) {
        throw InputError("fit: respondent '" + assigned.rejects.front().id + "' " +
                         assigned.rejects.front().reason);
    }
    CountTables counts = accumulate(assigned.grid, bins, blocks, kNumStates, workers);
    for (int g = 0; g < counts.num_groups(); ++g) {
        if (counts.group_weight[g] <= 0.0) {
            throw InputError("fit: empty stratum '" + counts.groups[g] + "' under spec " +
                             spec.id);
        }
    }

    ModelParams params;
    params.mode = mode;
    params.K = counts.K;
    params.T = counts.T;
    params.M = counts.M;
    params.groups = counts.groups;
    params.bins = bins;
    params.blocks = blocks;
    params.hp = hp;
    params.spec_id = spec.id;
    params.covariate = spec.covariate;

    const auto theta_bar = prototype_router(counts);
    params.theta = posterior_router(counts, theta_bar, hp);
    params.pi = initial_distribution(counts, hp);
    if (mode == ModelMode::SemiMarkov) {
        const auto h_bar = prototype_hazard(counts);
        params.hazard = posterior_hazard(counts, h_bar, hp);
    }
    validate(params);
    return params;
}

void validate(const ModelParams& p) {
    auto fail = [](const std::string& what) { throw InvariantError("model params: " + what); };
    if (p.K <= 0 || p.T <= 1 || p.num_groups() == 0) fail("empty shape");
    if (p.pi.size() != static_cast<size_t>(p.num_groups()) * p.K) fail("pi size mismatch");
    if (p.theta.size() != static_cast<size_t>(p.num_groups()) * (p.T - 1) * p.K * p.K) {
        fail("theta size mismatch");
    }
    if (p.mode == ModelMode::SemiMarkov) {
        if (p.M <= 0) fail("semi-Markov params need run-length bins");
        if (p.hazard.size() != static_cast<size_t>(p.num_groups()) * (p.T - 1) * p.K * p.M) {
            fail("hazard size mismatch");
        }
    }
    for (int g = 0; g < p.num_groups(); ++g) {
        double pi_sum = 0.0;
        for (int s = 0; s < p.K; ++s) {
            const double v = p.pi[p.pi_idx(g, s)];
            if (!(v >= 0.0) || v > 1.0) fail("pi out of range at g=" + std::to_string(g));
            pi_sum += v;
        }
        if (std::abs(pi_sum - 1.0) > kRowSumTol) {
            fail("pi row for group '" + p.groups[g] + "' sums to " + std::to_string(pi_sum));
        }
        for (int t = 0; t + 1 < p.T; ++t) {
            for (int s = 0; s < p.K; ++s) {
                double row_sum = 0.0;
                for (int s2 = 0; s2 < p.K; ++s2) {
                    const double v = p.theta[p.theta_idx(g, t, s, s2)];
                    if (!(v > 0.0)) {
                        fail("theta cell not positive at g=" + std::to_string(g) +
                             " t=" + std::to_string(t + 1) + " s=" + std::to_string(s));
                    }
                    row_sum += v;
                }
                if (std::abs(row_sum - 1.0) > kRowSumTol) {
                    fail("theta row sum " + std::to_string(row_sum) + " at g=" +
                         std::to_string(g) + " t=" + std::to_string(t + 1) +
                         " s=" + std::to_string(s));
                }
                if (p.mode == ModelMode::SemiMarkov) {
                    for (int m = 0; m < p.M; ++m) {
                        const double h = p.hazard[p.hazard_idx(g, t, s, m)];
                        if (!(h > 0.0 && h < 1.0)) {
                            fail("hazard out of (0,1) at g=" + std::to_string(g) +
                                 " t=" + std::to_string(t + 1) + " s=" + std::to_string(s) +
                                 " m=" + std::to_string(m));
                        }
                    }
                }
            }
        }
    }
}

}  // namespace actseq
