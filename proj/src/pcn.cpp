#include "diffinv/pcn.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <limits>
#include <sstream>

#include "diffinv/error.hpp"
#include "diffinv/fem.hpp"

namespace diffinv {

void PcnConfig::validate() const {
    std::ostringstream msg;
    if (!(delta > 0.0 && delta < 0.5)) {
        msg << "PcnConfig: delta must lie in (0, 1/2), got " << delta;
    } else if (iterations < 1) {
        msg << "PcnConfig: need at least one iteration";
    } else if (burn_in < 0 || burn_in >= iterations) {
        msg << "PcnConfig: burn_in must lie in [0, H), got " << burn_in << " with H = " << iterations;
    } else if (thin < 1) {
        msg << "PcnConfig: thin must be >= 1";
    } else {
        return;
    }
    throw Error(msg.str());
}

StepResult pcn_step(const Eigen::VectorXd& state, double state_loglik, const PriorSampler& prior,
                    const LogLikelihoodFn& loglik, const LinkFunction& link, double delta, Rng& rng) {
    if (!(delta >= 0.0 && delta < 0.5)) throw Error("pcn_step: delta must lie in [0, 1/2)");
    const Eigen::VectorXd xi = prior.sample(rng);
    const Eigen::VectorXd proposal = std::sqrt(1.0 - 2.0 * delta) * state + std::sqrt(2.0 * delta) * xi;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double u = unif(rng);

    StepResult out;
    double prop_ll = -std::numeric_limits<double>::infinity();
    try {
        prop_ll = loglik(apply_link(prior.to_nodal(proposal), link));
    } catch (const Error& e) {
        out.failed = true;
    }
    if (!std::isfinite(prop_ll)) {
        out.failed = true;
        prop_ll = -std::numeric_limits<double>::infinity();
    }
    out.proposal_loglik = prop_ll;

    const double diff = prop_ll - state_loglik;
    const bool accept = !out.failed && (diff >= 0.0 || std::log(u) < diff);
    if (accept) {
        out.state = proposal;
        out.loglik = prop_ll;
        out.accepted = true;
    } else {
        out.state = state;
        out.loglik = state_loglik;
    }
    return out;
}

double ChainRecord::acceptance_rate(std::size_t from) const {
    if (from >= accepted.size()) return 0.0;
    std::size_t acc = 0;
    for (std::size_t h = from; h < accepted.size(); ++h) acc += accepted[h] ? 1 : 0;
    return static_cast<double>(acc) / static_cast<double>(accepted.size() - from);
}

ChainRecord ChainRecord::from_states(std::vector<Eigen::VectorXd> states, int burn_in) {
    if (states.empty()) throw Error("ChainRecord::from_states: no states");
    ChainRecord rec;
    rec.config.iterations = static_cast<int>(states.size()) - 1;
    rec.config.burn_in = burn_in;
    rec.post_burn_in_sum = Eigen::VectorXd::Zero(states.front().size());
    for (std::size_t h = 0; h < states.size(); ++h) {
        rec.state_iterations.push_back(static_cast<int>(h));
        if (static_cast<int>(h) >= burn_in) {
            rec.post_burn_in_sum += states[h];
            ++rec.post_burn_in_count;
        }
        if (h > 0) {
            rec.accepted.push_back(states[h] != states[h - 1]);
            rec.loglik.push_back(0.0);
            rec.proposal_loglik.push_back(0.0);
            rec.previous_loglik.push_back(0.0);
        }
    }
    rec.states = std::move(states);
    return rec;
}

ChainRecord run_chain(const PcnConfig& cfg, const PriorSampler& prior, const LogLikelihoodFn& loglik,
                      const LinkFunction& link, std::optional<Eigen::VectorXd> init) {
    cfg.validate();
    const auto start = std::chrono::steady_clock::now();
    Eigen::VectorXd state = init ? *init : Eigen::VectorXd::Zero(prior.dimension());
    if (state.size() != prior.dimension()) {
        throw Error("run_chain: initial state has the wrong dimension");
    }

    ChainRecord rec;
    rec.config = cfg;
    const auto H = static_cast<std::size_t>(cfg.iterations);
    rec.accepted.reserve(H);
    rec.loglik.reserve(H);
    rec.proposal_loglik.reserve(H);
    rec.previous_loglik.reserve(H);
    rec.post_burn_in_sum = Eigen::VectorXd::Zero(prior.dimension());

    double ll = loglik(apply_link(prior.to_nodal(state), link));
    if (!std::isfinite(ll)) throw Error("run_chain: initial state has non-finite log-likelihood");
    rec.initial_loglik = ll;

    auto record_state = [&](int h) {
        if (h % cfg.thin == 0) {
            rec.states.push_back(state);
            rec.state_iterations.push_back(h);
        }
        if (h >= cfg.burn_in) {
            rec.post_burn_in_sum += state;
            ++rec.post_burn_in_count;
        }
    };
    record_state(0);

    Rng rng = make_rng(cfg.seed, 0x5043);
    int consecutive_failures = 0;
    for (int h = 0; h < cfg.iterations; ++h) {
        StepResult step = pcn_step(state, ll, prior, loglik, link, cfg.delta, rng);
        if (step.failed) {
            ++rec.failures;
            if (++consecutive_failures > cfg.max_consecutive_failures) {
                throw Error("run_chain: " + std::to_string(consecutive_failures) +
                            " consecutive forward-solve failures at iteration " + std::to_string(h));
            }
        } else {
            consecutive_failures = 0;
        }
        rec.previous_loglik.push_back(ll);
        rec.accepted.push_back(step.accepted ? 1 : 0);
        rec.proposal_loglik.push_back(step.proposal_loglik);
        rec.loglik.push_back(step.loglik);
        state = std::move(step.state);
        ll = step.loglik;
        record_state(h + 1);
    }
    if (rec.failures > 0) {
        std::cerr << "run_chain: " << rec.failures << " proposals rejected after forward-solve failure\n";
    }
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rec;
}

NodalField posterior_mean(const ChainRecord& rec, const PriorSampler& prior, const LinkFunction& link) {
    if (rec.post_burn_in_count == 0) throw Error("posterior_mean: no states after burn-in");
    const Eigen::VectorXd mean = rec.post_burn_in_sum / static_cast<double>(rec.post_burn_in_count);
    return apply_link(prior.to_nodal(mean), link);
}

std::pair<NodalField, NodalField> credible_band(const ChainRecord& rec, const PriorSampler& prior,
                                                const LinkFunction& link, double level) {
    if (!(level >= 0.0 && level < 1.0)) throw Error("credible_band: level must lie in [0, 1)");
    std::vector<NodalField> fields;
    for (std::size_t s = 0; s < rec.states.size(); ++s) {
        if (rec.state_iterations[s] >= rec.config.burn_in) {
            fields.push_back(apply_link(prior.to_nodal(rec.states[s]), link));
        }
    }
    if (fields.size() < 100) {
        throw Error("credible_band: need at least 100 stored post-burn-in states, have " +
                    std::to_string(fields.size()));
    }
    const Eigen::Index m = fields.front().values.size();
    NodalField lower{Eigen::VectorXd(m), fields.front().mesh_id};
    NodalField upper = lower;
    const double q_lo = 0.5 * (1.0 - level), q_hi = 0.5 * (1.0 + level);
    std::vector<double> column(fields.size());
    // Linear interpolation between order statistics.
    auto quantile = [&](double q) {
        const double pos = q * static_cast<double>(column.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const auto hi = std::min(lo + 1, column.size() - 1);
        return column[lo] + (pos - static_cast<double>(lo)) * (column[hi] - column[lo]);
    };
    for (Eigen::Index i = 0; i < m; ++i) {
        for (std::size_t s = 0; s < fields.size(); ++s) column[s] = fields[s].values[i];
        std::sort(column.begin(), column.end());
        lower.values[i] = quantile(q_lo);
        upper.values[i] = quantile(q_hi);
    }
    return {lower, upper};
}

double l2_norm(const NodalField& f, const TriangularMesh& mesh) {
    check_field(mesh, f, "l2_norm");
    return std::sqrt(std::max(0.0, assemble_mass_full(mesh).quadratic_form(f.values)));
}

double l2_error(const NodalField& f_hat, const NodalField& f0, const TriangularMesh& mesh) {
    check_field(mesh, f_hat, "l2_error");
    check_field(mesh, f0, "l2_error");
    return l2_norm(NodalField{f_hat.values - f0.values, mesh.id()}, mesh);
}

}  // namespace diffinv
