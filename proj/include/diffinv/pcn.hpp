#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "diffinv/mesh.hpp"
#include "diffinv/priors.hpp"

namespace diffinv {

// Log-likelihood of a nodal diffusivity. May throw diffinv::Error when the
// forward solve fails; the sampler then rejects the proposal.
using LogLikelihoodFn = std::function<double(const NodalField&)>;

struct PcnConfig {
    double delta = 0.00125;  // 0 < delta < 1/2
    int iterations = 10000;  // H
    int burn_in = 1000;
    std::uint64_t seed = 1;
    int thin = 1;  // keep every thin-th state for quantiles
    int max_consecutive_failures = 100;

    void validate() const;
};

struct StepResult {
    Eigen::VectorXd state;
    double loglik = 0.0;           // of the retained state
    double proposal_loglik = 0.0;  // -inf when the forward solve failed
    bool accepted = false;
    bool failed = false;
};

// One pCN move: p = sqrt(1 - 2 delta) state + sqrt(2 delta) xi with xi drawn
// from the prior, accepted with probability min(1, exp(l(p) - l(state))).
// Uphill moves are accepted without consulting the uniform draw.
StepResult pcn_step(const Eigen::VectorXd& state, double state_loglik, const PriorSampler& prior,
                    const LogLikelihoodFn& loglik, const LinkFunction& link, double delta, Rng& rng);

struct ChainRecord {
    PcnConfig config;
    // States theta_h for h % thin == 0, h = 0..H, in native prior coordinates.
    std::vector<Eigen::VectorXd> states;
    std::vector<int> state_iterations;
    // Per step h = 0..H-1: whether theta_{h+1} = proposal, l_n(theta_{h+1}),
    // l_n(proposal) and l_n(theta_h).
    std::vector<char> accepted;
    std::vector<double> loglik;
    std::vector<double> proposal_loglik;
    std::vector<double> previous_loglik;
    double initial_loglik = 0.0;
    std::size_t failures = 0;
    // Running sum of theta_h over h = burn_in..H.
    Eigen::VectorXd post_burn_in_sum;
    std::size_t post_burn_in_count = 0;
    double seconds = 0.0;

    std::size_t steps() const noexcept { return accepted.size(); }
    // Fraction of accepted steps among steps [from, H).
    double acceptance_rate(std::size_t from = 0) const;
    double post_burn_in_acceptance() const { return acceptance_rate(static_cast<std::size_t>(config.burn_in)); }

    // Record built from an explicit state list (theta_0..theta_H, all kept).
    static ChainRecord from_states(std::vector<Eigen::VectorXd> states, int burn_in);
};

// H sequential pCN steps from init (zero when absent). Deterministic in
// config.seed. Throws Error after max_consecutive_failures failed solves in
// a row, or when the initial state cannot be evaluated.
ChainRecord run_chain(const PcnConfig& cfg, const PriorSampler& prior, const LogLikelihoodFn& loglik,
                      const LinkFunction& link, std::optional<Eigen::VectorXd> init = std::nullopt);

// Phi applied to the average of the post-burn-in states.
NodalField posterior_mean(const ChainRecord& rec, const PriorSampler& prior, const LinkFunction& link);

// Pointwise empirical quantiles (1 - level)/2 and (1 + level)/2 of
// Phi(theta_h) over stored post-burn-in states. Needs at least 100 states.
std::pair<NodalField, NodalField> credible_band(const ChainRecord& rec, const PriorSampler& prior,
                                                const LinkFunction& link, double level);

// sqrt of the mass-matrix quadratic form of f_hat - f0.
double l2_error(const NodalField& f_hat, const NodalField& f0, const TriangularMesh& mesh);
double l2_norm(const NodalField& f, const TriangularMesh& mesh);

}  // namespace diffinv
