#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "diffinv/error.hpp"
#include "diffinv/fem.hpp"
#include "diffinv/model.hpp"
#include "diffinv/pcn.hpp"
#include "test_util.hpp"

using namespace diffinv;
using diffinv::testing::disk;

namespace {

double zero_loglik(const NodalField&) { return 0.0; }

PriorSampler small_matern() { return build_matern_sampler(disk(120), {3.0, 0.2}); }

// sqrt(integral (f0 - 1)^2) over the disk by polar midpoint quadrature.
double bump_excess_norm() {
    const int nr = 2000, nt = 2000;
    const double R = kUnitDiskRadius;
    double s = 0.0;
    for (int i = 0; i < nr; ++i) {
        const double r = (i + 0.5) * R / nr;
        for (int k = 0; k < nt; ++k) {
            const double th = 2 * std::numbers::pi * (k + 0.5) / nt;
            const double v = four_bumps({r * std::cos(th), r * std::sin(th)}) - 1.0;
            s += v * v * r;
        }
    }
    return std::sqrt(s * (R / nr) * (2 * std::numbers::pi / nt));
}

}  // namespace

TEST(PcnConfig, Validation) {
    PcnConfig c;
    EXPECT_NO_THROW(c.validate());
    for (double d : {0.0, 0.5, -0.1}) {
        c = {};
        c.delta = d;
        EXPECT_THROW(c.validate(), Error);
    }
    c = {};
    c.burn_in = c.iterations;
    EXPECT_THROW(c.validate(), Error);
    c = {};
    c.thin = 0;
    EXPECT_THROW(c.validate(), Error);
}

TEST(PcnStep, ZeroStepKeepsStateAndAccepts) {
    const PriorSampler prior = small_matern();
    Rng rng = make_rng(1);
    const Eigen::VectorXd x = prior.sample(rng);
    const StepResult r = pcn_step(x, 0.0, prior, zero_loglik, LinkFunction::exponential(), 0.0, rng);
    EXPECT_TRUE(r.accepted);
    EXPECT_EQ(r.state, x);
}

TEST(PcnStep, UphillAlwaysAccepted) {
    const PriorSampler prior = small_matern();
    Rng rng = make_rng(2);
    // Every proposal beats a state log-likelihood of -1e300.
    auto ll = [](const NodalField& f) { return -f.values.squaredNorm(); };
    Eigen::VectorXd x = Eigen::VectorXd::Zero(prior.dimension());
    for (int k = 0; k < 500; ++k) {
        const StepResult r = pcn_step(x, -1e300, prior, ll, LinkFunction::exponential(), 0.3, rng);
        EXPECT_TRUE(r.accepted);
        EXPECT_EQ(r.loglik, r.proposal_loglik);
    }
}

TEST(PcnStep, FailedSolveIsRejected) {
    const PriorSampler prior = small_matern();
    Rng rng = make_rng(3);
    auto failing = [](const NodalField&) -> double { throw SolveError("no"); };
    const Eigen::VectorXd x = Eigen::VectorXd::Constant(prior.dimension(), 0.1);
    const StepResult r = pcn_step(x, -5.0, prior, failing, LinkFunction::exponential(), 0.1, rng);
    EXPECT_FALSE(r.accepted);
    EXPECT_TRUE(r.failed);
    EXPECT_EQ(r.state, x);
    EXPECT_EQ(r.loglik, -5.0);
    auto nan_ll = [](const NodalField&) { return std::nan(""); };
    EXPECT_FALSE(pcn_step(x, -5.0, prior, nan_ll, LinkFunction::exponential(), 0.1, rng).accepted);
}

TEST(RunChain, PersistentFailuresAbort) {
    PcnConfig cfg;
    cfg.iterations = 50;
    cfg.burn_in = 0;
    cfg.max_consecutive_failures = 5;
    int calls = 0;
    auto ll = [&](const NodalField&) -> double {
        if (calls++ == 0) return 0.0;
        throw SolveError("diverged");
    };
    EXPECT_THROW(run_chain(cfg, small_matern(), ll, LinkFunction::exponential()), Error);
}

TEST(RunChain, SingleStepRecord) {
    PcnConfig cfg;
    cfg.iterations = 1;
    cfg.burn_in = 0;
    const ChainRecord rec = run_chain(cfg, small_matern(), zero_loglik, LinkFunction::exponential());
    EXPECT_EQ(rec.accepted.size(), 1u);
    EXPECT_EQ(rec.loglik.size(), 1u);
    EXPECT_EQ(rec.states.size(), 2u);
}

TEST(RunChain, FlatLikelihoodAcceptsEverything) {
    PcnConfig cfg;
    cfg.iterations = 300;
    cfg.burn_in = 0;
    cfg.delta = 0.1;
    const ChainRecord rec = run_chain(cfg, small_matern(), zero_loglik, LinkFunction::exponential());
    EXPECT_EQ(rec.acceptance_rate(), 1.0);
}

TEST(RunChain, PriorPreservation) {
    // With l = 0 the chain is a Gaussian AR(1) in each coordinate with
    // rho = sqrt(1 - 2 delta), started in stationarity.
    const PriorSampler prior = small_matern();
    const double delta = 0.2, rho = std::sqrt(1 - 2 * delta);
    PcnConfig cfg;
    cfg.iterations = 10000;
    cfg.burn_in = 0;
    cfg.delta = delta;
    cfg.seed = 21;
    Rng init_rng = make_rng(99);
    const ChainRecord rec = run_chain(cfg, prior, zero_loglik, LinkFunction::exponential(), prior.sample(init_rng));
    const Eigen::Index d = prior.dimension();
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(d), sq = sum;
    for (const auto& s : rec.states) {
        sum += s;
        sq += s.cwiseAbs2();
    }
    const double N = static_cast<double>(rec.states.size());
    const Eigen::VectorXd var_true = prior.covariance().diagonal();
    int mean_out = 0, var_out = 0;
    for (Eigen::Index i = 0; i < d; ++i) {
        const double se_mean = std::sqrt(var_true[i] / N * (1 + rho) / (1 - rho));
        const double se_var = var_true[i] * std::sqrt(2.0 / N * (1 + rho * rho) / (1 - rho * rho));
        const double mean = sum[i] / N;
        mean_out += std::abs(mean) > 3 * se_mean;
        var_out += std::abs(sq[i] / N - mean * mean - var_true[i]) > 3 * se_var;
    }
    // About 0.3% of coordinates may fall outside 3 standard errors by chance.
    EXPECT_LE(mean_out, std::max<Eigen::Index>(2, d / 100));
    EXPECT_LE(var_out, std::max<Eigen::Index>(2, d / 100));
}

TEST(RunChain, ReproducibleAndRejectionsRepeatState) {
    const TriangularMesh& m = disk(300);
    const NodalField f0 = ground_truth_field(m);
    const ObservationSet obs = generate_data(m, f0, unit_source, 100, 0.001, 5);
    const PriorSampler prior = build_matern_sampler(m, {5.0, 0.2});
    LogLikelihood ll(m, obs, unit_source);
    PcnConfig cfg;
    cfg.iterations = 200;
    cfg.burn_in = 50;
    cfg.delta = 0.01;
    auto fn = [&](const NodalField& f) { return ll(f); };
    const auto link = LinkFunction::shifted_exponential(1.0);
    const ChainRecord a = run_chain(cfg, prior, fn, link);
    const ChainRecord b = run_chain(cfg, prior, fn, link);
    EXPECT_EQ(a.accepted, b.accepted);
    EXPECT_EQ(a.loglik, b.loglik);
    ASSERT_EQ(a.states.size(), 201u);
    bool any_reject = false;
    for (std::size_t h = 0; h < a.accepted.size(); ++h) {
        EXPECT_EQ(a.states[h + 1], b.states[h + 1]);
        if (!a.accepted[h]) {
            any_reject = true;
            EXPECT_EQ(a.states[h + 1], a.states[h]);
            EXPECT_EQ(a.loglik[h], a.previous_loglik[h]);
        }
        if (a.proposal_loglik[h] >= a.previous_loglik[h]) EXPECT_TRUE(a.accepted[h]);
    }
    EXPECT_TRUE(any_reject);
    cfg.seed = 2;
    EXPECT_NE(run_chain(cfg, prior, fn, link).loglik, a.loglik);
}

TEST(RunChain, ThinningKeepsEveryKthState) {
    PcnConfig cfg;
    cfg.iterations = 100;
    cfg.burn_in = 10;
    cfg.thin = 10;
    const ChainRecord rec = run_chain(cfg, small_matern(), zero_loglik, LinkFunction::exponential());
    ASSERT_EQ(rec.states.size(), 11u);
    for (std::size_t s = 0; s < rec.states.size(); ++s) EXPECT_EQ(rec.state_iterations[s], static_cast<int>(10 * s));
    EXPECT_EQ(rec.post_burn_in_count, 91u);
}

TEST(PosteriorMean, ConstantChainAndLinkAfterAveraging) {
    const TriangularMesh& m = disk(120);
    const PriorSampler prior = build_matern_sampler(m, {3.0, 0.2});
    const Eigen::Index d = prior.dimension();
    const ChainRecord c = ChainRecord::from_states(std::vector<Eigen::VectorXd>(5, Eigen::VectorXd::Constant(d, 0.7)), 1);
    EXPECT_NEAR(posterior_mean(c, prior, LinkFunction::shifted_exponential(1.0)).values.maxCoeff(), 1 + std::exp(0.7), 1e-14);
    // Link of the mean, not mean of the link: states -1 and +1 average to 0.
    std::vector<Eigen::VectorXd> s{Eigen::VectorXd::Constant(d, 5.0), Eigen::VectorXd::Constant(d, -1.0),
                                   Eigen::VectorXd::Constant(d, 1.0)};
    EXPECT_NEAR(posterior_mean(ChainRecord::from_states(s, 1), prior, LinkFunction::exponential()).values[0], 1.0, 1e-15);
    EXPECT_THROW(posterior_mean(ChainRecord{}, prior, LinkFunction::exponential()), Error);
}

TEST(PosteriorMean, SeriesCoefficientsAreSynthesised) {
    const TriangularMesh& m = disk(300);
    const EigenBasis b = eigen_fem(m, 200.0);
    const PriorSampler prior = build_series_sampler({b, 0.625, 3});
    Eigen::VectorXd c(3);
    c << 0.2, -0.1, 0.05;
    const ChainRecord rec = ChainRecord::from_states({c, c}, 0);
    const NodalField f = posterior_mean(rec, prior, LinkFunction::exponential());
    const Eigen::VectorXd expected = (b.functions().leftCols(3) * c).array().exp();
    EXPECT_LT((f.values - expected).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(CredibleBand, MedianZeroWidthAndMinimumSamples) {
    const TriangularMesh& m = disk(120);
    const PriorSampler prior = build_matern_sampler(m, {3.0, 0.2});
    const Eigen::Index d = prior.dimension();
    std::vector<Eigen::VectorXd> states;
    for (int k = 0; k <= 100; ++k) states.push_back(Eigen::VectorXd::Constant(d, 0.01 * k));
    const ChainRecord rec = ChainRecord::from_states(states, 0);
    const auto [lo, hi] = credible_band(rec, prior, LinkFunction::exponential(), 0.0);
    EXPECT_NEAR(lo.values[0], std::exp(0.5), 1e-14);
    EXPECT_EQ(lo.values, hi.values);
    const auto [l9, h9] = credible_band(rec, prior, LinkFunction::exponential(), 0.9);
    EXPECT_NEAR(l9.values[3], std::exp(0.05), 1e-12);
    EXPECT_NEAR(h9.values[3], std::exp(0.95), 1e-12);

    const ChainRecord flat = ChainRecord::from_states(std::vector<Eigen::VectorXd>(150, Eigen::VectorXd::Constant(d, 0.3)), 0);
    const auto [fl, fh] = credible_band(flat, prior, LinkFunction::exponential(), 0.95);
    EXPECT_EQ((fh.values - fl.values).cwiseAbs().maxCoeff(), 0.0);

    const ChainRecord few = ChainRecord::from_states(std::vector<Eigen::VectorXd>(99, Eigen::VectorXd::Zero(d)), 0);
    EXPECT_THROW(credible_band(few, prior, LinkFunction::exponential(), 0.95), Error);
}

TEST(L2Error, TrivialCasesAndBumpOracle) {
    const TriangularMesh& m = disk(1981);
    const NodalField f0 = ground_truth_field(m);
    EXPECT_EQ(l2_error(f0, f0, m), 0.0);
    NodalField shifted = f0;
    shifted.values.array() += 1.0;
    EXPECT_NEAR(l2_error(shifted, f0, m), 1.0, 1e-3);
    const double oracle = bump_excess_norm();
    EXPECT_NEAR(oracle, std::sqrt(4 * std::numbers::pi / 200), 1e-4);
    // Nodal interpolation of the bumps converges to the oracle under refinement.
    const double coarse = std::abs(l2_error(NodalField::constant(m, 1.0), f0, m) - oracle);
    const TriangularMesh& fine = disk(7921);
    const double refined = std::abs(l2_error(NodalField::constant(fine, 1.0), ground_truth_field(fine), fine) - oracle);
    EXPECT_LT(coarse, 0.01 * oracle);
    EXPECT_LT(refined, 0.5 * coarse);
    EXPECT_THROW(l2_error(f0, NodalField::constant(disk(120), 1.0), m), Error);
}
