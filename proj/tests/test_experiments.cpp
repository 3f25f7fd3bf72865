#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "diffinv/error.hpp"
#include "diffinv/experiments.hpp"
#include "test_util.hpp"

using namespace diffinv;
using diffinv::testing::disk;

namespace {

std::filesystem::path scratch(const std::string& name) {
    const auto p = std::filesystem::temp_directory_path() / ("diffinv_test_" + name);
    std::filesystem::remove_all(p);
    return p;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Small, fast configuration for sweep plumbing tests.
ExperimentConfig tiny() {
    return parse_config(R"({
        "mesh": {"nodes": 150},
        "prior": {"alpha": 3, "ell": 0.2},
        "pcn": {"iterations": 60, "burn_in": 10, "thin": 1},
        "sweep": {"n": [20, 40], "delta": [0.05, 0.04]}
    })");
}

}  // namespace

TEST(Config, Defaults) {
    const ExperimentConfig c = parse_config("{}");
    EXPECT_EQ(c.mesh.target_nodes, 1981);
    EXPECT_EQ(c.data.n, 1000u);
    EXPECT_DOUBLE_EQ(c.data.sigma, 0.001);
    EXPECT_EQ(c.prior.kind, PriorKind::matern);
    EXPECT_DOUBLE_EQ(c.prior.alpha, 10.0);
    EXPECT_DOUBLE_EQ(c.prior.ell, 0.125);
    EXPECT_FALSE(c.prior.scaling);
    EXPECT_EQ(c.link.kind, LinkKind::shifted_exp);
    EXPECT_DOUBLE_EQ(c.link.f_min, 1.0);
    EXPECT_DOUBLE_EQ(c.pcn.delta, 0.00125);
    EXPECT_EQ(c.pcn.iterations, 10000);
    EXPECT_EQ(c.pcn.burn_in, 1000);
    EXPECT_EQ(c.sweep.n_values, (std::vector<std::size_t>{100, 200, 300, 500, 1000}));
    EXPECT_EQ(c.sweep.deltas, (std::vector<double>{0.005, 0.0045, 0.0035, 0.002, 0.00125}));
}

TEST(Config, SeriesDefaultsAndOverrides) {
    ExperimentConfig c = parse_config(R"({"prior": {"kind": "series", "J": 69}})");
    EXPECT_EQ(c.prior.kind, PriorKind::series);
    EXPECT_EQ(c.link.kind, LinkKind::exp);
    EXPECT_DOUBLE_EQ(c.prior.alpha, 0.625);
    EXPECT_EQ(c.prior.J, 69u);
    c = parse_config(R"({"prior": {"kind": "series", "alpha": 1.5}})");
    EXPECT_DOUBLE_EQ(c.prior.alpha, 1.5);
}

TEST(Config, RoundTrip) {
    const ExperimentConfig a = parse_config(R"({"prior": {"kind": "series", "basis": "analytic", "scaling": true},
        "link": {"kind": "shifted_exp", "f_min": 1}, "pcn": {"seed": 11}, "threads": 3})");
    const ExperimentConfig b = parse_config(config_to_json(a));
    EXPECT_EQ(config_to_json(a), config_to_json(b));
    EXPECT_EQ(b.prior.basis, BasisKind::analytic);
    EXPECT_EQ(b.link.kind, LinkKind::shifted_exp);
    EXPECT_EQ(b.pcn.seed, 11u);
}

TEST(Config, RejectsInvalid) {
    for (const char* bad : {R"({"prior": {"alpha": -1}})", R"({"pcn": {"delta": 0.6}})", R"({"pcn": {"burn_in": 20000}})",
                            R"({"sweep": {"n": [200, 100], "delta": [0.1, 0.1]}})", R"({"sweep": {"n": [100]}})",
                            R"({"mesh": {"file": "/nonexistent/mesh.txt"}})", R"({"prior": {"kind": "wavelet"}})",
                            R"({"pcn": {"step": 0.1}})", R"({"extra": 1})", R"({"threads": 0})", R"({"data": {"n": "many"}})",
                            R"({"link": {"kind": "shifted_exp", "f_min": 0}})", "not json"}) {
        EXPECT_THROW(parse_config(bad), Error) << bad;
    }
}

TEST(Theory, Exponents) {
    EXPECT_NEAR(prediction_rate_exponent(10.0, 2), 11.0 / 24.0, 1e-15);
    EXPECT_NEAR(inversion_rate_exponent(10.0, 2.0, 2), 11.0 / 72.0, 1e-15);
    EXPECT_NEAR(inversion_rate_exponent(10.0, 2.0, 2), 0.1528, 1e-4);
}

TEST(Theory, LogLogSlope) {
    const std::vector<double> n{100, 200, 400, 800};
    std::vector<double> e;
    for (double x : n) e.push_back(3.0 * std::pow(x, -0.4));
    EXPECT_NEAR(loglog_slope(n, e), -0.4, 1e-12);
    EXPECT_TRUE(std::isnan(loglog_slope(std::vector<double>{100}, std::vector<double>{0.1})));
}

TEST(SeriesBasis, FemBasisExtendedToRequestedSize) {
    PriorSettings p;
    p.kind = PriorKind::series;
    p.alpha = 0.625;
    p.lambda_max = 150.0;
    p.J = 12;
    const TriangularMesh& m = disk(400);
    const EigenBasis b = make_series_basis(m, p);
    EXPECT_EQ(b.size(), 12u);
    EXPECT_GT(b.lambda(11), 150.0);
    p.basis = BasisKind::analytic;
    EXPECT_THROW(make_series_basis(m, p), Error);
}

TEST(Sweep, SingleArmAndSlopeFields) {
    ExperimentConfig c = tiny();
    c.sweep.n_values = {40};
    c.sweep.deltas = {0.05};
    const RateStudyResult r = run_sweep(c);
    ASSERT_EQ(r.arms.size(), 1u);
    EXPECT_TRUE(r.arms[0].ok) << r.arms[0].error;
    EXPECT_EQ(r.arms[0].accepted.size(), 60u);
    EXPECT_TRUE(std::isnan(r.l2_slope));
    EXPECT_NEAR(r.prediction_exponent, 4.0 / 10.0, 1e-15);
}

TEST(Sweep, RateStudyWithOneReplicationMatchesSweep) {
    const ExperimentConfig c = tiny();
    const RateStudyResult s = run_sweep(c);
    const RateStudyResult r = run_rate_study(c, {}, 1);
    ASSERT_EQ(s.arms.size(), r.arms.size());
    for (std::size_t i = 0; i < s.arms.size(); ++i) {
        ASSERT_TRUE(s.arms[i].ok);
        EXPECT_EQ(s.arms[i].l2_error, r.arms[i].l2_error);
        EXPECT_EQ(s.arms[i].loglik, r.arms[i].loglik);
        EXPECT_EQ(s.arms[i].delta, c.sweep.deltas[i]);
    }
    EXPECT_FALSE(std::isnan(r.l2_slope));
}

TEST(Sweep, ThreadedArmsMatchSequential) {
    ExperimentConfig c = tiny();
    const RateStudyResult a = run_rate_study(c, {}, 2);
    c.threads = 3;
    const RateStudyResult b = run_rate_study(c, {}, 2);
    ASSERT_EQ(a.arms.size(), 4u);
    for (std::size_t i = 0; i < a.arms.size(); ++i) EXPECT_EQ(a.arms[i].loglik, b.arms[i].loglik);
    EXPECT_EQ(a.mean_l2_error, b.mean_l2_error);
    EXPECT_NE(a.arms[0].chain_seed, a.arms[2].chain_seed);
    EXPECT_NE(a.arms[0].data_seed, a.arms[2].data_seed);
}

TEST(Sweep, ArmFailureIsReportedWithoutAbortingOthers) {
    const auto dir = scratch("partial");
    std::filesystem::create_directories(dir);
    ExperimentConfig c = tiny();
    const TriangularMesh m = make_mesh(c);
    save_observations((dir / "obs.csv").string(), generate_data(m, ground_truth_field(m), unit_source, 30, 0.001, 1));
    c.data.file = (dir / "obs.csv").string();
    const RateStudyResult r = run_sweep(c);
    ASSERT_EQ(r.arms.size(), 2u);
    EXPECT_TRUE(r.arms[0].ok);
    EXPECT_FALSE(r.arms[1].ok);
    EXPECT_NE(r.arms[1].error.find("requested"), std::string::npos);
    EXPECT_EQ(r.failed_arms(), 1u);
    std::filesystem::remove_all(dir);
}

TEST(Sweep, IndependentArmNoise) {
    // Non-nested arms draw their own data; the noise of two arms is uncorrelated.
    ExperimentConfig c = tiny();
    c.sweep.nested = false;
    const TriangularMesh& m = disk(500);
    const NodalField f0 = ground_truth_field(m);
    const ForwardSolution truth = solve_forward(m, f0, unit_source);
    const std::size_t n = 2000;
    auto residual = [&](std::uint64_t seed) {
        const ObservationSet o = make_observations(c, m, f0, n, seed);
        return Eigen::VectorXd(o.Y - evaluate_solution(m, truth, o.X));
    };
    const Eigen::VectorXd a = residual(arm_data_seed(c, 0)), b = residual(arm_data_seed(c, 0) + 7919);
    const double corr = (a.array() - a.mean()).matrix().dot((b.array() - b.mean()).matrix()) /
                        std::sqrt((a.array() - a.mean()).square().sum() * (b.array() - b.mean()).square().sum());
    EXPECT_LT(std::abs(corr), 4.0 / std::sqrt(static_cast<double>(n)));
}

TEST(Outputs, FieldCsvRoundTripAndErrors) {
    const auto dir = scratch("field");
    const TriangularMesh& m = disk(150);
    const NodalField f = ground_truth_field(m);
    write_field_csv(dir / "f.csv", m, f);
    const std::string text = slurp(dir / "f.csv");
    EXPECT_EQ(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')), m.node_count());
    EXPECT_EQ(read_field_csv(dir / "f.csv", m).values, f.values);
    EXPECT_THROW(read_field_csv(dir / "f.csv", disk(500)), Error);
    std::ofstream(dir / "bad.csv") << "1.0\nabc\n";
    EXPECT_THROW(read_field_csv(dir / "bad.csv", m), Error);
    std::filesystem::remove_all(dir);
}

TEST(Outputs, RunHeaderIsDeterministic) {
    const auto d1 = scratch("hdr1"), d2 = scratch("hdr2");
    const ExperimentConfig c = tiny();
    const TriangularMesh m = make_mesh(c);
    const ObservationSet obs = generate_data(m, ground_truth_field(m), unit_source, 20, 0.001, 1);
    const std::vector<std::pair<std::string, std::uint64_t>> seeds{{"data", 1}, {"chain", 3}};
    write_run_header(d1, c, m, std::span(&obs, 1), seeds);
    write_run_header(d2, c, m, std::span(&obs, 1), seeds);
    for (const char* f : {"config.json", "seeds.json", "inputs.hash"}) EXPECT_EQ(slurp(d1 / f), slurp(d2 / f)) << f;
    EXPECT_EQ(parse_config(slurp(d1 / "config.json")).pcn.iterations, 60);
    ObservationSet other = obs;
    other.Y[0] += 1e-9;
    write_run_header(d2, c, m, std::span(&other, 1), seeds);
    EXPECT_NE(slurp(d1 / "inputs.hash"), slurp(d2 / "inputs.hash"));
    std::filesystem::remove_all(d1);
    std::filesystem::remove_all(d2);
}

TEST(Outputs, SweepTablesAreReproducible) {
    const ExperimentConfig c = tiny();
    const auto d = scratch("tables");
    write_rate_csv(d / "a.csv", run_sweep(c));
    write_rate_csv(d / "b.csv", run_sweep(c));
    EXPECT_EQ(slurp(d / "a.csv"), slurp(d / "b.csv"));
    EXPECT_NE(slurp(d / "a.csv").find("n,replication,delta"), std::string::npos);
    std::filesystem::remove_all(d);
}
