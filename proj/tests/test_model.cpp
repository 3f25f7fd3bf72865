#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>

#include <gtest/gtest.h>

#include "diffinv/error.hpp"
#include "diffinv/model.hpp"
#include "test_util.hpp"

using namespace diffinv;
using diffinv::testing::disk;

TEST(FourBumps, PointValues) {
    EXPECT_NEAR(four_bumps({0.25, 0.25}), 2.0, 1e-10);
    EXPECT_NEAR(four_bumps({0.0, 0.0}), 1.0 + 4.0 * std::exp(-12.5), 1e-15);
    EXPECT_NEAR(four_bumps({0.55, 0.0}), 1.0, 1e-4);
    for (double x : {-0.25, 0.25}) {
        for (double y : {-0.25, 0.25}) EXPECT_NEAR(four_bumps({x, y}), 2.0, 1e-10);
    }
}

TEST(FourBumps, RangeOnMesh) {
    const NodalField f0 = ground_truth_field(disk(1981));
    EXPECT_GE(f0.values.minCoeff(), 1.0);
    EXPECT_LE(f0.values.maxCoeff(), 2.0 + 1e-10);
}

TEST(GenerateData, NoiselessResponsesMatchForwardMap) {
    const TriangularMesh& m = disk(500);
    const NodalField f0 = ground_truth_field(m);
    const ObservationSet obs = generate_data(m, f0, unit_source, 200, 0.0, 1);
    const ForwardSolution sol = solve_forward(m, f0, unit_source);
    EXPECT_LT((obs.Y - evaluate_solution(m, sol, obs.X)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(GenerateData, NoiseVarianceAndDeterminism) {
    const TriangularMesh& m = disk(1981);
    const NodalField f0 = ground_truth_field(m);
    const ObservationSet obs = generate_data(m, f0, unit_source, 1000, 0.001, 7);
    const Eigen::VectorXd r = obs.Y - evaluate_solution(m, solve_forward(m, f0, unit_source), obs.X);
    const double mean = r.mean();
    const double var = (r.array() - mean).square().sum() / (r.size() - 1);
    EXPECT_NEAR(var / 1e-6, 1.0, 0.1);

    const ObservationSet again = generate_data(m, f0, unit_source, 1000, 0.001, 7);
    EXPECT_EQ(again.Y, obs.Y);
    for (std::size_t i = 0; i < obs.n(); ++i) {
        EXPECT_EQ(again.X[i].x, obs.X[i].x);
        EXPECT_EQ(again.X[i].y, obs.X[i].y);
    }
    EXPECT_NE(generate_data(m, f0, unit_source, 10, 0.001, 8).Y[0], obs.Y[0]);
}

TEST(GenerateData, DesignIsUniformOnDisk) {
    const TriangularMesh& m = disk(500);
    const ObservationSet obs = generate_data(m, ground_truth_field(m), unit_source, 10000, 0.001, 3);
    double mx = 0, my = 0, r2 = 0;
    for (const Point2& p : obs.X) {
        mx += p.x;
        my += p.y;
        r2 += p.x * p.x + p.y * p.y;
        EXPECT_LE(std::hypot(p.x, p.y), kUnitDiskRadius);
    }
    EXPECT_LT(std::abs(mx / 1e4), 0.02);
    EXPECT_LT(std::abs(my / 1e4), 0.02);
    // E|X|^2 = R^2 / 2 for the uniform law.
    EXPECT_NEAR(r2 / 1e4, kUnitDiskRadius * kUnitDiskRadius / 2, 0.005);
}

TEST(GenerateData, RejectsBadArguments) {
    const TriangularMesh& m = disk(200);
    EXPECT_THROW(generate_data(m, ground_truth_field(m), unit_source, 0, 0.1, 1), Error);
    EXPECT_THROW(generate_data(m, ground_truth_field(m), unit_source, 5, -0.1, 1), Error);
}

TEST(LogLikelihood, PerfectFitAndSingleResidual) {
    const TriangularMesh& m = disk(500);
    const NodalField f = NodalField::constant(m, 1.3);
    ObservationSet obs;
    obs.sigma = 0.01;
    obs.X = {{0.1, -0.2}, {0.3, 0.05}, {-0.2, -0.1}};
    obs.Y = evaluate_solution(m, solve_forward(m, f, unit_source), obs.X);
    EXPECT_NEAR(log_likelihood(m, obs, f), 0.0, 1e-20);

    ObservationSet one = obs.head(1);
    one.Y[0] += 0.03;
    EXPECT_NEAR(log_likelihood(m, one, f), -0.03 * 0.03 / (2 * 0.01 * 0.01), 1e-9);
}

TEST(LogLikelihood, TruthNearMinusHalfN) {
    const TriangularMesh& m = disk(1981);
    const NodalField f0 = ground_truth_field(m);
    const ObservationSet obs = generate_data(m, f0, unit_source, 1000, 0.001, 7);
    const double l = log_likelihood(m, obs, f0);
    EXPECT_LE(l, 0.0);
    EXPECT_NEAR(l, -500.0, 3.0 * std::sqrt(500.0));
    EXPECT_LT(log_likelihood(m, obs, NodalField::constant(m, 1.0)), l);
}

TEST(LogLikelihood, PermutationInvariant) {
    const TriangularMesh& m = disk(500);
    const NodalField f0 = ground_truth_field(m);
    const ObservationSet obs = generate_data(m, f0, unit_source, 50, 0.01, 2);
    ObservationSet rev = obs;
    std::reverse(rev.X.begin(), rev.X.end());
    rev.Y.reverseInPlace();
    const NodalField f = NodalField::constant(m, 1.1);
    EXPECT_NEAR(log_likelihood(m, rev, f), log_likelihood(m, obs, f), 1e-9);
}

TEST(LogLikelihood, ConstructionChecksObservations) {
    const TriangularMesh& m = disk(200);
    ObservationSet obs;
    obs.sigma = 0.1;
    obs.X = {{0, 0}, {5, 5}};
    obs.Y = Eigen::VectorXd::Zero(2);
    try {
        LogLikelihood ll(m, obs, unit_source);
        FAIL() << "expected OutsideDomainError";
    } catch (const OutsideDomainError& e) {
        EXPECT_EQ(e.index(), 1u);
    }
    obs.X.pop_back();
    EXPECT_THROW(LogLikelihood(m, obs, unit_source), Error);
    obs.Y = Eigen::VectorXd::Zero(1);
    obs.sigma = 0.0;
    EXPECT_THROW(LogLikelihood(m, obs, unit_source), Error);
}

TEST(Observations, CsvRoundTrip) {
    const TriangularMesh& m = disk(200);
    const ObservationSet obs = generate_data(m, ground_truth_field(m), unit_source, 25, 0.01, 4);
    const auto path = std::filesystem::temp_directory_path() / "diffinv_obs_roundtrip.csv";
    save_observations(path.string(), obs);
    const ObservationSet back = load_observations(path.string(), 0.01);
    std::filesystem::remove(path);
    ASSERT_EQ(back.n(), obs.n());
    EXPECT_EQ(back.Y, obs.Y);
    EXPECT_EQ(back.X[3].x, obs.X[3].x);
    EXPECT_THROW(obs.head(26), Error);
    EXPECT_THROW(load_observations("/nonexistent/obs.csv", 0.1), Error);
}
