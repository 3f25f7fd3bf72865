#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include <gtest/gtest.h>

#include "diffinv/error.hpp"
#include "diffinv/fem.hpp"
#include "diffinv/laplace_eigen.hpp"
#include "test_util.hpp"

using namespace diffinv;
using diffinv::testing::disk;

namespace {

const EigenBasis& fem_basis() {
    static const EigenBasis b = eigen_fem(disk(1981), 1000.0);
    return b;
}

// Number of eigenvalues pi j^2 <= lambda_max of the unit-area disk, counted
// from sign changes of std::cyl_bessel_j on a fine grid.
std::size_t scanned_disk_count(double lambda_max) {
    const double x_max = std::sqrt(lambda_max / std::numbers::pi);
    std::size_t count = 0;
    for (int m = 0;; ++m) {
        std::size_t zeros = 0;
        double prev = std::cyl_bessel_j(m, 1e-3);
        for (double x = 1e-3 + 1e-3; x <= x_max; x += 1e-3) {
            const double v = std::cyl_bessel_j(m, x);
            if ((v > 0) != (prev > 0)) ++zeros;
            prev = v;
        }
        if (zeros == 0) break;
        count += (m == 0 ? 1 : 2) * zeros;
    }
    return count;
}

}  // namespace

TEST(DiskAnalytic, FundamentalEigenvalue) {
    const DiskEigenbasis b = eigen_disk_analytic(kUnitDiskRadius, 100.0);
    const double j01 = 2.404825557695773;
    EXPECT_NEAR(b.lambdas().front(), j01 * j01 * std::numbers::pi, 1e-9);
    EXPECT_NEAR(b.lambdas().front(), 18.17, 0.01);
}

TEST(DiskAnalytic, CountMatchesIndependentZeroScan) {
    // The pairs at 974.9 and 995.5 bring the count in [0, 1000] to 71.
    const DiskEigenbasis b = eigen_disk_analytic(kUnitDiskRadius, 1000.0);
    EXPECT_EQ(b.size(), scanned_disk_count(1000.0));
    EXPECT_EQ(b.size(), 71u);
    for (double cap : {50.0, 300.0, 700.0}) {
        EXPECT_EQ(eigen_disk_analytic(kUnitDiskRadius, cap).size(), scanned_disk_count(cap)) << cap;
    }
}

TEST(DiskAnalytic, RejectsEmptyRange) {
    EXPECT_THROW(eigen_disk_analytic(kUnitDiskRadius, 18.0), Error);
    EXPECT_THROW(eigen_disk_analytic(-1.0, 100.0), Error);
}

TEST(DiskAnalytic, OrderingAndDegeneratePairs) {
    const DiskEigenbasis b = eigen_disk_analytic(kUnitDiskRadius, 1000.0);
    const auto lam = b.lambdas();
    EXPECT_TRUE(std::is_sorted(lam.begin(), lam.end()));
    EXPECT_GT(lam.front(), 0.0);
    EXPECT_LT(lam[0], lam[1]);
    const auto& modes = b.modes();
    for (std::size_t j = 0; j < modes.size(); ++j) {
        if (modes[j].m > 0 && !modes[j].sine) {
            ASSERT_LT(j + 1, modes.size());
            EXPECT_TRUE(modes[j + 1].sine);
            EXPECT_EQ(modes[j + 1].m, modes[j].m);
            EXPECT_LE(std::abs(lam[j + 1] - lam[j]) / lam[j], 1e-3);
        }
    }
}

TEST(DiskAnalytic, ContinuousOrthonormality) {
    // Polar midpoint quadrature, fine enough for modes up to lambda = 300.
    const DiskEigenbasis b = eigen_disk_analytic(kUnitDiskRadius, 300.0);
    const int nr = 400, nt = 256;
    const double R = kUnitDiskRadius;
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(b.size()), static_cast<Eigen::Index>(b.size()));
    std::vector<double> vals(b.size());
    for (int i = 0; i < nr; ++i) {
        const double r = (i + 0.5) * R / nr;
        for (int k = 0; k < nt; ++k) {
            const double th = 2 * std::numbers::pi * (k + 0.5) / nt;
            const double w = r * (R / nr) * (2 * std::numbers::pi / nt);
            for (std::size_t j = 0; j < b.size(); ++j) vals[j] = b.evaluate(j, {r * std::cos(th), r * std::sin(th)});
            for (std::size_t a = 0; a < b.size(); ++a) {
                for (std::size_t c = 0; c <= a; ++c) gram(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(c)) += w * vals[a] * vals[c];
            }
        }
    }
    for (Eigen::Index a = 0; a < gram.rows(); ++a) {
        for (Eigen::Index c = 0; c <= a; ++c) EXPECT_NEAR(gram(a, c), a == c ? 1.0 : 0.0, 1e-4) << a << "," << c;
    }
}

TEST(DiskAnalytic, SampledOnMeshVanishesOnBoundary) {
    const TriangularMesh& m = disk(500);
    const EigenBasis b = eigen_disk_analytic(kUnitDiskRadius, 200.0).on_mesh(m);
    for (int i : m.boundary_nodes()) EXPECT_EQ(b.functions().row(i).cwiseAbs().maxCoeff(), 0.0);
}

TEST(FemEigen, FirstTenAgreeWithBessel) {
    const auto analytic = eigen_disk_analytic(kUnitDiskRadius, 1000.0).lambdas();
    const EigenBasis& b = fem_basis();
    ASSERT_GE(b.size(), 10u);
    for (std::size_t j = 0; j < 10; ++j) EXPECT_NEAR(b.lambda(j) / analytic[j], 1.0, 0.01) << j;
}

TEST(FemEigen, AgreementImprovesUnderRefinement) {
    const double exact = std::pow(2.404825557695773, 2) * std::numbers::pi;
    const double coarse = eigen_fem(disk(500), 100.0).lambda(0);
    const double fine = fem_basis().lambda(0);
    EXPECT_LT(std::abs(fine - exact), std::abs(coarse - exact));
}

TEST(FemEigen, CountNearSixtyNine) {
    const std::size_t J = fem_basis().size();
    EXPECT_GE(J, 67u);
    EXPECT_LE(J, 71u);
    EXPECT_EQ(J, count_eigenvalues_below(disk(1981), 1000.0));
}

TEST(FemEigen, MassOrthonormalRayleighAndBoundary) {
    const TriangularMesh& m = disk(1981);
    const EigenBasis& b = fem_basis();
    const Eigen::SparseMatrix<double> M = assemble_mass_full(m).full();
    const Eigen::SparseMatrix<double> K = assemble_stiffness_full(m, NodalField::constant(m, 1.0)).full();
    const Eigen::MatrixXd& E = b.functions();
    const Eigen::MatrixXd gram = E.transpose() * (M * E);
    EXPECT_LT((gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff(), 1e-6);
    for (std::size_t j = 0; j < b.size(); ++j) {
        const Eigen::VectorXd e = E.col(static_cast<Eigen::Index>(j));
        const double rq = e.dot(K * e) / e.dot(M * e);
        EXPECT_LE(std::abs(rq - b.lambda(j)) / b.lambda(j), 1e-6);
        EXPECT_GT(b.lambda(j), 0.0);
        EXPECT_LE(b.lambda(j), 1000.0);
    }
    for (int i : m.boundary_nodes()) EXPECT_EQ(E.row(i).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_TRUE(std::is_sorted(b.lambdas().begin(), b.lambdas().end()));
}

TEST(FemEigen, DegeneratePairsFromAnalyticStructure) {
    const auto modes = eigen_disk_analytic(kUnitDiskRadius, 1000.0).modes();
    const EigenBasis& b = fem_basis();
    for (std::size_t j = 0; j + 1 < b.size(); ++j) {
        if (modes[j].m > 0 && !modes[j].sine) EXPECT_LE((b.lambda(j + 1) - b.lambda(j)) / b.lambda(j), 1e-2) << j;
    }
}

TEST(FemEigen, TruncateAndSynthesize) {
    const EigenBasis t = fem_basis().truncated(5);
    ASSERT_EQ(t.size(), 5u);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(5);
    c[2] = 2.0;
    EXPECT_LT((t.synthesize(c).values - 2.0 * t.functions().col(2)).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_THROW(fem_basis().truncated(1000), Error);
}

TEST(Weyl, LinearGrowth) {
    const auto lam = eigen_disk_analytic(kUnitDiskRadius, 1000.0).lambdas();
    EXPECT_GT(weyl_fit(std::span(lam).first(69)).r_squared, 0.99);
    EXPECT_GT(weyl_fit(fem_basis().lambdas()).r_squared, 0.99);
    std::vector<double> line;
    for (int j = 1; j <= 30; ++j) line.push_back(4 * std::numbers::pi * j);
    const WeylFit f = weyl_fit(line);
    EXPECT_NEAR(f.slope, 4 * std::numbers::pi, 1e-10);
    EXPECT_NEAR(f.r_squared, 1.0, 1e-14);
    EXPECT_THROW(weyl_fit(std::vector<double>{1.0, 2.0}), Error);
}
