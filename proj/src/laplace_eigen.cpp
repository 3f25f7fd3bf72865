#include "diffinv/laplace_eigen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include "diffinv/error.hpp"
#include "diffinv/fem.hpp"
#include "diffinv/special_functions.hpp"

namespace diffinv {

EigenBasis::EigenBasis(std::vector<double> lambdas, Eigen::MatrixXd functions, std::uint64_t mesh_id,
                       double lambda_max)
    : lambdas_(std::move(lambdas)), functions_(std::move(functions)), mesh_id_(mesh_id), lambda_max_(lambda_max) {
    if (functions_.cols() != static_cast<Eigen::Index>(lambdas_.size())) {
        throw Error("EigenBasis: eigenvalue count does not match eigenfunction count");
    }
}

NodalField EigenBasis::function(std::size_t j) const {
    return {functions_.col(static_cast<Eigen::Index>(j)), mesh_id_};
}

EigenBasis EigenBasis::truncated(std::size_t J) const {
    if (J > size()) {
        throw Error("EigenBasis::truncated: " + std::to_string(J) + " pairs requested, " + std::to_string(size()) +
                    " available");
    }
    return EigenBasis(std::vector<double>(lambdas_.begin(), lambdas_.begin() + static_cast<std::ptrdiff_t>(J)),
                      functions_.leftCols(static_cast<Eigen::Index>(J)), mesh_id_, lambda_max_);
}

NodalField EigenBasis::synthesize(const Eigen::VectorXd& coeffs) const {
    if (coeffs.size() != functions_.cols()) {
        throw Error("EigenBasis::synthesize: coefficient count does not match basis size");
    }
    return {functions_ * coeffs, mesh_id_};
}

// ---------------------------------------------------------------------------

std::vector<double> DiskEigenbasis::lambdas() const {
    std::vector<double> out;
    out.reserve(modes_.size());
    for (const auto& md : modes_) out.push_back(md.lambda);
    return out;
}

double DiskEigenbasis::evaluate(std::size_t j, Point2 p) const {
    const DiskMode& md = modes_.at(j);
    const double r = std::hypot(p.x, p.y);
    if (r >= radius_) return 0.0;
    const double theta = std::atan2(p.y, p.x);
    const double angular = md.m == 0 ? 1.0 : (md.sine ? std::sin(md.m * theta) : std::cos(md.m * theta));
    return bessel_j(md.m, md.bessel_zero * r / radius_) * angular / md.norm;
}

EigenBasis DiskEigenbasis::on_mesh(const TriangularMesh& mesh) const {
    Eigen::MatrixXd fns(static_cast<Eigen::Index>(mesh.node_count()), static_cast<Eigen::Index>(size()));
    for (std::size_t j = 0; j < size(); ++j) {
        for (std::size_t i = 0; i < mesh.node_count(); ++i) {
            fns(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                mesh.is_boundary(i) ? 0.0 : evaluate(j, mesh.node(i));
        }
    }
    const auto ls = lambdas();
    return EigenBasis(ls, std::move(fns), mesh.id(), ls.empty() ? 0.0 : ls.back());
}

DiskEigenbasis eigen_disk_analytic(double radius, double lambda_max) {
    if (!(radius > 0.0)) throw Error("eigen_disk_analytic: radius must be positive");
    const double x_max = std::sqrt(std::max(lambda_max, 0.0)) * radius;
    std::vector<DiskMode> modes;
    for (int m = 0;; ++m) {
        // j_{m,1} > m, so no order beyond x_max contributes.
        if (m > x_max) break;
        const auto zeros = bessel_j_zeros(m, x_max);
        if (zeros.empty() && m > 0) {
            // First zeros increase with m.
            break;
        }
        for (std::size_t k = 0; k < zeros.size(); ++k) {
            const double z = zeros[k];
            const double jp = bessel_j(m + 1, z);
            const double radial = 0.5 * radius * radius * jp * jp;
            DiskMode md;
            md.m = m;
            md.k = static_cast<int>(k) + 1;
            md.bessel_zero = z;
            md.lambda = (z / radius) * (z / radius);
            if (md.lambda > lambda_max) continue;
            if (m == 0) {
                md.norm = std::sqrt(2.0 * std::numbers::pi * radial);
                modes.push_back(md);
            } else {
                md.norm = std::sqrt(std::numbers::pi * radial);
                modes.push_back(md);
                md.sine = true;
                modes.push_back(md);
            }
        }
    }
    if (modes.empty()) {
        std::ostringstream msg;
        const double fundamental = std::pow(bessel_j_zero(0, 1) / radius, 2);
        msg << "eigen_disk_analytic: lambda_max " << lambda_max << " is below the fundamental eigenvalue "
            << fundamental;
        throw Error(msg.str());
    }
    std::stable_sort(modes.begin(), modes.end(), [](const DiskMode& a, const DiskMode& b) {
        if (a.lambda != b.lambda) return a.lambda < b.lambda;
        if (a.m != b.m) return a.m < b.m;
        return !a.sine && b.sine;
    });
    return DiskEigenbasis(radius, std::move(modes));
}

// ---------------------------------------------------------------------------

std::size_t count_eigenvalues_below(const TriangularMesh& mesh, double shift) {
    const SparseSpdMatrix k = assemble_stiffness(mesh, NodalField::constant(mesh, 1.0));
    const SparseSpdMatrix m = assemble_mass(mesh);
    if (k.dim() == 0) return 0;
    Eigen::SparseMatrix<double> shifted = k.lower() - shift * m.lower();
    // Sylvester's law of inertia: negative pivots of an LDL^T factorisation
    // count the eigenvalues below the shift.
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt(shifted);
    if (ldlt.info() != Eigen::Success) {
        throw SolveError("count_eigenvalues_below: LDL^T factorisation failed (shift on an eigenvalue?)");
    }
    const Eigen::VectorXd d = ldlt.vectorD();
    return static_cast<std::size_t>((d.array() < 0.0).count());
}

EigenBasis eigen_fem(const TriangularMesh& mesh, double lambda_max, const EigenFemOptions& opts) {
    if (!(lambda_max > 0.0)) throw Error("eigen_fem: lambda_max must be positive");
    const SparseSpdMatrix kmat = assemble_stiffness(mesh, NodalField::constant(mesh, 1.0));
    const SparseSpdMatrix mmat = assemble_mass(mesh);
    const Eigen::Index n = kmat.dim();
    const auto& interior = mesh.interior_nodes();

    const std::size_t wanted = count_eigenvalues_below(mesh, lambda_max);
    if (wanted == 0) {
        std::ostringstream msg;
        msg << "eigen_fem: no eigenvalues in [0, " << lambda_max << "]";
        throw Error(msg.str());
    }

    const Eigen::SparseMatrix<double> K = kmat.full();
    const Eigen::SparseMatrix<double> M = mmat.full();
    Eigen::VectorXd vals;
    Eigen::MatrixXd vecs;

    const Eigen::Index block = std::min<Eigen::Index>(n, static_cast<Eigen::Index>(wanted + std::max<std::size_t>(8, wanted / 2)));
    if (block >= n || n <= 200) {
        const Eigen::MatrixXd kd(K), md(M);
        Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> dense(kd, md);
        if (dense.info() != Eigen::Success) throw ConvergenceError("eigen_fem: dense eigensolver failed", 0);
        vals = dense.eigenvalues().head(static_cast<Eigen::Index>(wanted));
        vecs = dense.eigenvectors().leftCols(static_cast<Eigen::Index>(wanted));
    } else {
        Eigen::SimplicialLLT<Eigen::SparseMatrix<double>, Eigen::Lower, Eigen::AMDOrdering<int>> llt(kmat.lower());
        if (llt.info() != Eigen::Success) throw SolveError("eigen_fem: stiffness factorisation failed");

        std::mt19937_64 rng(opts.seed);
        std::normal_distribution<double> normal;
        Eigen::MatrixXd x(n, block);
        for (Eigen::Index j = 0; j < block; ++j)
            for (Eigen::Index i = 0; i < n; ++i) x(i, j) = normal(rng);

        std::size_t converged = 0;
        int it = 0;
        for (; it < opts.max_iterations; ++it) {
            const Eigen::MatrixXd y = llt.solve(Eigen::MatrixXd(M * x));
            const Eigen::MatrixXd ky = K * y;
            const Eigen::MatrixXd my = M * y;
            Eigen::MatrixXd kr = y.transpose() * ky;
            Eigen::MatrixXd mr = y.transpose() * my;
            kr = 0.5 * (kr + kr.transpose()).eval();
            mr = 0.5 * (mr + mr.transpose()).eval();
            Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ritz(kr, mr);
            if (ritz.info() != Eigen::Success) {
                throw ConvergenceError("eigen_fem: Rayleigh-Ritz step failed", converged);
            }
            x = y * ritz.eigenvectors();
            const Eigen::MatrixXd kx = ky * ritz.eigenvectors();
            const Eigen::MatrixXd mx = my * ritz.eigenvectors();
            const Eigen::VectorXd theta = ritz.eigenvalues();
            converged = 0;
            for (std::size_t j = 0; j < wanted; ++j) {
                const auto c = static_cast<Eigen::Index>(j);
                const double res = (kx.col(c) - theta[c] * mx.col(c)).norm() / (theta[c] * mx.col(c).norm());
                if (res > opts.tolerance) break;
                ++converged;
            }
            if (converged == wanted) {
                vals = theta.head(static_cast<Eigen::Index>(wanted));
                vecs = x.leftCols(static_cast<Eigen::Index>(wanted));
                break;
            }
        }
        if (converged < wanted) {
            std::ostringstream msg;
            msg << "eigen_fem: " << converged << " of " << wanted << " eigenpairs converged after "
                << opts.max_iterations << " iterations";
            throw ConvergenceError(msg.str(), converged);
        }
    }

    // Mass-orthonormalise (Ritz vectors already are, up to rounding) and fix
    // the sign so the largest-magnitude entry is positive.
    std::vector<double> lambdas(wanted);
    Eigen::MatrixXd fns = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(mesh.node_count()),
                                                static_cast<Eigen::Index>(wanted));
    for (std::size_t j = 0; j < wanted; ++j) {
        const auto c = static_cast<Eigen::Index>(j);
        Eigen::VectorXd v = vecs.col(c);
        v /= std::sqrt(v.dot(M * v));
        Eigen::Index arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v[arg] < 0.0) v = -v;
        lambdas[j] = vals[c];
        for (Eigen::Index i = 0; i < n; ++i) fns(interior[static_cast<std::size_t>(i)], c) = v[i];
    }
    return EigenBasis(std::move(lambdas), std::move(fns), mesh.id(), lambda_max);
}

WeylFit weyl_fit(std::span<const double> lambdas) {
    const std::size_t J = lambdas.size();
    if (J < 10) throw Error("weyl_fit: need at least 10 eigenvalues, got " + std::to_string(J));
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t j = 0; j < J; ++j) {
        const double x = static_cast<double>(j + 1);
        sx += x;
        sy += lambdas[j];
        sxx += x * x;
        sxy += x * lambdas[j];
    }
    const double nj = static_cast<double>(J);
    WeylFit fit;
    fit.slope = (nj * sxy - sx * sy) / (nj * sxx - sx * sx);
    fit.intercept = (sy - fit.slope * sx) / nj;
    const double mean = sy / nj;
    double ss_tot = 0, ss_res = 0;
    for (std::size_t j = 0; j < J; ++j) {
        const double pred = fit.slope * static_cast<double>(j + 1) + fit.intercept;
        ss_res += (lambdas[j] - pred) * (lambdas[j] - pred);
        ss_tot += (lambdas[j] - mean) * (lambdas[j] - mean);
    }
    fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    return fit;
}

}  // namespace diffinv
