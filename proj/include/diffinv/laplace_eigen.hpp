#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "diffinv/mesh.hpp"

namespace diffinv {

// Dirichlet-Laplacian eigenpairs -Δe = λe, e = 0 on the boundary, with the
// eigenfunctions stored as nodal columns (boundary rows are zero).
class EigenBasis {
public:
    EigenBasis() = default;
    EigenBasis(std::vector<double> lambdas, Eigen::MatrixXd functions, std::uint64_t mesh_id,
               double lambda_max);

    std::size_t size() const noexcept { return lambdas_.size(); }
    const std::vector<double>& lambdas() const noexcept { return lambdas_; }
    double lambda(std::size_t j) const { return lambdas_[j]; }
    double lambda_max() const noexcept { return lambda_max_; }

    // M x J matrix whose columns are the eigenfunctions.
    const Eigen::MatrixXd& functions() const noexcept { return functions_; }
    NodalField function(std::size_t j) const;
    std::uint64_t mesh_id() const noexcept { return mesh_id_; }

    // Keeps the first J pairs; J may not exceed size().
    EigenBasis truncated(std::size_t J) const;

    // sum_j coeffs[j] e_j as a nodal field.
    NodalField synthesize(const Eigen::VectorXd& coeffs) const;

private:
    std::vector<double> lambdas_;
    Eigen::MatrixXd functions_;
    std::uint64_t mesh_id_ = 0;
    double lambda_max_ = 0.0;
};

// One separable eigenmode J_m(j_{m,k} r / R) {cos, sin}(m θ) of the disk.
struct DiskMode {
    int m = 0;
    int k = 1;
    bool sine = false;
    double bessel_zero = 0.0;
    double lambda = 0.0;
    double norm = 1.0;  // L² norm of the unnormalised mode
};

// Closed-form Dirichlet eigenpairs of the disk of a given radius.
class DiskEigenbasis {
public:
    DiskEigenbasis(double radius, std::vector<DiskMode> modes) : radius_(radius), modes_(std::move(modes)) {}

    double radius() const noexcept { return radius_; }
    std::size_t size() const noexcept { return modes_.size(); }
    const std::vector<DiskMode>& modes() const noexcept { return modes_; }
    std::vector<double> lambdas() const;

    // L²-normalised eigenfunction j at p (zero outside the disk).
    double evaluate(std::size_t j, Point2 p) const;

    // Samples every eigenfunction at the mesh nodes; boundary nodes get 0.
    EigenBasis on_mesh(const TriangularMesh& mesh) const;

private:
    double radius_;
    std::vector<DiskMode> modes_;
};

// All eigenpairs with λ <= lambda_max, ascending; each m > 0 contributes a cos
// and a sin mode (cos first). Throws Error when lambda_max is below the
// fundamental eigenvalue.
DiskEigenbasis eigen_disk_analytic(double radius, double lambda_max);

struct EigenFemOptions {
    double tolerance = 1e-10;   // relative residual |Ke - λMe| / (λ |Me|)
    int max_iterations = 2000;
    std::uint64_t seed = 12345;  // start block for subspace iteration
};

// FEM eigenpairs of K e = λ M e (P1 stiffness with unit diffusivity,
// consistent mass, interior nodes) with λ <= lambda_max. The number of such
// eigenvalues is fixed by the inertia of K - lambda_max M; the pairs are then
// found by shift-invert subspace iteration with Rayleigh-Ritz. Eigenfunctions
// are mass-orthonormal. Throws ConvergenceError if the iteration cap is hit.
EigenBasis eigen_fem(const TriangularMesh& mesh, double lambda_max, const EigenFemOptions& opts = {});

// Number of generalized eigenvalues of (K, M) strictly below shift.
std::size_t count_eigenvalues_below(const TriangularMesh& mesh, double shift);

struct WeylFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

// Least-squares line λ_j ~ slope * j + intercept over j = 1..J. Needs J >= 10.
WeylFit weyl_fit(std::span<const double> lambdas);

}  // namespace diffinv
