#pragma once

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "diffinv/mesh.hpp"

namespace diffinv {

using ScalarFunction = std::function<double(Point2)>;

// Symmetric matrix stored as its lower triangle in compressed column form.
class SparseSpdMatrix {
public:
    SparseSpdMatrix() = default;
    explicit SparseSpdMatrix(Eigen::SparseMatrix<double> lower);

    Eigen::Index dim() const noexcept { return lower_.rows(); }
    double coeff(Eigen::Index i, Eigen::Index j) const;
    const Eigen::SparseMatrix<double>& lower() const noexcept { return lower_; }
    Eigen::SparseMatrix<double> full() const;
    Eigen::VectorXd diagonal() const { return lower_.diagonal(); }
    Eigen::VectorXd multiply(const Eigen::VectorXd& x) const;
    // x^T A x
    double quadratic_form(const Eigen::VectorXd& x) const;

private:
    Eigen::SparseMatrix<double> lower_;
};

// Element matrices for the P1 basis on one triangle.
Eigen::Matrix3d local_stiffness(const Point2& a, const Point2& b, const Point2& c);
Eigen::Matrix3d local_mass(const Point2& a, const Point2& b, const Point2& c);

// Stiffness over all nodes, diffusivity taken at each triangle centroid.
SparseSpdMatrix assemble_stiffness_full(const TriangularMesh& mesh, const NodalField& f);
// Same, with boundary rows and columns eliminated (homogeneous Dirichlet).
// Rows/columns follow mesh.interior_nodes() ordering.
SparseSpdMatrix assemble_stiffness(const TriangularMesh& mesh, const NodalField& f);

// Consistent P1 mass matrix over all nodes, and restricted to interior nodes.
SparseSpdMatrix assemble_mass_full(const TriangularMesh& mesh);
SparseSpdMatrix assemble_mass(const TriangularMesh& mesh);

// Centroid-rule load vector over all nodes: b_i = sum_t s(c_t) |t| / 3.
Eigen::VectorXd assemble_load(const TriangularMesh& mesh, const ScalarFunction& s);

struct ForwardSolution {
    NodalField u;
    NodalField f_used;
    double residual_norm = 0.0;
    double load_norm = 0.0;
};

// Repeated solves of div(f grad u) = s, u = 0 on the boundary, on a fixed mesh.
// The sparsity pattern and fill-reducing ordering are computed once; each
// solve only reassembles values and refactorises. One instance must not be
// used from several threads at once; create one per thread instead.
class ForwardSolver {
public:
    static constexpr double kRelativeTolerance = 1e-10;

    explicit ForwardSolver(const TriangularMesh& mesh);

    const TriangularMesh& mesh() const noexcept { return *mesh_; }

    // load is the full-node vector from assemble_load. Throws Error for a
    // non-positive diffusivity and SolveError when no solve meets tolerance.
    ForwardSolution solve(const NodalField& f, const Eigen::VectorXd& load);

private:
    const TriangularMesh* mesh_;
    Eigen::SparseMatrix<double> matrix_;
    std::vector<Eigen::Matrix3d> unit_stiffness_;
    std::vector<std::array<int, 9>> slots_;
    Eigen::SimplicialLLT<Eigen::SparseMatrix<double>, Eigen::Lower, Eigen::AMDOrdering<int>> llt_;
};

ForwardSolution solve_forward(const TriangularMesh& mesh, const NodalField& f, const ScalarFunction& s);

// Precomputed P1 evaluation at a fixed list of points.
class PointEvaluator {
public:
    // Throws OutsideDomainError carrying the index of the first outside point.
    PointEvaluator(const TriangularMesh& mesh, std::span<const Point2> points);

    std::size_t size() const noexcept { return locations_.size(); }
    Eigen::VectorXd evaluate(const NodalField& field) const;

private:
    const TriangularMesh* mesh_;
    std::vector<Location> locations_;
};

Eigen::VectorXd evaluate_solution(const TriangularMesh& mesh, const ForwardSolution& sol,
                                  std::span<const Point2> points);

}  // namespace diffinv
