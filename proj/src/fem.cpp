#include "diffinv/fem.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/IterativeLinearSolvers>

#include "diffinv/error.hpp"

namespace diffinv {

SparseSpdMatrix::SparseSpdMatrix(Eigen::SparseMatrix<double> lower) : lower_(std::move(lower)) {
    lower_.makeCompressed();
}

double SparseSpdMatrix::coeff(Eigen::Index i, Eigen::Index j) const {
    return i >= j ? lower_.coeff(i, j) : lower_.coeff(j, i);
}

Eigen::SparseMatrix<double> SparseSpdMatrix::full() const {
    Eigen::SparseMatrix<double> out = lower_.selfadjointView<Eigen::Lower>();
    return out;
}

Eigen::VectorXd SparseSpdMatrix::multiply(const Eigen::VectorXd& x) const {
    return lower_.selfadjointView<Eigen::Lower>() * x;
}

double SparseSpdMatrix::quadratic_form(const Eigen::VectorXd& x) const { return x.dot(multiply(x)); }

Eigen::Matrix3d local_stiffness(const Point2& a, const Point2& b, const Point2& c) {
    const double two_area = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
    const double area = 0.5 * std::abs(two_area);
    // Gradients of the barycentric coordinates, times 2|t|.
    const Eigen::Vector3d gx(b.y - c.y, c.y - a.y, a.y - b.y);
    const Eigen::Vector3d gy(c.x - b.x, a.x - c.x, b.x - a.x);
    return (gx * gx.transpose() + gy * gy.transpose()) / (4.0 * area);
}

Eigen::Matrix3d local_mass(const Point2& a, const Point2& b, const Point2& c) {
    const double area = 0.5 * std::abs((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
    Eigen::Matrix3d m = Eigen::Matrix3d::Constant(area / 12.0);
    m.diagonal().setConstant(area / 6.0);
    return m;
}

namespace {

double centroid_value(const NodalField& f, const Triangle& tri) {
    return (f.values[tri[0]] + f.values[tri[1]] + f.values[tri[2]]) / 3.0;
}

void require_positive(const NodalField& f, const char* what) {
    for (Eigen::Index i = 0; i < f.values.size(); ++i) {
        if (!(f.values[i] > 0.0)) {
            std::ostringstream msg;
            msg << what << ": diffusivity must be positive, node " << i << " has " << f.values[i];
            throw Error(msg.str());
        }
    }
}

// Assembles sum_t weight(t) * local(t) over all nodes, or interior nodes only.
template <class Weight, class Local>
SparseSpdMatrix assemble(const TriangularMesh& mesh, bool interior_only, Weight&& weight, Local&& local) {
    const auto n = static_cast<Eigen::Index>(interior_only ? mesh.interior_nodes().size() : mesh.node_count());
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(mesh.triangle_count() * 6);
    for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
        const auto& tri = mesh.triangle(t);
        const Eigen::Matrix3d k =
            weight(t) * local(mesh.node(tri[0]), mesh.node(tri[1]), mesh.node(tri[2]));
        for (int a = 0; a < 3; ++a) {
            for (int b = 0; b < 3; ++b) {
                int i = tri[a], j = tri[b];
                if (interior_only) {
                    i = mesh.interior_index(i);
                    j = mesh.interior_index(j);
                    if (i < 0 || j < 0) continue;
                }
                if (i >= j) trips.emplace_back(i, j, k(a, b));
            }
        }
    }
    Eigen::SparseMatrix<double> m(n, n);
    m.setFromTriplets(trips.begin(), trips.end());
    return SparseSpdMatrix(std::move(m));
}

}  // namespace

SparseSpdMatrix assemble_stiffness_full(const TriangularMesh& mesh, const NodalField& f) {
    check_field(mesh, f, "assemble_stiffness");
    require_positive(f, "assemble_stiffness");
    return assemble(mesh, false, [&](std::size_t t) { return centroid_value(f, mesh.triangle(t)); },
                    local_stiffness);
}

SparseSpdMatrix assemble_stiffness(const TriangularMesh& mesh, const NodalField& f) {
    check_field(mesh, f, "assemble_stiffness");
    require_positive(f, "assemble_stiffness");
    return assemble(mesh, true, [&](std::size_t t) { return centroid_value(f, mesh.triangle(t)); },
                    local_stiffness);
}

SparseSpdMatrix assemble_mass_full(const TriangularMesh& mesh) {
    return assemble(mesh, false, [](std::size_t) { return 1.0; }, local_mass);
}

SparseSpdMatrix assemble_mass(const TriangularMesh& mesh) {
    return assemble(mesh, true, [](std::size_t) { return 1.0; }, local_mass);
}

Eigen::VectorXd assemble_load(const TriangularMesh& mesh, const ScalarFunction& s) {
    Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh.node_count()));
    for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
        const Point2 c = mesh.centroid(t);
        const double sv = s(c);
        if (!std::isfinite(sv)) {
            std::ostringstream msg;
            msg << "assemble_load: source is not finite at (" << c.x << ", " << c.y << ")";
            throw Error(msg.str());
        }
        const double share = sv * mesh.triangle_area(t) / 3.0;
        for (int v : mesh.triangle(t)) b[v] += share;
    }
    return b;
}

// ---------------------------------------------------------------------------

ForwardSolver::ForwardSolver(const TriangularMesh& mesh) : mesh_(&mesh) {
    const auto n = static_cast<Eigen::Index>(mesh.interior_nodes().size());
    if (n == 0) {
        return;
    }
    std::vector<Eigen::Triplet<double>> trips;
    unit_stiffness_.reserve(mesh.triangle_count());
    for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
        const auto& tri = mesh.triangle(t);
        unit_stiffness_.push_back(local_stiffness(mesh.node(tri[0]), mesh.node(tri[1]), mesh.node(tri[2])));
        for (int a = 0; a < 3; ++a) {
            for (int b = 0; b < 3; ++b) {
                const int i = mesh.interior_index(tri[a]), j = mesh.interior_index(tri[b]);
                if (i >= 0 && j >= 0 && i >= j) trips.emplace_back(i, j, 1.0);
            }
        }
    }
    matrix_.resize(n, n);
    matrix_.setFromTriplets(trips.begin(), trips.end());
    matrix_.makeCompressed();

    // Position of each (triangle, a, b) contribution inside the value array.
    slots_.resize(mesh.triangle_count());
    const int* outer = matrix_.outerIndexPtr();
    const int* inner = matrix_.innerIndexPtr();
    for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
        const auto& tri = mesh.triangle(t);
        for (int a = 0; a < 3; ++a) {
            for (int b = 0; b < 3; ++b) {
                const int i = mesh.interior_index(tri[a]), j = mesh.interior_index(tri[b]);
                int slot = -1;
                if (i >= 0 && j >= 0 && i >= j) {
                    for (int p = outer[j]; p < outer[j + 1]; ++p) {
                        if (inner[p] == i) {
                            slot = p;
                            break;
                        }
                    }
                }
                slots_[t][3 * a + b] = slot;
            }
        }
    }
    llt_.analyzePattern(matrix_);
}

ForwardSolution ForwardSolver::solve(const NodalField& f, const Eigen::VectorXd& load) {
    const TriangularMesh& mesh = *mesh_;
    check_field(mesh, f, "solve_forward");
    require_positive(f, "solve_forward");
    if (load.size() != static_cast<Eigen::Index>(mesh.node_count())) {
        throw Error("solve_forward: load vector length does not match node count");
    }

    const auto& interior = mesh.interior_nodes();
    const auto n = static_cast<Eigen::Index>(interior.size());
    ForwardSolution out;
    out.f_used = f;
    out.u = NodalField::constant(mesh, 0.0);
    if (n == 0) {
        return out;
    }

    double* vals = matrix_.valuePtr();
    std::fill(vals, vals + matrix_.nonZeros(), 0.0);
    for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
        const double ft = centroid_value(f, mesh.triangle(t));
        const auto& k = unit_stiffness_[t];
        const auto& s = slots_[t];
        for (int a = 0; a < 3; ++a) {
            for (int b = 0; b < 3; ++b) {
                if (s[3 * a + b] >= 0) vals[s[3 * a + b]] += ft * k(a, b);
            }
        }
    }

    // Weak form: -K u = b.
    Eigen::VectorXd rhs(n);
    for (Eigen::Index i = 0; i < n; ++i) rhs[i] = -load[interior[static_cast<std::size_t>(i)]];
    out.load_norm = rhs.norm();

    auto sym = matrix_.selfadjointView<Eigen::Lower>();
    Eigen::VectorXd x;
    double residual = 0.0;
    const double target = kRelativeTolerance * std::max(out.load_norm, 1e-300);

    llt_.factorize(matrix_);
    if (llt_.info() == Eigen::Success) {
        x = llt_.solve(rhs);
        residual = (rhs - sym * x).norm();
        if (residual > target && llt_.info() == Eigen::Success) {
            x += llt_.solve(Eigen::VectorXd(rhs - sym * x));
            residual = (rhs - sym * x).norm();
        }
    }
    if (llt_.info() != Eigen::Success || !x.allFinite() || residual > target) {
        Eigen::SparseMatrix<double> full = matrix_.selfadjointView<Eigen::Lower>();
        Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper,
                                 Eigen::DiagonalPreconditioner<double>>
            cg;
        cg.setTolerance(kRelativeTolerance);
        cg.setMaxIterations(10 * n);
        cg.compute(full);
        x = cg.solve(rhs);
        residual = (rhs - full * x).norm();
        if (cg.info() != Eigen::Success || !x.allFinite() || residual > target) {
            std::ostringstream msg;
            msg << "solve_forward: Cholesky and CG both failed; CG relative residual "
                << residual / std::max(out.load_norm, 1e-300) << " after " << cg.iterations() << " iterations";
            throw SolveError(msg.str());
        }
    }

    out.residual_norm = residual;
    for (Eigen::Index i = 0; i < n; ++i) out.u.values[interior[static_cast<std::size_t>(i)]] = x[i];
    return out;
}

ForwardSolution solve_forward(const TriangularMesh& mesh, const NodalField& f, const ScalarFunction& s) {
    ForwardSolver solver(mesh);
    return solver.solve(f, assemble_load(mesh, s));
}

// ---------------------------------------------------------------------------

PointEvaluator::PointEvaluator(const TriangularMesh& mesh, std::span<const Point2> points) : mesh_(&mesh) {
    PointLocator locator(mesh);
    locations_.reserve(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        auto loc = locator.locate(points[i]);
        if (!loc) {
            std::ostringstream msg;
            msg << "point " << i << " (" << points[i].x << ", " << points[i].y << ") is outside the domain";
            throw OutsideDomainError(msg.str(), i);
        }
        locations_.push_back(*loc);
    }
}

Eigen::VectorXd PointEvaluator::evaluate(const NodalField& field) const {
    check_field(*mesh_, field, "evaluate");
    Eigen::VectorXd out(static_cast<Eigen::Index>(locations_.size()));
    for (std::size_t i = 0; i < locations_.size(); ++i) {
        out[static_cast<Eigen::Index>(i)] = evaluate_at(field, *mesh_, locations_[i]);
    }
    return out;
}

Eigen::VectorXd evaluate_solution(const TriangularMesh& mesh, const ForwardSolution& sol,
                                  std::span<const Point2> points) {
    return PointEvaluator(mesh, points).evaluate(sol.u);
}

}  // namespace diffinv
