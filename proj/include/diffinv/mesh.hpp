#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace diffinv {

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

using Triangle = std::array<int, 3>;

// Radius of the disk with unit area.
inline const double kUnitDiskRadius = 1.0 / std::sqrt(3.14159265358979323846);

// Conforming P1 triangulation of a planar domain. Immutable after construction;
// all queries are const and thread-safe.
class TriangularMesh {
public:
    // Validates orientation (every triangle strictly counter-clockwise, after
    // reorienting clockwise input), edge manifoldness and index ranges.
    // Throws diffinv::Error on invalid input.
    TriangularMesh(std::vector<Point2> nodes, std::vector<Triangle> triangles,
                   std::vector<bool> boundary_flags);

    std::size_t node_count() const noexcept { return nodes_.size(); }
    std::size_t triangle_count() const noexcept { return triangles_.size(); }

    const std::vector<Point2>& nodes() const noexcept { return nodes_; }
    const std::vector<Triangle>& triangles() const noexcept { return triangles_; }
    const Point2& node(std::size_t i) const { return nodes_[i]; }
    const Triangle& triangle(std::size_t t) const { return triangles_[t]; }

    bool is_boundary(std::size_t i) const { return boundary_[i]; }
    const std::vector<int>& boundary_nodes() const noexcept { return boundary_nodes_; }
    const std::vector<int>& interior_nodes() const noexcept { return interior_nodes_; }

    // Position of node i among interior nodes, or -1 for boundary nodes.
    int interior_index(std::size_t i) const { return interior_index_[i]; }

    // Content hash; fields carry it to detect mesh mismatches.
    std::uint64_t id() const noexcept { return id_; }

    double triangle_area(std::size_t t) const;
    double total_area() const;
    Point2 centroid(std::size_t t) const;
    double max_diameter() const;

private:
    friend class PointLocator;

    std::vector<Point2> nodes_;
    std::vector<Triangle> triangles_;
    std::vector<bool> boundary_;
    std::vector<int> boundary_nodes_;
    std::vector<int> interior_nodes_;
    std::vector<int> interior_index_;
    std::uint64_t id_ = 0;
};

// Piecewise-linear function given by its nodal values.
struct NodalField {
    Eigen::VectorXd values;
    std::uint64_t mesh_id = 0;

    NodalField() = default;
    NodalField(Eigen::VectorXd v, std::uint64_t id) : values(std::move(v)), mesh_id(id) {}

    static NodalField constant(const TriangularMesh& mesh, double c);
    template <class Fn>
    static NodalField sample(const TriangularMesh& mesh, Fn&& fn) {
        Eigen::VectorXd v(static_cast<Eigen::Index>(mesh.node_count()));
        for (std::size_t i = 0; i < mesh.node_count(); ++i) {
            v[static_cast<Eigen::Index>(i)] = fn(mesh.node(i));
        }
        return {std::move(v), mesh.id()};
    }

    std::size_t size() const noexcept { return static_cast<std::size_t>(values.size()); }
    bool all_finite() const { return values.allFinite(); }
};

// Throws diffinv::Error unless the field has one finite value per node of mesh.
void check_field(const TriangularMesh& mesh, const NodalField& field, const char* what);

struct Location {
    int triangle = -1;
    std::array<double, 3> bary{};
};

// Triangle lookup. Meshes above kGridThreshold nodes get a uniform bucket
// grid; smaller ones are scanned linearly.
class PointLocator {
public:
    static constexpr std::size_t kGridThreshold = 5000;

    explicit PointLocator(const TriangularMesh& mesh, bool force_grid = false);

    // Barycentric tolerance: points within this of an edge count as inside.
    static constexpr double kEdgeTolerance = 1e-10;

    std::optional<Location> locate(Point2 p) const;
    bool uses_grid() const noexcept { return !buckets_.empty(); }

private:
    std::optional<Location> try_triangle(std::size_t t, Point2 p) const;

    const TriangularMesh* mesh_;
    double x0_ = 0.0, y0_ = 0.0, cell_ = 1.0;
    int nx_ = 0, ny_ = 0;
    std::vector<std::vector<int>> buckets_;
};

// Returns nullopt when p is outside the mesh. Builds a temporary locator; use
// PointLocator directly for repeated queries.
std::optional<Location> locate_point(const TriangularMesh& mesh, Point2 p);

// P1 value at p. Throws OutsideDomainError (index 0) when p is outside.
double interpolate(const TriangularMesh& mesh, const NodalField& field, Point2 p);

inline double evaluate_at(const NodalField& field, const TriangularMesh& mesh, const Location& loc) {
    const auto& tri = mesh.triangle(static_cast<std::size_t>(loc.triangle));
    return loc.bary[0] * field.values[tri[0]] + loc.bary[1] * field.values[tri[1]] +
           loc.bary[2] * field.values[tri[2]];
}

// Quasi-uniform mesh of the disk of radius kUnitDiskRadius centred at the
// origin. Nodes sit on concentric rings (ring k carries 6k nodes) which are
// stitched pairwise into triangles; fewer than 7 targets yield a fan-split
// inscribed polygon.
TriangularMesh build_disk_mesh(int target_node_count, double radius = kUnitDiskRadius);

// "nodes M triangles T" header, M lines "x y flag", T lines "i j k".
void write_mesh(std::ostream& out, const TriangularMesh& mesh);
TriangularMesh read_mesh(std::istream& in);
void save_mesh(const std::string& path, const TriangularMesh& mesh);
TriangularMesh load_mesh(const std::string& path);

}  // namespace diffinv
