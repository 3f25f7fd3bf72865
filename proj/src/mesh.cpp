#include "diffinv/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>

#include "diffinv/error.hpp"
#include "diffinv/hash.hpp"

namespace diffinv {

namespace {

double signed_area(const Point2& a, const Point2& b, const Point2& c) {
    return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

double dist(const Point2& a, const Point2& b) { return std::hypot(a.x - b.x, a.y - b.y); }

}  // namespace

TriangularMesh::TriangularMesh(std::vector<Point2> nodes, std::vector<Triangle> triangles,
                               std::vector<bool> boundary_flags)
    : nodes_(std::move(nodes)), triangles_(std::move(triangles)), boundary_(std::move(boundary_flags)) {
    const int m = static_cast<int>(nodes_.size());
    if (m < 3 || triangles_.empty()) {
        throw Error("mesh: need at least 3 nodes and 1 triangle");
    }
    if (boundary_.size() != nodes_.size()) {
        throw Error("mesh: boundary flag count does not match node count");
    }
    for (const auto& p : nodes_) {
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
            throw Error("mesh: non-finite node coordinate");
        }
    }

    std::map<std::pair<int, int>, int> edge_use;
    for (auto& tri : triangles_) {
        for (int v : tri) {
            if (v < 0 || v >= m) {
                throw Error("mesh: triangle references node " + std::to_string(v) + " out of range");
            }
        }
        double a = signed_area(nodes_[tri[0]], nodes_[tri[1]], nodes_[tri[2]]);
        if (a < 0.0) {
            std::swap(tri[1], tri[2]);
            a = -a;
        }
        if (!(a > 0.0)) {
            throw Error("mesh: degenerate triangle");
        }
        for (int k = 0; k < 3; ++k) {
            int i = tri[k], j = tri[(k + 1) % 3];
            ++edge_use[{std::min(i, j), std::max(i, j)}];
        }
    }
    for (const auto& [edge, count] : edge_use) {
        if (count > 2) {
            throw Error("mesh: edge shared by more than two triangles");
        }
        if (count == 1 && !(boundary_[edge.first] && boundary_[edge.second])) {
            throw Error("mesh: free edge with a node not flagged as boundary");
        }
    }

    interior_index_.assign(nodes_.size(), -1);
    for (int i = 0; i < m; ++i) {
        if (boundary_[i]) {
            boundary_nodes_.push_back(i);
        } else {
            interior_index_[i] = static_cast<int>(interior_nodes_.size());
            interior_nodes_.push_back(i);
        }
    }

    Fnv1a h;
    for (const auto& p : nodes_) {
        h.add(p.x);
        h.add(p.y);
    }
    for (const auto& tri : triangles_) {
        for (int v : tri) h.add(static_cast<std::int64_t>(v));
    }
    for (bool b : boundary_) h.add(static_cast<std::int64_t>(b));
    id_ = h.value();
}

double TriangularMesh::triangle_area(std::size_t t) const {
    const auto& tri = triangles_[t];
    return signed_area(nodes_[tri[0]], nodes_[tri[1]], nodes_[tri[2]]);
}

double TriangularMesh::total_area() const {
    double s = 0.0;
    for (std::size_t t = 0; t < triangles_.size(); ++t) s += triangle_area(t);
    return s;
}

Point2 TriangularMesh::centroid(std::size_t t) const {
    const auto& tri = triangles_[t];
    return {(nodes_[tri[0]].x + nodes_[tri[1]].x + nodes_[tri[2]].x) / 3.0,
            (nodes_[tri[0]].y + nodes_[tri[1]].y + nodes_[tri[2]].y) / 3.0};
}

double TriangularMesh::max_diameter() const {
    double h = 0.0;
    for (const auto& tri : triangles_) {
        h = std::max({h, dist(nodes_[tri[0]], nodes_[tri[1]]), dist(nodes_[tri[1]], nodes_[tri[2]]),
                      dist(nodes_[tri[2]], nodes_[tri[0]])});
    }
    return h;
}

NodalField NodalField::constant(const TriangularMesh& mesh, double c) {
    return {Eigen::VectorXd::Constant(static_cast<Eigen::Index>(mesh.node_count()), c), mesh.id()};
}

void check_field(const TriangularMesh& mesh, const NodalField& field, const char* what) {
    if (field.size() != mesh.node_count()) {
        throw Error(std::string(what) + ": field has " + std::to_string(field.size()) +
                    " values, mesh has " + std::to_string(mesh.node_count()) + " nodes");
    }
    if (field.mesh_id != mesh.id()) {
        throw Error(std::string(what) + ": field is bound to a different mesh");
    }
    if (!field.all_finite()) {
        throw Error(std::string(what) + ": field has non-finite entries");
    }
}

// ---------------------------------------------------------------------------
// Point location

PointLocator::PointLocator(const TriangularMesh& mesh, bool force_grid) : mesh_(&mesh) {
    if (mesh.node_count() <= kGridThreshold && !force_grid) {
        return;
    }
    double xmin = std::numeric_limits<double>::max(), ymin = xmin;
    double xmax = std::numeric_limits<double>::lowest(), ymax = xmax;
    for (const auto& p : mesh.nodes()) {
        xmin = std::min(xmin, p.x);
        xmax = std::max(xmax, p.x);
        ymin = std::min(ymin, p.y);
        ymax = std::max(ymax, p.y);
    }
    const double side = std::max(xmax - xmin, ymax - ymin);
    const int cells_per_side = std::max(1, static_cast<int>(std::sqrt(double(mesh.triangle_count()) / 2.0)));
    cell_ = side / cells_per_side * (1.0 + 1e-9);
    x0_ = xmin;
    y0_ = ymin;
    nx_ = std::max(1, static_cast<int>(std::ceil((xmax - xmin) / cell_)));
    ny_ = std::max(1, static_cast<int>(std::ceil((ymax - ymin) / cell_)));
    buckets_.assign(static_cast<std::size_t>(nx_) * ny_, {});

    auto clamp_x = [&](double x) { return std::clamp(static_cast<int>(std::floor((x - x0_) / cell_)), 0, nx_ - 1); };
    auto clamp_y = [&](double y) { return std::clamp(static_cast<int>(std::floor((y - y0_) / cell_)), 0, ny_ - 1); };
    for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
        const auto& tri = mesh.triangle(t);
        double bx0 = std::min({mesh.node(tri[0]).x, mesh.node(tri[1]).x, mesh.node(tri[2]).x});
        double bx1 = std::max({mesh.node(tri[0]).x, mesh.node(tri[1]).x, mesh.node(tri[2]).x});
        double by0 = std::min({mesh.node(tri[0]).y, mesh.node(tri[1]).y, mesh.node(tri[2]).y});
        double by1 = std::max({mesh.node(tri[0]).y, mesh.node(tri[1]).y, mesh.node(tri[2]).y});
        for (int i = clamp_x(bx0); i <= clamp_x(bx1); ++i) {
            for (int j = clamp_y(by0); j <= clamp_y(by1); ++j) {
                buckets_[static_cast<std::size_t>(j) * nx_ + i].push_back(static_cast<int>(t));
            }
        }
    }
}

std::optional<Location> PointLocator::try_triangle(std::size_t t, Point2 p) const {
    const auto& tri = mesh_->triangle(t);
    const Point2& a = mesh_->node(tri[0]);
    const Point2& b = mesh_->node(tri[1]);
    const Point2& c = mesh_->node(tri[2]);
    const double area = signed_area(a, b, c);
    std::array<double, 3> w{signed_area(p, b, c) / area, signed_area(a, p, c) / area, 0.0};
    w[2] = 1.0 - w[0] - w[1];
    for (double wi : w) {
        if (wi < -kEdgeTolerance) return std::nullopt;
    }
    for (double& wi : w) wi = std::clamp(wi, 0.0, 1.0);
    const double s = w[0] + w[1] + w[2];
    for (double& wi : w) wi /= s;
    return Location{static_cast<int>(t), w};
}

std::optional<Location> PointLocator::locate(Point2 p) const {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) return std::nullopt;
    if (buckets_.empty()) {
        for (std::size_t t = 0; t < mesh_->triangle_count(); ++t) {
            if (auto loc = try_triangle(t, p)) return loc;
        }
        return std::nullopt;
    }
    const int i = static_cast<int>(std::floor((p.x - x0_) / cell_));
    const int j = static_cast<int>(std::floor((p.y - y0_) / cell_));
    // Neighbouring cells catch points sitting on a cell seam within tolerance.
    for (int dj = -1; dj <= 1; ++dj) {
        for (int di = -1; di <= 1; ++di) {
            const int ci = i + di, cj = j + dj;
            if (ci < 0 || cj < 0 || ci >= nx_ || cj >= ny_) continue;
            for (int t : buckets_[static_cast<std::size_t>(cj) * nx_ + ci]) {
                if (auto loc = try_triangle(static_cast<std::size_t>(t), p)) return loc;
            }
        }
    }
    return std::nullopt;
}

std::optional<Location> locate_point(const TriangularMesh& mesh, Point2 p) {
    return PointLocator(mesh).locate(p);
}

double interpolate(const TriangularMesh& mesh, const NodalField& field, Point2 p) {
    check_field(mesh, field, "interpolate");
    auto loc = locate_point(mesh, p);
    if (!loc) {
        std::ostringstream msg;
        msg << "interpolate: point (" << p.x << ", " << p.y << ") is outside the domain";
        throw OutsideDomainError(msg.str(), 0);
    }
    return evaluate_at(field, mesh, *loc);
}

// ---------------------------------------------------------------------------
// Disk builder

TriangularMesh build_disk_mesh(int target_node_count, double radius) {
    if (target_node_count < 3) {
        throw Error("build_disk_mesh: need at least 3 nodes, got " + std::to_string(target_node_count));
    }
    if (!(radius > 0.0)) {
        throw Error("build_disk_mesh: radius must be positive");
    }
    constexpr double two_pi = 2.0 * std::numbers::pi;
    std::vector<Point2> nodes;
    std::vector<Triangle> tris;
    std::vector<bool> boundary;

    if (target_node_count < 7) {
        for (int i = 0; i < target_node_count; ++i) {
            const double th = two_pi * i / target_node_count;
            nodes.push_back({radius * std::cos(th), radius * std::sin(th)});
            boundary.push_back(true);
        }
        for (int i = 1; i + 1 < target_node_count; ++i) tris.push_back({0, i, i + 1});
        return TriangularMesh(std::move(nodes), std::move(tris), std::move(boundary));
    }

    // 1 + 3K(K+1) nodes for K rings; pick the K closest to the target.
    int rings = 1;
    auto count = [](int k) { return 1 + 3 * k * (k + 1); };
    while (std::abs(count(rings + 1) - target_node_count) < std::abs(count(rings) - target_node_count)) {
        ++rings;
    }

    nodes.push_back({0.0, 0.0});
    boundary.push_back(false);
    std::vector<int> ring_start{0};
    for (int k = 1; k <= rings; ++k) {
        ring_start.push_back(static_cast<int>(nodes.size()));
        const int nk = 6 * k;
        const double r = (k == rings) ? radius : radius * k / rings;
        for (int i = 0; i < nk; ++i) {
            const double th = two_pi * i / nk;
            nodes.push_back({r * std::cos(th), r * std::sin(th)});
            boundary.push_back(k == rings);
        }
    }

    for (int i = 0; i < 6; ++i) {
        tris.push_back({0, ring_start[1] + i, ring_start[1] + (i + 1) % 6});
    }
    for (int k = 1; k < rings; ++k) {
        const int n_in = 6 * k, n_out = 6 * (k + 1);
        // Angular positions as fractions of a turn, unwrapped relative to the
        // first node on each ring.
        auto ang_in = [&](int i) { return i / double(n_in); };
        auto ang_out = [&](int j) { return j / double(n_out); };
        int i = 0, j = 0;
        // Start the outer walk at the outer node just below the first inner node.
        int j0 = 0;
        while (ang_out(j0 + 1) <= ang_in(0)) ++j0;
        while (ang_out(j0) > ang_in(0)) --j0;
        auto in_id = [&](int a) { return ring_start[k] + ((a % n_in) + n_in) % n_in; };
        auto out_id = [&](int b) { return ring_start[k + 1] + ((b % n_out) + n_out) % n_out; };
        j = j0;
        while (i < n_in || j < j0 + n_out) {
            const bool advance_outer =
                (i >= n_in) || (j < j0 + n_out && ang_out(j + 1) <= ang_in(i + 1));
            if (advance_outer) {
                tris.push_back({in_id(i), out_id(j), out_id(j + 1)});
                ++j;
            } else {
                tris.push_back({in_id(i), out_id(j), in_id(i + 1)});
                ++i;
            }
        }
    }
    return TriangularMesh(std::move(nodes), std::move(tris), std::move(boundary));
}

// ---------------------------------------------------------------------------
// Plain-text format

void write_mesh(std::ostream& out, const TriangularMesh& mesh) {
    out << "nodes " << mesh.node_count() << " triangles " << mesh.triangle_count() << '\n';
    out << std::setprecision(17);
    for (std::size_t i = 0; i < mesh.node_count(); ++i) {
        out << mesh.node(i).x << ' ' << mesh.node(i).y << ' ' << (mesh.is_boundary(i) ? 1 : 0) << '\n';
    }
    for (const auto& tri : mesh.triangles()) {
        out << tri[0] << ' ' << tri[1] << ' ' << tri[2] << '\n';
    }
}

TriangularMesh read_mesh(std::istream& in) {
    std::string kw_nodes, kw_tris;
    long long m = 0, t = 0;
    if (!(in >> kw_nodes >> m >> kw_tris >> t) || kw_nodes != "nodes" || kw_tris != "triangles" || m < 0 ||
        t < 0) {
        throw Error("read_mesh: expected header 'nodes M triangles T'");
    }
    std::vector<Point2> nodes(static_cast<std::size_t>(m));
    std::vector<bool> boundary(static_cast<std::size_t>(m));
    for (auto i = 0LL; i < m; ++i) {
        int flag = 0;
        if (!(in >> nodes[i].x >> nodes[i].y >> flag) || (flag != 0 && flag != 1)) {
            throw Error("read_mesh: malformed node line " + std::to_string(i));
        }
        boundary[i] = flag == 1;
    }
    std::vector<Triangle> tris(static_cast<std::size_t>(t));
    for (auto k = 0LL; k < t; ++k) {
        if (!(in >> tris[k][0] >> tris[k][1] >> tris[k][2])) {
            throw Error("read_mesh: malformed triangle line " + std::to_string(k));
        }
    }
    return TriangularMesh(std::move(nodes), std::move(tris), std::move(boundary));
}

void save_mesh(const std::string& path, const TriangularMesh& mesh) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path + " for writing");
    write_mesh(out, mesh);
}

TriangularMesh load_mesh(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    return read_mesh(in);
}

}  // namespace diffinv
