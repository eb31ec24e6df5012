#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "ellab/common.hpp"

namespace ellab {

struct BoundingBox {
    Point lower;
    Point upper;

    double width() const { return upper.x - lower.x; }
    double height() const { return upper.y - lower.y; }
};

/// Simple closed polygon with connected boundary. Vertices are stored in
/// counter-clockwise order; clockwise input is reversed on construction.
class PolygonalDomain {
public:
    /// Throws InvalidArgument for fewer than three vertices, repeated
    /// vertices, zero area or self-intersection.
    explicit PolygonalDomain(std::vector<Point> vertices);

    static PolygonalDomain unit_square();
    static PolygonalDomain rectangle(Point lower, Point upper);
    /// (0,0)-(1,0)-(1,0.5)-(0.5,0.5)-(0.5,1)-(0,1).
    static PolygonalDomain l_shape();

    const std::vector<Point>& vertices() const { return vertices_; }
    std::size_t edge_count() const { return vertices_.size(); }
    std::array<Point, 2> edge(std::size_t i) const;

    double area() const { return area_; }
    double perimeter() const { return perimeter_; }
    double diameter() const { return diameter_; }
    BoundingBox bounding_box() const { return bbox_; }
    Point centroid() const { return centroid_; }

    /// Strict interior test (points on the boundary count as outside).
    bool contains(Point p) const;
    /// True when every edge is axis-aligned.
    bool is_rectilinear() const;

    /// Exact Euclidean distance from p to the union of boundary segments.
    double distance_to_boundary(Point p) const;
    /// Distance between the closed square [c, c+side]^2 and the boundary;
    /// zero when they intersect.
    double distance_to_square(Point corner, double side) const;
    /// True when the open square lies inside the domain.
    bool square_inside(Point corner, double side) const;

private:
    std::vector<Point> vertices_;
    double area_ = 0.0;
    double perimeter_ = 0.0;
    double diameter_ = 0.0;
    BoundingBox bbox_{};
    Point centroid_{};
};

double distance_to_boundary(const PolygonalDomain& domain, Point x);

double point_segment_distance(Point p, Point a, Point b);
bool segments_intersect(Point a, Point b, Point c, Point d);

enum class CellShape { kTriangle, kRectangle };

struct BoundaryEdge {
    int a = 0;
    int b = 0;
    Point normal;  // outward unit normal
    double length = 0.0;
};

/// Integer lattice coordinates for meshes generated on a uniform grid.
struct Lattice {
    Point origin;
    double spacing = 0.0;
    std::vector<std::array<std::int64_t, 2>> node_index;
    /// (i, j, part): lattice square and, for triangles, which half (0 or 1).
    std::vector<std::array<std::int64_t, 3>> cell_index;
};

/// Bucket grid over a set of convex cells for point location.
class CellLocator {
public:
    CellLocator() = default;
    /// cells[i] holds 3 or 4 vertices in counter-clockwise order.
    explicit CellLocator(std::vector<std::vector<Point>> cells);

    /// Index of a cell containing p (boundary inclusive), or -1.
    int locate(Point p) const;
    bool empty() const { return cells_.empty(); }

private:
    std::vector<std::vector<Point>> cells_;
    BoundingBox box_{};
    int nx_ = 0;
    int ny_ = 0;
    std::vector<std::vector<int>> buckets_;
};

/// Conforming triangulation or rectangle mesh. Immutable after construction.
class Mesh {
public:
    Mesh(CellShape shape, std::vector<Point> vertices, std::vector<std::array<int, 4>> cells,
         std::optional<Lattice> lattice = std::nullopt);

    CellShape shape() const { return shape_; }
    int vertices_per_cell() const { return shape_ == CellShape::kTriangle ? 3 : 4; }
    const std::vector<Point>& vertices() const { return vertices_; }
    const std::vector<std::array<int, 4>>& cells() const { return cells_; }
    std::size_t cell_count() const { return cells_.size(); }
    std::vector<Point> cell_polygon(std::size_t c) const;
    Point cell_centroid(std::size_t c) const;
    double cell_area(std::size_t c) const;

    const std::vector<BoundaryEdge>& boundary_edges() const { return boundary_edges_; }
    bool is_boundary_node(int v) const { return boundary_node_[static_cast<std::size_t>(v)]; }
    /// Maximum cell diameter.
    double h() const { return h_; }
    double area() const;
    const std::optional<Lattice>& lattice() const { return lattice_; }

    int locate(Point p) const { return locator_.locate(p); }

private:
    CellShape shape_;
    std::vector<Point> vertices_;
    std::vector<std::array<int, 4>> cells_;
    std::vector<BoundaryEdge> boundary_edges_;
    std::vector<bool> boundary_node_;
    double h_ = 0.0;
    std::optional<Lattice> lattice_;
    CellLocator locator_;
};

/// Ear-clipping triangulation followed by uniform midpoint refinement until
/// the maximum cell diameter is at most h_target. Polygon edges are split,
/// never moved.
Mesh build_mesh(const PolygonalDomain& domain, double h_target);

/// Uniform lattice mesh of a rectilinear domain: every lattice square whose
/// center lies in the domain becomes a rectangle, or two triangles split
/// along the lower-left to upper-right diagonal. The lattice is anchored at
/// `origin` (default: the lower-left bounding box corner); all polygon
/// vertices must be lattice points.
Mesh grid_mesh(const PolygonalDomain& domain, double spacing, CellShape shape,
               std::optional<Point> origin = std::nullopt);

struct BoundaryQuadrature {
    std::vector<Point> points;
    std::vector<double> weights;
    std::vector<Point> normals;
    std::vector<int> edge;  // index into Mesh::boundary_edges()
};

/// Gauss points and weights on every boundary edge; order in [1, 10].
BoundaryQuadrature boundary_quadrature(const Mesh& mesh, int order);

} // namespace ellab
