#include "ellab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <utility>

#include "ellab/quadrature.hpp"

namespace ellab {

namespace {

double signed_area(const std::vector<Point>& v)
{
    double a = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const Point p = v[i];
        const Point q = v[(i + 1) % v.size()];
        a += cross(p, q);
    }
    return 0.5 * a;
}

double orient(Point a, Point b, Point c) { return cross(b - a, c - a); }

bool on_segment(Point p, Point a, Point b)
{
    return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
           p.y <= std::max(a.y, b.y);
}

bool inside_convex(const std::vector<Point>& poly, Point p, double tol)
{
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Point a = poly[i];
        const Point b = poly[(i + 1) % poly.size()];
        const double len = distance(a, b);
        if (orient(a, b, p) < -tol * len) {
            return false;
        }
    }
    return true;
}

double point_square_distance(Point p, Point corner, double side)
{
    const double dx = std::max({corner.x - p.x, 0.0, p.x - (corner.x + side)});
    const double dy = std::max({corner.y - p.y, 0.0, p.y - (corner.y + side)});
    return std::hypot(dx, dy);
}

bool segment_hits_square(Point a, Point b, Point corner, double side)
{
    if (point_square_distance(a, corner, side) == 0.0 || point_square_distance(b, corner, side) == 0.0) {
        return true;
    }
    const std::array<Point, 4> sq{corner, {corner.x + side, corner.y}, {corner.x + side, corner.y + side},
                                  {corner.x, corner.y + side}};
    for (std::size_t i = 0; i < 4; ++i) {
        if (segments_intersect(a, b, sq[i], sq[(i + 1) % 4])) {
            return true;
        }
    }
    return false;
}

std::vector<std::array<int, 4>> ear_clip(const std::vector<Point>& v)
{
    std::vector<int> idx(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        idx[i] = static_cast<int>(i);
    }
    std::vector<std::array<int, 4>> tris;
    while (idx.size() > 3) {
        bool clipped = false;
        for (std::size_t k = 0; k < idx.size(); ++k) {
            const int ip = idx[(k + idx.size() - 1) % idx.size()];
            const int ic = idx[k];
            const int in = idx[(k + 1) % idx.size()];
            const Point a = v[static_cast<std::size_t>(ip)];
            const Point b = v[static_cast<std::size_t>(ic)];
            const Point c = v[static_cast<std::size_t>(in)];
            if (orient(a, b, c) <= 0.0) {
                continue;
            }
            bool ear = true;
            for (const int j : idx) {
                if (j == ip || j == ic || j == in) {
                    continue;
                }
                const Point p = v[static_cast<std::size_t>(j)];
                if (orient(a, b, p) >= 0.0 && orient(b, c, p) >= 0.0 && orient(c, a, p) >= 0.0) {
                    ear = false;
                    break;
                }
            }
            if (ear) {
                tris.push_back({ip, ic, in, -1});
                idx.erase(idx.begin() + static_cast<std::ptrdiff_t>(k));
                clipped = true;
                break;
            }
        }
        if (!clipped) {
            throw InvalidArgument("build_mesh: ear clipping failed (degenerate polygon)");
        }
    }
    tris.push_back({idx[0], idx[1], idx[2], -1});
    return tris;
}

} // namespace

double point_segment_distance(Point p, Point a, Point b)
{
    const Point ab = b - a;
    const double len2 = dot(ab, ab);
    if (len2 == 0.0) {
        return distance(p, a);
    }
    const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
    return distance(p, a + t * ab);
}

bool segments_intersect(Point a, Point b, Point c, Point d)
{
    const double o1 = orient(a, b, c);
    const double o2 = orient(a, b, d);
    const double o3 = orient(c, d, a);
    const double o4 = orient(c, d, b);
    if (((o1 > 0 && o2 < 0) || (o1 < 0 && o2 > 0)) && ((o3 > 0 && o4 < 0) || (o3 < 0 && o4 > 0))) {
        return true;
    }
    return (o1 == 0 && on_segment(c, a, b)) || (o2 == 0 && on_segment(d, a, b)) ||
           (o3 == 0 && on_segment(a, c, d)) || (o4 == 0 && on_segment(b, c, d));
}

// ---------------------------------------------------------------------------
// PolygonalDomain

PolygonalDomain::PolygonalDomain(std::vector<Point> vertices) : vertices_(std::move(vertices))
{
    const std::size_t n = vertices_.size();
    if (n < 3) {
        throw InvalidArgument("PolygonalDomain: need at least 3 vertices");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (vertices_[i] == vertices_[(i + 1) % n]) {
            throw InvalidArgument("PolygonalDomain: repeated consecutive vertex " + std::to_string(i));
        }
    }
    double a = signed_area(vertices_);
    if (std::abs(a) < 1e-14) {
        throw InvalidArgument("PolygonalDomain: zero area");
    }
    if (a < 0) {
        std::reverse(vertices_.begin(), vertices_.end());
        a = -a;
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
            const auto [p, q] = edge(i);
            const auto [r, s] = edge(j);
            if (adjacent) {
                // Adjacent edges may only share their common vertex.
                const Point shared = (j == i + 1) ? q : p;
                const Point other_i = (j == i + 1) ? p : q;
                const Point other_j = (j == i + 1) ? s : r;
                if (orient(other_i, shared, other_j) == 0.0 && dot(other_i - shared, other_j - shared) > 0) {
                    throw InvalidArgument("PolygonalDomain: edges " + std::to_string(i) + " and " +
                                          std::to_string(j) + " fold back on each other");
                }
                continue;
            }
            if (segments_intersect(p, q, r, s)) {
                throw InvalidArgument("PolygonalDomain: self-intersection between edges " + std::to_string(i) +
                                      " and " + std::to_string(j));
            }
        }
    }
    area_ = a;
    bbox_ = {vertices_[0], vertices_[0]};
    double cx = 0.0;
    double cy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Point p = vertices_[i];
        const Point q = vertices_[(i + 1) % n];
        perimeter_ += distance(p, q);
        bbox_.lower = {std::min(bbox_.lower.x, p.x), std::min(bbox_.lower.y, p.y)};
        bbox_.upper = {std::max(bbox_.upper.x, p.x), std::max(bbox_.upper.y, p.y)};
        const double c = cross(p, q);
        cx += (p.x + q.x) * c;
        cy += (p.y + q.y) * c;
        for (std::size_t j = i + 1; j < n; ++j) {
            diameter_ = std::max(diameter_, distance(p, vertices_[j]));
        }
    }
    centroid_ = {cx / (6.0 * a), cy / (6.0 * a)};
}

PolygonalDomain PolygonalDomain::unit_square() { return rectangle({0.0, 0.0}, {1.0, 1.0}); }

PolygonalDomain PolygonalDomain::rectangle(Point lower, Point upper)
{
    return PolygonalDomain({lower, {upper.x, lower.y}, upper, {lower.x, upper.y}});
}

PolygonalDomain PolygonalDomain::l_shape()
{
    return PolygonalDomain({{0.0, 0.0}, {1.0, 0.0}, {1.0, 0.5}, {0.5, 0.5}, {0.5, 1.0}, {0.0, 1.0}});
}

std::array<Point, 2> PolygonalDomain::edge(std::size_t i) const
{
    return {vertices_[i], vertices_[(i + 1) % vertices_.size()]};
}

bool PolygonalDomain::contains(Point p) const
{
    bool inside = false;
    const std::size_t n = vertices_.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Point a = vertices_[i];
        const Point b = vertices_[j];
        if ((a.y > p.y) != (b.y > p.y)) {
            const double xcross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if (p.x < xcross) {
                inside = !inside;
            }
        }
    }
    return inside && distance_to_boundary(p) > 1e-14 * std::max(1.0, diameter_);
}

bool PolygonalDomain::is_rectilinear() const
{
    for (std::size_t i = 0; i < vertices_.size(); ++i) {
        const auto [p, q] = edge(i);
        if (p.x != q.x && p.y != q.y) {
            return false;
        }
    }
    return true;
}

double PolygonalDomain::distance_to_boundary(Point p) const
{
    double d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < vertices_.size(); ++i) {
        const auto [a, b] = edge(i);
        d = std::min(d, point_segment_distance(p, a, b));
    }
    return d;
}

double PolygonalDomain::distance_to_square(Point corner, double side) const
{
    double d = std::numeric_limits<double>::infinity();
    const std::array<Point, 4> sq{corner, {corner.x + side, corner.y}, {corner.x + side, corner.y + side},
                                  {corner.x, corner.y + side}};
    for (std::size_t i = 0; i < vertices_.size(); ++i) {
        const auto [a, b] = edge(i);
        if (segment_hits_square(a, b, corner, side)) {
            return 0.0;
        }
        d = std::min({d, point_square_distance(a, corner, side), point_square_distance(b, corner, side)});
        for (const Point c : sq) {
            d = std::min(d, point_segment_distance(c, a, b));
        }
    }
    return d;
}

bool PolygonalDomain::square_inside(Point corner, double side) const
{
    return distance_to_square(corner, side) > 0.0 && contains({corner.x + 0.5 * side, corner.y + 0.5 * side});
}

double distance_to_boundary(const PolygonalDomain& domain, Point x) { return domain.distance_to_boundary(x); }

// ---------------------------------------------------------------------------
// CellLocator

CellLocator::CellLocator(std::vector<std::vector<Point>> cells) : cells_(std::move(cells))
{
    if (cells_.empty()) {
        return;
    }
    box_ = {cells_[0][0], cells_[0][0]};
    for (const auto& c : cells_) {
        for (const Point p : c) {
            box_.lower = {std::min(box_.lower.x, p.x), std::min(box_.lower.y, p.y)};
            box_.upper = {std::max(box_.upper.x, p.x), std::max(box_.upper.y, p.y)};
        }
    }
    const int side = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(cells_.size()))));
    nx_ = side;
    ny_ = side;
    buckets_.assign(static_cast<std::size_t>(nx_ * ny_), {});
    const double bw = box_.width() / nx_;
    const double bh = box_.height() / ny_;
    for (std::size_t ci = 0; ci < cells_.size(); ++ci) {
        Point lo = cells_[ci][0];
        Point hi = lo;
        for (const Point p : cells_[ci]) {
            lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
            hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
        }
        const int i0 = std::clamp(static_cast<int>((lo.x - box_.lower.x) / bw), 0, nx_ - 1);
        const int i1 = std::clamp(static_cast<int>((hi.x - box_.lower.x) / bw), 0, nx_ - 1);
        const int j0 = std::clamp(static_cast<int>((lo.y - box_.lower.y) / bh), 0, ny_ - 1);
        const int j1 = std::clamp(static_cast<int>((hi.y - box_.lower.y) / bh), 0, ny_ - 1);
        for (int j = j0; j <= j1; ++j) {
            for (int i = i0; i <= i1; ++i) {
                buckets_[static_cast<std::size_t>(j * nx_ + i)].push_back(static_cast<int>(ci));
            }
        }
    }
}

int CellLocator::locate(Point p) const
{
    if (cells_.empty()) {
        return -1;
    }
    const double scale = std::max(box_.width(), box_.height());
    const double tol = 1e-12 * scale;
    if (p.x < box_.lower.x - tol || p.x > box_.upper.x + tol || p.y < box_.lower.y - tol ||
        p.y > box_.upper.y + tol) {
        return -1;
    }
    const int i = std::clamp(static_cast<int>((p.x - box_.lower.x) / (box_.width() / nx_)), 0, nx_ - 1);
    const int j = std::clamp(static_cast<int>((p.y - box_.lower.y) / (box_.height() / ny_)), 0, ny_ - 1);
    for (const int ci : buckets_[static_cast<std::size_t>(j * nx_ + i)]) {
        if (inside_convex(cells_[static_cast<std::size_t>(ci)], p, 1e-12)) {
            return ci;
        }
    }
    return -1;
}

// ---------------------------------------------------------------------------
// Mesh

Mesh::Mesh(CellShape shape, std::vector<Point> vertices, std::vector<std::array<int, 4>> cells,
           std::optional<Lattice> lattice)
    : shape_(shape), vertices_(std::move(vertices)), cells_(std::move(cells)), lattice_(std::move(lattice))
{
    const int nv = vertices_per_cell();
    std::map<std::pair<int, int>, std::pair<int, int>> edge_use;  // key -> (count, cell)
    std::map<std::pair<int, int>, std::pair<int, int>> edge_dir;  // key -> oriented (a, b)
    std::vector<std::vector<Point>> polys;
    polys.reserve(cells_.size());
    for (std::size_t c = 0; c < cells_.size(); ++c) {
        auto& cell = cells_[c];
        auto poly = cell_polygon(c);
        if (signed_area(poly) <= 0.0) {
            if (shape_ == CellShape::kRectangle) {
                throw InvalidArgument("Mesh: rectangle cells must be ordered ll, lr, ur, ul");
            }
            std::swap(cell[1], cell[2]);
            poly = cell_polygon(c);
        }
        for (int k = 0; k < nv; ++k) {
            for (int l = k + 1; l < nv; ++l) {
                h_ = std::max(h_, distance(poly[static_cast<std::size_t>(k)], poly[static_cast<std::size_t>(l)]));
            }
            const int a = cell[static_cast<std::size_t>(k)];
            const int b = cell[static_cast<std::size_t>((k + 1) % nv)];
            const auto key = std::minmax(a, b);
            auto& use = edge_use[key];
            ++use.first;
            edge_dir[key] = {a, b};
        }
        polys.push_back(std::move(poly));
    }
    boundary_node_.assign(vertices_.size(), false);
    for (const auto& [key, use] : edge_use) {
        if (use.first != 1) {
            continue;
        }
        const auto [a, b] = edge_dir[key];
        const Point pa = vertices_[static_cast<std::size_t>(a)];
        const Point pb = vertices_[static_cast<std::size_t>(b)];
        const double len = distance(pa, pb);
        boundary_edges_.push_back({a, b, {(pb.y - pa.y) / len, -(pb.x - pa.x) / len}, len});
        boundary_node_[static_cast<std::size_t>(a)] = true;
        boundary_node_[static_cast<std::size_t>(b)] = true;
    }
    locator_ = CellLocator(std::move(polys));
}

std::vector<Point> Mesh::cell_polygon(std::size_t c) const
{
    std::vector<Point> poly;
    const auto& cell = cells_[c];
    for (int k = 0; k < vertices_per_cell(); ++k) {
        poly.push_back(vertices_[static_cast<std::size_t>(cell[static_cast<std::size_t>(k)])]);
    }
    return poly;
}

Point Mesh::cell_centroid(std::size_t c) const
{
    Point s{};
    const auto poly = cell_polygon(c);
    for (const Point p : poly) {
        s = s + p;
    }
    return (1.0 / static_cast<double>(poly.size())) * s;
}

double Mesh::cell_area(std::size_t c) const { return signed_area(cell_polygon(c)); }

double Mesh::area() const
{
    std::vector<double> areas(cells_.size());
    for (std::size_t c = 0; c < cells_.size(); ++c) {
        areas[c] = cell_area(c);
    }
    return pairwise_sum(areas);
}

// ---------------------------------------------------------------------------
// Mesh generation

Mesh build_mesh(const PolygonalDomain& domain, double h_target)
{
    if (!(h_target > 0.0)) {
        throw InvalidArgument("build_mesh: h_target must be positive");
    }
    std::vector<Point> verts = domain.vertices();
    auto tris = ear_clip(verts);
    auto max_diam = [&] {
        double h = 0.0;
        for (const auto& t : tris) {
            for (int k = 0; k < 3; ++k) {
                h = std::max(h, distance(verts[static_cast<std::size_t>(t[static_cast<std::size_t>(k)])],
                                         verts[static_cast<std::size_t>(t[static_cast<std::size_t>((k + 1) % 3)])]));
            }
        }
        return h;
    };
    while (max_diam() > h_target) {
        std::map<std::pair<int, int>, int> mid;
        auto midpoint = [&](int a, int b) {
            const auto key = std::minmax(a, b);
            const auto it = mid.find(key);
            if (it != mid.end()) {
                return it->second;
            }
            const int id = static_cast<int>(verts.size());
            verts.push_back(0.5 * (verts[static_cast<std::size_t>(a)] + verts[static_cast<std::size_t>(b)]));
            mid.emplace(key, id);
            return id;
        };
        std::vector<std::array<int, 4>> next;
        next.reserve(tris.size() * 4);
        for (const auto& t : tris) {
            const int a = t[0];
            const int b = t[1];
            const int c = t[2];
            const int ab = midpoint(a, b);
            const int bc = midpoint(b, c);
            const int ca = midpoint(c, a);
            next.push_back({a, ab, ca, -1});
            next.push_back({ab, b, bc, -1});
            next.push_back({ca, bc, c, -1});
            next.push_back({ab, bc, ca, -1});
        }
        tris = std::move(next);
    }
    return Mesh(CellShape::kTriangle, std::move(verts), std::move(tris));
}

Mesh grid_mesh(const PolygonalDomain& domain, double spacing, CellShape shape, std::optional<Point> origin)
{
    if (!(spacing > 0.0)) {
        throw InvalidArgument("grid_mesh: spacing must be positive");
    }
    if (!domain.is_rectilinear()) {
        throw InvalidArgument("grid_mesh: domain must be rectilinear");
    }
    const BoundingBox box = domain.bounding_box();
    const Point o = origin.value_or(box.lower);
    for (const Point v : domain.vertices()) {
        const double fx = (v.x - o.x) / spacing;
        const double fy = (v.y - o.y) / spacing;
        if (std::abs(fx - std::round(fx)) > 1e-9 || std::abs(fy - std::round(fy)) > 1e-9) {
            throw InvalidArgument("grid_mesh: polygon vertex is not a lattice point");
        }
    }
    const auto i0 = static_cast<std::int64_t>(std::floor((box.lower.x - o.x) / spacing + 1e-9));
    const auto i1 = static_cast<std::int64_t>(std::ceil((box.upper.x - o.x) / spacing - 1e-9));
    const auto j0 = static_cast<std::int64_t>(std::floor((box.lower.y - o.y) / spacing + 1e-9));
    const auto j1 = static_cast<std::int64_t>(std::ceil((box.upper.y - o.y) / spacing - 1e-9));

    Lattice lattice{o, spacing, {}, {}};
    std::vector<Point> verts;
    std::map<std::pair<std::int64_t, std::int64_t>, int> node_id;
    auto node = [&](std::int64_t i, std::int64_t j) {
        const auto key = std::make_pair(i, j);
        const auto it = node_id.find(key);
        if (it != node_id.end()) {
            return it->second;
        }
        const int id = static_cast<int>(verts.size());
        verts.push_back({o.x + static_cast<double>(i) * spacing, o.y + static_cast<double>(j) * spacing});
        lattice.node_index.push_back({i, j});
        node_id.emplace(key, id);
        return id;
    };
    std::vector<std::array<int, 4>> cells;
    for (std::int64_t j = j0; j < j1; ++j) {
        for (std::int64_t i = i0; i < i1; ++i) {
            const Point center{o.x + (static_cast<double>(i) + 0.5) * spacing,
                               o.y + (static_cast<double>(j) + 0.5) * spacing};
            if (!domain.contains(center)) {
                continue;
            }
            const int ll = node(i, j);
            const int lr = node(i + 1, j);
            const int ur = node(i + 1, j + 1);
            const int ul = node(i, j + 1);
            if (shape == CellShape::kRectangle) {
                cells.push_back({ll, lr, ur, ul});
                lattice.cell_index.push_back({i, j, 0});
            } else {
                cells.push_back({ll, lr, ur, -1});
                lattice.cell_index.push_back({i, j, 0});
                cells.push_back({ll, ur, ul, -1});
                lattice.cell_index.push_back({i, j, 1});
            }
        }
    }
    if (cells.empty()) {
        throw InvalidArgument("grid_mesh: spacing too coarse for the domain");
    }
    return Mesh(shape, std::move(verts), std::move(cells), std::move(lattice));
}

BoundaryQuadrature boundary_quadrature(const Mesh& mesh, int order)
{
    if (order < 1 || order > 10) {
        throw InvalidArgument("boundary_quadrature: order must lie in [1, 10]");
    }
    const Rule1D rule = gauss_legendre(order);
    BoundaryQuadrature q;
    const auto& edges = mesh.boundary_edges();
    for (std::size_t e = 0; e < edges.size(); ++e) {
        const Point a = mesh.vertices()[static_cast<std::size_t>(edges[e].a)];
        const Point b = mesh.vertices()[static_cast<std::size_t>(edges[e].b)];
        for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
            q.points.push_back(a + rule.nodes[k] * (b - a));
            q.weights.push_back(rule.weights[k] * edges[e].length);
            q.normals.push_back(edges[e].normal);
            q.edge.push_back(static_cast<int>(e));
        }
    }
    return q;
}

} // namespace ellab
