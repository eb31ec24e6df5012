#include "ellab/whitney.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace ellab {

WhitneyGrid::WhitneyGrid(Point root_corner, double root_side, int depth, WhitneyConstants constants,
                         std::vector<WhitneyCube> cubes, double domain_area)
    : root_corner_(root_corner), root_side_(root_side), depth_(depth), constants_(constants),
      cubes_(std::move(cubes))
{
    std::vector<double> vols(cubes_.size());
    for (std::size_t q = 0; q < cubes_.size(); ++q) {
        vols[q] = cubes_[q].volume();
        index_.emplace(key(cubes_[q].level, cubes_[q].i, cubes_[q].j), static_cast<int>(q));
    }
    covered_area_ = pairwise_sum(vols);
    tail_fraction_ = (domain_area - covered_area_) / domain_area;
}

std::uint64_t WhitneyGrid::key(int level, std::int64_t i, std::int64_t j)
{
    // 6 bits of level, 29 bits per coordinate: enough for depth <= 29.
    return (static_cast<std::uint64_t>(level) << 58) | (static_cast<std::uint64_t>(i) << 29) |
           static_cast<std::uint64_t>(j);
}

double WhitneyGrid::min_side() const
{
    double s = std::numeric_limits<double>::infinity();
    for (const auto& q : cubes_) {
        s = std::min(s, q.side);
    }
    return s;
}

int WhitneyGrid::locate(Point p) const
{
    const double fx = (p.x - root_corner_.x) / root_side_;
    const double fy = (p.y - root_corner_.y) / root_side_;
    if (fx < 0.0 || fx >= 1.0 || fy < 0.0 || fy >= 1.0) {
        return -1;
    }
    for (int level = 1; level <= depth_; ++level) {
        const double n = std::ldexp(1.0, level);
        const auto i = static_cast<std::int64_t>(std::floor(fx * n));
        const auto j = static_cast<std::int64_t>(std::floor(fy * n));
        const auto it = index_.find(key(level, i, j));
        if (it != index_.end()) {
            return it->second;
        }
    }
    return -1;
}

void WhitneyGrid::write_csv(std::ostream& out) const
{
    out << "corner_x,corner_y,side\n";
    out.precision(17);
    for (const auto& q : cubes_) {
        out << q.corner.x << ',' << q.corner.y << ',' << q.side << '\n';
    }
}

namespace {

struct Builder {
    const PolygonalDomain& domain;
    int max_depth;
    WhitneyConstants c;
    Point root;
    double root_side;
    std::vector<WhitneyCube> cubes;

    void visit(int level, std::int64_t i, std::int64_t j)
    {
        const double side = root_side * std::ldexp(1.0, -level);
        const Point corner{root.x + static_cast<double>(i) * side, root.y + static_cast<double>(j) * side};
        const double dist = domain.distance_to_square(corner, side);
        const bool inside = dist > 0.0 && domain.contains({corner.x + 0.5 * side, corner.y + 0.5 * side});
        if (dist > 0.0 && !inside) {
            return;  // entirely outside
        }
        if (level > 0 && inside && dist >= c.c1 * side && dist <= c.c2 * side) {
            cubes.push_back({corner, side, level, i, j, dist});
            return;
        }
        if (level >= max_depth) {
            return;
        }
        for (int dj = 0; dj < 2; ++dj) {
            for (int di = 0; di < 2; ++di) {
                visit(level + 1, 2 * i + di, 2 * j + dj);
            }
        }
    }
};

} // namespace

WhitneyGrid whitney_decompose(const PolygonalDomain& domain, int max_depth, WhitneyConstants constants)
{
    if (max_depth < 1 || max_depth > 29) {
        throw InvalidArgument("whitney_decompose: max_depth must lie in [1, 29]");
    }
    const BoundingBox box = domain.bounding_box();
    const double side = std::max(box.width(), box.height());
    Builder b{domain, max_depth, constants, box.lower, side, {}};
    b.visit(0, 0, 0);
    return WhitneyGrid(box.lower, side, max_depth, constants, std::move(b.cubes), domain.area());
}

} // namespace ellab
