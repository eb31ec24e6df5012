#pragma once

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <unordered_map>
#include <vector>

#include "ellab/geometry.hpp"

namespace ellab {

/// Comparability constants c1 * l(Q) <= dist(Q, boundary) <= c2 * l(Q).
struct WhitneyConstants {
    double c1 = 1.0;
    double c2 = 4.0 * std::sqrt(static_cast<double>(kDim));
};

struct WhitneyCube {
    Point corner;
    double side = 0.0;
    int level = 0;
    std::int64_t i = 0;
    std::int64_t j = 0;
    double dist = 0.0;  // dist(Q, boundary)

    Point center() const { return {corner.x + 0.5 * side, corner.y + 0.5 * side}; }
    double volume() const { return std::pow(side, kDim); }
};

/// Dyadic Whitney cubes inside a domain. Level 0 is the bounding square of
/// the domain; a cube at level k has side 2^-k times the root side. Cubes
/// are listed in depth-first order, which is independent of max_depth, so a
/// deeper grid extends a shallower one without touching existing cubes.
class WhitneyGrid {
public:
    WhitneyGrid(Point root_corner, double root_side, int depth, WhitneyConstants constants,
                std::vector<WhitneyCube> cubes, double domain_area);

    const std::vector<WhitneyCube>& cubes() const { return cubes_; }
    std::size_t size() const { return cubes_.size(); }
    const WhitneyCube& operator[](std::size_t i) const { return cubes_[i]; }
    int depth() const { return depth_; }
    const WhitneyConstants& constants() const { return constants_; }
    Point root_corner() const { return root_corner_; }
    double root_side() const { return root_side_; }
    /// (area - sum of cube areas) / area.
    double tail_fraction() const { return tail_fraction_; }
    double covered_area() const { return covered_area_; }
    double min_side() const;

    /// Index of the cube containing p (half-open cubes), or -1 when p lies
    /// in the uncovered tail or outside the domain.
    int locate(Point p) const;

    /// CSV with header corner_x,corner_y,side.
    void write_csv(std::ostream& out) const;

private:
    static std::uint64_t key(int level, std::int64_t i, std::int64_t j);

    Point root_corner_;
    double root_side_;
    int depth_;
    WhitneyConstants constants_;
    std::vector<WhitneyCube> cubes_;
    double tail_fraction_ = 0.0;
    double covered_area_ = 0.0;
    std::unordered_map<std::uint64_t, int> index_;
};

/// Standard dyadic scheme: subdivide the bounding square, accept a cube Q
/// when Q lies inside the domain and c1*l(Q) <= dist(Q, boundary) <= c2*l(Q),
/// subdivide when it is too close to the boundary, stop at max_depth. The
/// remaining sliver along the boundary is reported as the tail.
WhitneyGrid whitney_decompose(const PolygonalDomain& domain, int max_depth, WhitneyConstants constants = {});

} // namespace ellab
