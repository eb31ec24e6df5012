#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "ellab/common.hpp"
#include "ellab/geometry.hpp"

namespace ellab {

/// Weighted quadrature points on a domain, grouped by mesh cell and then by
/// sub-cell. Composite refinement splits every cell into 4^r congruent
/// sub-cells (midpoint subdivision for triangles, 2^r x 2^r for rectangles)
/// so that dyadic sub-squares of a lattice mesh are unions of sub-cells.
class SampleSet {
public:
    /// Degree-2 rule per sub-triangle or gauss x gauss Gauss rule per
    /// sub-rectangle.
    static std::shared_ptr<const SampleSet> for_mesh(const Mesh& mesh, int refinement, int gauss = 2);
    /// Lattice cells of side `spacing` inside a rectilinear domain.
    static std::shared_ptr<const SampleSet> uniform_grid(const PolygonalDomain& domain, double spacing,
                                                         int gauss = 2);

    std::size_t size() const { return points_.size(); }
    Point point(std::size_t i) const { return points_[i]; }
    double weight(std::size_t i) const { return weights_[i]; }
    const std::vector<Point>& points() const { return points_; }
    const std::vector<double>& weights() const { return weights_; }

    std::size_t cell_count() const { return cell_offsets_.size() - 1; }
    /// Samples of parent cell c occupy [cell_begin(c), cell_begin(c + 1)).
    std::size_t cell_begin(std::size_t c) const { return cell_offsets_[c]; }
    int parent_cell(std::size_t i) const { return parent_[i]; }
    Point cell_centroid(std::size_t c) const { return centroids_[c]; }

    /// Sample nearest to p inside the sub-cell containing p, or -1 when p is
    /// not covered.
    int nearest_sample(Point p) const;
    double max_subcell_diameter() const { return max_subcell_diam_; }
    double min_subcell_area() const { return min_subcell_area_; }
    double total_weight() const;

private:
    SampleSet() = default;
    void finalize();

    std::vector<Point> points_;
    std::vector<double> weights_;
    std::vector<int> parent_;
    std::vector<std::size_t> cell_offsets_{0};
    std::vector<Point> centroids_;
    std::vector<std::vector<Point>> subcells_;
    std::vector<std::size_t> subcell_offsets_{0};
    CellLocator locator_;
    double max_subcell_diam_ = 0.0;
    double min_subcell_area_ = 0.0;
};

/// Field of complex arrays of fixed width sampled on a SampleSet, e.g. the
/// weighted m-th gradient of a finite element function, data arrays H, or
/// A applied to either. Entry (i, slot) lives at values()[i * width + slot].
class GradientArray {
public:
    GradientArray(std::shared_ptr<const SampleSet> samples, int width);

    using Fill = std::function<void(Point, std::span<cplx>)>;
    static GradientArray from_function(std::shared_ptr<const SampleSet> samples, int width, const Fill& fill);

    const std::shared_ptr<const SampleSet>& samples() const { return samples_; }
    int width() const { return width_; }
    std::size_t size() const { return samples_->size(); }

    std::span<cplx> at(std::size_t i) { return {values_.data() + i * static_cast<std::size_t>(width_), static_cast<std::size_t>(width_)}; }
    std::span<const cplx> at(std::size_t i) const
    {
        return {values_.data() + i * static_cast<std::size_t>(width_), static_cast<std::size_t>(width_)};
    }
    std::vector<cplx>& values() { return values_; }
    const std::vector<cplx>& values() const { return values_; }

    /// Piecewise evaluation: values at the nearest sample of the covering
    /// sub-cell; an empty span outside the sampled region.
    std::span<const cplx> evaluate(Point p) const;

    /// sqrt(sum_i w_i |H_i|^2).
    double l2_norm() const;
    /// |H_i|^2 per sample.
    std::vector<double> pointwise_norm2() const;

    bool compatible(const GradientArray& other) const;

    GradientArray& operator+=(const GradientArray& other);
    GradientArray& operator-=(const GradientArray& other);
    GradientArray& operator*=(cplx s);
    friend GradientArray operator+(GradientArray a, const GradientArray& b) { return a += b; }
    friend GradientArray operator-(GradientArray a, const GradientArray& b) { return a -= b; }
    friend GradientArray operator*(cplx s, GradientArray a) { return a *= s; }

private:
    std::shared_ptr<const SampleSet> samples_;
    int width_ = 1;
    std::vector<cplx> values_;
};

} // namespace ellab
