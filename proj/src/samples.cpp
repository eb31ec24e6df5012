#include "ellab/samples.hpp"

#include <algorithm>
#include <limits>

#include "ellab/quadrature.hpp"

namespace ellab {

namespace {

void split_triangle(const std::array<Point, 3>& t, int levels, std::vector<std::array<Point, 3>>& out)
{
    if (levels == 0) {
        out.push_back(t);
        return;
    }
    const Point m01 = 0.5 * (t[0] + t[1]);
    const Point m12 = 0.5 * (t[1] + t[2]);
    const Point m20 = 0.5 * (t[2] + t[0]);
    split_triangle({t[0], m01, m20}, levels - 1, out);
    split_triangle({m01, t[1], m12}, levels - 1, out);
    split_triangle({m20, m12, t[2]}, levels - 1, out);
    split_triangle({m12, m20, m01}, levels - 1, out);
}

double polygon_diameter(const std::vector<Point>& poly)
{
    double d = 0.0;
    for (std::size_t a = 0; a < poly.size(); ++a) {
        for (std::size_t b = a + 1; b < poly.size(); ++b) {
            d = std::max(d, distance(poly[a], poly[b]));
        }
    }
    return d;
}

} // namespace

std::shared_ptr<const SampleSet> SampleSet::for_mesh(const Mesh& mesh, int refinement, int gauss)
{
    if (refinement < 0 || refinement > 8) {
        throw InvalidArgument("SampleSet: refinement must lie in [0, 8]");
    }
    if (gauss < 1) {
        throw InvalidArgument("SampleSet: gauss must be >= 1");
    }
    auto set = std::shared_ptr<SampleSet>(new SampleSet());
    const TriangleRule tri = triangle_rule_degree2();
    const Rule1D g = gauss_legendre(gauss);
    set->min_subcell_area_ = std::numeric_limits<double>::infinity();

    for (std::size_t c = 0; c < mesh.cell_count(); ++c) {
        const std::vector<Point> poly = mesh.cell_polygon(c);
        set->centroids_.push_back(mesh.cell_centroid(c));
        std::vector<std::vector<Point>> subs;
        if (mesh.shape() == CellShape::kTriangle) {
            std::vector<std::array<Point, 3>> tris;
            split_triangle({poly[0], poly[1], poly[2]}, refinement, tris);
            for (const auto& t : tris) {
                subs.push_back({t[0], t[1], t[2]});
            }
        } else {
            const int n = 1 << refinement;
            const Point lo = poly[0];
            const double hx = (poly[2].x - poly[0].x) / n;
            const double hy = (poly[2].y - poly[0].y) / n;
            for (int j = 0; j < n; ++j) {
                for (int i = 0; i < n; ++i) {
                    const Point a{lo.x + i * hx, lo.y + j * hy};
                    subs.push_back({a, {a.x + hx, a.y}, {a.x + hx, a.y + hy}, {a.x, a.y + hy}});
                }
            }
        }
        for (auto& s : subs) {
            if (s.size() == 3) {
                const double area = 0.5 * std::abs(cross(s[1] - s[0], s[2] - s[0]));
                for (std::size_t q = 0; q < tri.weights.size(); ++q) {
                    const auto& b = tri.bary[q];
                    set->points_.push_back(b[0] * s[0] + b[1] * s[1] + b[2] * s[2]);
                    set->weights_.push_back(tri.weights[q] * area);
                    set->parent_.push_back(static_cast<int>(c));
                }
                set->min_subcell_area_ = std::min(set->min_subcell_area_, area);
            } else {
                const double hx = s[2].x - s[0].x;
                const double hy = s[2].y - s[0].y;
                for (int qj = 0; qj < gauss; ++qj) {
                    for (int qi = 0; qi < gauss; ++qi) {
                        set->points_.push_back({s[0].x + g.nodes[qi] * hx, s[0].y + g.nodes[qj] * hy});
                        set->weights_.push_back(g.weights[qi] * g.weights[qj] * hx * hy);
                        set->parent_.push_back(static_cast<int>(c));
                    }
                }
                set->min_subcell_area_ = std::min(set->min_subcell_area_, hx * hy);
            }
            set->max_subcell_diam_ = std::max(set->max_subcell_diam_, polygon_diameter(s));
            set->subcell_offsets_.push_back(set->points_.size());
            set->subcells_.push_back(std::move(s));
        }
        set->cell_offsets_.push_back(set->points_.size());
    }
    set->finalize();
    return set;
}

std::shared_ptr<const SampleSet> SampleSet::uniform_grid(const PolygonalDomain& domain, double spacing, int gauss)
{
    if (!domain.is_rectilinear()) {
        throw InvalidArgument("SampleSet::uniform_grid: domain must be rectilinear");
    }
    return for_mesh(grid_mesh(domain, spacing, CellShape::kRectangle), 0, gauss);
}

void SampleSet::finalize()
{
    locator_ = CellLocator(subcells_);
}

int SampleSet::nearest_sample(Point p) const
{
    const int s = locator_.locate(p);
    if (s < 0) {
        return -1;
    }
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = subcell_offsets_[static_cast<std::size_t>(s)];
         i < subcell_offsets_[static_cast<std::size_t>(s) + 1]; ++i) {
        const double d = distance(points_[i], p);
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(i);
        }
    }
    return best;
}

double SampleSet::total_weight() const { return pairwise_sum(weights_); }

GradientArray::GradientArray(std::shared_ptr<const SampleSet> samples, int width)
    : samples_(std::move(samples)), width_(width)
{
    if (!samples_) {
        throw InvalidArgument("GradientArray: null sample set");
    }
    if (width_ < 1) {
        throw InvalidArgument("GradientArray: width must be >= 1");
    }
    values_.assign(samples_->size() * static_cast<std::size_t>(width_), cplx(0.0));
}

GradientArray GradientArray::from_function(std::shared_ptr<const SampleSet> samples, int width, const Fill& fill)
{
    GradientArray g(std::move(samples), width);
    const auto& pts = g.samples_->points();
    parallel_for(pts.size(), [&](std::size_t i) { fill(pts[i], g.at(i)); });
    return g;
}

std::span<const cplx> GradientArray::evaluate(Point p) const
{
    const int i = samples_->nearest_sample(p);
    if (i < 0) {
        return {};
    }
    return at(static_cast<std::size_t>(i));
}

std::vector<double> GradientArray::pointwise_norm2() const
{
    std::vector<double> out(size());
    for (std::size_t i = 0; i < size(); ++i) {
        double s = 0.0;
        for (const cplx& v : at(i)) {
            s += std::norm(v);
        }
        out[i] = s;
    }
    return out;
}

double GradientArray::l2_norm() const
{
    std::vector<double> terms = pointwise_norm2();
    for (std::size_t i = 0; i < terms.size(); ++i) {
        terms[i] *= samples_->weight(i);
    }
    return std::sqrt(pairwise_sum(terms));
}

bool GradientArray::compatible(const GradientArray& other) const
{
    return samples_ == other.samples_ && width_ == other.width_;
}

GradientArray& GradientArray::operator+=(const GradientArray& other)
{
    if (!compatible(other)) {
        throw InvalidArgument("GradientArray: incompatible operands");
    }
    for (std::size_t i = 0; i < values_.size(); ++i) {
        values_[i] += other.values_[i];
    }
    return *this;
}

GradientArray& GradientArray::operator-=(const GradientArray& other)
{
    if (!compatible(other)) {
        throw InvalidArgument("GradientArray: incompatible operands");
    }
    for (std::size_t i = 0; i < values_.size(); ++i) {
        values_[i] -= other.values_[i];
    }
    return *this;
}

GradientArray& GradientArray::operator*=(cplx s)
{
    for (auto& v : values_) {
        v *= s;
    }
    return *this;
}

} // namespace ellab
