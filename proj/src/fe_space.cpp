#include "ellab/fe_space.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace ellab {

namespace {

// Cubic Hermite functions on [0, 1]: value at 0, slope at 0, value at 1,
// slope at 1. Slope functions are returned unscaled (multiply by h).
struct Hermite {
    double f[4];
    double d[4];
    double dd[4];
};

Hermite hermite(double t)
{
    const double t2 = t * t;
    const double t3 = t2 * t;
    return {{1.0 - 3.0 * t2 + 2.0 * t3, t - 2.0 * t2 + t3, 3.0 * t2 - 2.0 * t3, -t2 + t3},
            {-6.0 * t + 6.0 * t2, 1.0 - 4.0 * t + 3.0 * t2, 6.0 * t - 6.0 * t2, -2.0 * t + 3.0 * t2},
            {-6.0 + 12.0 * t, -4.0 + 6.0 * t, 6.0 - 12.0 * t, -2.0 + 6.0 * t}};
}

constexpr int kCornerX[4] = {0, 1, 1, 0};  // ll, lr, ur, ul
constexpr int kCornerY[4] = {0, 0, 1, 1};

} // namespace

FESpace::FESpace(std::shared_ptr<const Mesh> mesh, int m, int n_components, int refinement)
    : mesh_(std::move(mesh)), m_(m), n_(n_components), refinement_(refinement)
{
    if (!mesh_) {
        throw InvalidArgument("FESpace: null mesh");
    }
    if (n_ < 1) {
        throw InvalidArgument("FESpace: N must be >= 1");
    }
    if (m_ == 1) {
        if (mesh_->shape() != CellShape::kTriangle) {
            throw InvalidArgument("FESpace: m = 1 needs a triangle mesh");
        }
        family_ = ElementFamily::kP1;
    } else if (m_ == 2) {
        if (mesh_->shape() != CellShape::kRectangle) {
            throw InvalidArgument("FESpace: m = 2 needs a rectangle mesh");
        }
        family_ = ElementFamily::kBFS;
    } else {
        throw InvalidArgument("FESpace: m must be 1 or 2");
    }
    ndofs_ = mesh_->vertices().size() * static_cast<std::size_t>(dofs_per_node()) * static_cast<std::size_t>(n_);

    if (family_ == ElementFamily::kP1) {
        bary_grad_.resize(mesh_->cell_count());
        for (std::size_t c = 0; c < mesh_->cell_count(); ++c) {
            const auto poly = mesh_->cell_polygon(c);
            const double det = cross(poly[1] - poly[0], poly[2] - poly[0]);
            for (int k = 0; k < 3; ++k) {
                const Point a = poly[static_cast<std::size_t>((k + 1) % 3)];
                const Point b = poly[static_cast<std::size_t>((k + 2) % 3)];
                // grad of barycentric coordinate k: rot90(b - a) / det
                bary_grad_[c][static_cast<std::size_t>(k)] = {(a.y - b.y) / det, (b.x - a.x) / det};
            }
        }
        samples_ = SampleSet::for_mesh(*mesh_, refinement_, 2);
    } else {
        samples_ = SampleSet::for_mesh(*mesh_, refinement_, 4);
    }
    build_dof_sets();
    build_kernel();
}

void FESpace::build_dof_sets()
{
    boundary_flag_.assign(ndofs_, false);
    const int nv = static_cast<int>(mesh_->vertices().size());
    for (int v = 0; v < nv; ++v) {
        if (!mesh_->is_boundary_node(v)) {
            continue;
        }
        for (int t = 0; t < dofs_per_node(); ++t) {
            for (int c = 0; c < n_; ++c) {
                boundary_flag_[static_cast<std::size_t>(dof(v, t, c))] = true;
            }
        }
    }
    for (std::size_t i = 0; i < ndofs_; ++i) {
        (boundary_flag_[i] ? boundary_dofs_ : interior_dofs_).push_back(static_cast<int>(i));
    }
    for (int c = 0; c < n_; ++c) {
        pinned_.push_back(dof(0, 0, c));
        if (m_ == 2) {
            pinned_.push_back(dof(0, 1, c));
            pinned_.push_back(dof(0, 2, c));
        }
    }
    std::sort(pinned_.begin(), pinned_.end());
}

void FESpace::build_kernel()
{
    const int kd = kernel_dim_per_component();
    const auto& verts = mesh_->vertices();
    kernel_ = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(ndofs_), kd * n_);
    for (int c = 0; c < n_; ++c) {
        for (std::size_t v = 0; v < verts.size(); ++v) {
            const int node = static_cast<int>(v);
            kernel_(dof(node, 0, c), c * kd) = 1.0;
            if (m_ == 2) {
                kernel_(dof(node, 0, c), c * kd + 1) = verts[v].x;
                kernel_(dof(node, 1, c), c * kd + 1) = 1.0;
                kernel_(dof(node, 0, c), c * kd + 2) = verts[v].y;
                kernel_(dof(node, 2, c), c * kd + 2) = 1.0;
            }
        }
    }
    // Moments: integral of u, and for m = 2 also of u_x and u_y.
    moments_ = Eigen::MatrixXcd::Zero(kd * n_, static_cast<Eigen::Index>(ndofs_));
    LocalBasis lb;
    for (std::size_t i = 0; i < samples_->size(); ++i) {
        const auto cell = static_cast<std::size_t>(samples_->parent_cell(i));
        eval(cell, samples_->point(i), lb);
        const double w = samples_->weight(i);
        for (int l = 0; l < lb.count; ++l) {
            for (int c = 0; c < n_; ++c) {
                const int g = lb.scalar_dof[static_cast<std::size_t>(l)] * n_ + c;
                moments_(c * kd, g) += w * lb.value[static_cast<std::size_t>(l)];
                if (m_ == 2) {
                    moments_(c * kd + 1, g) += w * lb.d1[static_cast<std::size_t>(l)][0];
                    moments_(c * kd + 2, g) += w * lb.d1[static_cast<std::size_t>(l)][1];
                }
            }
        }
    }
}

void FESpace::eval(std::size_t cell, Point p, LocalBasis& out) const
{
    const auto& nodes = mesh_->cells()[cell];
    if (family_ == ElementFamily::kP1) {
        const auto poly = mesh_->cell_polygon(cell);
        const auto& g = bary_grad_[cell];
        out.count = 3;
        for (std::size_t k = 0; k < 3; ++k) {
            out.scalar_dof[k] = nodes[k];
            out.value[k] = 1.0 + g[k][0] * (p.x - poly[k].x) + g[k][1] * (p.y - poly[k].y);
            out.d1[k] = g[k];
            out.grad[k] = {g[k][0], g[k][1], 0.0};
        }
        return;
    }
    const Point lo = mesh_->vertices()[static_cast<std::size_t>(nodes[0])];
    const Point hi = mesh_->vertices()[static_cast<std::size_t>(nodes[2])];
    const double hx = hi.x - lo.x;
    const double hy = hi.y - lo.y;
    const Hermite ex = hermite((p.x - lo.x) / hx);
    const Hermite ey = hermite((p.y - lo.y) / hy);
    out.count = 16;
    for (int a = 0; a < 4; ++a) {
        // Index into Hermite arrays: value function 0 or 2, slope 1 or 3.
        const int vx = 2 * kCornerX[a];
        const int vy = 2 * kCornerY[a];
        for (int t = 0; t < 4; ++t) {
            const bool slope_x = (t == 1 || t == 3);
            const bool slope_y = (t == 2 || t == 3);
            const int ix = vx + (slope_x ? 1 : 0);
            const int iy = vy + (slope_y ? 1 : 0);
            const double sx = slope_x ? hx : 1.0;
            const double sy = slope_y ? hy : 1.0;
            const auto l = static_cast<std::size_t>(4 * a + t);
            out.scalar_dof[l] = nodes[static_cast<std::size_t>(a)] * 4 + t;
            out.value[l] = sx * sy * ex.f[ix] * ey.f[iy];
            out.d1[l] = {sx * sy * ex.d[ix] * ey.f[iy] / hx, sx * sy * ex.f[ix] * ey.d[iy] / hy};
            out.grad[l] = {sx * sy * ex.dd[ix] * ey.f[iy] / (hx * hx),
                           std::numbers::sqrt2 * sx * sy * ex.d[ix] * ey.d[iy] / (hx * hy),
                           sx * sy * ex.f[ix] * ey.dd[iy] / (hy * hy)};
        }
    }
}

GradientArray FESpace::gradient(const Vector& u) const
{
    if (static_cast<std::size_t>(u.size()) != ndofs_) {
        throw InvalidArgument("FESpace::gradient: dof vector has wrong length");
    }
    GradientArray g(samples_, width());
    const int sl = slots();
    parallel_for(mesh_->cell_count(), [&](std::size_t c) {
        LocalBasis lb;
        for (std::size_t i = samples_->cell_begin(c); i < samples_->cell_begin(c + 1); ++i) {
            eval(c, samples_->point(i), lb);
            auto out = g.at(i);
            for (int l = 0; l < lb.count; ++l) {
                const auto L = static_cast<std::size_t>(l);
                for (int comp = 0; comp < n_; ++comp) {
                    const cplx coef = u[lb.scalar_dof[L] * n_ + comp];
                    for (int a = 0; a < sl; ++a) {
                        out[static_cast<std::size_t>(comp * sl + a)] += coef * lb.grad[L][static_cast<std::size_t>(a)];
                    }
                }
            }
        }
    });
    return g;
}

cplx FESpace::value(const Vector& u, Point p, int component) const
{
    const int c = mesh_->locate(p);
    if (c < 0) {
        return {std::numeric_limits<double>::quiet_NaN(), 0.0};
    }
    LocalBasis lb;
    eval(static_cast<std::size_t>(c), p, lb);
    cplx s = 0.0;
    for (int l = 0; l < lb.count; ++l) {
        s += u[lb.scalar_dof[static_cast<std::size_t>(l)] * n_ + component] * lb.value[static_cast<std::size_t>(l)];
    }
    return s;
}

std::array<cplx, 2> FESpace::first_gradient(const Vector& u, Point p, int component) const
{
    const int c = mesh_->locate(p);
    if (c < 0) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        return {cplx(nan), cplx(nan)};
    }
    LocalBasis lb;
    eval(static_cast<std::size_t>(c), p, lb);
    std::array<cplx, 2> g{};
    for (int l = 0; l < lb.count; ++l) {
        const auto L = static_cast<std::size_t>(l);
        const cplx coef = u[lb.scalar_dof[L] * n_ + component];
        g[0] += coef * lb.d1[L][0];
        g[1] += coef * lb.d1[L][1];
    }
    return g;
}

Vector FESpace::interpolate(const JetFunction& f) const
{
    Vector u = Vector::Zero(static_cast<Eigen::Index>(ndofs_));
    const auto& verts = mesh_->vertices();
    for (std::size_t v = 0; v < verts.size(); ++v) {
        const int node = static_cast<int>(v);
        for (int c = 0; c < n_; ++c) {
            const Jet j = f(verts[v], c);
            u[dof(node, 0, c)] = j.v;
            if (family_ == ElementFamily::kBFS) {
                u[dof(node, 1, c)] = j.dx;
                u[dof(node, 2, c)] = j.dy;
                u[dof(node, 3, c)] = j.dxy;
            }
        }
    }
    return u;
}

std::shared_ptr<const FESpace> make_space(const Mesh& mesh, int m, int n_components, int refinement)
{
    return std::make_shared<const FESpace>(std::make_shared<const Mesh>(mesh), m, n_components, refinement);
}

} // namespace ellab
