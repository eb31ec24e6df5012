#pragma once

#include <array>
#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "ellab/common.hpp"
#include "ellab/geometry.hpp"
#include "ellab/samples.hpp"

namespace ellab {

using Vector = Eigen::VectorXcd;

enum class ElementFamily {
    kP1,   // continuous piecewise-linear triangles (m = 1)
    kBFS,  // Bogner-Fox-Schmit C1 bicubic rectangles (m = 2)
};

/// Value and low-order derivatives of a scalar function at a point, as
/// needed to interpolate into either element family.
struct Jet {
    cplx v{0.0};
    cplx dx{0.0};
    cplx dy{0.0};
    cplx dxy{0.0};
};

/// Local basis functions of one cell evaluated at one point. Arrays are
/// indexed by local basis function l < count.
struct LocalBasis {
    static constexpr int kMaxLocal = 16;
    int count = 0;
    std::array<int, kMaxLocal> scalar_dof{};
    std::array<double, kMaxLocal> value{};
    std::array<std::array<double, 2>, kMaxLocal> d1{};
    /// Weighted m-th gradient (first gradient for m = 1, weighted Hessian
    /// (u_xx, sqrt2 u_xy, u_yy) for m = 2).
    std::array<std::array<double, 3>, kMaxLocal> grad{};
};

/// Conforming finite element space of order m for N-component functions.
/// Scalar dof s = node * dofs_per_node + type; the global dof of component c
/// is s * N + c. For BFS the node dof types are u, u_x, u_y, u_xy.
class FESpace {
public:
    /// m = 1 requires a triangle mesh, m = 2 a rectangle mesh. Sample
    /// quadrature uses `refinement` levels of composite subdivision; the
    /// per-sub-cell rule is exact for products of m-th gradients when A is
    /// constant.
    FESpace(std::shared_ptr<const Mesh> mesh, int m, int n_components, int refinement = 0);

    const Mesh& mesh() const { return *mesh_; }
    const std::shared_ptr<const Mesh>& mesh_ptr() const { return mesh_; }
    int m() const { return m_; }
    int n_components() const { return n_; }
    ElementFamily family() const { return family_; }
    int slots() const { return m_ + 1; }
    int width() const { return n_ * slots(); }
    int dofs_per_node() const { return family_ == ElementFamily::kP1 ? 1 : 4; }
    int refinement() const { return refinement_; }

    std::size_t ndofs() const { return ndofs_; }
    int dof(int node, int type, int component) const { return (node * dofs_per_node() + type) * n_ + component; }
    /// All dofs of boundary nodes (the discrete trace of order m - 1).
    const std::vector<int>& boundary_dofs() const { return boundary_dofs_; }
    const std::vector<int>& interior_dofs() const { return interior_dofs_; }
    bool is_boundary_dof(int i) const { return boundary_flag_[static_cast<std::size_t>(i)]; }

    const std::shared_ptr<const SampleSet>& samples() const { return samples_; }

    /// Basis of cell c evaluated at p (p should lie in the closed cell).
    void eval(std::size_t cell, Point p, LocalBasis& out) const;

    /// Weighted m-th gradient of u at every sample.
    GradientArray gradient(const Vector& u) const;
    /// Value of component c of u at p, or NaN outside the mesh.
    cplx value(const Vector& u, Point p, int component = 0) const;
    /// First gradient of component c of u at p.
    std::array<cplx, 2> first_gradient(const Vector& u, Point p, int component = 0) const;

    using JetFunction = std::function<Jet(Point, int component)>;
    Vector interpolate(const JetFunction& f) const;

    /// Number of polynomials of degree <= m - 1 per component.
    int kernel_dim_per_component() const { return m_ == 1 ? 1 : 3; }
    /// Columns span the polynomials of degree <= m - 1 (exactly represented).
    const Eigen::MatrixXcd& kernel_basis() const { return kernel_; }
    /// Rows: integrals of d^gamma u_c over the domain for |gamma| <= m - 1.
    const Eigen::MatrixXcd& moment_matrix() const { return moments_; }
    /// Dofs fixed to zero to remove the kernel in Neumann solves.
    const std::vector<int>& pinned_dofs() const { return pinned_; }

private:
    void build_dof_sets();
    void build_kernel();

    std::shared_ptr<const Mesh> mesh_;
    int m_;
    int n_;
    int refinement_;
    ElementFamily family_;
    std::size_t ndofs_ = 0;
    std::vector<int> boundary_dofs_;
    std::vector<int> interior_dofs_;
    std::vector<bool> boundary_flag_;
    std::shared_ptr<const SampleSet> samples_;
    Eigen::MatrixXcd kernel_;
    Eigen::MatrixXcd moments_;
    std::vector<int> pinned_;
    // P1: inverse Jacobian rows per triangle (barycentric gradients).
    std::vector<std::array<std::array<double, 2>, 3>> bary_grad_;
};

std::shared_ptr<const FESpace> make_space(const Mesh& mesh, int m, int n_components, int refinement = 0);

} // namespace ellab
