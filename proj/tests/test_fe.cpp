#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "ellab/assembly.hpp"
#include "ellab/norms.hpp"

using namespace ellab;

namespace {

Eigen::MatrixXcd dense(const SparseMatrix& s)
{
    return Eigen::MatrixXcd(s);
}

} // namespace

TEST(Samples, WeightsSumToArea)
{
    const Mesh tri = grid_mesh(PolygonalDomain::l_shape(), 0.125, CellShape::kTriangle);
    const Mesh rect = grid_mesh(PolygonalDomain::l_shape(), 0.125, CellShape::kRectangle);
    for (int r = 0; r <= 2; ++r) {
        EXPECT_NEAR(SampleSet::for_mesh(tri, r)->total_weight(), 0.75, 1e-13);
        EXPECT_NEAR(SampleSet::for_mesh(rect, r)->total_weight(), 0.75, 1e-13);
    }
    const auto s = SampleSet::for_mesh(tri, 2);
    EXPECT_EQ(s->size(), tri.cell_count() * 16 * 3);
    EXPECT_GE(s->nearest_sample({0.2, 0.3}), 0);
    EXPECT_EQ(s->nearest_sample({0.8, 0.8}), -1);
}

TEST(Samples, GradientArrayAlgebra)
{
    const auto s = SampleSet::for_mesh(grid_mesh(PolygonalDomain::unit_square(), 0.25, CellShape::kTriangle), 1);
    const GradientArray f = GradientArray::from_function(s, 2, [](Point x, std::span<cplx> v) {
        v[0] = x.x;
        v[1] = cplx(0.0, 1.0);
    });
    // |F|^2 = int x^2 + 1 = 4/3.
    EXPECT_NEAR(f.l2_norm(), std::sqrt(4.0 / 3.0), 1e-13);
    const GradientArray g = 3.0 * f;
    EXPECT_NEAR(g.l2_norm(), 3.0 * f.l2_norm(), 1e-13);
    EXPECT_NEAR((g - f - f - f).l2_norm(), 0.0, 1e-14);
    EXPECT_NEAR(pairing(f, f).real(), 4.0 / 3.0, 1e-13);
    const GradientArray other(SampleSet::for_mesh(grid_mesh(PolygonalDomain::unit_square(), 0.5, CellShape::kTriangle), 1), 2);
    EXPECT_FALSE(f.compatible(other));
    EXPECT_THROW(pairing(f, other), InvalidArgument);
}

TEST(Pairing, OrthogonalFields)
{
    const auto s = SampleSet::for_mesh(grid_mesh(PolygonalDomain::unit_square(), 0.25, CellShape::kTriangle), 1);
    const GradientArray f = GradientArray::from_function(s, 2, [](Point, std::span<cplx> v) {
        v[0] = 1.0;
        v[1] = 0.0;
    });
    const GradientArray g = GradientArray::from_function(s, 2, [](Point x, std::span<cplx> v) {
        v[0] = std::sin(2.0 * std::numbers::pi * x.x);
        v[1] = 5.0;
    });
    EXPECT_NEAR(pairing(f, f).real(), 1.0, 1e-14);
    EXPECT_NEAR(std::abs(pairing(f, g)), 0.0, 1e-12);
}

TEST(FESpace, P1ReproducesLinearFunctions)
{
    const auto space = make_space(build_mesh(PolygonalDomain::l_shape(), 0.2), 1, 2, 1);
    const Vector u = space->interpolate([](Point x, int c) {
        return c == 0 ? Jet{2.0 * x.x - x.y + 0.5, 2.0, -1.0, 0.0} : Jet{cplx(0, 3) * x.y, 0.0, cplx(0, 3), 0.0};
    });
    EXPECT_NEAR(std::abs(space->value(u, {0.3, 0.2}) - cplx(0.9)), 0.0, 1e-13);
    EXPECT_NEAR(std::abs(space->value(u, {0.3, 0.2}, 1) - cplx(0, 0.6)), 0.0, 1e-13);
    const GradientArray g = space->gradient(u);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto v = g.at(i);
        EXPECT_NEAR(std::abs(v[0] - 2.0), 0.0, 1e-12);
        EXPECT_NEAR(std::abs(v[1] + 1.0), 0.0, 1e-12);
        EXPECT_NEAR(std::abs(v[2]), 0.0, 1e-12);
        EXPECT_NEAR(std::abs(v[3] - cplx(0, 3)), 0.0, 1e-12);
    }
    EXPECT_TRUE(std::isnan(space->value(u, {0.8, 0.8}).real()));
}

TEST(FESpace, BFSReproducesBicubics)
{
    // u = x^3 y^2 - 2 x y + y^3 lies in the bicubic space.
    const auto space = make_space(grid_mesh(PolygonalDomain::unit_square(), 0.25, CellShape::kRectangle), 2, 1, 1);
    const Vector u = space->interpolate([](Point p, int) {
        const double x = p.x;
        const double y = p.y;
        return Jet{x * x * x * y * y - 2 * x * y + y * y * y, 3 * x * x * y * y - 2 * y,
                   2 * x * x * x * y - 2 * x + 3 * y * y, 6 * x * x * y - 2};
    });
    const GradientArray g = space->gradient(u);
    const SampleSet& s = *space->samples();
    double err = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double x = s.point(i).x;
        const double y = s.point(i).y;
        const auto v = g.at(i);
        err = std::max({err, std::abs(v[0] - 6 * x * y * y), std::abs(v[1] - std::sqrt(2.0) * (6 * x * x * y - 2)),
                        std::abs(v[2] - (2 * x * x * x + 6 * y))});
    }
    EXPECT_LT(err, 1e-11);
    const auto grad = space->first_gradient(u, {0.3, 0.6});
    EXPECT_NEAR(std::abs(grad[0] - (3 * 0.09 * 0.36 - 1.2)), 0.0, 1e-12);
}

TEST(FESpace, KernelAndDofSets)
{
    const auto p1 = make_space(grid_mesh(PolygonalDomain::unit_square(), 0.25, CellShape::kTriangle), 1, 1);
    EXPECT_EQ(p1->ndofs(), 25u);
    EXPECT_EQ(p1->boundary_dofs().size(), 16u);
    EXPECT_EQ(p1->interior_dofs().size(), 9u);
    EXPECT_EQ(p1->kernel_basis().cols(), 1);
    const auto bfs = make_space(grid_mesh(PolygonalDomain::unit_square(), 0.25, CellShape::kRectangle), 2, 2);
    EXPECT_EQ(bfs->ndofs(), 25u * 4u * 2u);
    EXPECT_EQ(bfs->kernel_basis().cols(), 6);
    // Kernel polynomials have vanishing m-th gradient.
    for (Eigen::Index k = 0; k < bfs->kernel_basis().cols(); ++k) {
        EXPECT_LT(bfs->gradient(bfs->kernel_basis().col(k)).l2_norm(), 1e-12);
    }
}

TEST(Assembly, TwoTriangleLaplacian)
{
    const Mesh mesh = grid_mesh(PolygonalDomain::unit_square(), 1.0, CellShape::kTriangle);
    ASSERT_EQ(mesh.cell_count(), 2u);
    const auto space = make_space(mesh, 1, 1);
    const Eigen::MatrixXcd s = dense(assemble_stiffness(*space, identity_tensor(1, 1)));
    ASSERT_EQ(s.rows(), 4);
    for (int i = 0; i < 4; ++i) {
        EXPECT_NEAR(std::abs(s.row(i).sum()), 0.0, 1e-14);
        for (int j = 0; j < 4; ++j) {
            const Point a = mesh.vertices()[static_cast<std::size_t>(i)];
            const Point b = mesh.vertices()[static_cast<std::size_t>(j)];
            const double d = distance(a, b);
            // Diagonal 1, square edges -1/2, diagonal pairs 0.
            const double expected = i == j ? 1.0 : (std::abs(d - 1.0) < 1e-12 ? -0.5 : 0.0);
            EXPECT_NEAR(std::abs(s(i, j) - expected), 0.0, 1e-14) << i << ' ' << j;
        }
    }
}

TEST(Assembly, LinearityInTheTensor)
{
    const auto space = make_space(grid_mesh(PolygonalDomain::l_shape(), 0.25, CellShape::kTriangle), 1, 1, 1);
    std::mt19937_64 rng = make_rng(4, 0);
    const CoefficientTensor a = random_constant_tensor(1, 1, 0.5, rng);
    const cplx c(2.5, -1.0);
    EXPECT_LT((dense(assemble_stiffness(*space, a.scaled(c))) - c * dense(assemble_stiffness(*space, a))).norm(), 1e-12);
}

TEST(Assembly, RhoFamilyIsAffine)
{
    const auto space = make_space(grid_mesh(PolygonalDomain::unit_square(), 1.0, CellShape::kRectangle), 2, 1);
    const Eigen::MatrixXcd s0 = dense(assemble_stiffness(*space, biharmonic_rho_tensor(0.0)));
    const Eigen::MatrixXcd s1 = dense(assemble_stiffness(*space, biharmonic_rho_tensor(1.0)));
    for (const double rho : {-0.5, 0.3, 0.8}) {
        const Eigen::MatrixXcd s = dense(assemble_stiffness(*space, biharmonic_rho_tensor(rho)));
        EXPECT_LT((s - (rho * s1 + (1.0 - rho) * s0)).cwiseAbs().maxCoeff(), 1e-11);
    }
}

TEST(Assembly, LoadOfTensorGradientIsStiffnessTimesDofs)
{
    const auto space = make_space(grid_mesh(PolygonalDomain::unit_square(), 0.25, CellShape::kRectangle), 2, 1, 1);
    std::mt19937_64 rng = make_rng(8, 0);
    const CoefficientTensor a = random_constant_tensor(2, 1, 0.3, rng);
    std::normal_distribution<double> n(0.0, 1.0);
    Vector w(static_cast<Eigen::Index>(space->ndofs()));
    for (auto& z : w) {
        z = cplx(n(rng), n(rng));
    }
    const Vector b = assemble_load(*space, apply_tensor(a, space->gradient(w)));
    const Vector sw = assemble_stiffness(*space, a) * w;
    EXPECT_LT((b - sw).norm() / sw.norm(), 1e-12);
    EXPECT_EQ(assemble_load(*space, GradientArray(space->samples(), 3)).norm(), 0.0);
}

TEST(Assembly, ConstantLoadMatchesDivergenceTheorem)
{
    // b_i = int grad phi_i . c = boundary integral of phi_i c . nu.
    const Mesh mesh = build_mesh(PolygonalDomain::l_shape(), 0.25);
    const auto space = make_space(mesh, 1, 1);
    const cplx c0(0.7, 0.1);
    const cplx c1(-0.3, 0.4);
    const GradientArray h = GradientArray::from_function(space->samples(), 2, [&](Point, std::span<cplx> v) {
        v[0] = c0;
        v[1] = c1;
    });
    const Vector b = assemble_load(*space, h);
    Vector expected = Vector::Zero(b.size());
    for (const BoundaryEdge& e : mesh.boundary_edges()) {
        const cplx flux = c0 * e.normal.x + c1 * e.normal.y;
        expected[e.a] += 0.5 * e.length * flux;
        expected[e.b] += 0.5 * e.length * flux;
    }
    EXPECT_LT((b - expected).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Assembly, GramIsIdentityStiffness)
{
    const auto space = make_space(grid_mesh(PolygonalDomain::unit_square(), 0.5, CellShape::kRectangle), 2, 1);
    EXPECT_EQ((dense(assemble_gram(*space)) - dense(assemble_stiffness(*space, identity_tensor(2, 1)))).norm(), 0.0);
}
