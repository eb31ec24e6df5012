#include <cmath>

#include <gtest/gtest.h>

#include "ellab/assembly.hpp"
#include "ellab/newton.hpp"
#include "ellab/perturbation.hpp"

using namespace ellab;

namespace {

std::shared_ptr<const FESpace> p1_square(double h)
{
    return make_space(grid_mesh(PolygonalDomain::unit_square(), h, CellShape::kTriangle), 1, 1, 1);
}

GradientArray random_field(const FESpace& space, std::uint64_t seed)
{
    std::mt19937_64 rng = make_rng(seed, 0);
    std::normal_distribution<double> d(0.0, 1.0);
    return GradientArray::from_function(space.samples(), space.width(), [&](Point, std::span<cplx> v) {
        for (cplx& z : v) {
            z = cplx(d(rng), d(rng));
        }
    });
}

CoefficientTensor complex_constant(std::uint64_t seed)
{
    std::mt19937_64 rng = make_rng(seed, 0);
    return random_constant_tensor(1, 1, 0.3, rng);
}

} // namespace

TEST(Newton, ZeroDataGivesZero)
{
    const auto space = p1_square(0.125);
    const NewtonPotential pi(space, identity_tensor(1, 1), 4.0);
    EXPECT_EQ(pi.apply(GradientArray(space->samples(), 2)).dofs.norm(), 0.0);
    EXPECT_EQ(pi.dof_map().size(), space->ndofs());
}

TEST(Newton, InvertsOperatorOnCompactlySupportedFunctions)
{
    const auto space = p1_square(0.0625);
    const CoefficientTensor a = complex_constant(1);
    const NewtonPotential pi(space, a, 4.0);
    const std::vector<Vector> bumps = bump_functions(*space, 5, 2);
    ASSERT_FALSE(bumps.empty());
    for (const Vector& w : bumps) {
        const FESolution u = pi.apply(apply_tensor(a, space->gradient(w)));
        EXPECT_LT((u.dofs - w).norm() / w.norm(), 1e-8);
    }
}

TEST(Newton, EnergyBoundForIdentity)
{
    // |grad Pi H|_{L2(Omega)} <= |grad Pi H|_{L2(box)} <= |H|.
    const auto space = p1_square(0.125);
    const NewtonPotential pi(space, identity_tensor(1, 1), 4.0);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const GradientArray h = random_field(*space, seed);
        EXPECT_LE(pi.apply(h).gradient().l2_norm(), h.l2_norm() * (1.0 + 1e-12));
    }
}

TEST(Newton, AdjointDefectVanishes)
{
    const auto space = p1_square(0.125);
    const CoefficientTensor a = complex_constant(3);
    const NewtonPotential pi(space, a, 4.0);
    const NewtonPotential pi_star(space, adjoint_tensor(a), 4.0);
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        EXPECT_LE(newton_adjoint_defect(pi, pi_star, random_field(*space, seed), random_field(*space, seed + 10)),
                  1e-8);
    }
}

TEST(Newton, RejectsNonConstantTensor)
{
    const auto space = p1_square(0.25);
    std::mt19937_64 rng = make_rng(4, 0);
    const CoefficientTensor pw =
        identity_tensor(1, 1) + random_unit_piecewise(1, 1, CellGrid{{0, 0}, 1, 1, 2, 2}, rng).scaled(0.1);
    EXPECT_THROW(NewtonPotential(space, pw, 4.0), InvalidArgument);
}

TEST(Newton, TruncationIndicatorIsSmall)
{
    const auto space = p1_square(0.125);
    const NewtonPotential pi(space, identity_tensor(1, 1), 4.0);
    const double t = pi.truncation_indicator(random_field(*space, 5));
    EXPECT_GE(t, 0.0);
    EXPECT_LT(t, 0.05);
}

TEST(Newton, DirichletReductionMatchesDirectSolve)
{
    const auto space = p1_square(0.125);
    const CoefficientTensor a = complex_constant(6);
    const NewtonPotential pi(space, a, 4.0);
    const EnergySolver solver(space, a, ProblemKind::kDirichlet);
    const FESolution f{space, space->interpolate([](Point x, int) {
                           return Jet{x.x * x.x - x.y + 0.3, 2.0 * x.x, -1.0, 0.0};
                       }),
                       ProblemKind::kDirichlet};
    const GradientArray h = random_field(*space, 7);
    const NewtonReduction r = reduce_via_newton(pi, solver, h, f);
    const FESolution direct = reduce_to_homogeneous_boundary(solver, h, f);
    EXPECT_LT((r.u.dofs - direct.dofs).norm() / direct.dofs.norm(), 1e-9);
    EXPECT_LE(r.residual, 1e-9);
    EXPECT_TRUE(r.warning.empty());
}

TEST(Newton, NeumannReductionMatchesDirectSolve)
{
    const auto space = p1_square(0.125);
    const CoefficientTensor a = identity_tensor(1, 1);
    const NewtonPotential pi(space, a, 4.0);
    const EnergySolver solver(space, a, ProblemKind::kNeumann);
    const Vector g = boundary_load(*space, [](Point x, Point n, int) { return Jet{2.0 * x.x * n.x - 2.0 * x.y * n.y}; });
    const GradientArray h = random_field(*space, 8);
    const NewtonReduction r = reduce_via_newton(pi, solver, h, g, false);
    const GradientArray direct = solver.solve(h, g).gradient();
    EXPECT_LT((r.u.gradient() - direct).l2_norm() / direct.l2_norm(), 1e-9);
    EXPECT_LE(r.residual, 1e-9);
    EXPECT_EQ(r.truncation, 0.0);
}

TEST(Newton, ReductionRejectsMismatchedOperator)
{
    const auto space = p1_square(0.25);
    const NewtonPotential pi(space, identity_tensor(1, 1), 4.0);
    const EnergySolver other(space, complex_constant(9), ProblemKind::kDirichlet);
    const FESolution f{space, Vector::Zero(static_cast<Eigen::Index>(space->ndofs())), ProblemKind::kDirichlet};
    EXPECT_THROW(reduce_via_newton(pi, other, GradientArray(space->samples(), 2), f), InvalidArgument);
}
