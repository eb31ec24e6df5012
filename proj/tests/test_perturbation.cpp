#include <cmath>
#include <sstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "ellab/assembly.hpp"
#include "ellab/perturbation.hpp"

using namespace ellab;

namespace {

struct Problem {
    std::shared_ptr<const FESpace> space;
    WhitneyGrid grid;
    WhitneyBinning binning;

    Problem(double h, int depth)
        : space(make_space(grid_mesh(PolygonalDomain::unit_square(), h, CellShape::kTriangle), 1, 1, 1)),
          grid(whitney_decompose(PolygonalDomain::unit_square(), depth)),
          binning(grid, space->samples())
    {
    }
};

CoefficientTensor swap_tensor(int width, int m = 1)
{
    CoefficientTensor::Matrix r = CoefficientTensor::Matrix::Zero(width, width);
    for (int i = 0; i < width; ++i) {
        r(i, width - 1 - i) = 1.0;
    }
    return CoefficientTensor::constant(m, 1, r);
}

GradientArray random_field(const Problem& s, std::uint64_t seed)
{
    std::mt19937_64 rng = make_rng(seed, 0);
    return random_cube_field(s.binning, s.space->width(), rng);
}

Vector random_dofs(std::size_t n, std::uint64_t seed)
{
    std::mt19937_64 rng = make_rng(seed, 1);
    std::normal_distribution<double> d(0.0, 1.0);
    Vector v(static_cast<Eigen::Index>(n));
    for (auto& z : v) {
        z = cplx(d(rng), d(rng));
    }
    return v;
}

} // namespace

TEST(C2Predicted, Branches)
{
    EXPECT_DOUBLE_EQ(c2_predicted(2.0, 0.25, 2.0), 4.0);
    EXPECT_DOUBLE_EQ(c2_predicted(2.0, 0.0, 1.0), 2.0);
    EXPECT_TRUE(std::isinf(c2_predicted(2.0, 0.5, 2.0)));
    // p < 1: (C0^p / (1 - C0^p eps^p))^(1/p).
    const double p = 0.9;
    const double expected = std::pow(std::pow(1.5, p) / (1.0 - std::pow(1.5 * 0.2, p)), 1.0 / p);
    EXPECT_NEAR(c2_predicted(1.5, 0.2, p), expected, 1e-14);
    EXPECT_TRUE(std::isinf(c2_predicted(2.0, 0.5, 0.9)));
}

TEST(Series, ZeroEpsilonUsesOneTerm)
{
    const Problem s(0.125, 4);
    const EnergySolver a(s.space, identity_tensor(1, 1), ProblemKind::kDirichlet);
    const GradientArray h = random_field(s, 1);
    const SeriesResult r = perturb_solve(a, identity_tensor(1, 1), h, {}, s.binning, NormParams(2.0, 0.5), 1.0);
    EXPECT_EQ(r.trace.terms_used, 1);
    EXPECT_TRUE(r.trace.converged);
    EXPECT_EQ(r.trace.epsilon, 0.0);
    EXPECT_EQ((r.u.dofs - a.solve(h).dofs).norm(), 0.0);
}

TEST(Series, MatchesDirectSolveOfPerturbedProblem)
{
    const Problem s(0.125, 4);
    const CoefficientTensor a = identity_tensor(1, 1);
    const CoefficientTensor b = a + swap_tensor(2).scaled(0.2);
    const EnergySolver sa(s.space, a, ProblemKind::kDirichlet);
    const EnergySolver sb(s.space, b, ProblemKind::kDirichlet);
    const NormParams params(2.0, 0.5);
    const double c0 = probe_solution_operator(sa, s.binning, params, 8, 3).c0_hat;
    ASSERT_GT(c0, 0.0);
    const GradientArray h = random_field(s, 2);
    const SeriesResult r = perturb_solve(sa, b, h, {}, s.binning, params, c0);
    EXPECT_NEAR(r.trace.epsilon, 0.2, 1e-15);
    EXPECT_TRUE(r.trace.converged);
    const Vector direct = sb.solve(h).dofs;
    EXPECT_LT((r.u.dofs - direct).norm() / direct.norm(), 1e-6);
    for (const int i : s.space->boundary_dofs()) {
        EXPECT_EQ(r.u.dofs[i], cplx(0.0));
    }
}

TEST(Series, TermRatiosStayUnderGeometricEnvelope)
{
    const Problem s(0.125, 4);
    const CoefficientTensor a = identity_tensor(1, 1);
    const EnergySolver sa(s.space, a, ProblemKind::kDirichlet);
    const NormParams params(2.0, 0.5);
    const double c0 = probe_solution_operator(sa, s.binning, params, 16, 5).c0_hat;
    const SeriesResult r =
        perturb_solve(sa, a + swap_tensor(2).scaled(0.3), random_field(s, 6), {}, s.binning, params, c0);
    ASSERT_GE(r.trace.ratios.size(), 2u);
    for (const double q : r.trace.ratios) {
        EXPECT_LE(q, c0 * 0.3 * 1.05);
    }
    PerturbationTrace trace = r.trace;
    const C2Report rep = verify_c2_bound(trace, r.u, random_field(s, 6), s.binning, params);
    EXPECT_TRUE(rep.pass);
    EXPECT_EQ(trace.c2_observed, rep.observed);
}

TEST(Series, LinearInTheData)
{
    const Problem s(0.125, 4);
    const CoefficientTensor a = identity_tensor(1, 1);
    const CoefficientTensor b = a + swap_tensor(2).scaled(0.25);
    const EnergySolver sa(s.space, a, ProblemKind::kDirichlet);
    const NormParams params(2.0, 0.5);
    SeriesOptions opts;
    opts.tol = 1e-14;
    const GradientArray h1 = random_field(s, 7);
    const GradientArray h2 = random_field(s, 8);
    const cplx alpha(0.7, -1.3);
    const Vector u1 = perturb_solve(sa, b, h1, {}, s.binning, params, 1.0, opts).u.dofs;
    const Vector u2 = perturb_solve(sa, b, h2, {}, s.binning, params, 1.0, opts).u.dofs;
    const Vector u12 = perturb_solve(sa, b, alpha * h1 + h2, {}, s.binning, params, 1.0, opts).u.dofs;
    EXPECT_LT((u12 - (alpha * u1 + u2)).norm() / u12.norm(), 1e-9);
}

TEST(Series, RefusesWhenSmallnessFails)
{
    const Problem s(0.125, 4);
    const CoefficientTensor a = identity_tensor(1, 1);
    const EnergySolver sa(s.space, a, ProblemKind::kDirichlet);
    try {
        perturb_solve(sa, a + swap_tensor(2).scaled(0.2), random_field(s, 1), {}, s.binning, NormParams(2.0, 0.5),
                      5.0);
        FAIL() << "expected PerturbationRefused";
    } catch (const PerturbationRefused& e) {
        EXPECT_EQ(e.c0_hat(), 5.0);
        EXPECT_NEAR(e.epsilon(), 0.2, 1e-15);
    }
}

TEST(Series, ReportsDivergence)
{
    // An underestimated C0 lets a non-contractive series start.
    const Problem s(0.125, 4);
    const CoefficientTensor a = identity_tensor(1, 1);
    const EnergySolver sa(s.space, a, ProblemKind::kDirichlet);
    try {
        perturb_solve(sa, a + swap_tensor(2).scaled(3.0), random_field(s, 1), {}, s.binning, NormParams(2.0, 0.5),
                      0.1);
        FAIL() << "expected DivergenceError";
    } catch (const DivergenceError& e) {
        ASSERT_FALSE(e.trace().ratios.empty());
        EXPECT_GE(e.trace().ratios.back(), 1.0);
        EXPECT_FALSE(e.trace().converged);
    }
}

TEST(Series, NeumannMatchesDirectSolve)
{
    const Problem s(0.125, 4);
    const CoefficientTensor a = identity_tensor(1, 1);
    const CoefficientTensor b = a + swap_tensor(2).scaled(0.2);
    const EnergySolver sa(s.space, a, ProblemKind::kNeumann);
    const EnergySolver sb(s.space, b, ProblemKind::kNeumann);
    const GradientArray h = random_field(s, 9);
    const SeriesResult r = perturb_solve(sa, b, h, {}, s.binning, NormParams(2.0, 0.5), 1.0);
    ASSERT_TRUE(r.trace.converged);
    const GradientArray gs = r.u.gradient();
    const GradientArray gd = sb.solve(h).gradient();
    EXPECT_LT((gs - gd).l2_norm() / gd.l2_norm(), 1e-6);
}

TEST(Series, SubadditivityBelowPOne)
{
    const Problem s(0.125, 4);
    const CoefficientTensor a = identity_tensor(1, 1);
    const EnergySolver sa(s.space, a, ProblemKind::kDirichlet);
    const NormParams params(0.9, 0.5);
    const GradientArray h = random_field(s, 10);
    SeriesResult r = perturb_solve(sa, a + swap_tensor(2).scaled(0.2), h, {}, s.binning, params, 1.0);
    double sum = 0.0;
    for (const double n : r.trace.term_norms) {
        sum += std::pow(n, 0.9);
    }
    EXPECT_NEAR(r.trace.power_sum, sum, 1e-12 * sum);
    const C2Report rep = verify_c2_bound(r.trace, r.u, h, s.binning, params, 1e9);
    EXPECT_TRUE(rep.subadditive);
}

TEST(Trace, CsvAndJson)
{
    PerturbationTrace t;
    t.term_norms = {1.0, 0.5, 0.25};
    t.ratios = {0.5, 0.5};
    t.epsilon = 0.1;
    t.c0_hat = 2.0;
    t.converged = true;
    t.terms_used = 3;
    std::ostringstream csv;
    t.write_csv(csv);
    std::istringstream in(csv.str());
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "j,term_norm,ratio");
    std::getline(in, line);
    EXPECT_EQ(line, "0,1,");
    std::getline(in, line);
    EXPECT_EQ(line, "1,0.5,0.5");
    std::ostringstream js;
    t.write_json(js);
    const auto j = nlohmann::json::parse(js.str());
    EXPECT_EQ(j.at("terms_used"), 3);
    EXPECT_EQ(j.at("converged"), true);
    EXPECT_DOUBLE_EQ(j.at("C0_hat").get<double>(), 2.0);
    EXPECT_TRUE(j.contains("C2_predicted"));
    EXPECT_TRUE(j.contains("C2_observed"));
}

TEST(Bumps, SupportedInsideTheDomain)
{
    const Problem s(0.0625, 5);
    const std::vector<Vector> w = bump_functions(*s.space, 6, 4);
    ASSERT_EQ(w.size(), 6u);
    for (const Vector& v : w) {
        EXPECT_GT(v.norm(), 0.0);
        for (const int i : s.space->boundary_dofs()) {
            EXPECT_EQ(v[i], cplx(0.0));
        }
    }
}

TEST(Reduction, DirichletRecoversKnownSolution)
{
    const Problem s(0.125, 4);
    std::mt19937_64 rng = make_rng(12, 0);
    const CoefficientTensor a = random_constant_tensor(1, 1, 0.3, rng);
    const EnergySolver sa(s.space, a, ProblemKind::kDirichlet);
    const Vector w = random_dofs(s.space->ndofs(), 12);
    const FESolution f{s.space, w, ProblemKind::kDirichlet};
    const FESolution u = reduce_to_homogeneous_boundary(sa, apply_tensor(a, s.space->gradient(w)), f);
    EXPECT_LT((u.dofs - w).norm() / w.norm(), 1e-10);
    EXPECT_THROW(reduce_to_homogeneous_boundary(EnergySolver(s.space, a, ProblemKind::kNeumann),
                                                GradientArray(s.space->samples(), 2), f),
                 InvalidArgument);
}

TEST(Reduction, NeumannRecoversKnownGradient)
{
    const Problem s(0.125, 4);
    const EnergySolver sa(s.space, identity_tensor(1, 1), ProblemKind::kNeumann);
    const Vector w = random_dofs(s.space->ndofs(), 13);
    const GradientArray gw = s.space->gradient(w);
    const FESolution u = reduce_to_homogeneous_boundary(sa, GradientArray(s.space->samples(), 2), gw);
    EXPECT_LT((u.gradient() - gw).l2_norm() / gw.l2_norm(), 1e-10);
}

TEST(Duality, PairingIdentityAndSelfAdjointConstants)
{
    const Problem s(0.125, 4);
    std::mt19937_64 rng = make_rng(14, 0);
    const CoefficientTensor a = random_constant_tensor(1, 1, 0.3, rng);
    const EnergySolver sa(s.space, a, ProblemKind::kDirichlet);
    const EnergySolver ss(s.space, adjoint_tensor(a), ProblemKind::kDirichlet);
    const DualityReport rep = duality_experiment(sa, ss, s.binning, NormParams(1.0 / 0.4, 0.6), 8, 4, 15);
    EXPECT_LE(rep.max_identity_error, 1e-8);
    EXPECT_NEAR(rep.p_dual, 1.0 / 0.6, 1e-12);
    EXPECT_NEAR(rep.s_dual, 0.4, 1e-12);

    const EnergySolver id(s.space, identity_tensor(1, 1), ProblemKind::kDirichlet);
    const DualityReport self = duality_experiment(id, id, s.binning, NormParams(2.0, 0.5), 4, 16, 16);
    EXPECT_LE(self.max_identity_error, 1e-8);
    EXPECT_LT(std::abs(self.ratio - 1.0), 0.1);
    EXPECT_THROW(duality_experiment(id, id, s.binning, NormParams(0.9, 0.5), 1, 1, 1), InvalidArgument);
}
