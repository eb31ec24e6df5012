#include <cmath>

#include <gtest/gtest.h>

#include "ellab/norms.hpp"

using namespace ellab;

namespace {

struct Fixture {
    PolygonalDomain domain = PolygonalDomain::unit_square();
    std::shared_ptr<const SampleSet> samples =
        SampleSet::for_mesh(grid_mesh(PolygonalDomain::unit_square(), 1.0 / 32, CellShape::kTriangle), 2);
    WhitneyGrid grid = whitney_decompose(PolygonalDomain::unit_square(), 6);
    WhitneyBinning binning{grid, samples};
};

const Fixture& fixture()
{
    static const Fixture f;
    return f;
}

GradientArray constant_field(const std::shared_ptr<const SampleSet>& s, cplx c)
{
    return GradientArray::from_function(s, 1, [c](Point, std::span<cplx> v) { v[0] = c; });
}

// Direct evaluation of the Whitney sum from cube averages.
double whitney_oracle(const std::vector<double>& ms, const WhitneyGrid& g, double p, double s)
{
    double sum = 0.0;
    for (std::size_t q = 0; q < g.size(); ++q) {
        const double l = g[q].side;
        sum += std::pow(ms[q], p / 2.0) * std::pow(l, 1.0 + p - p * s);
    }
    return std::pow(sum, 1.0 / p);
}

} // namespace

TEST(NormParams, Validation)
{
    EXPECT_THROW(NormParams(2.0, 0.0), InvalidArgument);
    EXPECT_THROW(NormParams(2.0, 1.0), InvalidArgument);
    EXPECT_THROW(NormParams(0.5, 0.5), InvalidArgument);  // p_min(1/2) = 2/3
    EXPECT_NO_THROW(NormParams(0.7, 0.5));
    EXPECT_NO_THROW(NormParams(kInfinity, 0.5));
    EXPECT_NEAR(default_p_min(0.5), 2.0 / 3.0, 1e-15);
    EXPECT_NO_THROW(NormParams(0.5, 0.5, 0.4));
    const NormParams q(4.0, 0.25);
    EXPECT_NEAR(q.p_prime(), 4.0 / 3.0, 1e-15);
    EXPECT_NEAR(q.s_prime(), 0.75, 1e-15);
    const NormParams r(0.8, 0.5);
    EXPECT_EQ(r.p_prime(), kInfinity);
    EXPECT_NEAR(r.s_prime(), 0.5 + 0.25, 1e-15);
}

TEST(Binning, AlignedSamplesNestInCubes)
{
    const Fixture& f = fixture();
    EXPECT_LT(f.binning.alignment_defect(), 1e-12);
    double covered = 0.0;
    for (std::size_t q = 0; q < f.grid.size(); ++q) {
        for (const std::size_t i : f.binning.members(q)) {
            covered += f.samples->weight(i);
        }
    }
    EXPECT_NEAR(covered, f.grid.covered_area(), 1e-10);
}

TEST(Whitney, ZeroHomogeneityAndUnitField)
{
    const Fixture& f = fixture();
    const NormParams np(2.0, 0.5);
    EXPECT_EQ(lps_norm_whitney(GradientArray(f.samples, 2), f.binning, np).value, 0.0);
    std::mt19937_64 rng = make_rng(1, 0);
    const GradientArray h = random_cube_field(f.binning, 2, rng);
    EXPECT_NEAR(lps_norm_whitney(3.0 * h, f.binning, np).value, 3.0 * lps_norm_whitney(h, f.binning, np).value,
                1e-12);
    // H = 1 with p = 2, s = 1/2: the weight exponent vanishes and the squared
    // norm is the covered area.
    const NormValue one = lps_norm_whitney(constant_field(f.samples, 1.0), f.binning, np);
    EXPECT_NEAR(one.value * one.value, f.grid.covered_area(), 1e-12);
    EXPECT_NEAR(1.0 - f.grid.covered_area(), f.grid.tail_fraction(), 1e-12);
}

TEST(Whitney, MatchesDirectSum)
{
    const Fixture& f = fixture();
    std::mt19937_64 rng = make_rng(2, 0);
    const GradientArray h = random_cube_field(f.binning, 3, rng);
    const std::vector<double> ms = cube_mean_squares(f.binning, h);
    for (const auto& [p, s] : {std::pair{2.0, 0.5}, std::pair{1.0, 0.25}, std::pair{4.0, 0.75}, std::pair{0.9, 0.5}}) {
        const double got = lps_norm_whitney(h, f.binning, NormParams(p, s)).value;
        EXPECT_NEAR(got / whitney_oracle(ms, f.grid, p, s), 1.0, 1e-12);
    }
    // p = infinity: sup of cube RMS times l^{1-s}.
    double sup = 0.0;
    for (std::size_t q = 0; q < f.grid.size(); ++q) {
        sup = std::max(sup, std::sqrt(ms[q]) * std::pow(f.grid[q].side, 0.5));
    }
    EXPECT_NEAR(lps_norm_whitney(h, f.binning, NormParams(kInfinity, 0.5)).value, sup, 1e-14);
}

TEST(Whitney, SingleCubeValue)
{
    const Fixture& f = fixture();
    const std::size_t q = f.grid.size() / 2;
    std::vector<double> ms(f.grid.size(), 0.0);
    const double c = 1.7;
    ms[q] = c * c;
    const double s = 0.3;
    EXPECT_NEAR(whitney_sequence_norm(ms, f.grid, NormParams(1.0, s)), c * std::pow(f.grid[q].side, 2.0 - s), 1e-14);
    std::mt19937_64 rng = make_rng(3, 0);
    const GradientArray h = single_cube_field(f.binning, 1, q, rng);
    const double amp = std::sqrt(cube_mean_squares(f.binning, h)[q]);
    EXPECT_NEAR(lps_norm_whitney(h, f.binning, NormParams(1.0, s)).value, amp * std::pow(f.grid[q].side, 2.0 - s),
                1e-13);
}

TEST(Ball, WithinFactorThreeOfWhitney)
{
    const Fixture& f = fixture();
    const NormParams np(2.0, 0.5);
    for (std::uint64_t t = 0; t < 3; ++t) {
        std::mt19937_64 rng = make_rng(4, t);
        const GradientArray h = random_cube_field(f.binning, 2, rng);
        const double ball = lps_norm_ball(h, f.domain, f.grid, np).value;
        const double whit = lps_norm_whitney(h, f.binning, np).value;
        EXPECT_GT(ball / whit, 1.0 / 3.0);
        EXPECT_LT(ball / whit, 3.0);
    }
    EXPECT_EQ(lps_norm_ball(GradientArray(f.samples, 2), f.domain, f.grid, np).value, 0.0);
}

TEST(Duality, HolderConstantOne)
{
    const Fixture& f = fixture();
    for (const auto& [p, s] : {std::pair{2.0, 0.5}, std::pair{4.0, 0.25}, std::pair{1.0, 0.6}}) {
        const NormParams np(p, s);
        double worst = 0.0;
        for (std::uint64_t t = 0; t < 50; ++t) {
            std::mt19937_64 rng = make_rng(5, t);
            const GradientArray a = random_cube_field(f.binning, 2, rng);
            const GradientArray b = t % 2 ? random_cube_field(f.binning, 2, rng) : a;
            worst = std::max(worst, duality_ratio(a, b, f.binning, np).ratio);
        }
        EXPECT_LE(worst, 1.0 + 1e-12);
    }
    // Equality for p = 2, s = 1/2 with G = F.
    std::mt19937_64 rng = make_rng(6, 0);
    const GradientArray a = random_cube_field(f.binning, 2, rng);
    EXPECT_NEAR(duality_ratio(a, a, f.binning, NormParams(2.0, 0.5)).ratio, 1.0, 1e-12);
    EXPECT_THROW(duality_ratio(a, a, f.binning, NormParams(0.9, 0.5)), InvalidArgument);
}

TEST(QuasiNorm, PowerSubadditivityBelowOne)
{
    const Fixture& f = fixture();
    const NormParams np(0.9, 0.5);
    for (std::uint64_t t = 0; t < 50; ++t) {
        std::mt19937_64 rng = make_rng(7, t);
        const GradientArray a = random_cube_field(f.binning, 2, rng);
        const GradientArray b = single_cube_field(f.binning, 2, t % f.grid.size(), rng);
        const double lhs = std::pow(lps_norm_whitney(a + b, f.binning, np).value, 0.9);
        const double rhs = std::pow(lps_norm_whitney(a, f.binning, np).value, 0.9) +
                           std::pow(lps_norm_whitney(b, f.binning, np).value, 0.9);
        EXPECT_LE(lhs, rhs * (1.0 + 1e-12));
    }
}

TEST(Embedding, ConditionsAndFiniteRatios)
{
    const Fixture& f = fixture();
    std::mt19937_64 rng = make_rng(8, 0);
    const GradientArray h = random_cube_field(f.binning, 2, rng);
    const EmbeddingReport crit = embedding_check(h, f.binning, f.domain.diameter(), 4.0, 0.1, 2.0, 0.35);
    EXPECT_EQ(crit.condition, 1);
    EXPECT_TRUE(std::isfinite(crit.ratio));
    const EmbeddingReport win = embedding_check(h, f.binning, f.domain.diameter(), 2.0, 0.25, 2.0, 0.5);
    EXPECT_EQ(win.condition, 2);
    EXPECT_TRUE(std::isfinite(win.ratio));
    EXPECT_THROW(embedding_check(h, f.binning, 1.0, 2.0, 0.5, 2.0, 0.25), InvalidArgument);
    EXPECT_TRUE(embedding_check(GradientArray(f.samples, 2), f.binning, 1.0, 2.0, 0.25, 2.0, 0.5).vacuous);
}

TEST(SequenceHolder, ConvexityBound)
{
    const Fixture& f = fixture();
    for (std::uint64_t t = 0; t < 50; ++t) {
        std::mt19937_64 rng = make_rng(9, t);
        const GradientArray h = random_cube_field(f.binning, 2, rng);
        const double r =
            sequence_holder_ratio(cube_mean_squares(f.binning, h), f.grid, 2.0, 0.5, 4.0, 0.25, 0.1 + 0.08 * static_cast<double>(t % 11));
        EXPECT_LE(r, 1.0 + 1e-12);
    }
    // Equal endpoints give ratio one; t must lie strictly inside (0, 1).
    std::mt19937_64 rng = make_rng(9, 99);
    const auto ms = cube_mean_squares(f.binning, random_cube_field(f.binning, 1, rng));
    EXPECT_NEAR(sequence_holder_ratio(ms, f.grid, 2.0, 0.5, 2.0, 0.5, 0.3), 1.0, 1e-13);
    EXPECT_THROW(sequence_holder_ratio(ms, f.grid, 2.0, 0.5, 4.0, 0.25, 0.0), InvalidArgument);
    EXPECT_THROW(sequence_holder_ratio(ms, f.grid, 2.0, 0.5, 4.0, 0.25, 1.0), InvalidArgument);
}

TEST(Besov, ConstantsScalingAndRange)
{
    const PolygonalDomain d = PolygonalDomain::unit_square();
    const BoundaryField c = [](Point) { return std::vector<cplx>{2.0, cplx(0, 1)}; };
    EXPECT_EQ(besov_boundary_seminorm(c, d, 2.0, 0.5).value, 0.0);
    const BoundaryField f = [](Point x) { return std::vector<cplx>{x.x * x.y, std::sin(x.x)}; };
    const BoundaryField g = [](Point x) { return std::vector<cplx>{3.0 * x.x * x.y, 3.0 * std::sin(x.x)}; };
    const BesovResult a = besov_boundary_seminorm(f, d, 2.0, 0.5);
    EXPECT_GT(a.value, 0.0);
    EXPECT_NEAR(besov_boundary_seminorm(g, d, 2.0, 0.5).value, 3.0 * a.value, 1e-12 * a.value);
    EXPECT_TRUE(a.converged);
    EXPECT_THROW(besov_boundary_seminorm(f, d, 0.9, 0.5), InvalidArgument);
}

TEST(Growth, IndicatorSlopes)
{
    const PolygonalDomain d = PolygonalDomain::unit_square();
    const WhitneyGrid g = whitney_decompose(d, 10);
    const NormParams np(2.0, 0.5);
    const GrowthFit fit = indicator_growth(d, g, np, {0.5, 0.0}, {0.25, 0.125, 0.0625, 0.03125, 0.015625});
    EXPECT_NEAR(fit.lps_slope, 1.0 - 0.5 + 0.5, 0.15);
    EXPECT_NEAR(fit.ratio_slope, 1.0 + 0.5 - 0.5, 0.15);
    EXPECT_NEAR(fit_slope({0, 1, 2, 3}, {1, 3, 5, 7}), 2.0, 1e-14);
}

TEST(Probe, IdentityMapHasNormOne)
{
    const Fixture& f = fixture();
    const SolutionMap id = [](const GradientArray& h) { return h; };
    const ProbeResult r = operator_norm_probe(id, f.binning, NormParams(3.0, 0.4), 2, 8, 1);
    EXPECT_NEAR(r.c0_hat, 1.0, 1e-12);
    EXPECT_EQ(r.trials, 8);
}

TEST(Determinism, ThreadCountDoesNotChangeNorms)
{
    const Fixture& f = fixture();
    std::mt19937_64 rng = make_rng(10, 0);
    const GradientArray h = random_cube_field(f.binning, 2, rng);
    set_num_threads(1);
    const double a = lps_norm_whitney(h, f.binning, NormParams(1.5, 0.3)).value;
    const double b = lps_norm_ball(h, f.domain, f.grid, NormParams(1.5, 0.3)).value;
    set_num_threads(4);
    EXPECT_EQ(a, lps_norm_whitney(h, f.binning, NormParams(1.5, 0.3)).value);
    EXPECT_EQ(b, lps_norm_ball(h, f.domain, f.grid, NormParams(1.5, 0.3)).value);
    set_num_threads(1);
    std::mt19937_64 r1 = make_rng(5, 1);
    std::mt19937_64 r2 = make_rng(5, 2);
    EXPECT_NE(r1(), r2());
}
