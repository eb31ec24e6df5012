#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ellab/samples.hpp"
#include "ellab/whitney.hpp"

namespace ellab {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Default integrability threshold p_min(s) = (d - 1) / (d - 1 + s).
double default_p_min(double s, int d = kDim);

/// Exponent pair (p, s) with 0 < s < 1 and p_min(s) < p <= infinity.
class NormParams {
public:
    /// Throws InvalidArgument outside the window. `p_min` overrides the
    /// default threshold.
    NormParams(double p, double s, std::optional<double> p_min = std::nullopt);

    double p() const { return p_; }
    double s() const { return s_; }
    double p_min() const { return p_min_; }
    bool infinite() const { return p_ == kInfinity; }

    /// 1/p' = max(0, 1 - 1/p).
    double p_prime() const;
    /// s' = (1 - s) + (d - 1) max(1/p - 1, 0).
    double s_prime(int d = kDim) const;

private:
    double p_;
    double s_;
    double p_min_;
};

/// Whitney-form quantity for exponents that need not satisfy the NormParams
/// window (dual exponents, interpolation endpoints).
double whitney_sum_norm(const std::vector<double>& mean_squares, const WhitneyGrid& grid, double p, double s,
                        int d = kDim);

enum class NormForm { kBall, kWhitney };
const char* to_string(NormForm form);

struct NormValue {
    double value = 0.0;
    NormForm form = NormForm::kWhitney;
    double p = 0.0;
    double s = 0.0;
    double tail_fraction = 0.0;
    int depth = 0;
    std::string warning;  // non-empty when the evaluation is under-resolved
};

/// Assignment of samples to Whitney cubes. Samples in the uncovered tail are
/// left out.
class WhitneyBinning {
public:
    WhitneyBinning(const WhitneyGrid& grid, std::shared_ptr<const SampleSet> samples);

    const WhitneyGrid& grid() const { return *grid_; }
    const std::shared_ptr<const SampleSet>& samples() const { return samples_; }
    /// Cube index of sample i or -1.
    int cube_of(std::size_t i) const { return cube_of_[i]; }
    /// Sample indices of cube q, ascending.
    std::span<const std::size_t> members(std::size_t q) const
    {
        return {members_.data() + offsets_[q], offsets_[q + 1] - offsets_[q]};
    }
    /// max_Q |sum of sample weights in Q - |Q|| / |Q|; zero when the sample
    /// cells nest inside the cubes.
    double alignment_defect() const { return defect_; }
    std::size_t covered_samples() const { return members_.size(); }

private:
    const WhitneyGrid* grid_;
    std::shared_ptr<const SampleSet> samples_;
    std::vector<int> cube_of_;
    std::vector<std::size_t> offsets_;
    std::vector<std::size_t> members_;
    double defect_ = 0.0;
};

/// Per cube: (1 / |Q|) * integral over Q of |H|^2.
std::vector<double> cube_mean_squares(const WhitneyBinning& binning, const GradientArray& h);
/// Per cube mean of f over Q by an n x n Gauss rule (for fields given as
/// functions rather than samples).
std::vector<double> cube_mean_squares(const WhitneyGrid& grid, const std::function<double(Point)>& abs2, int n = 8);

/// (sum_Q (mean_Q |H|^2)^{p/2} l(Q)^{d-1+p-ps})^{1/p}, or
/// sup_Q (mean_Q |H|^2)^{1/2} l(Q)^{1-s} for p = infinity.
double whitney_sequence_norm(const std::vector<double>& mean_squares, const WhitneyGrid& grid, const NormParams& params);

NormValue lps_norm_whitney(const GradientArray& h, const WhitneyBinning& binning, const NormParams& params);
NormValue lps_norm_whitney(const GradientArray& h, const WhitneyGrid& grid, const NormParams& params);

struct BallOptions {
    int outer = 3;      // outer n x n Gauss points per Whitney cube
    int radial = 6;     // inner polar rule
    int angular = 16;
    int min_samples = 8;
};

/// Outer integral over the cubes of `grid` of (avg_{B(x, dist/2)} |H|^2)^{p/2}
/// dist^{p-1-ps}; inner averages by polar quadrature of the piecewise
/// sample field.
NormValue lps_norm_ball(const GradientArray& h, const PolygonalDomain& domain, const WhitneyGrid& grid,
                        const NormParams& params, const BallOptions& options = {});

/// Sets H to zero on samples outside the covered cubes.
GradientArray restrict_to_cover(const GradientArray& h, const WhitneyBinning& binning);

/// Random field, constant on each cube with independent complex Gaussian
/// entries (unit variance), zero on the tail.
GradientArray random_cube_field(const WhitneyBinning& binning, int width, std::mt19937_64& rng);
/// Random complex vector on one cube, zero elsewhere.
GradientArray single_cube_field(const WhitneyBinning& binning, int width, std::size_t cube, std::mt19937_64& rng);

struct DualityRatio {
    double pairing = 0.0;  // |<F, G>| over the covered cubes
    double bound = 0.0;    // |F|_{p', 1-s} |G|_{p, s}
    double ratio = 0.0;    // pairing / bound (0 when the bound vanishes)
};

/// Hoelder pairing check for 1 <= p < infinity with Whitney norms.
DualityRatio duality_ratio(const GradientArray& f, const GradientArray& g, const WhitneyBinning& binning,
                           const NormParams& params);

struct BesovResult {
    double value = 0.0;
    double refined = 0.0;      // value with one more grading level and doubled panels
    double relative_change = 0.0;
    bool converged = false;    // relative_change < tolerance
};

struct BesovOptions {
    int panels_per_edge = 8;
    int grading_levels = 4;
    int gauss = 8;
    double tolerance = 0.02;
};

using BoundaryField = std::function<std::vector<cplx>(Point)>;

/// (int int |f(x) - f(y)|^p / |x - y|^{d-1+ps} dsigma dsigma)^{1/p} over the
/// polygon boundary. 1 <= p < infinity.
BesovResult besov_boundary_seminorm(const BoundaryField& f, const PolygonalDomain& domain, double p, double s,
                                    const BesovOptions& options = {});

struct EmbeddingReport {
    double ratio = 0.0;
    bool vacuous = false;  // both norms vanish
    int condition = 0;     // 1: critical line, 2: bounded-domain window
};

/// |Psi|_{q,sigma} / (diam^{(d-1)/q - (d-1)/r + omega - sigma} |Psi|_{r,omega}).
/// Throws InvalidArgument naming the failed condition.
EmbeddingReport embedding_check(const GradientArray& psi, const WhitneyBinning& binning, double diam, double q,
                                double sigma, double r, double omega);

/// |H|_{p_s, s_s} / (|H|_{p0,s0}^{1-t} |H|_{p1,s1}^t) with 1/p_t and s_t the
/// convex combinations. Returns 0 for a vanishing field.
double sequence_holder_ratio(const std::vector<double>& mean_squares, const WhitneyGrid& grid, double p0, double s0,
                             double p1, double s1, double t);

using SolutionMap = std::function<GradientArray(const GradientArray& h)>;

struct ProbeResult {
    double c0_hat = 0.0;  // lower bound on the discrete operator norm
    double global_max = 0.0;
    double single_max = 0.0;
    double extra_max = 0.0;
    int trials = 0;
};

/// max |S(H)|_{p,s} / |H|_{p,s} over random global fields, random
/// single-cube fields (half of the trials each) and `extra` fields.
ProbeResult operator_norm_probe(const SolutionMap& solver, const WhitneyBinning& binning, const NormParams& params,
                                int width, int trials, std::uint64_t seed,
                                const std::vector<GradientArray>& extra = {});

/// Generator seeded from (seed, stream) so that independent draws do not
/// depend on evaluation order.
std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream);

struct GrowthFit {
    std::vector<double> radii;
    std::vector<double> lps;  // |1_B|_{p,s}
    std::vector<double> l1;   // |1_B|_{L^1}
    double lps_slope = 0.0;
    double ratio_slope = 0.0;  // slope of l1 / lps
};

/// Indicators of B(x0, R) cap Omega for boundary points x0: least-squares
/// slopes of log |1_B|_{p,s} and log(|1_B|_{L^1} / |1_B|_{p,s}) against log R.
GrowthFit indicator_growth(const PolygonalDomain& domain, const WhitneyGrid& grid, const NormParams& params, Point x0,
                           const std::vector<double>& radii);

/// Least-squares slope of y against x.
double fit_slope(const std::vector<double>& x, const std::vector<double>& y);

} // namespace ellab
