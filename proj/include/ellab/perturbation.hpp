#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ellab/norms.hpp"
#include "ellab/solvers.hpp"

namespace ellab {

/// C0 / (1 - C0 eps) for p >= 1 and (C0^p / (1 - C0^p eps^p))^{1/p} for
/// p < 1. Infinite when the denominator is not positive.
double c2_predicted(double c0, double epsilon, double p);

struct PerturbationTrace {
    std::vector<double> term_norms;  // |grad^m u_j|_{p,s}
    std::vector<double> ratios;      // term_norms[j + 1] / term_norms[j]
    double epsilon = 0.0;
    double c0_hat = 0.0;
    double c2_predicted = 0.0;
    double c2_observed = 0.0;
    double p = 2.0;
    double s = 0.5;
    bool converged = false;
    int terms_used = 0;
    /// Sum of term_norms^min(p, 1) (the p <= 1 subadditivity bound).
    double power_sum = 0.0;

    /// CSV with header j,term_norm,ratio (ratio empty for j = 0).
    void write_csv(std::ostream& out) const;
    /// One JSON object with epsilon, C0_hat, C2_predicted, C2_observed,
    /// converged and terms_used.
    void write_json(std::ostream& out) const;
};

/// C0_hat * eps >= 1: the series is not guaranteed to converge.
class PerturbationRefused : public Error {
public:
    PerturbationRefused(const std::string& what, double c0_hat, double epsilon)
        : Error(what), c0_hat_(c0_hat), epsilon_(epsilon)
    {
    }
    double c0_hat() const { return c0_hat_; }
    double epsilon() const { return epsilon_; }

private:
    double c0_hat_;
    double epsilon_;
};

/// Term norms stopped decaying. Carries the trace up to the failure.
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& what, PerturbationTrace trace) : Error(what), trace_(std::move(trace)) {}
    const PerturbationTrace& trace() const { return trace_; }

private:
    PerturbationTrace trace_;
};

struct SeriesOptions {
    double tol = 1e-8;
    int max_terms = 200;
    int divergence_window = 5;  // consecutive ratios >= 1 before giving up
};

struct SeriesResult {
    FESolution u;
    PerturbationTrace trace;
};

/// epsilon = sup_distance(A, B) at the characteristic points of both tensors,
/// or at every sample when either is a callable.
double tensor_distance(const CoefficientTensor& a, const CoefficientTensor& b, const SampleSet& samples);

/// Solves the B-problem with data (H, g) as u = sum_j u_j, where u_0 solves
/// the A-problem with data (H, g) and u_{j+1} the A-problem with data
/// (A - B) grad^m u_j. `a_solver` fixes A, the space and the problem kind.
/// Term norms use the Whitney (p, s) form on `binning`.
SeriesResult perturb_solve(const EnergySolver& a_solver, const CoefficientTensor& b, const GradientArray& h,
                           const Vector& g, const WhitneyBinning& binning, const NormParams& params, double c0_hat,
                           const SeriesOptions& options = {});

/// Interpolants of smooth bumps w supported inside the domain, with random
/// centres, radii and complex amplitudes.
std::vector<Vector> bump_functions(const FESpace& space, int count, std::uint64_t seed);
/// The fields A grad^m w for the bumps of bump_functions.
std::vector<GradientArray> bump_fields(const FESpace& space, const CoefficientTensor& a, int count,
                                       std::uint64_t seed);

/// Lower bound for the norm of H -> grad^m u on the Whitney (p, s) form.
ProbeResult probe_solution_operator(const EnergySolver& solver, const WhitneyBinning& binning,
                                    const NormParams& params, int trials, std::uint64_t seed, int bumps = 8);

struct C2Report {
    double observed = 0.0;
    double predicted = 0.0;
    double slack = 0.05;
    bool pass = false;
    /// p < 1 only: |u|^p <= sum_j |u_j|^p.
    bool subadditive = true;
};

/// C2_observed = |grad^m u|_{p,s} / |H|_{p,s} against C2_predicted (1 + slack).
/// Also fills trace.c2_observed.
C2Report verify_c2_bound(PerturbationTrace& trace, const FESolution& u, const GradientArray& h,
                         const WhitneyBinning& binning, const NormParams& params, double slack = 0.05);

/// Dirichlet: u = v + F with v the zero-trace solution for H - A grad^m F.
/// Boundary dofs of u are copied from F. Throws NumericalError when the weak
/// residual exceeds 1e-9.
FESolution reduce_to_homogeneous_boundary(const EnergySolver& a_solver, const GradientArray& h,
                                          const FESolution& f_extension);
/// Neumann: solves with data H + G and homogeneous boundary functional, where
/// G extends the Neumann data (phi -> <grad^m phi, G>).
FESolution reduce_to_homogeneous_boundary(const EnergySolver& a_solver, const GradientArray& h,
                                          const GradientArray& g_extension);

struct DualityReport {
    int trials = 0;
    double max_identity_error = 0.0;  // |<H, grad v> - <grad u, Phi>| / (|H| |grad v|)
    double c0_hat = 0.0;              // A at (p, s)
    double c0_star_hat = 0.0;         // A* at (p', s')
    double ratio = 0.0;               // c0_star_hat / (C1 c0_hat), C1 = 1
    double p_dual = 0.0;
    double s_dual = 0.0;
};

/// Pairing identities between the A-problem and the A*-problem plus the
/// operator-norm comparison at conjugate exponents. Requires 1 <= p < inf.
DualityReport duality_experiment(const EnergySolver& a_solver, const EnergySolver& adjoint_solver,
                                 const WhitneyBinning& binning, const NormParams& params, int trials,
                                 int probe_trials, std::uint64_t seed);

} // namespace ellab
