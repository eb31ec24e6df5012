#include "ellab/perturbation.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include <json.hpp>

#include "ellab/assembly.hpp"

namespace ellab {

double c2_predicted(double c0, double epsilon, double p)
{
    if (p >= 1.0) {
        const double den = 1.0 - c0 * epsilon;
        return den > 0.0 ? c0 / den : std::numeric_limits<double>::infinity();
    }
    const double c0p = std::pow(c0, p);
    const double den = 1.0 - c0p * std::pow(epsilon, p);
    return den > 0.0 ? std::pow(c0p / den, 1.0 / p) : std::numeric_limits<double>::infinity();
}

void PerturbationTrace::write_csv(std::ostream& out) const
{
    out << "j,term_norm,ratio\n";
    out.precision(17);
    for (std::size_t j = 0; j < term_norms.size(); ++j) {
        out << j << ',' << term_norms[j] << ',';
        if (j > 0) {
            out << ratios[j - 1];
        }
        out << '\n';
    }
}

void PerturbationTrace::write_json(std::ostream& out) const
{
    nlohmann::ordered_json j;
    j["epsilon"] = epsilon;
    j["C0_hat"] = c0_hat;
    j["C2_predicted"] = c2_predicted;
    j["C2_observed"] = c2_observed;
    j["converged"] = converged;
    j["terms_used"] = terms_used;
    j["p"] = p;
    j["s"] = s;
    out << j.dump(2) << '\n';
}

double tensor_distance(const CoefficientTensor& a, const CoefficientTensor& b, const SampleSet& samples)
{
    if (a.kind() == CoefficientTensor::Kind::kCallable || b.kind() == CoefficientTensor::Kind::kCallable) {
        return sup_distance(a, b, samples.points());
    }
    std::vector<Point> pts = a.characteristic_points();
    const std::vector<Point> more = b.characteristic_points();
    pts.insert(pts.end(), more.begin(), more.end());
    return sup_distance(a, b, pts);
}

SeriesResult perturb_solve(const EnergySolver& a_solver, const CoefficientTensor& b, const GradientArray& h,
                           const Vector& g, const WhitneyBinning& binning, const NormParams& params, double c0_hat,
                           const SeriesOptions& options)
{
    if (options.max_terms < 1 || !(options.tol > 0.0)) {
        throw InvalidArgument("perturb_solve: need max_terms >= 1 and tol > 0");
    }
    const FESpace& space = a_solver.space();
    PerturbationTrace trace;
    trace.epsilon = tensor_distance(a_solver.tensor(), b, *space.samples());
    trace.c0_hat = c0_hat;
    trace.p = params.p();
    trace.s = params.s();
    if (c0_hat * trace.epsilon >= 1.0) {
        throw PerturbationRefused("perturb_solve: C0_hat * epsilon = " + std::to_string(c0_hat * trace.epsilon) +
                                      " >= 1 (C0_hat = " + std::to_string(c0_hat) +
                                      ", epsilon = " + std::to_string(trace.epsilon) + ")",
                                  c0_hat, trace.epsilon);
    }
    trace.c2_predicted = c2_predicted(c0_hat, trace.epsilon, params.p());
    const double q = std::min(params.p(), 1.0);
    auto record = [&](const FESolution& term) {
        const double n = lps_norm_whitney(term.gradient(), binning, params).value;
        if (!trace.term_norms.empty()) {
            const double prev = trace.term_norms.back();
            trace.ratios.push_back(prev > 0.0 ? n / prev : 0.0);
        }
        trace.term_norms.push_back(n);
        trace.power_sum += std::pow(n, q);
        ++trace.terms_used;
        return n;
    };

    FESolution term = a_solver.solve(h, g);
    FESolution sum = term;
    const double norm0 = record(term);
    if (trace.epsilon == 0.0 || norm0 == 0.0) {
        trace.converged = true;
        return {std::move(sum), std::move(trace)};
    }
    const CoefficientTensor diff = a_solver.tensor() - b;
    int streak = 0;
    for (int j = 1; j < options.max_terms; ++j) {
        term = a_solver.solve(apply_tensor(diff, term.gradient()));
        sum.dofs += term.dofs;
        const double n = record(term);
        if (n <= options.tol * norm0) {
            trace.converged = true;
            break;
        }
        streak = trace.ratios.back() >= 1.0 ? streak + 1 : 0;
        if (streak >= options.divergence_window) {
            const std::string what = "perturb_solve: term norms stopped decaying after " +
                                     std::to_string(trace.terms_used) + " terms (last ratio " +
                                     std::to_string(trace.ratios.back()) + ")";
            throw DivergenceError(what, std::move(trace));
        }
    }
    return {std::move(sum), std::move(trace)};
}

namespace {

// (1 - t^2)^3 on [-1, 1] and its first derivative.
double bump(double t) { return std::abs(t) < 1.0 ? std::pow(1.0 - t * t, 3) : 0.0; }
double bump_d(double t) { return std::abs(t) < 1.0 ? -6.0 * t * std::pow(1.0 - t * t, 2) : 0.0; }

bool square_clear(const Mesh& mesh, Point c, double r)
{
    for (const Point corner : {Point{c.x - r, c.y - r}, Point{c.x + r, c.y - r}, Point{c.x + r, c.y + r},
                               Point{c.x - r, c.y + r}}) {
        if (mesh.locate(corner) < 0) {
            return false;
        }
    }
    for (const BoundaryEdge& e : mesh.boundary_edges()) {
        for (const int v : {e.a, e.b}) {
            const Point p = mesh.vertices()[static_cast<std::size_t>(v)];
            if (std::abs(p.x - c.x) <= r && std::abs(p.y - c.y) <= r) {
                return false;
            }
        }
    }
    return true;
}

} // namespace

std::vector<Vector> bump_functions(const FESpace& space, int count, std::uint64_t seed)
{
    const Mesh& mesh = space.mesh();
    const double h = mesh.h();
    std::vector<Vector> out;
    for (int k = 0; k < count; ++k) {
        std::mt19937_64 rng = make_rng(seed, static_cast<std::uint64_t>(k));
        std::uniform_int_distribution<std::size_t> pick(0, mesh.cell_count() - 1);
        std::uniform_real_distribution<double> radius(2.0 * h, 6.0 * h);
        std::normal_distribution<double> normal(0.0, 1.0);
        Point c;
        double r = 0.0;
        bool found = false;
        for (int attempt = 0; attempt < 200 && !found; ++attempt) {
            c = mesh.cell_centroid(pick(rng));
            r = radius(rng);
            found = square_clear(mesh, c, r);
        }
        if (!found) {
            continue;
        }
        std::vector<cplx> amp(static_cast<std::size_t>(space.n_components()));
        for (auto& z : amp) {
            const double re = normal(rng);
            z = cplx(re, normal(rng));
        }
        out.push_back(space.interpolate([&](Point x, int comp) {
            const double tx = (x.x - c.x) / r;
            const double ty = (x.y - c.y) / r;
            const cplx z = amp[static_cast<std::size_t>(comp)];
            Jet j;
            j.v = z * bump(tx) * bump(ty);
            j.dx = z * bump_d(tx) * bump(ty) / r;
            j.dy = z * bump(tx) * bump_d(ty) / r;
            j.dxy = z * bump_d(tx) * bump_d(ty) / (r * r);
            return j;
        }));
    }
    return out;
}

std::vector<GradientArray> bump_fields(const FESpace& space, const CoefficientTensor& a, int count,
                                       std::uint64_t seed)
{
    std::vector<GradientArray> out;
    for (const Vector& w : bump_functions(space, count, seed)) {
        out.push_back(apply_tensor(a, space.gradient(w)));
    }
    return out;
}

ProbeResult probe_solution_operator(const EnergySolver& solver, const WhitneyBinning& binning,
                                    const NormParams& params, int trials, std::uint64_t seed, int bumps)
{
    const SolutionMap map = [&solver](const GradientArray& h) { return solver.solve(h).gradient(); };
    const std::vector<GradientArray> extra =
        bump_fields(solver.space(), solver.tensor(), bumps, seed ^ 0x9e3779b97f4a7c15ULL);
    return operator_norm_probe(map, binning, params, solver.space().width(), trials, seed, extra);
}

C2Report verify_c2_bound(PerturbationTrace& trace, const FESolution& u, const GradientArray& h,
                         const WhitneyBinning& binning, const NormParams& params, double slack)
{
    C2Report rep;
    rep.slack = slack;
    rep.predicted = trace.c2_predicted;
    const double hn = lps_norm_whitney(h, binning, params).value;
    const double un = lps_norm_whitney(u.gradient(), binning, params).value;
    rep.observed = hn > 0.0 ? un / hn : 0.0;
    trace.c2_observed = rep.observed;
    rep.pass = trace.converged && rep.observed <= rep.predicted * (1.0 + slack);
    if (params.p() < 1.0) {
        rep.subadditive = std::pow(un, params.p()) <= trace.power_sum * (1.0 + 1e-12);
        rep.pass = rep.pass && rep.subadditive;
    }
    return rep;
}

namespace {

constexpr double kReductionTolerance = 1e-9;

void check_residual(const EnergySolver& solver, const FESolution& u, const GradientArray& h, const Vector& g)
{
    const double r = solver.residual(u, h, g);
    if (!(r <= kReductionTolerance)) {
        throw NumericalError("reduce_to_homogeneous_boundary: residual " + std::to_string(r) + " exceeds 1e-9");
    }
}

} // namespace

FESolution reduce_to_homogeneous_boundary(const EnergySolver& a_solver, const GradientArray& h,
                                          const FESolution& f_extension)
{
    if (a_solver.kind() != ProblemKind::kDirichlet) {
        throw InvalidArgument("reduce_to_homogeneous_boundary: extension of a trace needs a Dirichlet solver");
    }
    if (f_extension.space != a_solver.space_ptr()) {
        throw InvalidArgument("reduce_to_homogeneous_boundary: extension lives on another space");
    }
    const GradientArray phi = h - apply_tensor(a_solver.tensor(), f_extension.gradient());
    FESolution u = a_solver.solve(phi);
    u.dofs += f_extension.dofs;
    for (const int i : a_solver.space().boundary_dofs()) {
        u.dofs[i] = f_extension.dofs[i];
    }
    u.gauge = "none";
    check_residual(a_solver, u, h, {});
    return u;
}

FESolution reduce_to_homogeneous_boundary(const EnergySolver& a_solver, const GradientArray& h,
                                          const GradientArray& g_extension)
{
    if (a_solver.kind() != ProblemKind::kNeumann) {
        throw InvalidArgument("reduce_to_homogeneous_boundary: extension of Neumann data needs a Neumann solver");
    }
    FESolution u = a_solver.solve(h + g_extension);
    check_residual(a_solver, u, h, assemble_load(a_solver.space(), g_extension));
    return u;
}

DualityReport duality_experiment(const EnergySolver& a_solver, const EnergySolver& adjoint_solver,
                                 const WhitneyBinning& binning, const NormParams& params, int trials,
                                 int probe_trials, std::uint64_t seed)
{
    if (!(params.p() >= 1.0) || params.infinite()) {
        throw InvalidArgument("duality_experiment: need 1 <= p < infinity");
    }
    if (a_solver.space_ptr() != adjoint_solver.space_ptr() || a_solver.kind() != adjoint_solver.kind()) {
        throw InvalidArgument("duality_experiment: solvers must share the space and the problem kind");
    }
    const NormParams dual(params.p_prime(), params.s_prime());
    DualityReport rep;
    rep.trials = trials;
    rep.p_dual = dual.p();
    rep.s_dual = dual.s();
    const int width = a_solver.space().width();
    std::vector<double> errors(static_cast<std::size_t>(std::max(trials, 0)));
    parallel_for(errors.size(), [&](std::size_t t) {
        std::mt19937_64 rng = make_rng(seed, t);
        const GradientArray h = random_cube_field(binning, width, rng);
        const GradientArray phi = random_cube_field(binning, width, rng);
        const GradientArray du = a_solver.solve(h).gradient();
        const GradientArray dv = adjoint_solver.solve(phi).gradient();
        const cplx lhs = pairing(h, dv);
        const cplx rhs = pairing(du, phi);
        const double scale = h.l2_norm() * dv.l2_norm();
        errors[t] = scale > 0.0 ? std::abs(lhs - rhs) / scale : std::abs(lhs - rhs);
    });
    for (const double e : errors) {
        rep.max_identity_error = std::max(rep.max_identity_error, e);
    }
    rep.c0_hat = probe_solution_operator(a_solver, binning, params, probe_trials, seed + 1).c0_hat;
    rep.c0_star_hat = probe_solution_operator(adjoint_solver, binning, dual, probe_trials, seed + 2).c0_hat;
    rep.ratio = rep.c0_hat > 0.0 ? rep.c0_star_hat / rep.c0_hat : 0.0;
    return rep;
}

} // namespace ellab
