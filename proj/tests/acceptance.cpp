// Acceptance checks. Usage: acceptance [N ...]; runs every criterion when no
// number is given. Prints one PASS/FAIL line per criterion and exits nonzero
// on any failure.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "ellab/ellipticity.hpp"
#include "ellab/experiments.hpp"
#include "ellab/newton.hpp"
#include "ellab/perturbation.hpp"

using namespace ellab;
namespace fs = std::filesystem;

namespace {

const std::string kCli = ELLAB_CLI_PATH;
const std::string kPresets = ELLAB_PRESET_DIR;

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what)
    {
        if (!ok) {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// P1 space on the unit square with a Whitney cover.
struct Bench {
    std::shared_ptr<const FESpace> space;
    std::unique_ptr<WhitneyGrid> grid;
    std::unique_ptr<WhitneyBinning> binning;

    Bench(double h, int refinement, int depth)
        : space(make_space(grid_mesh(PolygonalDomain::unit_square(), h, CellShape::kTriangle), 1, 1, refinement)),
          grid(std::make_unique<WhitneyGrid>(whitney_decompose(PolygonalDomain::unit_square(), depth))),
          binning(std::make_unique<WhitneyBinning>(*grid, space->samples()))
    {
    }

    GradientArray field(std::uint64_t seed) const
    {
        std::mt19937_64 rng = make_rng(seed, 0);
        return random_cube_field(*binning, space->width(), rng);
    }
};

// Slot-reversal permutation: unit sup norm.
CoefficientTensor swap_perturbation(const CoefficientTensor& a)
{
    const int w = a.width();
    CoefficientTensor::Matrix r = CoefficientTensor::Matrix::Zero(w, w);
    for (int i = 0; i < w; ++i) {
        r(i, w - 1 - i) = 1.0;
    }
    return CoefficientTensor::constant(a.m(), a.n_components(), r);
}

// Runs one experiment section from inline TOML and requires every row to pass.
// Reports the extreme measured value of each case name.
void run_section(const std::string& section, const std::string& toml, Outcome& out)
{
    const ExperimentConfig config = ExperimentConfig::parse(toml, section);
    const ExperimentOutput o = run_experiment(section, config);
    std::map<std::string, std::pair<double, double>> range;
    std::size_t passed = 0;
    for (const ResultRow& r : o.rows) {
        auto [it, fresh] = range.try_emplace(r.case_name, r.measured, r.measured);
        if (!fresh) {
            it->second.first = std::min(it->second.first, r.measured);
            it->second.second = std::max(it->second.second, r.measured);
        }
        if (r.pass) {
            ++passed;
        } else {
            std::cerr << "  failed row: " << r.case_name << " " << r.params << " measured " << format_number(r.measured)
                      << " criterion " << r.criterion << '\n';
        }
    }
    out.require(!o.rows.empty(), section + " produced rows");
    out.require(passed == o.rows.size(), section + " rows");
    out.detail << ' ' << section << " " << passed << '/' << o.rows.size() << " rows;";
    for (const auto& [name, mm] : range) {
        out.detail << ' ' << name << '=' << format_number(mm.first);
        if (mm.second != mm.first) {
            out.detail << ".." << format_number(mm.second);
        }
    }
}

// 1. Series decay and agreement with the direct solve.
void criterion_1(Outcome& out)
{
    const auto t0 = std::chrono::steady_clock::now();
    const Bench b(1.0 / 32, 2, 7);
    const CoefficientTensor a = identity_tensor(1, 1);
    const CoefficientTensor r = swap_perturbation(a);
    const double eps = 0.05;
    out.require(std::abs(tensor_distance(r, r.scaled(0.0), *b.space->samples()) - 1.0) < 1e-15, "|R| = 1");
    const CoefficientTensor bt = a + r.scaled(eps);
    const NormParams params(2.0, 0.5);
    const EnergySolver sa(b.space, a, ProblemKind::kDirichlet);
    const double c0 = probe_solution_operator(sa, *b.binning, params, 16, 1).c0_hat;
    const GradientArray h = b.field(2);
    const SeriesResult sr = perturb_solve(sa, bt, h, {}, *b.binning, params, c0);
    double worst = 0.0;
    for (const double q : sr.trace.ratios) {
        worst = std::max(worst, q);
    }
    const GradientArray direct = EnergySolver(b.space, bt, ProblemKind::kDirichlet).solve(h).gradient();
    const double rel = (sr.u.gradient() - direct).l2_norm() / direct.l2_norm();
    const double elapsed = seconds_since(t0);
    out.require(sr.trace.converged, "converged");
    out.require(!sr.trace.ratios.empty(), "at least two terms");
    out.require(worst <= c0 * eps * 1.05, "ratios <= C0_hat eps 1.05");
    out.require(rel <= 1e-6, "direct agreement 1e-6");
    out.require(elapsed < 30.0, "runtime < 30 s");
    out.detail << " C0_hat=" << c0 << " max_ratio=" << worst << " bound=" << c0 * eps * 1.05
               << " terms=" << sr.trace.terms_used << " direct_rel=" << rel << " time=" << elapsed << "s";
}

// 2. C2 bound over epsilon, including the p = 1 run and a p < 1 run.
void criterion_2(Outcome& out)
{
    const Bench b(1.0 / 32, 2, 7);
    const CoefficientTensor a = identity_tensor(1, 1);
    const CoefficientTensor r = swap_perturbation(a);
    const EnergySolver sa(b.space, a, ProblemKind::kDirichlet);
    const GradientArray h = b.field(3);
    int checked = 0;
    for (const double p : {2.0, 1.0, 0.9}) {
        const NormParams params(p, 0.5);
        const double c0 = probe_solution_operator(sa, *b.binning, params, 16, 4).c0_hat;
        out.detail << " p=" << p << ":C0_hat=" << c0;
        for (const double eps : {0.01, 0.02, 0.05, 0.1}) {
            if (!(c0 * eps < 1.0)) {
                out.detail << " eps=" << eps << ":skipped";
                continue;
            }
            SeriesResult sr = perturb_solve(sa, a + r.scaled(eps), h, {}, *b.binning, params, c0);
            const C2Report rep = verify_c2_bound(sr.trace, sr.u, h, *b.binning, params, 0.05);
            // p >= 1: C0 / (1 - C0 eps); p <= 1: (C0^p / (1 - C0^p eps^p))^(1/p). Both agree at p = 1.
            const double linear = c0 / (1.0 - c0 * eps);
            const double power = std::pow(std::pow(c0, p) / (1.0 - std::pow(c0, p) * std::pow(eps, p)), 1.0 / p);
            if (p >= 1.0) {
                out.require(std::abs(rep.predicted - linear) <= 1e-12 * linear, "predicted formula");
            }
            if (p <= 1.0) {
                out.require(std::abs(rep.predicted - power) <= 1e-12 * power, "predicted power formula");
            }
            out.require(rep.pass, "C2 at p=" + format_number(p) + " eps=" + format_number(eps));
            out.detail << " eps=" << eps << ":" << rep.observed << "/" << rep.predicted;
            ++checked;
        }
    }
    out.require(checked >= 8, "enough epsilons with C0_hat eps < 1");
}

// 3. Convergence over a 5x5 lattice for a Neumann problem.
void criterion_3(Outcome& out)
{
    const auto t0 = std::chrono::steady_clock::now();
    const Bench b(1.0 / 16, 2, 6);
    std::mt19937_64 rng = make_rng(31, 0);
    const CoefficientTensor a = random_constant_tensor(1, 1, 0.3, rng);
    out.require(!a.constant_value().isApprox(adjoint_tensor(a).constant_value()), "non-symmetric A");
    const double lambda = estimate_garding_constant(a, *b.space, true).lambda_hat;
    out.require(lambda > 0.0, "lambda_hat > 0");
    const CoefficientTensor r = random_unit_piecewise(1, 1, CellGrid{{0, 0}, 1, 1, 4, 4}, rng);
    const double eps = 0.02;
    const CoefficientTensor bt = a + r.scaled(eps);
    const EnergySolver sa(b.space, a, ProblemKind::kNeumann);
    const GradientArray h = b.field(32);
    int converged = 0;
    int total = 0;
    double worst_c0 = 0.0;
    for (const double inv_p : {0.4, 0.45, 0.5, 0.55, 0.6}) {
        for (const double s : {0.4, 0.45, 0.5, 0.55, 0.6}) {
            const NormParams params(1.0 / inv_p, s);
            const double c0 = probe_solution_operator(sa, *b.binning, params, 8, 33).c0_hat;
            worst_c0 = std::max(worst_c0, c0);
            ++total;
            try {
                const SeriesResult sr = perturb_solve(sa, bt, h, {}, *b.binning, params, c0);
                converged += sr.trace.converged ? 1 : 0;
            } catch (const Error& e) {
                std::cerr << "  (s, 1/p) = (" << s << ", " << inv_p << "): " << e.what() << '\n';
            }
        }
    }
    const double elapsed = seconds_since(t0);
    out.require(converged == total, "every lattice point converges");
    out.require(elapsed < 300.0, "runtime < 5 min");
    out.detail << " lambda_hat=" << lambda << " converged=" << converged << '/' << total << " max_C0_hat=" << worst_c0
               << " time=" << elapsed << "s";
}

// 4. Pairing identity and the Hoelder constant.
void criterion_4(Outcome& out)
{
    const Bench b(1.0 / 16, 2, 6);
    std::mt19937_64 rng = make_rng(41, 0);
    const CoefficientTensor a = random_constant_tensor(1, 1, 0.3, rng);
    double worst = 0.0;
    for (const ProblemKind kind : {ProblemKind::kDirichlet, ProblemKind::kNeumann}) {
        const EnergySolver sa(b.space, a, kind);
        const EnergySolver ss(b.space, adjoint_tensor(a), kind);
        for (const auto& params : {NormParams(2.0, 0.5), NormParams(1.0 / 0.75, 0.4)}) {
            const DualityReport rep = duality_experiment(sa, ss, *b.binning, params, 32, 4, 42);
            out.require(rep.trials == 32, "32 trials");
            worst = std::max(worst, rep.max_identity_error);
        }
    }
    out.require(worst <= 1e-8, "pairing identity 1e-8");
    double holder = 0.0;
    for (const auto& params : {NormParams(2.0, 0.5), NormParams(4.0, 0.25), NormParams(1.5, 0.75)}) {
        for (int t = 0; t < 500; ++t) {
            std::mt19937_64 prng = make_rng(43, static_cast<std::uint64_t>(t));
            const GradientArray f = random_cube_field(*b.binning, 2, prng);
            const GradientArray g = random_cube_field(*b.binning, 2, prng);
            holder = std::max(holder, duality_ratio(f, g, *b.binning, params).ratio);
        }
    }
    out.require(holder <= 1.0 + 1e-12, "Hoelder constant 1 + 1e-12");
    out.detail << " identity_max=" << worst << " holder_max=" << format_number(holder);
}

const char* kNormsHeader = R"(
name = "acceptance"
seed = 1
[norms]
spacing = 0.03125
refinement = 2
whitney_depth = 6
width = 2
)";

// 5. Norm identities.
void criterion_5(Outcome& out)
{
    run_section("norms", std::string(kNormsHeader) + R"(
l2_fields = 100
ball_p = [1.0, 2.0, 4.0]
ball_s = [0.25, 0.5, 0.75]
ball_depths = [5, 6]
ball_fields = 3
quasi_p = 0.9
quasi_s = 0.5
quasi_pairs = 500
[norms.criteria]
l2_equivalence = "in [0.125, 8]"
ball_stability = "<= 0.1"
quasi_norm = "<= 1.000000000001"
)",
                out);
}

// 6. Embedding ratios and growth exponents.
void criterion_6(Outcome& out)
{
    run_section("norms", std::string(kNormsHeader) + R"(
embedding = [[2.0, 0.25, 2.0, 0.5], [4.0, 0.1, 2.0, 0.35], [1.5, 0.3, 3.0, 0.6]]
embedding_fields = 200
growth_p = 2.0
growth_s = 0.5
growth_x0 = [0.5, 0.0]
growth_k = [2, 3, 4, 5, 6]
growth_depth = 10
[norms.criteria]
embedding = "finite"
growth_slope = "<= 0.15"
)",
                out);
}

// 7. Sequence Hoelder interpolation.
void criterion_7(Outcome& out)
{
    run_section("norms", std::string(kNormsHeader) + R"(
sequence = [2.0, 0.5, 4.0, 0.25, 0.5]
sequence_fields = 500
[norms.criteria]
sequence_holder = "<= 1.000000000001"
)",
                out);
}

// 8. Biharmonic family and the BFS convergence rate.
void criterion_8(Outcome& out)
{
    run_section("garding", R"(
name = "acceptance"
seed = 1
[garding]
spacing = 0.125
padding = 1.0
rho = [-0.8, -0.6, -0.4, -0.2, 0.0, 0.2, 0.4, 0.6, 0.8, 0.9, 0.99, 0.999]
rho_spacing = 0.125
manufactured_spacings = [0.125, 0.0625, 0.03125]
[garding.tensors.biharmonic]
preset = "biharmonic"
rho = 0.0
[garding.criteria]
biharmonic = "in [0.999999, 1.000001]"
rho_inside = "> 0"
rho_zero = "<= 1e-6"
rho_monotone = "<= 0"
rho_endpoint = "< 0.01"
bfs_rate = ">= 0.9"
)",
                out);
}

// 9. Newton potential at paddings 4 and 8.
void criterion_9(Outcome& out)
{
    run_section("newton", R"(
name = "acceptance"
seed = 1
[newton]
spacing = 0.0625
refinement = 2
whitney_depth = 6
paddings = [4.0, 8.0]
fields = 6
bumps = 6
reference_point = [0.5, 0.5]
[newton.tensor]
preset = "identity"
m = 1
[newton.lattice]
kind = "grid"
s = [0.25, 0.5, 0.75]
inv_p = [0.25, 0.5, 1.0]
[newton.criteria]
inversion = "<= 1e-8"
l2_bound = "<= 8"
adjoint = "<= 1e-8"
uniform = "<= 20"
truncation = "report"
)",
                out);
}

// 10. Caccioppoli and Poincare monitors.
void criterion_10(Outcome& out)
{
    run_section("poincare", R"(
name = "acceptance"
seed = 1
[poincare]
p = 2.0
s = 0.5
refinement = 1
modes = 3
spacings = [0.0625, 0.03125]
functions = 100
caccioppoli_spacings = [0.0625, 0.03125]
caccioppoli_p = [1.0, 1.5]
caccioppoli_center = [0.5, 0.5]
caccioppoli_radius = 0.2
[poincare.criteria]
ratio = "finite"
stability = "<= 2"
caccioppoli = "finite"
)",
                out);
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// 11. Byte-identical CSVs across runs and thread counts.
void criterion_11(Outcome& out)
{
    const fs::path root = fs::temp_directory_path() / "ellab_acceptance_determinism";
    fs::remove_all(root);
    struct Run {
        std::string name;
        int threads;
    };
    const std::vector<Run> runs{{"first", 1}, {"second", 1}, {"threads4", 4}};
    std::vector<std::string> csv;
    std::vector<std::string> traces;
    for (const Run& r : runs) {
        const fs::path dir = root / r.name;
        const std::string cmd = kCli + " all --seed 1 --threads " + std::to_string(r.threads) + " --config " +
                                kPresets + "/default.toml --out " + dir.string() + " >/dev/null 2>&1";
        const int status = std::system(cmd.c_str());
        const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
        out.require(code == 0, r.name + " exit code " + std::to_string(code));
        csv.push_back(slurp(dir / "results.csv"));
        traces.push_back(slurp(dir / "perturb_traces.csv"));
    }
    out.require(!csv[0].empty(), "results.csv written");
    out.require(csv[0] == csv[1], "two runs identical");
    out.require(csv[0] == csv[2], "threads 1 vs 4 identical");
    out.require(traces[0] == traces[1] && traces[0] == traces[2], "trace CSVs identical");
    out.detail << " rows=" << std::count(csv[0].begin(), csv[0].end(), '\n') - 1 << " bytes=" << csv[0].size();
    fs::remove_all(root);
}

const std::vector<std::function<void(Outcome&)>> kCriteria{criterion_1, criterion_2, criterion_3, criterion_4,
                                                           criterion_5, criterion_6, criterion_7, criterion_8,
                                                           criterion_9, criterion_10, criterion_11};

bool run_criterion(int n)
{
    Outcome out;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        kCriteria[static_cast<std::size_t>(n - 1)](out);
    } catch (const std::exception& e) {
        out.pass = false;
        out.detail << " [exception: " << e.what() << "]";
    }
    std::cout << "criterion " << n << ": " << (out.pass ? "PASS" : "FAIL") << " (" << seconds_since(t0) << " s)"
              << out.detail.str() << std::endl;
    return out.pass;
}

} // namespace

int main(int argc, char** argv)
{
    std::vector<int> which;
    for (int i = 1; i < argc; ++i) {
        const int n = std::atoi(argv[i]);
        if (n < 1 || n > static_cast<int>(kCriteria.size())) {
            std::cerr << "usage: acceptance [1-" << kCriteria.size() << " ...]\n";
            return 2;
        }
        which.push_back(n);
    }
    if (which.empty()) {
        for (int n = 1; n <= static_cast<int>(kCriteria.size()); ++n) {
            which.push_back(n);
        }
    }
    bool ok = true;
    for (const int n : which) {
        ok = run_criterion(n) && ok;
    }
    return ok ? 0 : 1;
}
