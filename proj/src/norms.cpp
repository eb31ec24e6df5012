#include "ellab/norms.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "ellab/quadrature.hpp"

namespace ellab {

double default_p_min(double s, int d)
{
    return static_cast<double>(d - 1) / (static_cast<double>(d - 1) + s);
}

NormParams::NormParams(double p, double s, std::optional<double> p_min)
    : p_(p), s_(s), p_min_(p_min.value_or(default_p_min(s)))
{
    if (!(s > 0.0 && s < 1.0)) {
        throw InvalidArgument("NormParams: s must lie in (0, 1)");
    }
    if (!(p > p_min_)) {
        std::ostringstream msg;
        msg << "NormParams: p = " << p << " must exceed p_min(s) = " << p_min_;
        throw InvalidArgument(msg.str());
    }
}

double NormParams::p_prime() const
{
    const double inv = std::max(0.0, 1.0 - 1.0 / p_);
    return inv == 0.0 ? kInfinity : 1.0 / inv;
}

double NormParams::s_prime(int d) const
{
    return (1.0 - s_) + static_cast<double>(d - 1) * std::max(1.0 / p_ - 1.0, 0.0);
}

const char* to_string(NormForm form)
{
    return form == NormForm::kBall ? "ball" : "whitney";
}

double whitney_sum_norm(const std::vector<double>& mean_squares, const WhitneyGrid& grid, double p, double s, int d)
{
    if (grid.size() == 0) {
        throw InvalidArgument("Whitney norm: empty grid");
    }
    if (mean_squares.size() != grid.size()) {
        throw InvalidArgument("Whitney norm: one mean square per cube expected");
    }
    if (p == kInfinity) {
        double sup = 0.0;
        for (std::size_t q = 0; q < grid.size(); ++q) {
            sup = std::max(sup, std::sqrt(mean_squares[q]) * std::pow(grid[q].side, 1.0 - s));
        }
        return sup;
    }
    const double e = static_cast<double>(d - 1) + p - p * s;
    std::vector<double> terms(grid.size());
    for (std::size_t q = 0; q < grid.size(); ++q) {
        terms[q] = mean_squares[q] == 0.0 ? 0.0 : std::pow(mean_squares[q], 0.5 * p) * std::pow(grid[q].side, e);
    }
    return std::pow(pairwise_sum(terms), 1.0 / p);
}

double whitney_sequence_norm(const std::vector<double>& mean_squares, const WhitneyGrid& grid, const NormParams& params)
{
    return whitney_sum_norm(mean_squares, grid, params.p(), params.s());
}

WhitneyBinning::WhitneyBinning(const WhitneyGrid& grid, std::shared_ptr<const SampleSet> samples)
    : grid_(&grid), samples_(std::move(samples))
{
    if (!samples_) {
        throw InvalidArgument("WhitneyBinning: null sample set");
    }
    const std::size_t n = samples_->size();
    cube_of_.assign(n, -1);
    parallel_for(n, [&](std::size_t i) { cube_of_[i] = grid.locate(samples_->point(i)); });
    std::vector<std::size_t> count(grid.size() + 1, 0);
    for (const int q : cube_of_) {
        if (q >= 0) {
            ++count[static_cast<std::size_t>(q) + 1];
        }
    }
    offsets_.assign(grid.size() + 1, 0);
    for (std::size_t q = 0; q < grid.size(); ++q) {
        offsets_[q + 1] = offsets_[q] + count[q + 1];
    }
    members_.resize(offsets_.back());
    std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
    for (std::size_t i = 0; i < n; ++i) {
        if (cube_of_[i] >= 0) {
            members_[fill[static_cast<std::size_t>(cube_of_[i])]++] = i;
        }
    }
    for (std::size_t q = 0; q < grid.size(); ++q) {
        double w = 0.0;
        for (const std::size_t i : members(q)) {
            w += samples_->weight(i);
        }
        const double vol = grid[q].volume();
        defect_ = std::max(defect_, std::abs(w - vol) / vol);
    }
}

std::vector<double> cube_mean_squares(const WhitneyBinning& binning, const GradientArray& h)
{
    if (h.samples() != binning.samples()) {
        throw InvalidArgument("cube_mean_squares: field and binning use different samples");
    }
    const WhitneyGrid& grid = binning.grid();
    const auto& samples = *binning.samples();
    std::vector<double> out(grid.size());
    parallel_for(grid.size(), [&](std::size_t q) {
        const auto idx = binning.members(q);
        std::vector<double> terms(idx.size());
        for (std::size_t k = 0; k < idx.size(); ++k) {
            double s = 0.0;
            for (const cplx& v : h.at(idx[k])) {
                s += std::norm(v);
            }
            terms[k] = samples.weight(idx[k]) * s;
        }
        out[q] = pairwise_sum(terms) / grid[q].volume();
    });
    return out;
}

std::vector<double> cube_mean_squares(const WhitneyGrid& grid, const std::function<double(Point)>& abs2, int n)
{
    const Rule1D g = gauss_legendre(n);
    std::vector<double> out(grid.size());
    parallel_for(grid.size(), [&](std::size_t q) {
        const WhitneyCube& c = grid[q];
        std::vector<double> terms;
        terms.reserve(static_cast<std::size_t>(n * n));
        for (int j = 0; j < n; ++j) {
            for (int i = 0; i < n; ++i) {
                const Point x{c.corner.x + g.nodes[static_cast<std::size_t>(i)] * c.side,
                              c.corner.y + g.nodes[static_cast<std::size_t>(j)] * c.side};
                terms.push_back(g.weights[static_cast<std::size_t>(i)] * g.weights[static_cast<std::size_t>(j)] * abs2(x));
            }
        }
        out[q] = pairwise_sum(terms);
    });
    return out;
}

NormValue lps_norm_whitney(const GradientArray& h, const WhitneyBinning& binning, const NormParams& params)
{
    NormValue v;
    v.form = NormForm::kWhitney;
    v.p = params.p();
    v.s = params.s();
    v.tail_fraction = binning.grid().tail_fraction();
    v.depth = binning.grid().depth();
    v.value = whitney_sequence_norm(cube_mean_squares(binning, h), binning.grid(), params);
    return v;
}

NormValue lps_norm_whitney(const GradientArray& h, const WhitneyGrid& grid, const NormParams& params)
{
    return lps_norm_whitney(h, WhitneyBinning(grid, h.samples()), params);
}

NormValue lps_norm_ball(const GradientArray& h, const PolygonalDomain& domain, const WhitneyGrid& grid,
                        const NormParams& params, const BallOptions& options)
{
    if (grid.size() == 0) {
        throw InvalidArgument("lps_norm_ball: empty grid");
    }
    const Rule1D outer = gauss_legendre(options.outer);
    const Rule1D radial = gauss_legendre(options.radial);
    const double p = params.p();
    const double s = params.s();
    const auto& samples = *h.samples();
    const double density = static_cast<double>(samples.size()) / samples.total_weight();

    std::vector<double> per_cube(grid.size());
    std::vector<double> min_count(grid.size());
    parallel_for(grid.size(), [&](std::size_t q) {
        const WhitneyCube& c = grid[q];
        std::vector<double> terms;
        double fewest = kInfinity;
        double sup = 0.0;
        for (int j = 0; j < options.outer; ++j) {
            for (int i = 0; i < options.outer; ++i) {
                const Point x{c.corner.x + outer.nodes[static_cast<std::size_t>(i)] * c.side,
                              c.corner.y + outer.nodes[static_cast<std::size_t>(j)] * c.side};
                const double dist = domain.distance_to_boundary(x);
                const double rad = 0.5 * dist;
                fewest = std::min(fewest, std::numbers::pi * rad * rad * density);
                std::vector<double> inner;
                for (int a = 0; a < options.radial; ++a) {
                    const double rho = rad * radial.nodes[static_cast<std::size_t>(a)];
                    const double wr = rad * radial.weights[static_cast<std::size_t>(a)] * rho * 2.0 *
                                      std::numbers::pi / options.angular;
                    for (int k = 0; k < options.angular; ++k) {
                        const double t = 2.0 * std::numbers::pi * (k + 0.5) / options.angular;
                        double v = 0.0;
                        for (const cplx& z : h.evaluate({x.x + rho * std::cos(t), x.y + rho * std::sin(t)})) {
                            v += std::norm(z);
                        }
                        inner.push_back(wr * v);
                    }
                }
                const double avg = pairwise_sum(inner) / (std::numbers::pi * rad * rad);
                if (params.infinite()) {
                    sup = std::max(sup, std::sqrt(avg) * std::pow(dist, 1.0 - s));
                } else {
                    const double w = outer.weights[static_cast<std::size_t>(i)] *
                                     outer.weights[static_cast<std::size_t>(j)] * c.side * c.side;
                    terms.push_back(avg == 0.0 ? 0.0 : w * std::pow(avg, 0.5 * p) * std::pow(dist, p - 1.0 - p * s));
                }
            }
        }
        per_cube[q] = params.infinite() ? sup : pairwise_sum(terms);
        min_count[q] = fewest;
    });
    NormValue v;
    v.form = NormForm::kBall;
    v.p = p;
    v.s = s;
    v.tail_fraction = grid.tail_fraction();
    v.depth = grid.depth();
    v.value = params.infinite() ? *std::max_element(per_cube.begin(), per_cube.end())
                                : std::pow(pairwise_sum(per_cube), 1.0 / p);
    const double fewest = *std::min_element(min_count.begin(), min_count.end());
    if (fewest < options.min_samples) {
        std::ostringstream msg;
        msg << "smallest Whitney ball holds about " << fewest << " samples (< " << options.min_samples
            << "); refine the sampling";
        v.warning = msg.str();
    }
    return v;
}

GradientArray restrict_to_cover(const GradientArray& h, const WhitneyBinning& binning)
{
    GradientArray out = h;
    for (std::size_t i = 0; i < h.size(); ++i) {
        if (binning.cube_of(i) < 0) {
            for (cplx& v : out.at(i)) {
                v = 0.0;
            }
        }
    }
    return out;
}

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    return std::mt19937_64(seq);
}

GradientArray random_cube_field(const WhitneyBinning& binning, int width, std::mt19937_64& rng)
{
    std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
    GradientArray out(binning.samples(), width);
    std::vector<cplx> v(static_cast<std::size_t>(width));
    for (std::size_t q = 0; q < binning.grid().size(); ++q) {
        for (auto& z : v) {
            const double re = normal(rng);
            z = cplx(re, normal(rng));
        }
        for (const std::size_t i : binning.members(q)) {
            std::copy(v.begin(), v.end(), out.at(i).begin());
        }
    }
    return out;
}

GradientArray single_cube_field(const WhitneyBinning& binning, int width, std::size_t cube, std::mt19937_64& rng)
{
    std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
    GradientArray out(binning.samples(), width);
    std::vector<cplx> v(static_cast<std::size_t>(width));
    for (auto& z : v) {
        const double re = normal(rng);
        z = cplx(re, normal(rng));
    }
    for (const std::size_t i : binning.members(cube)) {
        std::copy(v.begin(), v.end(), out.at(i).begin());
    }
    return out;
}

DualityRatio duality_ratio(const GradientArray& f, const GradientArray& g, const WhitneyBinning& binning,
                           const NormParams& params)
{
    if (!f.compatible(g) || f.samples() != binning.samples()) {
        throw InvalidArgument("duality_ratio: shape or sampling mismatch");
    }
    if (params.infinite() || params.p() < 1.0) {
        throw InvalidArgument("duality_ratio: needs 1 <= p < infinity");
    }
    const auto& samples = *binning.samples();
    std::vector<cplx> per_cube(binning.grid().size());
    for (std::size_t q = 0; q < binning.grid().size(); ++q) {
        const auto idx = binning.members(q);
        std::vector<cplx> terms(idx.size());
        for (std::size_t k = 0; k < idx.size(); ++k) {
            const auto a = f.at(idx[k]);
            const auto b = g.at(idx[k]);
            cplx s = 0.0;
            for (std::size_t c = 0; c < a.size(); ++c) {
                s += std::conj(a[c]) * b[c];
            }
            terms[k] = samples.weight(idx[k]) * s;
        }
        per_cube[q] = pairwise_sum(terms);
    }
    DualityRatio r;
    r.pairing = std::abs(pairwise_sum(per_cube));
    r.bound = whitney_sum_norm(cube_mean_squares(binning, f), binning.grid(), params.p_prime(), 1.0 - params.s()) *
              whitney_sum_norm(cube_mean_squares(binning, g), binning.grid(), params.p(), params.s());
    r.ratio = r.bound > 0.0 ? r.pairing / r.bound : 0.0;
    return r;
}

namespace {

struct Panel {
    Point a;
    Point b;
    double length;
};

struct BesovIntegrator {
    const BoundaryField& f;
    double p;
    double s;
    int gauss;
    int levels;
    Rule1D rule;

    double kernel(Point x, Point y, const std::vector<cplx>& fx) const
    {
        const std::vector<cplx> fy = f(y);
        double diff = 0.0;
        for (std::size_t k = 0; k < fx.size(); ++k) {
            diff += std::norm(fx[k] - fy[k]);
        }
        if (diff == 0.0) {
            return 0.0;
        }
        return std::pow(diff, 0.5 * p) / std::pow(distance(x, y), static_cast<double>(kDim - 1) + p * s);
    }

    // Generic pair by tensor Gauss over [a0,a1] x [b0,b1] in the parameters
    // x = pa + u * ta, y = pb + v * tb.
    double rect(Point pa, Point ta, double a0, double a1, Point pb, Point tb, double b0, double b1) const
    {
        std::vector<double> terms;
        terms.reserve(rule.nodes.size() * rule.nodes.size());
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
            const double u = a0 + (a1 - a0) * rule.nodes[i];
            const Point x = pa + u * ta;
            const std::vector<cplx> fx = f(x);
            for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
                const double v = b0 + (b1 - b0) * rule.nodes[j];
                terms.push_back(rule.weights[i] * rule.weights[j] * kernel(x, pb + v * tb, fx));
            }
        }
        return pairwise_sum(terms) * (a1 - a0) * (b1 - b0);
    }

    // Self pair: 2 * int_0^L dt int_0^{L-t} g(x(u), x(u+t)) du, graded in t.
    double self(const Panel& pn) const
    {
        const Point tan = (1.0 / pn.length) * (pn.b - pn.a);
        const double len = pn.length;
        auto strip = [&](double t0, double t1) {
            std::vector<double> terms;
            for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
                const double t = t0 + (t1 - t0) * rule.nodes[i];
                terms.push_back(rule.weights[i] * (t1 - t0) * inner(pn, tan, len, t));
            }
            return pairwise_sum(terms);
        };
        std::vector<double> parts;
        for (int k = 0; k < levels; ++k) {
            parts.push_back(strip(len * std::ldexp(1.0, -k - 1), len * std::ldexp(1.0, -k)));
        }
        // Innermost strip [0, delta]: t = delta * tau^k removes the t^alpha
        // singularity of the integrand.
        const double delta = len * std::ldexp(1.0, -levels);
        const double alpha1 = p * (1.0 - s);
        const double kpow = std::clamp(std::ceil(2.0 / alpha1), 1.0, 20.0);
        std::vector<double> terms;
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
            const double tau = rule.nodes[i];
            const double t = delta * std::pow(tau, kpow);
            const double jac = delta * kpow * std::pow(tau, kpow - 1.0);
            terms.push_back(rule.weights[i] * jac * inner(pn, tan, len, t));
        }
        parts.push_back(pairwise_sum(terms));
        return 2.0 * pairwise_sum(parts);
    }

    double inner(const Panel& pn, Point tan, double len, double t) const
    {
        std::vector<double> terms;
        for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
            const double u = (len - t) * rule.nodes[j];
            const Point x = pn.a + u * tan;
            const Point y = pn.a + (u + t) * tan;
            terms.push_back(rule.weights[j] * kernel(x, y, f(x)));
        }
        return pairwise_sum(terms) * (len - t);
    }

    // Panels sharing the point c: grade dyadically toward (0, 0) in the
    // distances from c.
    double corner(Point c, Point ta, double la, Point tb, double lb) const
    {
        std::vector<double> parts;
        for (int k = 0; k < levels; ++k) {
            const double a1 = la * std::ldexp(1.0, -k);
            const double a0 = 0.5 * a1;
            const double b1 = lb * std::ldexp(1.0, -k);
            const double b0 = 0.5 * b1;
            parts.push_back(rect(c, ta, a0, a1, c, tb, 0.0, b0));
            parts.push_back(rect(c, ta, 0.0, a0, c, tb, b0, b1));
            parts.push_back(rect(c, ta, a0, a1, c, tb, b0, b1));
        }
        const double a = la * std::ldexp(1.0, -levels);
        const double b = lb * std::ldexp(1.0, -levels);
        parts.push_back(rect(c, ta, 0.0, a, c, tb, 0.0, b));
        return pairwise_sum(parts);
    }

    double total(const std::vector<Panel>& panels) const
    {
        const std::size_t n = panels.size();
        std::vector<double> per_panel(n);
        parallel_for(n, [&](std::size_t i) {
            const Panel& pi = panels[i];
            const Point ti = (1.0 / pi.length) * (pi.b - pi.a);
            const double tol = 1e-12 * pi.length;
            std::vector<double> parts;
            for (std::size_t j = 0; j < n; ++j) {
                const Panel& pj = panels[j];
                const Point tj = (1.0 / pj.length) * (pj.b - pj.a);
                if (i == j) {
                    parts.push_back(self(pi));
                } else if (distance(pi.b, pj.a) < tol) {
                    parts.push_back(corner(pi.b, -1.0 * ti, pi.length, tj, pj.length));
                } else if (distance(pi.a, pj.b) < tol) {
                    parts.push_back(corner(pi.a, ti, pi.length, -1.0 * tj, pj.length));
                } else {
                    parts.push_back(rect(pi.a, ti, 0.0, pi.length, pj.a, tj, 0.0, pj.length));
                }
            }
            per_panel[i] = pairwise_sum(parts);
        });
        return pairwise_sum(per_panel);
    }
};

std::vector<Panel> make_panels(const PolygonalDomain& domain, int per_edge)
{
    std::vector<Panel> out;
    for (std::size_t e = 0; e < domain.edge_count(); ++e) {
        const auto [a, b] = domain.edge(e);
        for (int k = 0; k < per_edge; ++k) {
            const Point pa = a + (static_cast<double>(k) / per_edge) * (b - a);
            const Point pb = a + (static_cast<double>(k + 1) / per_edge) * (b - a);
            out.push_back({pa, pb, distance(pa, pb)});
        }
    }
    return out;
}

} // namespace

BesovResult besov_boundary_seminorm(const BoundaryField& f, const PolygonalDomain& domain, double p, double s,
                                    const BesovOptions& options)
{
    if (!(p >= 1.0) || p == kInfinity) {
        throw InvalidArgument("besov_boundary_seminorm: needs 1 <= p < infinity");
    }
    if (!(s > 0.0 && s < 1.0)) {
        throw InvalidArgument("besov_boundary_seminorm: s must lie in (0, 1)");
    }
    if (options.panels_per_edge < 1 || options.grading_levels < 0 || options.gauss < 1) {
        throw InvalidArgument("besov_boundary_seminorm: invalid options");
    }
    const BesovIntegrator base{f, p, s, options.gauss, options.grading_levels, gauss_legendre(options.gauss)};
    const BesovIntegrator fine{f, p, s, options.gauss, options.grading_levels + 1, gauss_legendre(options.gauss)};
    BesovResult r;
    r.value = std::pow(base.total(make_panels(domain, options.panels_per_edge)), 1.0 / p);
    r.refined = std::pow(fine.total(make_panels(domain, 2 * options.panels_per_edge)), 1.0 / p);
    r.relative_change = r.refined > 0.0 ? std::abs(r.refined - r.value) / r.refined : 0.0;
    r.converged = r.relative_change < options.tolerance;
    return r;
}

EmbeddingReport embedding_check(const GradientArray& psi, const WhitneyBinning& binning, double diam, double q,
                                double sigma, double r, double omega)
{
    const double d1 = static_cast<double>(kDim - 1);
    if (!(0.0 < sigma && sigma < omega && omega < 1.0)) {
        throw InvalidArgument("embedding_check: needs 0 < sigma < omega < 1");
    }
    if (!(q > default_p_min(sigma))) {
        throw InvalidArgument("embedding_check: q must exceed p_min(sigma)");
    }
    const double lhs_line = d1 / q - sigma;
    const double rhs_line = d1 / r - omega;
    EmbeddingReport rep;
    if (std::abs(lhs_line - rhs_line) <= 1e-12) {
        rep.condition = 1;
    } else if (0.0 <= d1 / r && d1 / r <= d1 / q + omega - sigma) {
        rep.condition = 2;
    } else {
        std::ostringstream msg;
        msg << "embedding_check: (d-1)/q - sigma = " << lhs_line << " differs from (d-1)/r - omega = " << rhs_line
            << ", and (d-1)/r = " << d1 / r << " exceeds (d-1)/q + omega - sigma = " << d1 / q + omega - sigma;
        throw InvalidArgument(msg.str());
    }
    const std::vector<double> ms = cube_mean_squares(binning, psi);
    const double top = whitney_sum_norm(ms, binning.grid(), q, sigma);
    const double bottom = whitney_sum_norm(ms, binning.grid(), r, omega);
    if (top == 0.0 && bottom == 0.0) {
        rep.vacuous = true;
        return rep;
    }
    rep.ratio = top / (std::pow(diam, d1 / q - d1 / r + omega - sigma) * bottom);
    return rep;
}

double sequence_holder_ratio(const std::vector<double>& mean_squares, const WhitneyGrid& grid, double p0, double s0,
                             double p1, double s1, double t)
{
    if (!(p0 >= 1.0 && p1 >= 1.0 && p0 < kInfinity && p1 < kInfinity)) {
        throw InvalidArgument("sequence_holder_ratio: needs 1 <= p0, p1 < infinity");
    }
    if (!(t > 0.0 && t < 1.0)) {
        throw InvalidArgument("sequence_holder_ratio: needs 0 < t < 1");
    }
    const double pt = 1.0 / ((1.0 - t) / p0 + t / p1);
    const double st = (1.0 - t) * s0 + t * s1;
    const double n0 = whitney_sum_norm(mean_squares, grid, p0, s0);
    const double n1 = whitney_sum_norm(mean_squares, grid, p1, s1);
    if (n0 == 0.0 || n1 == 0.0) {
        return 0.0;
    }
    return whitney_sum_norm(mean_squares, grid, pt, st) / (std::pow(n0, 1.0 - t) * std::pow(n1, t));
}

ProbeResult operator_norm_probe(const SolutionMap& solver, const WhitneyBinning& binning, const NormParams& params,
                                int width, int trials, std::uint64_t seed, const std::vector<GradientArray>& extra)
{
    if (trials < 1) {
        throw InvalidArgument("operator_norm_probe: trials must be >= 1");
    }
    ProbeResult res;
    res.trials = trials;
    auto ratio = [&](const GradientArray& h) {
        const double den = lps_norm_whitney(h, binning, params).value;
        if (den == 0.0) {
            return 0.0;
        }
        return lps_norm_whitney(solver(h), binning, params).value / den;
    };
    for (int t = 0; t < trials; ++t) {
        std::mt19937_64 rng = make_rng(seed, static_cast<std::uint64_t>(t));
        if (t % 2 == 0) {
            res.global_max = std::max(res.global_max, ratio(random_cube_field(binning, width, rng)));
        } else {
            std::uniform_int_distribution<std::size_t> pick(0, binning.grid().size() - 1);
            const std::size_t q = pick(rng);
            res.single_max = std::max(res.single_max, ratio(single_cube_field(binning, width, q, rng)));
        }
    }
    for (const auto& h : extra) {
        res.extra_max = std::max(res.extra_max, ratio(h));
    }
    res.c0_hat = std::max({res.global_max, res.single_max, res.extra_max});
    return res;
}

double fit_slope(const std::vector<double>& x, const std::vector<double>& y)
{
    if (x.size() != y.size() || x.size() < 2) {
        throw InvalidArgument("fit_slope: need at least two points");
    }
    const double n = static_cast<double>(x.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxy / sxx;
}

GrowthFit indicator_growth(const PolygonalDomain& domain, const WhitneyGrid& grid, const NormParams& params, Point x0,
                           const std::vector<double>& radii)
{
    if (domain.distance_to_boundary(x0) > 1e-12) {
        throw InvalidArgument("indicator_growth: x0 must lie on the boundary");
    }
    GrowthFit fit;
    std::vector<double> lr;
    std::vector<double> llps;
    std::vector<double> lratio;
    for (const double r : radii) {
        const std::vector<double> ms =
            cube_mean_squares(grid, [&](Point y) { return distance(y, x0) < r ? 1.0 : 0.0; }, 8);
        std::vector<double> mass(grid.size());
        for (std::size_t q = 0; q < grid.size(); ++q) {
            mass[q] = ms[q] * grid[q].volume();
        }
        const double lps = whitney_sequence_norm(ms, grid, params);
        const double l1 = pairwise_sum(mass);
        fit.radii.push_back(r);
        fit.lps.push_back(lps);
        fit.l1.push_back(l1);
        lr.push_back(std::log(r));
        llps.push_back(std::log(lps));
        lratio.push_back(std::log(l1 / lps));
    }
    fit.lps_slope = fit_slope(lr, llps);
    fit.ratio_slope = fit_slope(lr, lratio);
    return fit;
}

} // namespace ellab
