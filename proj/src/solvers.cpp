#include "ellab/solvers.hpp"

#include <Eigen/SparseCholesky>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include "ellab/quadrature.hpp"

namespace ellab {

const char* to_string(ProblemKind kind)
{
    return kind == ProblemKind::kDirichlet ? "dirichlet" : "neumann";
}

void FESolution::write_csv(std::ostream& out) const
{
    out << "dof,re,im\n";
    out.precision(17);
    for (Eigen::Index i = 0; i < dofs.size(); ++i) {
        out << i << ',' << dofs[i].real() << ',' << dofs[i].imag() << '\n';
    }
}

namespace {

SparseMatrix restrict_to(const SparseMatrix& s, const std::vector<int>& position, std::size_t n)
{
    std::vector<Eigen::Triplet<cplx>> trip;
    trip.reserve(static_cast<std::size_t>(s.nonZeros()));
    for (int k = 0; k < s.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(s, k); it; ++it) {
            const int r = position[static_cast<std::size_t>(it.row())];
            const int c = position[static_cast<std::size_t>(it.col())];
            if (r >= 0 && c >= 0) {
                trip.emplace_back(r, c, it.value());
            }
        }
    }
    SparseMatrix out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    out.setFromTriplets(trip.begin(), trip.end());
    out.makeCompressed();
    return out;
}

double normalized_residual(const FESpace& space, const SparseMatrix& s, const Eigen::VectorXd& basis_norm,
                           const CoefficientTensor& a, const FESolution& u, const GradientArray& h, const Vector& g)
{
    Vector r = s * u.dofs - assemble_load(space, h);
    if (g.size() != 0) {
        r -= g;
    }
    const double scale = apply_tensor(a, space.gradient(u.dofs)).l2_norm() + h.l2_norm();
    double worst = 0.0;
    for (std::size_t i = 0; i < space.ndofs(); ++i) {
        if (u.kind == ProblemKind::kDirichlet && space.is_boundary_dof(static_cast<int>(i))) {
            continue;
        }
        const double num = std::abs(r[static_cast<Eigen::Index>(i)]);
        if (num == 0.0) {
            continue;
        }
        const double den = basis_norm[static_cast<Eigen::Index>(i)] * scale;
        worst = std::max(worst, den > 0.0 ? num / den : std::numeric_limits<double>::infinity());
    }
    return worst;
}

Eigen::VectorXd basis_norms(const FESpace& space)
{
    const SparseMatrix gram = assemble_gram(space);
    Eigen::VectorXd out(static_cast<Eigen::Index>(space.ndofs()));
    for (Eigen::Index i = 0; i < out.size(); ++i) {
        out[i] = std::sqrt(std::abs(gram.coeff(i, i)));
    }
    return out;
}


} // namespace

EnergySolver::EnergySolver(std::shared_ptr<const FESpace> space, CoefficientTensor a, ProblemKind kind)
    : space_(std::move(space)), a_(std::move(a)), kind_(kind)
{
    if (!space_) {
        throw InvalidArgument("EnergySolver: null space");
    }
    s_ = assemble_stiffness(*space_, a_);
    basis_norm_ = basis_norms(*space_);
    const std::size_t n = space_->ndofs();
    position_.assign(n, -1);
    if (kind_ == ProblemKind::kDirichlet) {
        free_ = space_->interior_dofs();
    } else {
        const auto& pinned = space_->pinned_dofs();
        for (std::size_t i = 0; i < n; ++i) {
            if (!std::binary_search(pinned.begin(), pinned.end(), static_cast<int>(i))) {
                free_.push_back(static_cast<int>(i));
            }
        }
    }
    if (free_.empty()) {
        throw InvalidArgument("EnergySolver: no free dofs");
    }
    for (std::size_t i = 0; i < free_.size(); ++i) {
        position_[static_cast<std::size_t>(free_[i])] = static_cast<int>(i);
    }
    const SparseMatrix sf = restrict_to(s_, position_, free_.size());

    // Coercivity certificate: Herm(S) positive definite on the free dofs.
    const SparseMatrix herm = 0.5 * (SparseMatrix(sf) + SparseMatrix(sf.adjoint()));
    llt_.compute(herm);
    if (llt_.info() != Eigen::Success) {
        EllipticityReport rep;
        rep.domain_local = kind_ == ProblemKind::kNeumann;
        rep.lambda_hat = -std::numeric_limits<double>::infinity();
        if (n <= 4000) {
            rep = estimate_garding_constant(a_, *space_, kind_ == ProblemKind::kNeumann);
        }
        throw CoercivityError("EnergySolver: form is not coercive (lambda_hat = " + std::to_string(rep.lambda_hat) +
                                  ")",
                              rep);
    }
    double skew = 0.0;
    double big = 0.0;
    const SparseMatrix diff = sf - herm;
    for (int k = 0; k < diff.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(diff, k); it; ++it) {
            skew = std::max(skew, std::abs(it.value()));
        }
    }
    for (int k = 0; k < sf.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(sf, k); it; ++it) {
            big = std::max(big, std::abs(it.value()));
        }
    }
    // Hermitian up to rounding: the certificate factorization doubles as the
    // solver.
    hermitian_ = skew <= 1e-14 * big;
    if (!hermitian_) {
        lu_.analyzePattern(sf);
        lu_.factorize(sf);
        if (lu_.info() != Eigen::Success) {
            throw NumericalError("EnergySolver: singular system (" + lu_.lastErrorMessage() + ")");
        }
    }
    if (kind_ == ProblemKind::kNeumann) {
        const Eigen::MatrixXcd& m = space_->moment_matrix();
        const Eigen::MatrixXcd mk = m * space_->kernel_basis();
        gauge_solve_ = mk.partialPivLu().solve(m);
    }
}

FESolution EnergySolver::solve(const GradientArray& h, const Vector& g) const
{
    Vector b = assemble_load(*space_, h);
    if (g.size() != 0) {
        if (kind_ != ProblemKind::kNeumann) {
            throw InvalidArgument("EnergySolver: boundary functional given for a Dirichlet problem");
        }
        if (g.size() != b.size()) {
            throw InvalidArgument("EnergySolver: boundary functional has wrong length");
        }
        b += g;
    }
    return solve_load(b);
}

FESolution EnergySolver::solve_load(const Vector& b) const
{
    const std::size_t n = space_->ndofs();
    if (static_cast<std::size_t>(b.size()) != n) {
        throw InvalidArgument("EnergySolver: load vector has wrong length");
    }
    if (kind_ == ProblemKind::kNeumann) {
        const Eigen::MatrixXcd& k = space_->kernel_basis();
        double viol = 0.0;
        double bound = 0.0;
        for (Eigen::Index j = 0; j < k.cols(); ++j) {
            viol = std::max(viol, std::abs(k.col(j).dot(b)));
            bound = std::max(bound, k.col(j).norm() * b.norm());
        }
        if (viol > 1e-8 * bound) {
            throw IncompatibleData("solve_neumann: data does not annihilate the polynomial kernel (|<P, b>| = " +
                                       std::to_string(viol) + ")",
                                   viol);
        }
    }
    Vector bf(static_cast<Eigen::Index>(free_.size()));
    for (std::size_t i = 0; i < free_.size(); ++i) {
        bf[static_cast<Eigen::Index>(i)] = b[free_[i]];
    }
    const Vector uf = hermitian_ ? Vector(llt_.solve(bf)) : Vector(lu_.solve(bf));
    FESolution sol{space_, Vector::Zero(static_cast<Eigen::Index>(n)), kind_, "zero-trace"};
    for (std::size_t i = 0; i < free_.size(); ++i) {
        sol.dofs[free_[i]] = uf[static_cast<Eigen::Index>(i)];
    }
    if (kind_ == ProblemKind::kNeumann) {
        sol.dofs -= space_->kernel_basis() * (gauge_solve_ * sol.dofs);
        sol.gauge = "moments";
    }
    return sol;
}

FESolution solve_dirichlet(const CoefficientTensor& a, const GradientArray& h, std::shared_ptr<const FESpace> space)
{
    return EnergySolver(std::move(space), a, ProblemKind::kDirichlet).solve(h);
}

FESolution solve_neumann(const CoefficientTensor& a, const GradientArray& h, const Vector& g,
                         std::shared_ptr<const FESpace> space)
{
    return EnergySolver(std::move(space), a, ProblemKind::kNeumann).solve(h, g);
}

Vector extract_neumann_data(const CoefficientTensor& a, const FESolution& u, const GradientArray& h)
{
    const FESpace& space = *u.space;
    Vector r = assemble_stiffness(space, a) * u.dofs - assemble_load(space, h);
    for (const int i : space.interior_dofs()) {
        r[i] = 0.0;
    }
    return r;
}


double residual(const CoefficientTensor& a, const FESolution& u, const GradientArray& h, const Vector& g)
{
    const FESpace& space = *u.space;
    return normalized_residual(space, assemble_stiffness(space, a), basis_norms(space), a, u, h, g);
}

double EnergySolver::residual(const FESolution& u, const GradientArray& h, const Vector& g) const
{
    if (u.space != space_) {
        throw InvalidArgument("EnergySolver::residual: solution lives on another space");
    }
    return normalized_residual(*space_, s_, basis_norm_, a_, u, h, g);
}

std::vector<cplx> gradient_at(const FESpace& space, const Vector& u, Point x)
{
    const int c = space.mesh().locate(x);
    if (c < 0) {
        return {};
    }
    LocalBasis lb;
    space.eval(static_cast<std::size_t>(c), x, lb);
    const int n = space.n_components();
    const int sl = space.slots();
    std::vector<cplx> out(static_cast<std::size_t>(space.width()));
    for (int l = 0; l < lb.count; ++l) {
        const auto L = static_cast<std::size_t>(l);
        for (int comp = 0; comp < n; ++comp) {
            const cplx coef = u[lb.scalar_dof[L] * n + comp];
            for (int a = 0; a < sl; ++a) {
                out[static_cast<std::size_t>(comp * sl + a)] += coef * lb.grad[L][static_cast<std::size_t>(a)];
            }
        }
    }
    return out;
}

namespace {

// Polar Gauss x trapezoid rule on B(x, radius): points and weights whose sum
// is the ball area.
void polar_rule(Point x, double radius, std::vector<Point>& pts, std::vector<double>& wts)
{
    constexpr int kRadial = 24;
    constexpr int kAngular = 96;
    const Rule1D g = gauss_legendre(kRadial);
    pts.clear();
    wts.clear();
    for (int i = 0; i < kRadial; ++i) {
        const double rho = radius * g.nodes[static_cast<std::size_t>(i)];
        const double wr = radius * g.weights[static_cast<std::size_t>(i)] * rho;
        for (int k = 0; k < kAngular; ++k) {
            const double t = 2.0 * std::numbers::pi * (k + 0.5) / kAngular;
            pts.push_back({x.x + rho * std::cos(t), x.y + rho * std::sin(t)});
            wts.push_back(wr * 2.0 * std::numbers::pi / kAngular);
        }
    }
}

double mesh_boundary_distance(const Mesh& mesh, Point x)
{
    double d = std::numeric_limits<double>::infinity();
    for (const auto& e : mesh.boundary_edges()) {
        d = std::min(d, point_segment_distance(x, mesh.vertices()[static_cast<std::size_t>(e.a)],
                                               mesh.vertices()[static_cast<std::size_t>(e.b)]));
    }
    return d;
}

} // namespace

double caccioppoli_ratio(const CoefficientTensor& a, const FESolution& u, const GradientArray& h, Point x, double r,
                         double p)
{
    const FESpace& space = *u.space;
    if (!(r > 0.0) || !(p > 0.0 && p < 2.0)) {
        throw InvalidArgument("caccioppoli_ratio: need r > 0 and 0 < p < 2");
    }
    const Mesh& mesh = space.mesh();
    if (mesh.locate(x) < 0 || mesh_boundary_distance(mesh, x) < 2.0 * r) {
        throw InvalidArgument("caccioppoli_ratio: B(x, 2r) is not contained in the domain");
    }
    // Local solution check against test functions supported in B(x, 2r).
    const Vector res = assemble_stiffness(space, a) * u.dofs - assemble_load(space, h);
    const SparseMatrix gram = assemble_gram(space);
    const double scale = apply_tensor(a, space.gradient(u.dofs)).l2_norm() + h.l2_norm();
    const int dpn = space.dofs_per_node();
    const int n = space.n_components();
    for (std::size_t v = 0; v < mesh.vertices().size(); ++v) {
        if (distance(mesh.vertices()[v], x) + mesh.h() > 2.0 * r) {
            continue;
        }
        for (int t = 0; t < dpn; ++t) {
            for (int c = 0; c < n; ++c) {
                const int i = space.dof(static_cast<int>(v), t, c);
                const double den = std::sqrt(std::abs(gram.coeff(i, i))) * scale;
                if (den > 0.0 && std::abs(res[i]) > 1e-8 * den) {
                    throw InvalidArgument("caccioppoli_ratio: u does not solve the equation in B(x, 2r)");
                }
            }
        }
    }
    std::vector<Point> pts;
    std::vector<double> wts;
    auto average = [&](double radius, const std::function<double(Point)>& f) {
        polar_rule(x, radius, pts, wts);
        std::vector<double> terms(pts.size());
        for (std::size_t k = 0; k < pts.size(); ++k) {
            terms[k] = wts[k] * f(pts[k]);
        }
        return pairwise_sum(terms) / (std::numbers::pi * radius * radius);
    };
    auto grad2 = [&](Point y) {
        double s = 0.0;
        for (const cplx& z : gradient_at(space, u.dofs, y)) {
            s += std::norm(z);
        }
        return s;
    };
    auto h2 = [&](Point y) {
        double s = 0.0;
        for (const cplx& z : h.evaluate(y)) {
            s += std::norm(z);
        }
        return s;
    };
    const double lhs = std::sqrt(average(r, grad2));
    const double rhs = std::pow(average(2.0 * r, [&](Point y) { return std::pow(grad2(y), 0.5 * p); }), 1.0 / p) +
                       std::sqrt(average(2.0 * r, h2));
    if (rhs == 0.0) {
        return lhs == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    }
    return lhs / rhs;
}

} // namespace ellab
