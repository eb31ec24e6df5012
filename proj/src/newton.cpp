#include "ellab/newton.hpp"

#include <cmath>
#include <map>

#include "ellab/perturbation.hpp"

namespace ellab {

namespace {

constexpr double kTruncationWarning = 0.05;

Mesh box_mesh(const Mesh& mesh, double padding)
{
    if (!mesh.lattice()) {
        throw InvalidArgument("NewtonPotential: the mesh must be a lattice mesh");
    }
    const Lattice& lat = *mesh.lattice();
    BoundingBox bb{mesh.vertices().front(), mesh.vertices().front()};
    for (const Point v : mesh.vertices()) {
        bb.lower = {std::min(bb.lower.x, v.x), std::min(bb.lower.y, v.y)};
        bb.upper = {std::max(bb.upper.x, v.x), std::max(bb.upper.y, v.y)};
    }
    std::vector<Point> rim;
    for (std::size_t v = 0; v < mesh.vertices().size(); ++v) {
        if (mesh.is_boundary_node(static_cast<int>(v))) {
            rim.push_back(mesh.vertices()[v]);
        }
    }
    double diam = 0.0;
    for (const Point a : rim) {
        for (const Point b : rim) {
            diam = std::max(diam, distance(a, b));
        }
    }
    const Point c{0.5 * (bb.lower.x + bb.upper.x), 0.5 * (bb.lower.y + bb.upper.y)};
    const double half = 0.5 * padding * diam;
    const double h = lat.spacing;
    const Point o = lat.origin;
    const double i0 = std::min(std::floor((c.x - half - o.x) / h), std::round((bb.lower.x - o.x) / h) - 1.0);
    const double i1 = std::max(std::ceil((c.x + half - o.x) / h), std::round((bb.upper.x - o.x) / h) + 1.0);
    const double j0 = std::min(std::floor((c.y - half - o.y) / h), std::round((bb.lower.y - o.y) / h) - 1.0);
    const double j1 = std::max(std::ceil((c.y + half - o.y) / h), std::round((bb.upper.y - o.y) / h) + 1.0);
    const PolygonalDomain box =
        PolygonalDomain::rectangle({o.x + i0 * h, o.y + j0 * h}, {o.x + i1 * h, o.y + j1 * h});
    return grid_mesh(box, h, mesh.shape(), o);
}

} // namespace

NewtonPotential::NewtonPotential(std::shared_ptr<const FESpace> space, CoefficientTensor a0, double padding)
    : space_(std::move(space)), a0_(std::move(a0)), padding_(padding)
{
    if (!space_) {
        throw InvalidArgument("NewtonPotential: null space");
    }
    if (!a0_.is_constant()) {
        throw InvalidArgument("NewtonPotential: the tensor must be constant");
    }
    if (!(padding_ >= 1.0)) {
        throw InvalidArgument("NewtonPotential: padding must be >= 1");
    }
    const Mesh& mesh = space_->mesh();
    const Mesh box = box_mesh(mesh, padding_);
    // Stiffness of a constant tensor is exact on the unrefined rule; loads
    // come from the Omega space.
    box_ = make_space(box, space_->m(), space_->n_components(), 0);

    std::map<std::array<std::int64_t, 2>, int> box_node;
    const auto& bidx = box.lattice()->node_index;
    for (std::size_t v = 0; v < bidx.size(); ++v) {
        box_node.emplace(bidx[v], static_cast<int>(v));
    }
    const auto& idx = mesh.lattice()->node_index;
    dof_map_.assign(space_->ndofs(), -1);
    const int dpn = space_->dofs_per_node();
    for (std::size_t v = 0; v < idx.size(); ++v) {
        const int bv = box_node.at(idx[v]);
        if (box_->mesh().is_boundary_node(bv)) {
            throw InvalidArgument("NewtonPotential: the box does not enclose the domain");
        }
        for (int t = 0; t < dpn; ++t) {
            for (int c = 0; c < space_->n_components(); ++c) {
                dof_map_[static_cast<std::size_t>(space_->dof(static_cast<int>(v), t, c))] =
                    box_->dof(bv, t, c);
            }
        }
    }
    solver_ = std::make_unique<EnergySolver>(box_, a0_, ProblemKind::kDirichlet);
}

Vector NewtonPotential::box_dofs(const GradientArray& h) const
{
    if (h.samples() != space_->samples()) {
        throw InvalidArgument("NewtonPotential: H must be sampled on the domain space");
    }
    const Vector local = assemble_load(*space_, h);
    Vector b = Vector::Zero(static_cast<Eigen::Index>(box_->ndofs()));
    for (std::size_t i = 0; i < dof_map_.size(); ++i) {
        b[dof_map_[i]] = local[static_cast<Eigen::Index>(i)];
    }
    return solver_->solve_load(b).dofs;
}

FESolution NewtonPotential::apply(const GradientArray& h) const
{
    const Vector full = box_dofs(h);
    FESolution u{space_, Vector(static_cast<Eigen::Index>(space_->ndofs())), ProblemKind::kNeumann, "none"};
    for (std::size_t i = 0; i < dof_map_.size(); ++i) {
        u.dofs[static_cast<Eigen::Index>(i)] = full[dof_map_[i]];
    }
    return u;
}

double NewtonPotential::truncation_indicator(const GradientArray& h) const
{
    std::call_once(far_once_, [this] { far_ = std::make_unique<NewtonPotential>(space_, a0_, 2.0 * padding_); });
    const GradientArray near = apply(h).gradient();
    const GradientArray far = far_->apply(h).gradient();
    const double den = far.l2_norm();
    return den > 0.0 ? (near - far).l2_norm() / den : 0.0;
}

double newton_adjoint_defect(const NewtonPotential& pi, const NewtonPotential& pi_star, const GradientArray& f,
                             const GradientArray& g)
{
    if (pi.space_ptr() != pi_star.space_ptr()) {
        throw InvalidArgument("newton_adjoint_defect: potentials live on different spaces");
    }
    const GradientArray pf = pi.apply(f).gradient();
    const GradientArray pg = pi_star.apply(g).gradient();
    const double scale = pf.l2_norm() * g.l2_norm() + f.l2_norm() * pg.l2_norm();
    const double diff = std::abs(pairing(pf, g) - pairing(f, pg));
    return scale > 0.0 ? diff / scale : diff;
}

namespace {

void check_pair(const NewtonPotential& pi, const EnergySolver& solver, ProblemKind kind)
{
    if (solver.space_ptr() != pi.space_ptr()) {
        throw InvalidArgument("reduce_via_newton: solver and potential live on different spaces");
    }
    if (solver.kind() != kind) {
        throw InvalidArgument(std::string("reduce_via_newton: expected a ") + to_string(kind) + " solver");
    }
    if (!solver.tensor().is_constant() ||
        (solver.tensor().constant_value() - pi.tensor().constant_value()).norm() != 0.0) {
        throw InvalidArgument("reduce_via_newton: the operator must be the potential's constant tensor");
    }
}

void attach_truncation(NewtonReduction& out, const NewtonPotential& pi, const GradientArray& h, bool indicator)
{
    if (!indicator) {
        return;
    }
    out.truncation = pi.truncation_indicator(h);
    if (out.truncation > kTruncationWarning) {
        out.warning = "Newton potential truncation indicator " + std::to_string(out.truncation) + " exceeds 5%";
    }
}

} // namespace

NewtonReduction reduce_via_newton(const NewtonPotential& pi, const EnergySolver& solver, const GradientArray& h,
                                  const FESolution& f_extension, bool indicator)
{
    check_pair(pi, solver, ProblemKind::kDirichlet);
    const FESolution p = pi.apply(h);
    FESolution shift{p.space, p.dofs - f_extension.dofs, ProblemKind::kDirichlet, "none"};
    const GradientArray zero(h.samples(), h.width());
    const FESolution v = reduce_to_homogeneous_boundary(solver, zero, shift);
    NewtonReduction out{FESolution{p.space, p.dofs - v.dofs, ProblemKind::kDirichlet, "none"}, 0.0, 0.0, {}};
    for (const int i : solver.space().boundary_dofs()) {
        out.u.dofs[i] = f_extension.dofs[i];
    }
    out.residual = solver.residual(out.u, h);
    attach_truncation(out, pi, h, indicator);
    return out;
}

NewtonReduction reduce_via_newton(const NewtonPotential& pi, const EnergySolver& solver, const GradientArray& h,
                                  const Vector& g, bool indicator)
{
    check_pair(pi, solver, ProblemKind::kNeumann);
    const FESolution p = pi.apply(h);
    Vector eta = extract_neumann_data(pi.tensor(), p, h);
    if (g.size() != 0) {
        eta -= g;
    }
    const GradientArray zero(h.samples(), h.width());
    const FESolution v = solver.solve(zero, eta);
    NewtonReduction out{FESolution{p.space, p.dofs - v.dofs, ProblemKind::kNeumann, "none"}, 0.0, 0.0, {}};
    out.residual = solver.residual(out.u, h, g);
    attach_truncation(out, pi, h, indicator);
    return out;
}

} // namespace ellab
