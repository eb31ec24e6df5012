#include "ellab/ellipticity.hpp"

#include <Eigen/Eigenvalues>

#include "ellab/assembly.hpp"

namespace ellab {

namespace {

Eigen::MatrixXcd hermitian_part(const SparseMatrix& s)
{
    const Eigen::MatrixXcd d(s);
    return 0.5 * (d + d.adjoint());
}

} // namespace

EllipticityReport estimate_garding_constant(const CoefficientTensor& a, const FESpace& space, bool local)
{
    if (space.ndofs() > 4000) {
        throw InvalidArgument("estimate_garding_constant: space too large for the dense eigensolver");
    }
    EllipticityReport rep;
    rep.domain_local = local;
    const std::vector<Point>& pts = space.samples()->points();
    rep.Lambda_hat = a.is_constant() ? sup_norm(a, std::vector<Point>{Point{}}) : sup_norm(a, pts);

    const Eigen::MatrixXcd s = hermitian_part(assemble_stiffness(space, a));
    const Eigen::MatrixXcd g = hermitian_part(assemble_gram(space));
    Eigen::MatrixXcd sr;
    Eigen::MatrixXcd gr;
    if (local) {
        // Add c * K K^H to both forms: kernel directions get Rayleigh quotient
        // c, which exceeds every eigenvalue of interest, while the quotient
        // on the Euclidean complement of the kernel is unchanged.
        const Eigen::MatrixXcd& k = space.kernel_basis();
        const Eigen::MatrixXcd kk = k * k.adjoint();
        const double c = 2.0 * rep.Lambda_hat + 1.0;
        const double scale = g.diagonal().real().maxCoeff() / std::max(kk.diagonal().real().maxCoeff(), 1e-300);
        sr = s + (c * scale) * kk;
        gr = g + scale * kk;
    } else {
        const auto& interior = space.interior_dofs();
        const auto n = static_cast<Eigen::Index>(interior.size());
        if (n == 0) {
            throw InvalidArgument("estimate_garding_constant: no interior dofs");
        }
        sr.resize(n, n);
        gr.resize(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < n; ++j) {
                sr(i, j) = s(interior[static_cast<std::size_t>(i)], interior[static_cast<std::size_t>(j)]);
                gr(i, j) = g(interior[static_cast<std::size_t>(i)], interior[static_cast<std::size_t>(j)]);
            }
        }
    }
    rep.dofs = static_cast<std::size_t>(sr.rows());
    Eigen::LLT<Eigen::MatrixXcd> chol(gr);
    if (chol.info() != Eigen::Success) {
        throw NumericalError("estimate_garding_constant: singular Gram matrix");
    }
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXcd> eig(sr, gr, Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success) {
        throw NumericalError("estimate_garding_constant: eigensolver failed");
    }
    rep.lambda_hat = eig.eigenvalues().minCoeff();
    return rep;
}

Mesh garding_box_mesh(const PolygonalDomain& domain, double padding, double spacing, CellShape shape)
{
    if (!(padding >= 1.0)) {
        throw InvalidArgument("garding_box_mesh: padding must be >= 1");
    }
    const BoundingBox b = domain.bounding_box();
    const Point c{0.5 * (b.lower.x + b.upper.x), 0.5 * (b.lower.y + b.upper.y)};
    const double cells = std::ceil(padding * domain.diameter() / spacing / 2.0);
    const double half = cells * spacing;
    const PolygonalDomain box = PolygonalDomain::rectangle({c.x - half, c.y - half}, {c.x + half, c.y + half});
    return grid_mesh(box, spacing, shape);
}

} // namespace ellab
