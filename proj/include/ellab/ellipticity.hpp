#pragma once

#include <string>

#include "ellab/coefficients.hpp"
#include "ellab/fe_space.hpp"

namespace ellab {

struct EllipticityReport {
    double lambda_hat = 0.0;  // discrete Garding constant
    double Lambda_hat = 0.0;  // sup norm of the tensor over the samples
    bool domain_local = true;  // true: all dofs modulo polynomials; false: Dirichlet dofs removed
    std::size_t dofs = 0;      // size of the reduced eigenproblem
};

/// Thrown by solvers that refuse a non-coercive form.
class CoercivityError : public Error {
public:
    CoercivityError(const std::string& what, EllipticityReport report) : Error(what), report_(report) {}
    const EllipticityReport& report() const { return report_; }

private:
    EllipticityReport report_;
};

/// Smallest eigenvalue of Herm(S) x = lambda G x, with S the stiffness of A
/// and G the Gram matrix of grad^m. Local mode works on all dofs with the
/// polynomial kernel removed; otherwise the boundary dofs are dropped (the
/// space is then meant to live on a large box). Dense; at most 4000 dofs.
EllipticityReport estimate_garding_constant(const CoefficientTensor& a, const FESpace& space, bool local);

/// Square mesh of side `padding * diam` centered on the domain's bounding
/// box, for the whole-space proxy of global ellipticity.
Mesh garding_box_mesh(const PolygonalDomain& domain, double padding, double spacing, CellShape shape);

} // namespace ellab
