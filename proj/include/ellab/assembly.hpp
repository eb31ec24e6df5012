#pragma once

#include <iosfwd>

#include <Eigen/Sparse>

#include "ellab/coefficients.hpp"
#include "ellab/fe_space.hpp"

namespace ellab {

using SparseMatrix = Eigen::SparseMatrix<cplx>;

/// S[i, j] = <grad^m phi_i, A grad^m phi_j> over the domain, by the space's
/// sample quadrature. The coefficient is evaluated at every sample; for
/// constant A the result is exact.
SparseMatrix assemble_stiffness(const FESpace& space, const CoefficientTensor& a);

/// Stiffness of the identity tensor: the Gram matrix of grad^m.
SparseMatrix assemble_gram(const FESpace& space);

/// b[i] = <grad^m phi_i, H>.
Vector assemble_load(const FESpace& space, const GradientArray& h);

/// A(x) H(x) at every sample.
GradientArray apply_tensor(const CoefficientTensor& a, const GradientArray& h);

/// sum_gamma integral of conj(F_gamma) G_gamma.
cplx pairing(const GradientArray& f, const GradientArray& g);

/// Neumann-type functional phi -> integral over the boundary of
/// Tr_{m-1} phi . g, as a vector over all dofs (zero away from the boundary).
/// For m = 1 the pairing uses g.v against phi; for m = 2 it uses
/// (g.dx, g.dy) against (phi_x, phi_y).
using BoundaryFunction = std::function<Jet(Point x, Point normal, int component)>;
Vector boundary_load(const FESpace& space, const BoundaryFunction& g, int order = 4);

/// Coordinate text format "row col re im" (one entry per line).
void write_coordinate(std::ostream& out, const SparseMatrix& s);
void write_coordinate(std::ostream& out, const Vector& v);

} // namespace ellab
