#pragma once

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "ellab/assembly.hpp"
#include "ellab/ellipticity.hpp"

namespace ellab {

enum class ProblemKind { kDirichlet, kNeumann };

const char* to_string(ProblemKind kind);

/// Neumann data rejected because it does not annihilate the polynomial
/// kernel. `violation` is the largest |<P, b>| over the kernel basis.
class IncompatibleData : public Error {
public:
    IncompatibleData(const std::string& what, double violation) : Error(what), violation_(violation) {}
    double violation() const { return violation_; }

private:
    double violation_;
};

struct FESolution {
    std::shared_ptr<const FESpace> space;
    Vector dofs;
    ProblemKind kind = ProblemKind::kDirichlet;
    /// "zero-trace" for Dirichlet solves, "moments" when the integrals of
    /// d^gamma u, |gamma| <= m - 1, were set to zero, "none" otherwise.
    std::string gauge = "none";

    GradientArray gradient() const { return space->gradient(dofs); }
    /// CSV with header dof,re,im.
    void write_csv(std::ostream& out) const;
};

/// Factorizes the stiffness matrix of A once; every solve reuses it.
/// Construction checks coercivity with a Cholesky factorization of the
/// Hermitian part on the free dofs and throws CoercivityError on failure.
class EnergySolver {
public:
    EnergySolver(std::shared_ptr<const FESpace> space, CoefficientTensor a, ProblemKind kind);

    /// Dirichlet: zero trace. Neumann: natural condition with functional g
    /// (a dof vector supported on boundary dofs; empty means g = 0).
    FESolution solve(const GradientArray& h, const Vector& g = {}) const;
    /// Solve with an assembled right-hand side over all dofs.
    FESolution solve_load(const Vector& b) const;

    const FESpace& space() const { return *space_; }
    const std::shared_ptr<const FESpace>& space_ptr() const { return space_; }
    const CoefficientTensor& tensor() const { return a_; }
    const SparseMatrix& stiffness() const { return s_; }
    ProblemKind kind() const { return kind_; }

    /// Same quantity as the free function residual(), reusing the
    /// factorized operator's matrices.
    double residual(const FESolution& u, const GradientArray& h, const Vector& g = {}) const;

private:
    std::shared_ptr<const FESpace> space_;
    CoefficientTensor a_;
    ProblemKind kind_;
    SparseMatrix s_;
    std::vector<int> free_;
    std::vector<int> position_;  // dof -> index in free_, or -1
    Eigen::SparseLU<SparseMatrix> lu_;
    Eigen::SimplicialLLT<SparseMatrix> llt_;  // used instead of lu_ when S is Hermitian
    bool hermitian_ = false;
    Eigen::MatrixXcd gauge_solve_;  // (M K)^{-1} M for the moment gauge
    Eigen::VectorXd basis_norm_;    // |grad^m phi_i|
};

FESolution solve_dirichlet(const CoefficientTensor& a, const GradientArray& h, std::shared_ptr<const FESpace> space);
FESolution solve_neumann(const CoefficientTensor& a, const GradientArray& h, const Vector& g,
                         std::shared_ptr<const FESpace> space);

/// phi -> <grad^m phi, A grad^m u - H> on boundary-supported test functions,
/// as a vector over all dofs that vanishes off the boundary dofs.
Vector extract_neumann_data(const CoefficientTensor& a, const FESolution& u, const GradientArray& h);

/// max_phi |<grad^m phi, A grad^m u - H> - <Tr phi, g>| /
/// (|grad^m phi| (|A grad^m u| + |H|)), over interior basis functions for
/// Dirichlet and all basis functions for Neumann.
double residual(const CoefficientTensor& a, const FESolution& u, const GradientArray& h, const Vector& g = {});

/// (avg_{B(x,r)} |grad^m u|^2)^{1/2} divided by
/// (avg_{B(x,2r)} |grad^m u|^p)^{1/p} + (avg_{B(x,2r)} |H|^2)^{1/2}.
/// B(x, 2r) must lie in the mesh and u must solve L u = div_m H on it.
double caccioppoli_ratio(const CoefficientTensor& a, const FESolution& u, const GradientArray& h, Point x, double r,
                         double p);

/// Weighted m-th gradient of u at a point (empty outside the mesh).
std::vector<cplx> gradient_at(const FESpace& space, const Vector& u, Point x);

} // namespace ellab
