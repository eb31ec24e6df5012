#pragma once

#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "ellab/solvers.hpp"

namespace ellab {

/// Discrete Newton potential of a constant tensor A0: H (sampled on Omega,
/// zero outside) maps to the zero-trace solution on a square box of side
/// about padding * diam(Omega). The box lattice extends the lattice of the
/// Omega mesh, so Omega nodes are box nodes and Omega basis functions are
/// restrictions of box basis functions.
class NewtonPotential {
public:
    /// `space` must live on a lattice mesh (grid_mesh). Throws InvalidArgument
    /// for non-constant tensors and CoercivityError when A0 is not coercive
    /// on the box.
    NewtonPotential(std::shared_ptr<const FESpace> space, CoefficientTensor a0, double padding = 4.0);
    NewtonPotential(const NewtonPotential&) = delete;
    NewtonPotential& operator=(const NewtonPotential&) = delete;

    const FESpace& space() const { return *space_; }
    const std::shared_ptr<const FESpace>& space_ptr() const { return space_; }
    const FESpace& box_space() const { return *box_; }
    const CoefficientTensor& tensor() const { return a0_; }
    double padding() const { return padding_; }

    /// Box dof of each Omega dof.
    const std::vector<int>& dof_map() const { return dof_map_; }

    /// Dofs of Pi H on the box.
    Vector box_dofs(const GradientArray& h) const;
    /// Pi H restricted to Omega.
    FESolution apply(const GradientArray& h) const;

    /// |grad^m (Pi H - Pi_2 H)|_{L2(Omega)} / |grad^m Pi_2 H|_{L2(Omega)} with
    /// Pi_2 the potential on a box of twice the padding (built on first use).
    double truncation_indicator(const GradientArray& h) const;

private:
    std::shared_ptr<const FESpace> space_;
    CoefficientTensor a0_;
    double padding_;
    std::shared_ptr<const FESpace> box_;
    std::unique_ptr<EnergySolver> solver_;
    std::vector<int> dof_map_;
    mutable std::once_flag far_once_;
    mutable std::unique_ptr<NewtonPotential> far_;
};

/// |<grad^m Pi F, G> - <F, grad^m Pi* G>| / (|grad^m Pi F| |G| + |F| |grad^m Pi* G|),
/// with `pi_star` the potential of the adjoint tensor on the same box.
double newton_adjoint_defect(const NewtonPotential& pi, const NewtonPotential& pi_star, const GradientArray& f,
                             const GradientArray& g);

struct NewtonReduction {
    FESolution u;
    double residual = 0.0;
    double truncation = 0.0;
    std::string warning;  // set when the truncation indicator exceeds 5%
};

/// Dirichlet problem with trace of `f_extension`: u = Pi H - v, where v is
/// A0-harmonic with the trace of Pi H - F.
NewtonReduction reduce_via_newton(const NewtonPotential& pi, const EnergySolver& solver, const GradientArray& h,
                                  const FESolution& f_extension, bool indicator = true);
/// Neumann problem with boundary functional g: u = Pi H - v, where v is
/// A0-harmonic with Neumann data eta - g and eta the Neumann data of Pi H.
NewtonReduction reduce_via_newton(const NewtonPotential& pi, const EnergySolver& solver, const GradientArray& h,
                                  const Vector& g, bool indicator = true);

} // namespace ellab
