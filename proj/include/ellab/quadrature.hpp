#pragma once

#include <array>
#include <vector>

namespace ellab {

/// One-dimensional rule on the reference interval [0, 1].
struct Rule1D {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [0, 1], exact for polynomials of degree
/// 2n - 1. Nodes are computed by Newton iteration on P_n; n must be >= 1.
Rule1D gauss_legendre(int n);

/// Barycentric rule on the reference triangle. Weights sum to 1 (so they
/// must be multiplied by the physical area).
struct TriangleRule {
    std::vector<std::array<double, 3>> bary;
    std::vector<double> weights;
};

/// Symmetric three-point rule of degree 2.
TriangleRule triangle_rule_degree2();

} // namespace ellab
