#include "ellab/quadrature.hpp"

#include <cmath>
#include <numbers>

#include "ellab/common.hpp"

namespace ellab {

Rule1D gauss_legendre(int n)
{
    if (n < 1) {
        throw InvalidArgument("gauss_legendre: need at least one point");
    }
    Rule1D rule;
    rule.nodes.resize(static_cast<std::size_t>(n));
    rule.weights.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        // Chebyshev-like starting guess, then Newton on P_n.
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            double p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = pk;
            }
            const double pn = (n == 1) ? x : p1;
            const double pnm1 = (n == 1) ? 1.0 : p0;
            dp = n * (x * pn - pnm1) / (x * x - 1.0);
            const double step = pn / dp;
            x -= step;
            if (std::abs(step) < 1e-16) {
                break;
            }
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        // Map [-1, 1] -> [0, 1]; store in increasing order.
        const auto idx = static_cast<std::size_t>(n - 1 - i);
        rule.nodes[idx] = 0.5 * (x + 1.0);
        rule.weights[idx] = 0.5 * w;
    }
    return rule;
}

TriangleRule triangle_rule_degree2()
{
    TriangleRule rule;
    rule.bary = {{{2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0}},
                 {{1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0}},
                 {{1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0}}};
    rule.weights = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
    return rule;
}

} // namespace ellab
