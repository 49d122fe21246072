#pragma once

#include <functional>
#include <vector>

namespace stflow {

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Gauss-Legendre rule with `points` nodes mapped to [a, b]. Supported sizes: 8, 16, 32.
QuadratureRule gauss_legendre(int points, double a, double b);

/// Adaptive Gauss-Kronrod on [a, b].
double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double rel_tol = 1e-12, unsigned max_depth = 10);

}  // namespace stflow
