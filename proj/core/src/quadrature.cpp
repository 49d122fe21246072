#include "stflow/quadrature.hpp"

#include "stflow/errors.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <string>

namespace stflow {

namespace {

template <unsigned N>
QuadratureRule mapped(double a, double b) {
    using G = boost::math::quadrature::gauss<double, N>;
    const auto& x = G::abscissa();
    const auto& w = G::weights();
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    QuadratureRule rule;
    // Boost stores the nonnegative half of a symmetric rule.
    for (std::size_t i = x.size(); i-- > 0;) {
        if (x[i] == 0.0) continue;
        rule.nodes.push_back(mid - half * x[i]);
        rule.weights.push_back(half * w[i]);
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
        rule.nodes.push_back(mid + half * x[i]);
        rule.weights.push_back(half * w[i]);
    }
    return rule;
}

}  // namespace

QuadratureRule gauss_legendre(int points, double a, double b) {
    switch (points) {
        case 8: return mapped<8>(a, b);
        case 16: return mapped<16>(a, b);
        case 32: return mapped<32>(a, b);
        default: fail(ErrorKind::Domain, "unsupported Gauss-Legendre size " + std::to_string(points));
    }
}

double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double rel_tol, unsigned max_depth) {
    if (a == b) return 0.0;
    double err = 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, max_depth,
                                                                          rel_tol, &err);
}

}  // namespace stflow
