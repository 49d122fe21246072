#include "stflow/ito_tanaka.hpp"

#include "stflow/errors.hpp"

#include <cmath>

namespace stflow {

ItoTanakaMap::ItoTanakaMap(ResolventSolution sol) : d_(sol.U.grid().d), sol_(std::move(sol)) {}

ItoTanakaMap ItoTanakaMap::from_field(const Grid& g, const TimeGrid& time, double lambda, const FieldFn& U) {
    const int d = g.d;
    ResolventSolution sol;
    sol.lambda = lambda;
    sol.U = sample(g, time, d, U);
    sol.grad = GridFunction(g, time, d * d);
    sol.hess = GridFunction(g, time, d * d * d);
    for (int k = 0; k < time.levels(); ++k)
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
                const auto dj = diff(g, sol.U.slice(k, i), j);
                std::copy(dj.begin(), dj.end(), sol.grad.slice(k, i * d + j).begin());
                for (int l = 0; l < d; ++l) {
                    const auto djl = diff2(g, sol.U.slice(k, i), j, l);
                    std::copy(djl.begin(), djl.end(), sol.hess.slice(k, (i * d + j) * d + l).begin());
                }
            }
    sol.grad_sup = gradient_sup(sol.grad, d);
    return ItoTanakaMap(std::move(sol));
}

ItoTanakaMap ItoTanakaMap::solve(const DriftSpec& b, const Grid& g, const TimeGrid& time, double lambda,
                                 const PicardOptions& opt) {
    return ItoTanakaMap(solve_resolvent(sample_drift(b, g, time), lambda, opt));
}

void ItoTanakaMap::require_bound() const {
    if (!grad_bound())
        fail(ErrorKind::Precondition, "sup|grad U| = " + std::to_string(sol_.grad_sup) + " exceeds 1/2");
}

Vec ItoTanakaMap::U(double t, const Vec& x) const {
    Vec v(d_);
    for (int i = 0; i < d_; ++i) v(i) = sol_.U.interpolate(t, x, i);
    return v;
}

Mat ItoTanakaMap::grad_U(double t, const Vec& x) const {
    Mat J(d_, d_);
    for (int i = 0; i < d_; ++i)
        for (int j = 0; j < d_; ++j) J(i, j) = sol_.grad.interpolate(t, x, i * d_ + j);
    return J;
}

std::vector<double> ItoTanakaMap::hess_U(double t, const Vec& x) const {
    std::vector<double> h(static_cast<std::size_t>(d_ * d_ * d_));
    for (std::size_t c = 0; c < h.size(); ++c) h[c] = sol_.hess.interpolate(t, x, static_cast<int>(c));
    return h;
}

Vec ItoTanakaMap::gamma(double t, const Vec& x) const {
    require_bound();
    return x + U(t, x);
}

Vec ItoTanakaMap::gamma_inverse(double t, const Vec& y) const {
    require_bound();
    Vec x = y;
    for (int it = 0; it < 200; ++it) {
        const Vec next = y - U(t, x);
        const double step = (next - x).norm();
        x = next;
        if (step <= 1e-13 * (1.0 + y.norm())) break;
    }
    if (!((x + U(t, x) - y).norm() <= 1e-10 * (1.0 + y.norm())))
        fail(ErrorKind::NoConvergence, "inverse of gamma did not converge");
    return x;
}

TransformedCoeffs ItoTanakaMap::transformed_coeffs(double t, const Vec& y) const {
    const Vec x = gamma_inverse(t, y);
    return {lambda() * U(t, x), Mat::Identity(d_, d_) + grad_U(t, x)};
}

}  // namespace stflow
