#include "stflow/drift.hpp"

#include "stflow/errors.hpp"
#include "stflow/mollifier.hpp"
#include "stflow/pde.hpp"

#include <cmath>
#include <memory>

namespace stflow {

Mat DriftSpec::jacobian(double t, const Vec& x) const {
    if (!grad) fail(ErrorKind::SmoothnessRequired, "drift '" + name + "' has no Jacobian");
    return grad(t, x);
}

double DriftSpec::divergence(double t, const Vec& x) const {
    if (div) return div(t, x);
    if (grad) return grad(t, x).trace();
    fail(ErrorKind::SmoothnessRequired, "drift '" + name + "' has no divergence");
}

namespace drifts {

namespace {

using Scalar = std::function<double(double)>;

// Applies a scalar map to every component; `deriv` fills a diagonal Jacobian when given.
DriftSpec componentwise(std::string name, int d, Scalar fn, Scalar deriv) {
    if (d < 1 || d > kMaxDim) fail(ErrorKind::Domain, "dimension out of range");
    DriftSpec b;
    b.name = std::move(name);
    b.d = d;
    b.eval = [fn](double, const Vec& x) {
        Vec v(x.size());
        for (int i = 0; i < x.size(); ++i) v(i) = fn(x(i));
        return v;
    };
    if (deriv) {
        b.grad = [deriv](double, const Vec& x) {
            Mat J = Mat::Zero(x.size(), x.size());
            for (int i = 0; i < x.size(); ++i) J(i, i) = deriv(x(i));
            return J;
        };
        b.div = [deriv](double, const Vec& x) {
            double s = 0.0;
            for (int i = 0; i < x.size(); ++i) s += deriv(x(i));
            return s;
        };
    }
    return b;
}

double sgn(double x) { return (x > 0.0) - (x < 0.0); }

}  // namespace

DriftSpec zero(int d) {
    DriftSpec b = componentwise("zero", d, [](double) { return 0.0; }, [](double) { return 0.0; });
    b.modulus = Modulus::linear(0.0);
    return b;
}

DriftSpec constant(const Vec& c) {
    DriftSpec b = componentwise("constant", static_cast<int>(c.size()), [](double) { return 0.0; },
                                [](double) { return 0.0; });
    b.eval = [c](double, const Vec&) { return c; };
    b.modulus = Modulus::linear(0.0);
    return b;
}

DriftSpec ornstein_uhlenbeck(int d, double rate) {
    DriftSpec b = componentwise("ou", d, [rate](double x) { return -rate * x; }, [rate](double) { return -rate; });
    b.modulus = Modulus::linear(std::abs(rate));
    return b;
}

DriftSpec tanh(int d) {
    DriftSpec b = componentwise("tanh", d, [](double x) { return std::tanh(x); }, [](double x) {
        const double c = std::cosh(x);
        return 1.0 / (c * c);
    });
    b.modulus = Modulus::linear(1.0);
    return b;
}

DriftSpec sine(int d) {
    DriftSpec b = componentwise("sine", d, [](double x) { return std::sin(x); }, [](double x) { return std::cos(x); });
    b.modulus = Modulus::linear(1.0);
    return b;
}

DriftSpec rotation(double strength) {
    DriftSpec b;
    b.name = "rotation";
    b.d = 2;
    b.eval = [strength](double, const Vec& x) {
        const double psi = strength * std::exp(-0.5 * x.squaredNorm());
        Vec v(2);
        v << x(1) * psi, -x(0) * psi;
        return v;
    };
    b.grad = [strength](double, const Vec& x) {
        const double psi = strength * std::exp(-0.5 * x.squaredNorm());
        Mat J(2, 2);
        J << -x(0) * x(1) * psi, (1.0 - x(1) * x(1)) * psi,
             -(1.0 - x(0) * x(0)) * psi, x(0) * x(1) * psi;
        return J;
    };
    b.div = [](double, const Vec&) { return 0.0; };
    b.modulus = Modulus::linear(strength);
    return b;
}

DriftSpec holder(int d, double alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0)) fail(ErrorKind::Domain, "Hoelder exponent must lie in (0, 1]");
    DriftSpec b = componentwise("holder", d, [alpha](double x) {
        return sgn(x) * std::pow(std::min(std::abs(x), 1.0), alpha);
    }, nullptr);
    b.modulus = Modulus::power_log(1.0, alpha, 0.0);
    return b;
}

DriftSpec signed_power(int d, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorKind::Domain, "exponent must lie in (0, 1)");
    DriftSpec b = componentwise("signed-power", d, [alpha](double x) { return sgn(x) * std::pow(std::abs(x), alpha); },
                                nullptr);
    b.modulus = Modulus::power_log(1.0, alpha, 0.0);
    return b;
}

DriftSpec abs(int d) {
    DriftSpec b = componentwise("abs", d, [](double x) { return std::abs(x); }, nullptr);
    b.modulus = Modulus::linear(1.0);
    return b;
}

DriftSpec log_modulus(int d, double C, double alpha, double r0) {
    if (!(r0 > 0.0 && r0 < 1.0)) fail(ErrorKind::Domain, "r0 must lie in (0, 1)");
    DriftSpec b = componentwise("log-modulus", d, [C, alpha, r0](double x) {
        const double r = std::min(std::abs(x), r0);
        return r == 0.0 ? 0.0 : sgn(x) * C * std::pow(-std::log(r), -alpha);
    }, nullptr);
    b.modulus = Modulus::inverse_log(C, alpha, r0);
    return b;
}

}  // namespace drifts

DriftSpec mollify_drift(const DriftSpec& b, double n, double shift) {
    if (!(n >= 1.0)) fail(ErrorKind::Domain, "mollification level must be >= 1");
    auto rule = std::make_shared<const MollifierRule>(mollifier_rule(b.d, shift));
    DriftSpec out;
    out.name = b.name;
    out.d = b.d;
    out.n = n;
    out.modulus = b.modulus;
    const VecField f = b.eval;
    out.eval = [f, rule, n](double t, const Vec& x) {
        Vec acc = Vec::Zero(x.size());
        for (std::size_t k = 0; k < rule->nodes.size(); ++k) acc += rule->weights[k] * f(t, x - rule->nodes[k] / n);
        return acc;
    };
    // d_j (b * rho_n)_i(x) = n \int b_i(x - z / n) d_j rho(z) dz.
    out.grad = [f, rule, n](double t, const Vec& x) {
        Mat J = Mat::Zero(x.size(), x.size());
        for (std::size_t k = 0; k < rule->nodes.size(); ++k)
            J += f(t, x - rule->nodes[k] / n) * rule->grad_weights[k].transpose();
        return (n * J).eval();
    };
    return out;
}

GridFunction sample_drift(const DriftSpec& b, const Grid& g, const TimeGrid& time) {
    if (b.d != g.d) fail(ErrorKind::Domain, "drift and grid dimensions differ");
    return sample(g, time, b.d, b.eval);
}

}  // namespace stflow
