#include "stflow/mollifier.hpp"

#include "stflow/errors.hpp"
#include "stflow/quadrature.hpp"

#include <cmath>
#include <numbers>

namespace stflow {

double bump(const Vec& z) {
    const double s = z.squaredNorm();
    if (s >= 1.0) return 0.0;
    return std::exp(-1.0 / (1.0 - s));
}

double bump_normalization(int d) {
    const double sphere = d == 1 ? 2.0 : d == 2 ? 2.0 * std::numbers::pi : 4.0 * std::numbers::pi;
    const double radial = integrate_adaptive(
        [d](double rho) { return rho >= 1.0 ? 0.0 : std::exp(-1.0 / (1.0 - rho * rho)) * std::pow(rho, d - 1); },
        0.0, 1.0, 1e-14);
    return 1.0 / (sphere * radial);
}

MollifierRule mollifier_rule(int d, double shift) {
    if (d < 1 || d > kMaxDim) fail(ErrorKind::Domain, "mollifier dimension out of range");
    std::vector<Vec> nodes;
    std::vector<double> w;
    if (d == 2) {
        // Polar: Gauss-Legendre in the radius, trapezoid in the angle.
        const QuadratureRule radial = gauss_legendre(16, 0.0, 1.0);
        const int angles = 24;
        for (std::size_t i = 0; i < radial.nodes.size(); ++i)
            for (int j = 0; j < angles; ++j) {
                const double a = 2.0 * std::numbers::pi * (j + 0.5) / angles;
                Vec z(2);
                z << radial.nodes[i] * std::cos(a), radial.nodes[i] * std::sin(a);
                nodes.push_back(z);
                w.push_back(radial.weights[i] * radial.nodes[i] * 2.0 * std::numbers::pi / angles);
            }
    } else {
        // Composite Gauss-Legendre per axis; panel edges absorb kinks at the origin.
        const int panels = d == 1 ? 4 : 2;
        const int points = d == 1 ? 16 : 8;
        std::vector<double> x, wx;
        for (int p = 0; p < panels; ++p) {
            const QuadratureRule q = gauss_legendre(points, -1.0 + 2.0 * p / panels, -1.0 + 2.0 * (p + 1) / panels);
            x.insert(x.end(), q.nodes.begin(), q.nodes.end());
            wx.insert(wx.end(), q.weights.begin(), q.weights.end());
        }
        const std::size_t m = x.size();
        std::size_t total = 1;
        for (int a = 0; a < d; ++a) total *= m;
        for (std::size_t flat = 0; flat < total; ++flat) {
            Vec z(d);
            double wt = 1.0;
            std::size_t r = flat;
            for (int a = 0; a < d; ++a) {
                const std::size_t i = r % m;
                r /= m;
                z(a) = x[i];
                wt *= wx[i];
            }
            nodes.push_back(z);
            w.push_back(wt);
        }
    }
    MollifierRule rule;
    rule.d = d;
    double mass = 0.0;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        const Vec& z = nodes[k];
        const double s = z.squaredNorm();
        if (s >= 1.0) continue;
        const double rho = std::exp(-1.0 / (1.0 - s));
        const Vec grad = rho * (-2.0 / ((1.0 - s) * (1.0 - s))) * z;
        Vec shifted = z;
        for (int a = 0; a < d; ++a) shifted(a) += shift;
        rule.nodes.push_back(shifted);
        rule.weights.push_back(w[k] * rho);
        rule.grad_weights.push_back(w[k] * grad);
        mass += w[k] * rho;
    }
    for (auto& v : rule.weights) v /= mass;
    // Rescale so that sum_k z_k grad_k = -I, i.e. linear functions differentiate exactly.
    double moment = 0.0;
    for (std::size_t k = 0; k < rule.nodes.size(); ++k)
        moment += (rule.nodes[k](0) - shift) * rule.grad_weights[k](0);
    for (auto& g : rule.grad_weights) g /= -moment;
    return rule;
}

std::vector<double> mollify_slice(const Grid& g, std::span<const double> f, double n) {
    if (!(n > 0.0)) fail(ErrorKind::Domain, "mollification level must be positive");
    const double h = g.h();
    const int R = static_cast<int>(std::floor(1.0 / (n * h)));
    if (R < 1) return {f.begin(), f.end()};
    // Offsets of the (2R+1)^d box inside the ball of radius 1/n.
    std::vector<std::array<int, kMaxDim>> offsets;
    std::vector<double> weights;
    std::size_t box = 1;
    for (int a = 0; a < g.d; ++a) box *= static_cast<std::size_t>(2 * R + 1);
    double mass = 0.0;
    for (std::size_t flat = 0; flat < box; ++flat) {
        std::array<int, kMaxDim> off{};
        Vec z(g.d);
        std::size_t r = flat;
        for (int a = 0; a < g.d; ++a) {
            off[a] = static_cast<int>(r % (2 * R + 1)) - R;
            r /= (2 * R + 1);
            z(a) = off[a] * h * n;
        }
        const double w = bump(z);
        if (w == 0.0) continue;
        offsets.push_back(off);
        weights.push_back(w);
        mass += w;
    }
    for (auto& w : weights) w /= mass;
    std::vector<double> out(f.size(), 0.0);
    for (std::size_t p = 0; p < f.size(); ++p) {
        const auto idx = g.unflatten(p);
        double acc = 0.0;
        for (std::size_t k = 0; k < offsets.size(); ++k) {
            std::array<int, kMaxDim> q{};
            for (int a = 0; a < g.d; ++a) q[a] = g.fold(idx[a] - offsets[k][a]);
            acc += weights[k] * f[g.flatten(q)];
        }
        out[p] = acc;
    }
    return out;
}

GridFunction mollify(const GridFunction& f, double n) {
    GridFunction out(f.grid(), f.time(), f.components());
    for (int k = 0; k < f.time().levels(); ++k)
        for (int c = 0; c < f.components(); ++c) {
            const auto m = mollify_slice(f.grid(), f.slice(k, c), n);
            std::copy(m.begin(), m.end(), out.slice(k, c).begin());
        }
    return out;
}

}  // namespace stflow
