#include "stflow/errors.hpp"
#include "stflow/heat_kernel.hpp"
#include "stflow/mollifier.hpp"
#include "stflow/pde.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace stflow;

namespace {

Vec vec(std::initializer_list<double> v) {
    Vec x(static_cast<int>(v.size()));
    int i = 0;
    for (double a : v) x(i++) = a;
    return x;
}

double sup_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace

TEST(Kernel, PointValues) {
    EXPECT_NEAR(kernel_eval(1.0, vec({0.0})), 0.398942280401433, 1e-12);
    EXPECT_NEAR(kernel_eval(0.5, vec({1.0, 0.0})), std::exp(-1.0) / std::numbers::pi, 1e-12);
    EXPECT_NEAR(kernel_eval(0.5, vec({1.0, 0.0})), 0.117099, 1e-6);
}

TEST(Kernel, RejectsNonPositiveTime) {
    EXPECT_THROW(kernel_eval(0.0, vec({0.0})), Error);
    EXPECT_THROW(grad_kernel(-1.0, vec({0.0})), Error);
    EXPECT_THROW(hess_kernel(0.0, vec({0.0, 1.0})), Error);
}

TEST(Kernel, DerivativesMatchFiniteDifferences) {
    const double eps = 1e-5;
    for (int d = 1; d <= 2; ++d)
        for (double t : {0.3, 1.0, 2.5}) {
            Vec x(d);
            for (int i = 0; i < d; ++i) x(i) = 0.4 - 0.7 * i;
            const Vec g = grad_kernel(t, x);
            const Mat H = hess_kernel(t, x);
            for (int i = 0; i < d; ++i) {
                Vec xp = x, xm = x;
                xp(i) += eps;
                xm(i) -= eps;
                EXPECT_NEAR(g(i), (kernel_eval(t, xp) - kernel_eval(t, xm)) / (2 * eps), 1e-8);
                const Vec gp = grad_kernel(t, xp), gm = grad_kernel(t, xm);
                for (int j = 0; j < d; ++j) EXPECT_NEAR(H(j, i), (gp(j) - gm(j)) / (2 * eps), 1e-8);
            }
            const double dt = (kernel_eval(t + eps, x) - kernel_eval(t - eps, x)) / (2 * eps);
            EXPECT_NEAR(kernel_dt(t, x), dt, 1e-8);
        }
}

TEST(Kernel, HeatEquationIdentity) {
    for (int d = 1; d <= 2; ++d)
        for (double t : {0.1, 1.0, 4.0}) {
            Vec x(d);
            x.setConstant(0.37);
            EXPECT_NEAR(hess_kernel(t, x).trace(), 2.0 * kernel_dt(t, x), 1e-12);
        }
}

TEST(Convolve, ConstantIsPreserved) {
    const Grid g(1, 4.0, 201);
    const std::vector<double> one(g.size(), 1.0);
    for (double t : {4 * g.h() * g.h(), 0.1, 1.0}) {
        const auto u = convolve(g, one, t);
        for (double v : u) EXPECT_NEAR(v, 1.0, 1e-12);
    }
}

TEST(Convolve, DiscreteNormalizationOfSampledKernel) {
    // Un-normalized Riemann sum of the sampled kernel is 1 to 1e-6 once t >= 4 h^2.
    const double h = 0.05;
    const double t = 4 * h * h;
    double total = 0.0;
    for (int m = -400; m <= 400; ++m) total += h * kernel_eval(t, vec({m * h}));
    EXPECT_NEAR(total, 1.0, 1e-6);
}

TEST(Convolve, SineDecaysAtHalfRate) {
    const Grid g(1, std::numbers::pi, 256, true);
    std::vector<double> f(g.size());
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = std::sin(g.coord(static_cast<int>(i)));
    for (double t : {0.01, 0.5, 2.0}) {
        const auto u = convolve(g, f, t);
        for (std::size_t i = 0; i < f.size(); ++i) EXPECT_NEAR(u[i], std::exp(-t / 2) * f[i], 1e-10);
    }
}

TEST(Convolve, TwoDimensionalProductMode) {
    const Grid g(2, std::numbers::pi, 64, true);
    std::vector<double> f(g.size());
    for (std::size_t p = 0; p < f.size(); ++p) {
        const Vec x = g.point(p);
        f[p] = std::sin(x(0)) * std::cos(2 * x(1));
    }
    const double t = 0.3;
    const auto u = convolve(g, f, t);
    for (std::size_t p = 0; p < f.size(); ++p) EXPECT_NEAR(u[p], std::exp(-2.5 * t) * f[p], 1e-10);
}

TEST(Convolve, SemigroupProperty) {
    const Grid g(1, 3.0, 241, true);
    std::vector<double> f(g.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double x = g.coord(static_cast<int>(i));
        f[i] = std::exp(std::cos(2.0 * std::numbers::pi * x / 6.0)) + (x > 0 ? 0.3 : 0.0);
    }
    const auto a = convolve(g, convolve(g, f, 0.2), 0.3);
    const auto b = convolve(g, f, 0.5);
    EXPECT_LT(sup_diff(a, b), 1e-9);
}

TEST(Convolve, MassIsPreserved) {
    const Grid g(1, 8.0, 321);
    std::vector<double> f(g.size());
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = std::exp(-std::pow(g.coord(static_cast<int>(i)), 2));
    const auto u = convolve(g, f, 0.5);
    double m0 = 0.0, m1 = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        m0 += f[i];
        m1 += u[i];
    }
    EXPECT_NEAR(m1 / m0, 1.0, 1e-10);
}

TEST(Convolve, EdgeExtensionKeepsSaturatedProfile) {
    const Grid g(1, 10.0, 401);
    std::vector<double> f(g.size());
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = std::tanh(g.coord(static_cast<int>(i)));
    const auto u = convolve(g, f, 0.25);
    EXPECT_NEAR(u.front(), f.front(), 1e-6);
    EXPECT_NEAR(u.back(), f.back(), 1e-6);
    EXPECT_NEAR(u[200], 0.0, 1e-12);
}

TEST(Convolve, GridTooCoarse) {
    const Grid g(1, 4.0, 41);
    const std::vector<double> f(g.size(), 1.0);
    try {
        convolve(g, f, 0.5 * g.h() * g.h());
        FAIL() << "expected GridTooCoarse";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::GridTooCoarse);
    }
}

TEST(Duhamel, ConstantSourceGivesTime) {
    const Grid g(1, 3.0, 61);
    const TimeGrid tg(0.0, 1.0, 64);
    const GridFunction f = sample(g, tg, 1, [](double, const Vec&) { return Vec::Ones(1); });
    const GridFunction u = duhamel(f);
    for (int k = 0; k <= tg.steps; ++k)
        for (std::size_t p = 0; p < g.size(); ++p) EXPECT_NEAR(u.at(k, 0, p), tg.time(k), 1e-13);
}

TEST(Duhamel, ZeroAtInitialTime) {
    const Grid g(1, 3.0, 61);
    const TimeGrid tg(0.0, 1.0, 16);
    const GridFunction f = sample(g, tg, 1, [](double, const Vec& x) { return Vec::Constant(1, std::cos(x(0))); });
    for (double v : duhamel_at(f, 0)) EXPECT_EQ(v, 0.0);
}

TEST(Duhamel, DecayingSineSource) {
    const Grid g(1, std::numbers::pi, 256, true);
    const TimeGrid tg(0.0, 1.0, 1024);
    const GridFunction f = sample(g, tg, 1, [](double s, const Vec& x) {
        return Vec::Constant(1, std::exp(-s / 2) * std::sin(x(0)));
    });
    const GridFunction u = duhamel(f);
    double worst = 0.0;
    for (int k = 0; k <= tg.steps; k += 64)
        for (std::size_t p = 0; p < g.size(); ++p) {
            const double t = tg.time(k);
            worst = std::max(worst, std::abs(u.at(k, 0, p) - t * std::exp(-t / 2) * std::sin(g.coord(static_cast<int>(p)))));
        }
    EXPECT_LT(worst, 1e-7);
    const auto single = duhamel_at(f, 512);
    for (std::size_t p = 0; p < g.size(); ++p) EXPECT_NEAR(single[p], u.at(512, 0, p), 1e-15);
}

TEST(Duhamel, DampedConstantSource) {
    const Grid g(1, 2.0, 41);
    const TimeGrid tg(0.0, 1.0, 32);
    const double lambda = 50.0;
    const GridFunction f = sample(g, tg, 1, [](double, const Vec&) { return Vec::Ones(1); });
    const GridFunction u = duhamel(f, lambda);
    for (int k = 0; k <= tg.steps; ++k)
        EXPECT_NEAR(u.at(k, 0, 7), -std::expm1(-lambda * tg.time(k)) / lambda, 1e-14);
}

TEST(Duhamel, RejectsStepBelowGridScale) {
    const Grid g(1, 2.0, 41);
    EXPECT_THROW(DuhamelStepper(g, 0.5 * g.h() * g.h()), Error);
}

TEST(Mollifier, RuleHasUnitMassAndZeroMean) {
    for (int d = 1; d <= 2; ++d) {
        const MollifierRule rule = mollifier_rule(d);
        double mass = 0.0;
        Vec mean = Vec::Zero(d);
        Mat grad_moment = Mat::Zero(d, d);
        for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
            mass += rule.weights[k];
            mean += rule.weights[k] * rule.nodes[k];
            grad_moment += rule.nodes[k] * rule.grad_weights[k].transpose();
        }
        EXPECT_NEAR(mass, 1.0, 1e-14);
        EXPECT_LT(mean.norm(), 1e-14);
        // \int z_i d_j rho = -delta_ij
        EXPECT_LT((grad_moment + Mat::Identity(d, d)).norm(), 1e-12);
    }
}

TEST(Mollifier, NormalizationConstant) {
    // mpmath: \int_{-1}^{1} exp(-1/(1-x^2)) dx
    EXPECT_NEAR(1.0 / bump_normalization(1), 0.44399381616807944, 1e-12);
}

TEST(Mollifier, GridMollificationIsIdentityBelowSpacing) {
    const Grid g(1, 1.0, 21);
    std::vector<double> f(g.size());
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = std::abs(g.coord(static_cast<int>(i)));
    EXPECT_EQ(mollify_slice(g, f, 1.0 / (0.5 * g.h())), f);
    const auto m = mollify_slice(g, f, 2.0);
    EXPECT_GT(m[10], 0.0);
    // Convexity of |x| away from the edge-extended ends.
    for (std::size_t i = 5; i + 5 < f.size(); ++i) EXPECT_GE(m[i] + 1e-15, f[i]);
}
