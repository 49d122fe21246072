#include "stflow/errors.hpp"
#include "stflow/transport.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace stflow;

namespace {

Vec vec(std::initializer_list<double> v) {
    Vec x(static_cast<int>(v.size()));
    int i = 0;
    for (double a : v) x(i++) = a;
    return x;
}

FlowOptions options(double dt, int M, double T = 1.0, std::uint64_t seed = 3) {
    FlowOptions o;
    o.dt = dt;
    o.M = M;
    o.T = T;
    o.seed = seed;
    return o;
}

double sin0(const Vec& x) { return std::sin(x(0)); }

}  // namespace

TEST(Transport, ZeroDriftShiftsByBrownianPath) {
    const Grid g(1, 2.0, 33);
    const auto sol = solve_transport(drifts::zero(1), sin0, g, options(1.0 / 16, 4));
    for (int p = 0; p < sol.M(); ++p) {
        const BrownianPath B = sol.brownian(p);
        for (int k = 0; k <= sol.time().steps; ++k)
            for (std::size_t i = 0; i < g.size(); ++i) {
                const double x = g.point(i)(0) - B.at(sol.time().time(k))(0);
                EXPECT_NEAR(sol.at(p, k, i), std::sin(x), 1e-13);
            }
    }
}

TEST(Transport, ConstantDriftClosedForm) {
    const double c = 0.7;
    const Grid g(1, 2.0, 17);
    const auto sol = solve_transport(drifts::constant(vec({c})), sin0, g, options(1.0 / 16, 3));
    for (int p = 0; p < sol.M(); ++p) {
        const BrownianPath B = sol.brownian(p);
        for (int k = 0; k <= sol.time().steps; ++k) {
            const double t = sol.time().time(k);
            for (std::size_t i = 0; i < g.size(); ++i)
                EXPECT_NEAR(sol.at(p, k, i), std::sin(g.point(i)(0) - c * t - B.at(t)(0)), 1e-13);
        }
    }
}

TEST(Transport, InitialLevelIsDatum) {
    const Grid g(2, 1.0, 9);
    auto u0 = [](const Vec& x) { return std::cos(x(0)) * x(1); };
    const auto sol = solve_transport(drifts::rotation(), u0, g, options(1.0 / 8, 2));
    for (std::size_t i = 0; i < g.size(); ++i) EXPECT_EQ(sol.at(1, 0, i), u0(g.point(i)));
}

TEST(Transport, OrnsteinUhlenbeckMatchesCharacteristics) {
    // X^{-1}(0, t, x) = e^t (x - \int_0^t e^{-(t - r)} dB_r).
    const Grid g(1, 1.5, 13);
    std::vector<double> err;
    for (int j = 3; j <= 7; ++j) {
        FlowOptions o = options(std::ldexp(1.0, -j), 4, 1.0, 8);
        o.master_dt = std::ldexp(1.0, -12);
        const auto sol = solve_transport(drifts::ornstein_uhlenbeck(1), sin0, g, o);
        double worst = 0.0;
        for (int p = 0; p < o.M; ++p) {
            const BrownianPath B = sol.brownian(p);
            const double t = 1.0, h = B.dt();
            double integral = 0.0;  // by parts: B(t) - \int e^{-(t - r)} B(r) dr
            for (int k = 0; k <= B.steps(); ++k)
                integral += ((k == 0 || k == B.steps()) ? 0.5 : 1.0) * std::exp(-(t - k * h)) * B.at(k * h)(0) * h;
            const double stoch = B.at(t)(0) - integral;
            for (std::size_t i = 0; i < g.size(); ++i) {
                const double exact = std::sin(std::exp(t) * (g.point(i)(0) - stoch));
                worst = std::max(worst, std::abs(sol.at(p, sol.time().steps, i) - exact));
            }
        }
        err.push_back(worst);
    }
    for (std::size_t i = 1; i < err.size(); ++i) EXPECT_LT(err[i], 0.7 * err[i - 1]) << i;
}

TEST(Transport, RangeAndConstancy) {
    const Grid g(1, 2.0, 21);
    const auto sol = solve_transport(drifts::tanh(1), sin0, g, options(1.0 / 16, 5));
    for (int p = 0; p < sol.M(); ++p)
        for (int k = 0; k <= sol.time().steps; ++k)
            for (std::size_t i = 0; i < g.size(); ++i) {
                EXPECT_LE(sol.at(p, k, i), 1.0);
                EXPECT_GE(sol.at(p, k, i), -1.0);
            }
    const auto flat = solve_transport(drifts::tanh(1), [](const Vec&) { return 2.5; }, g, options(1.0 / 16, 2));
    for (int k = 0; k <= flat.time().steps; ++k)
        for (std::size_t i = 0; i < g.size(); ++i) EXPECT_EQ(flat.at(1, k, i), 2.5);
}

TEST(Transport, ModulusPersistsUnderRefinement) {
    std::vector<double> lip;
    for (int n : {33, 65, 129}) {
        const Grid g(1, 2.0, n);
        const auto sol = solve_transport(drifts::sine(1), sin0, g, options(1.0 / 16, 1));
        double m = 0.0;
        for (std::size_t i = 1; i < g.size(); ++i)
            m = std::max(m, std::abs(sol.at(0, sol.time().steps, i) - sol.at(0, sol.time().steps, i - 1)) / g.h());
        lip.push_back(m);
    }
    for (double v : lip) EXPECT_LT(v, 1.5 * lip.front());
}

TEST(Transport, LazyPathMatchesStored) {
    const Grid g(1, 2.0, 17);
    const auto sol = solve_transport(drifts::sine(1), sin0, g, options(1.0 / 8, 3));
    const auto lazy = solve_transport(drifts::sine(1), sin0, g, options(1.0 / 8, 3), false);
    EXPECT_FALSE(lazy.materialized());
    const auto v = lazy.path_values(2, {3, 7});
    for (int k = 0; k <= sol.time().steps; ++k) {
        EXPECT_EQ(v[k * 2], sol.at(2, k, 3));
        EXPECT_EQ(v[k * 2 + 1], sol.at(2, k, 7));
    }
}

TEST(TestFunction, DerivativesMatchDifferences) {
    const TestFunction phi{vec({0.2, -0.1}), 1.3};
    const Vec x = vec({0.5, 0.3});
    const double h = 1e-4;
    double lap = 0.0;
    for (int j = 0; j < 2; ++j) {
        Vec xp = x, xm = x;
        xp(j) += h;
        xm(j) -= h;
        EXPECT_NEAR(phi.grad(x)(j), (phi.value(xp) - phi.value(xm)) / (2 * h), 1e-7);
        lap += (phi.value(xp) - 2 * phi.value(x) + phi.value(xm)) / (h * h);
    }
    EXPECT_NEAR(phi.laplacian(x), lap, 1e-5);
    EXPECT_EQ(phi.value(vec({2.0, 0.0})), 0.0);
}

TEST(WeakResidual, ZeroAtStart) {
    const Grid g(1, 3.0, 97);
    const auto sol = solve_transport(drifts::sine(1), sin0, g, options(1.0 / 32, 20, 0.5), false);
    const auto w = weak_residual(sol, TestFunction{vec({0.0}), 1.0});
    for (int p = 0; p < w.M; ++p) EXPECT_EQ(w.at(p, 0), 0.0);
    EXPECT_EQ(w.mean[0], 0.0);
}

TEST(WeakResidual, ZeroDriftMeanWithinConfidence) {
    const Grid g(1, 3.0, 193);
    const auto sol = solve_transport(drifts::zero(1), sin0, g, options(1.0 / 64, 400, 0.5, 12), false);
    const auto w = weak_residual(sol, TestFunction{vec({0.2}), 1.0});
    EXPECT_LT(std::abs(w.mean.back()), w.ci.back());
}

TEST(WeakResidual, DecaysUnderJointRefinement) {
    for (double c : {0.0, 0.8}) {
        std::vector<double> rms;
        for (int j = 0; j < 3; ++j) {
            const Grid g(1, 3.0, 24 * (1 << j) + 1);
            FlowOptions o = options(std::ldexp(1.0, -4 - j), 100, 0.5, 5);
            o.master_dt = std::ldexp(1.0, -6);
            const auto sol = solve_transport(drifts::constant(vec({c})), sin0, g, o, false);
            rms.push_back(weak_residual(sol, TestFunction{vec({0.0}), 1.2}).rms_final);
        }
        for (std::size_t i = 1; i < rms.size(); ++i) EXPECT_LT(rms[i], rms[i - 1]) << c;
    }
}

TEST(WeakResidual, NeedsDivergence) {
    const Grid g(1, 2.0, 9);
    const auto sol = solve_transport(drifts::holder(1, 0.5), sin0, g, options(1.0 / 4, 1), false);
    EXPECT_THROW(weak_residual(sol, TestFunction{vec({0.0}), 1.0}), Error);
}

TEST(Nonuniqueness, BranchesAndSelection) {
    FlowOptions o = options(1.0 / 256, 200, 1.0, 31);
    const auto rep = nonuniqueness_demo(0.5, 1.0, {4, 8, 16, 32}, o);
    for (const auto& r : rep.branches) {
        EXPECT_NEAR(r.escaping, r.t * r.t / 4, 1e-15);
        EXPECT_LT(r.residual_escaping, 1e-15);
        EXPECT_EQ(r.residual_stationary, 0.0);
    }
    for (const auto& s : rep.selection) {
        EXPECT_LT(s.det_plus, -0.1);
        EXPECT_GT(s.det_minus, 0.1);
    }
    EXPECT_TRUE(rep.gaps_decreasing);
    EXPECT_THROW(nonuniqueness_demo(1.0, 1.0, {4}, o), Error);
}
