#include "stflow/errors.hpp"
#include "stflow/monte_carlo.hpp"

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

FlowOptions options(double dt, int M, std::uint64_t seed = 1) {
    FlowOptions o;
    o.dt = dt;
    o.M = M;
    o.seed = seed;
    return o;
}

}  // namespace

TEST(Moments, RunningMaximumOfBrownianMotion) {
    const int M = 10000;
    const double dt = 1.0 / 256;
    const FlowEnsemble e = simulate_flow(drifts::zero(1), {vec({0.0})}, options(dt, M, 4));
    // One-sided: E max B = sqrt(2T / pi), discrete maximum lower by about 0.5826 sqrt(dt).
    std::vector<double> mx(M);
    for (int p = 0; p < M; ++p) {
        double m = 0.0;
        for (int k = 0; k < e.levels(); ++k) m = std::max(m, e.state(p, 0, k)(0));
        mx[p] = m;
    }
    const MomentEstimate one = summarize("max B", 1.0, mx);
    const double expect = std::sqrt(2.0 / std::numbers::pi) - 0.5826 * std::sqrt(dt);
    EXPECT_LT(std::abs(one.estimate - expect), 1.5 * one.ci);
    // Two-sided: E sup |B| = sqrt(pi T / 2); the grid sup sits slightly below.
    const MomentEstimate two = moment_sup(e, Quantity::Displacement, 1.0);
    EXPECT_LT(two.estimate, std::sqrt(std::numbers::pi / 2) + 2 * two.ci);
    EXPECT_GT(two.estimate, std::sqrt(std::numbers::pi / 2) - 1.2 * std::sqrt(dt) - 2 * two.ci);
    EXPECT_EQ(two.M, M);
}

TEST(Moments, ZeroDriftJacobianIsOne) {
    FlowEnsemble e = simulate_flow(drifts::zero(2), {vec({0.0, 0.0})}, options(1.0 / 32, 50));
    derivative_flow(drifts::zero(2), e);
    for (double p : {1.0, 2.0, 5.0}) {
        const MomentEstimate m = moment_sup(e, Quantity::Jacobian, p);
        EXPECT_EQ(m.estimate, 1.0);
        EXPECT_EQ(m.ci, 0.0);
    }
}

TEST(Moments, OrnsteinUhlenbeckJacobianSupAtStart) {
    FlowEnsemble e = simulate_flow(drifts::ornstein_uhlenbeck(1), {vec({0.5})}, options(1.0 / 32, 50));
    derivative_flow(drifts::ornstein_uhlenbeck(1), e, DerivativeScheme::Exponential);
    EXPECT_EQ(moment_sup(e, Quantity::Jacobian, 2.0).estimate, 1.0);
}

TEST(Moments, MissingJacobian) {
    const FlowEnsemble e = simulate_flow(drifts::zero(1), {vec({0.0})}, options(1.0 / 8, 4));
    try {
        moment_sup(e, Quantity::Jacobian, 1.0);
        FAIL();
    } catch (const Error& err) {
        EXPECT_EQ(err.kind(), ErrorKind::MissingArray);
    }
}

TEST(Moments, ConfidenceHalvesWhenPathsQuadruple) {
    const auto small = simulate_flow(drifts::sine(1), {vec({0.0})}, options(1.0 / 64, 1000, 2));
    const auto large = simulate_flow(drifts::sine(1), {vec({0.0})}, options(1.0 / 64, 4000, 3));
    const double ratio = moment_sup(small, Quantity::Displacement, 2.0).ci / moment_sup(large, Quantity::Displacement, 2.0).ci;
    EXPECT_GE(ratio, 1.6);
    EXPECT_LE(ratio, 2.5);
}

TEST(Moments, BootstrapAgreesWithNormal) {
    const auto e = simulate_flow(drifts::zero(1), {vec({0.0})}, options(1.0 / 64, 2000, 2));
    MomentOptions b;
    b.bootstrap = true;
    const auto normal = moment_sup(e, Quantity::Displacement, 1.0);
    const auto boot = moment_sup(e, Quantity::Displacement, 1.0, b);
    EXPECT_EQ(normal.estimate, boot.estimate);
    EXPECT_NEAR(boot.ci / normal.ci, 1.0, 0.15);
    EXPECT_EQ(boot.ci, moment_sup(e, Quantity::Displacement, 1.0, b).ci);
}

TEST(Moments, SeedInvariant) {
    const auto a = simulate_flow(drifts::tanh(1), {vec({0.2}), vec({0.3})}, options(1.0 / 64, 300, 99));
    const auto b = simulate_flow(drifts::tanh(1), {vec({0.2}), vec({0.3})}, options(1.0 / 64, 300, 99));
    EXPECT_EQ(moment_sup(a, Quantity::TwoPoint, 2.0).estimate, moment_sup(b, Quantity::TwoPoint, 2.0).estimate);
}

TEST(Regression, ZeroDriftSlopeIsP) {
    const auto res = two_point_ladder(drifts::zero(1), vec({0.0}), dyadic_ladder(), 2.0, Quantity::TwoPoint,
                                      FitModel::Power, options(1.0 / 32, 20));
    EXPECT_NEAR(res.fit.exponent, 2.0, 1e-10);
    EXPECT_LT(res.fit.residual, 1e-10);
}

TEST(Regression, OrnsteinUhlenbeckSlopeIsP) {
    const auto res = two_point_ladder(drifts::ornstein_uhlenbeck(1), vec({0.3}), dyadic_ladder(), 3.0,
                                      Quantity::TwoPoint, FitModel::Power, options(1.0 / 64, 200));
    EXPECT_NEAR(res.fit.exponent, 3.0, 0.05);
}

TEST(Regression, LogPowerRecoversExponent) {
    std::vector<double> r = dyadic_ladder(), m;
    for (double x : r) m.push_back(2.5 * std::pow(-std::log(x), -4.0));
    const ModulusFit f = modulus_regression(r, m, FitModel::LogPower);
    EXPECT_NEAR(f.exponent, 4.0, 1e-12);
    EXPECT_NEAR(std::exp(f.intercept), 2.5, 1e-12);
}

TEST(Regression, DegenerateAndShortLadders) {
    EXPECT_TRUE(modulus_regression({0.5, 0.25, 0.125, 0.0625}, {1, 1, 1, 1}, FitModel::Power).degenerate);
    EXPECT_THROW(modulus_regression({0.5, 0.25, 0.125}, {1, 2, 3}, FitModel::Power), Error);
}

TEST(Regression, LogModulusGradientNoWorseThanBound) {
    // phi = |log r|^{-3}, p = 2: fitted log-power exponent at least p(alpha - 1) - 1.
    const double alpha = 3.0, p = 2.0;
    const DriftSpec b = mollify_drift(drifts::log_modulus(1, 1.0, alpha), 16.0);
    const auto res = two_point_ladder(b, vec({0.0}), dyadic_ladder(), p, Quantity::JacobianTwoPoint,
                                      FitModel::LogPower, options(1.0 / 64, 200, 5));
    ASSERT_FALSE(res.fit.degenerate);
    EXPECT_GE(res.fit.exponent, p * (alpha - 1) - 1);
}

TEST(Convergence, SmoothDriftDecreases) {
    const auto rows = convergence_study(drifts::sine(1), {2, 4, 8, 16}, vec({0.3}), 1.0, options(1.0 / 64, 100));
    for (std::size_t i = 1; i < rows.size(); ++i) {
        EXPECT_LT(rows[i].flow.estimate, rows[i - 1].flow.estimate);
        EXPECT_LT(rows[i].gradient.estimate, rows[i - 1].gradient.estimate);
    }
    EXPECT_LE(rows.front().flow.estimate, 1.0 / 2);
}

TEST(Convergence, ReferenceAgainstItselfIsZero) {
    const auto rows = convergence_study(drifts::holder(1, 0.5), {2, 8}, vec({0.0}), 2.0, options(1.0 / 32, 20));
    const auto self = convergence_study(drifts::holder(1, 0.5), {8, 32}, vec({0.0}), 2.0, options(1.0 / 32, 20), true, 32.0);
    EXPECT_GT(rows[0].flow.estimate, 0.0);
    EXPECT_EQ(self.back().flow.estimate, 0.0);
    EXPECT_EQ(self.back().gradient.estimate, 0.0);
}

TEST(Convergence, HolderDriftStrictlyDecreasing) {
    const auto rows = convergence_study(drifts::holder(1, 0.5), {2, 4, 8, 16, 32}, vec({0.0}), 2.0,
                                        options(1.0 / 256, 400, 17));
    for (std::size_t i = 1; i < rows.size(); ++i) {
        EXPECT_LT(rows[i].flow.estimate, rows[i - 1].flow.estimate) << rows[i].n;
        EXPECT_LT(rows[i].gradient.estimate, rows[i - 1].gradient.estimate) << rows[i].n;
    }
}
