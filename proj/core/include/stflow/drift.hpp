#pragma once

#include "stflow/grid.hpp"
#include "stflow/linalg.hpp"
#include "stflow/moduli.hpp"

#include <functional>
#include <optional>
#include <string>

namespace stflow {

using VecField = std::function<Vec(double t, const Vec& x)>;
using MatField = std::function<Mat(double t, const Vec& x)>;
using ScalarField = std::function<double(double t, const Vec& x)>;

/// Bounded drift b(t, x) with optional closed-form Jacobian and divergence.
struct DriftSpec {
    std::string name;
    int d = 1;
    VecField eval;
    /// grad(t, x)(i, j) = d_j b_i.
    MatField grad;
    ScalarField div;
    /// Mollification level; 0 when unmollified.
    double n = 0.0;
    std::optional<Modulus> modulus;

    Vec operator()(double t, const Vec& x) const { return eval(t, x); }
    bool differentiable() const { return static_cast<bool>(grad); }
    /// Jacobian, or SmoothnessRequired.
    Mat jacobian(double t, const Vec& x) const;
    /// Divergence from `div`, else the trace of `grad`, else SmoothnessRequired.
    double divergence(double t, const Vec& x) const;
};

namespace drifts {

DriftSpec zero(int d);
DriftSpec constant(const Vec& c);
/// -rate x.
DriftSpec ornstein_uhlenbeck(int d, double rate = 1.0);
/// tanh applied per component.
DriftSpec tanh(int d);
/// sin applied per component.
DriftSpec sine(int d);
/// (x_2 psi, -x_1 psi) with psi = exp(-|x|^2 / 2); divergence free.
DriftSpec rotation(double strength = 1.0);
/// sign(x) min(|x|, 1)^alpha per component.
DriftSpec holder(int d, double alpha);
/// sign(x)|x|^alpha per component, unclipped.
DriftSpec signed_power(int d, double alpha);
/// |x| per component.
DriftSpec abs(int d);
/// sign(x) C |log min(|x|, r0)|^{-alpha} per component.
DriftSpec log_modulus(int d, double C, double alpha, double r0 = 0.25);

}  // namespace drifts

/**
 * b * rho_n evaluated with the fixed rule of mollifier_rule, including the Jacobian. `shift`
 * moves the kernel by shift / n along every axis.
 */
DriftSpec mollify_drift(const DriftSpec& b, double n, double shift = 0.0);

/// Samples b on every level of a space-time grid.
GridFunction sample_drift(const DriftSpec& b, const Grid& g, const TimeGrid& time);

}  // namespace stflow
