#pragma once

#include "stflow/sde_flow.hpp"

#include <string>
#include <vector>

namespace stflow {

/// Path functionals; two-point quantities compare `point` against `other`.
enum class Quantity { Position, Displacement, Jacobian, TwoPoint, JacobianTwoPoint };
const char* to_string(Quantity q) noexcept;

struct MomentEstimate {
    std::string label;
    double p = 1.0;
    double estimate = 0.0;
    double ci = 0.0;  ///< 95% half-width
    int M = 0;
};

struct MomentOptions {
    int point = 0;
    int other = 1;
    /// Percentile bootstrap instead of the normal approximation.
    bool bootstrap = false;
    int resamples = 2000;
    std::uint64_t seed = 0;
};

/// Mean over paths of sup over time levels of |q|^p; Jacobian norms are spectral.
MomentEstimate moment_sup(const FlowEnsemble& ens, Quantity q, double p, const MomentOptions& opt = {});

/// Mean and 95% half-width of path-level values, summed in path order.
MomentEstimate summarize(std::string label, double p, const std::vector<double>& values,
                         const MomentOptions& opt = {});

enum class FitModel { Power, LogPower };
const char* to_string(FitModel m) noexcept;

struct ModulusFit {
    FitModel model = FitModel::Power;
    std::vector<double> r;
    std::vector<double> moment;
    /// Power: slope of log moment in log r. LogPower: minus the slope in log|log r|.
    double exponent = 0.0;
    double intercept = 0.0;
    double residual = 0.0;  ///< RMS of the regression residuals
    bool degenerate = false;
};

ModulusFit modulus_regression(const std::vector<double>& r, const std::vector<double>& moment, FitModel model);

/// r_k = 2^{-k}, k = k_min..k_max.
std::vector<double> dyadic_ladder(int k_min = 3, int k_max = 10);

struct LadderResult {
    std::vector<MomentEstimate> moments;
    ModulusFit fit;
};

/**
 * Two-point moments of X (or grad X) between base and base + r e_1 over a separation ladder,
 * all points sharing each path's increments.
 */
LadderResult two_point_ladder(const DriftSpec& b, const Vec& base, const std::vector<double>& separations, double p,
                              Quantity q, FitModel model, const FlowOptions& opt);

struct ConvergenceRow {
    double n = 0.0;
    MomentEstimate flow;      ///< E sup |X^n - X^ref|^p
    MomentEstimate gradient;  ///< E sup ||grad X^n - grad X^ref||^p; M = 0 when not computed
};

/**
 * Mollified flows X^n against the reference X^{n_ref}, all from the same seed and initial
 * point. n_ref <= 0 picks 4 max n.
 */
std::vector<ConvergenceRow> convergence_study(const DriftSpec& b, const std::vector<double>& n_list, const Vec& x,
                                              double p, const FlowOptions& opt, bool with_gradient = true,
                                              double n_ref = 0.0);

}  // namespace stflow
