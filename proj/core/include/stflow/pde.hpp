#pragma once

#include "stflow/grid.hpp"
#include "stflow/moduli.hpp"

#include <functional>
#include <vector>

namespace stflow {

using FieldFn = std::function<Vec(double t, const Vec& x)>;

/// Samples a vector-valued function on every level of a space-time grid.
GridFunction sample(const Grid& g, const TimeGrid& time, int components, const FieldFn& fn);

struct PicardOptions {
    double tol = 1e-8;
    int max_iter = 200;
    /// Shortest subinterval tried before giving up, as a fraction of the horizon.
    int min_fraction = 64;
    /// Rate lambda of the damped semigroup e^{-lambda t} K(t).
    double decay = 0.0;
    /// First iterate; zero when null.
    const GridFunction* initial_guess = nullptr;
};

struct MildSolution {
    GridFunction u;
    int iterations = 0;
    int subintervals = 1;
    double residual = 0.0;
    /// Ratios of successive sup-norm changes, concatenated over subintervals.
    std::vector<double> contraction;
};

/**
 * Fixed point of u(t) = \int_0^t e^{-decay(t-s)} K(t-s) * (g . grad u(s) + f(s)) ds by Picard
 * iteration. `f` has any number of components, `g` has d. Subintervals are halved down to
 * horizon / min_fraction when the iteration stops contracting; beyond that NoContraction.
 */
MildSolution solve_mild(const GridFunction& f, const GridFunction& g, const PicardOptions& opt = {});

/// sup |u - Phi(u)| for the mild map Phi.
double mild_residual(const GridFunction& u, const GridFunction& f, const GridFunction& g,
                     double decay = 0.0);

struct ResolventSolution {
    double lambda = 0.0;
    GridFunction U;      ///< d components
    GridFunction grad;   ///< component i*d + j holds d_j U_i
    GridFunction hess;   ///< component (i*d + j)*d + k holds d_k d_j U_i
    double grad_sup = 0.0;
    int iterations = 0;
};

/// Solves dU/dt + 1/2 Delta U + b . grad U = lambda U - b on [t0, T], U(T) = 0, by time reversal.
ResolventSolution solve_resolvent(const GridFunction& b, double lambda, const PicardOptions& opt = {});

/// sup over space-time of the spectral norm of grad U.
double gradient_sup(const GridFunction& grad, int d);

struct LambdaSweep {
    std::vector<double> lambda;
    std::vector<double> grad_sup;
    bool strictly_decreasing = false;
    double slope = 0.0;       ///< log-log slope over lambda in [2^4, 2^10]
    double lambda0 = 0.0;     ///< 0 when no lambda reached grad_sup <= 1/2
};

/// grad_sup for each lambda; solves run on `threads` workers.
LambdaSweep lambda_sweep(const GridFunction& b, const std::vector<double>& lambdas,
                         const PicardOptions& opt = {}, unsigned threads = 0);
/// lambda = 2^k, k = 0..k_max. Throws NotReached when no lambda brings grad_sup to 1/2.
LambdaSweep calibrate_lambda(const GridFunction& b, int k_max = 10, const PicardOptions& opt = {},
                             unsigned threads = 0);

struct ScaleRatio {
    double r = 0.0;
    double max_ratio = 0.0;
};

struct ModulusMeasurement {
    std::vector<ScaleRatio> scales;  ///< finest first
    double C_hat = 0.0;
    bool unbounded = false;
};

/**
 * Empirical constant in |D(x) - D(y)| <= C F_delta(|x - y|) for a field slice D, from
 * axis-aligned pairs at separations h 2^j, j >= 0, up to delta.
 */
ModulusMeasurement measure_modulus(const Grid& g, std::span<const double> D, const Modulus& m,
                                   double delta, int pairs_per_scale = 256, unsigned long seed = 1);

struct MollifiedError {
    double n = 0.0;  ///< 0 stands for the unmollified solve
    double c0 = 0.0, c1 = 0.0, c2 = 0.0;
};

/// Solves with f and g mollified at each level and reports C^0, C^1, C^2 distances at the final
/// time to the unmollified solution. A level of 0 reproduces the unmollified solve.
std::vector<MollifiedError> mollified_convergence(const GridFunction& f, const GridFunction& g,
                                                  const std::vector<double>& levels,
                                                  const PicardOptions& opt = {});

}  // namespace stflow
