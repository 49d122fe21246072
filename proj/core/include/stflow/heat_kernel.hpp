#pragma once

#include "stflow/grid.hpp"
#include "stflow/linalg.hpp"

#include <span>
#include <vector>

namespace stflow {

/// K(t, x) = (2 pi t)^{-d/2} exp(-|x|^2 / (2t)); d = x.size(). Throws DomainError for t <= 0.
double kernel_eval(double t, const Vec& x);
Vec grad_kernel(double t, const Vec& x);
Mat hess_kernel(double t, const Vec& x);
double kernel_dt(double t, const Vec& x);

/// Normalized samples of the one-dimensional kernel at lag t, offsets -R..R with R = ceil(8 sqrt(t) / h).
std::vector<double> kernel_stencil(double t, double h);

/// K(t) * f on the grid by direct summation. Throws GridTooCoarse if h > sqrt(t).
std::vector<double> convolve(const Grid& g, std::span<const double> f, double t);

/**
 * Linear operator sum_j c_j K(tau_j) + a I + b Delta_h on one grid slice.
 *
 * Lags below h^2 use the local expansion K(tau) f ~ f + tau/2 Delta_h f.
 */
class Propagator {
public:
    Propagator() = default;
    explicit Propagator(const Grid& g) : grid_(g) {}
    void add(double coef, double tau);
    /// Merges everything into a single stencil when d = 1.
    void finalize();
    void apply(std::span<const double> in, std::span<double> out) const;

private:
    Grid grid_;
    std::vector<std::pair<double, std::vector<double>>> gauss_;
    double identity_ = 0.0;
    double laplace_ = 0.0;
};

/**
 * One step of u' = 1/2 Delta u - lambda u + F with F linear in time across the step:
 *   u_{k+1} = e^{-lambda dt} K(dt) u_k + \int_0^dt e^{-lambda tau} K(tau) F(t_{k+1} - tau) dtau.
 * The lag integral uses graded nodes tau_j = dt (j/m)^2 with exponentially weighted
 * trapezoid weights.
 */
class DuhamelStepper {
public:
    DuhamelStepper(const Grid& g, double dt, double decay = 0.0, int nodes = 16);
    /// out may alias none of the inputs.
    void step(std::span<const double> u, std::span<const double> f_prev,
              std::span<const double> f_next, std::span<double> out) const;
    /// As step() with u = 0.
    void source_only(std::span<const double> f_prev, std::span<const double> f_next,
                     std::span<double> out) const;

private:
    Grid grid_;
    Propagator evolve_, next_, prev_;
    mutable std::vector<double> scratch_;
};

/// \int_{t0}^{t} e^{-decay (t-s)} K(t-s) * f(s) ds at every level of f's time grid.
GridFunction duhamel(const GridFunction& f, double decay = 0.0);

/// The same integral at a single level of f's time grid.
std::vector<double> duhamel_at(const GridFunction& f, int level, int comp = 0);

}  // namespace stflow
