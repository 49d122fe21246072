#pragma once

#include "stflow/monte_carlo.hpp"
#include "stflow/sde_flow.hpp"

#include <functional>
#include <vector>

namespace stflow {

using InitialDatum = std::function<double(const Vec& x)>;

/**
 * u(t, x) = u0(X^{-1}(0, t, x)) on a spatial grid, one path at a time. Each level uses its own
 * backward Euler pass from t_k to 0 over the path's Brownian increments.
 */
class TransportSolution {
public:
    TransportSolution(DriftSpec b, InitialDatum u0, Grid grid, FlowOptions opt);

    const Grid& grid() const { return grid_; }
    const TimeGrid& time() const { return time_; }
    const FlowOptions& options() const { return opt_; }
    const DriftSpec& drift() const { return b_; }
    double u0(const Vec& x) const { return u0_(x); }
    int M() const { return opt_.M; }

    BrownianPath brownian(int path) const;
    /// u(path, t_k, x_i) for the selected grid points (all when empty), level-major.
    std::vector<double> path_values(int path, const std::vector<std::size_t>& points = {}) const;

    /// Fills the stored array for all paths; (path, level, point).
    void materialize();
    bool materialized() const { return !u_.empty(); }
    double at(int path, int level, std::size_t point) const;

private:
    DriftSpec b_;
    InitialDatum u0_;
    Grid grid_;
    FlowOptions opt_;
    TimeGrid time_;
    int ratio_ = 1;
    std::vector<double> u_;
};

TransportSolution solve_transport(const DriftSpec& b, const InitialDatum& u0, const Grid& grid,
                                  const FlowOptions& opt, bool store = true);

/// Smooth compactly supported test function exp(-1 / (1 - |x - c|^2 / R^2)).
struct TestFunction {
    Vec center;
    double radius = 1.0;

    double value(const Vec& x) const;
    Vec grad(const Vec& x) const;
    double laplacian(const Vec& x) const;
};

struct WeakResidual {
    TimeGrid time;
    int M = 0;
    std::vector<double> residual;  ///< (path, level)
    std::vector<double> mean;      ///< per level
    std::vector<double> ci;        ///< per level, 95% half-width
    double rms_final = 0.0;
    double max_abs = 0.0;

    double at(int path, int level) const { return residual[static_cast<std::size_t>(path) * time.levels() + level]; }
};

/**
 * Residual of the weak form with the Ito term taken at left points and the ds integrals by the
 * trapezoid rule; spatial pairings by the trapezoid rule on the grid.
 */
WeakResidual weak_residual(const TransportSolution& sol, const TestFunction& phi);

struct BranchRow {
    double t = 0.0;
    double escaping = 0.0;
    double residual_escaping = 0.0;
    double residual_stationary = 0.0;
};

struct SelectionRow {
    double n = 0.0;
    double det_plus = 0.0;   ///< deterministic mollified ODE, kernel shifted by +1/(2n)
    double det_minus = 0.0;  ///< kernel shifted by -1/(2n)
    MomentEstimate gap;      ///< E |X^n(T, 0) - X^{4n}(T, 0)|
};

struct NonuniquenessReport {
    double alpha = 0.5;
    double T = 1.0;
    std::vector<BranchRow> branches;
    std::vector<SelectionRow> selection;
    bool gaps_decreasing = false;
};

/// Deterministic branches and stochastic selection for b(x) = sign(x)|x|^alpha from x = 0.
NonuniquenessReport nonuniqueness_demo(double alpha, double T, const std::vector<double>& n_list,
                                       const FlowOptions& opt);

}  // namespace stflow
