#pragma once

#include "stflow/drift.hpp"
#include "stflow/ito_tanaka.hpp"

#include <cmath>
#include <cstdint>
#include <vector>

namespace stflow {

/// Seed of the RNG stream owned by one path.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t path);

/**
 * One Brownian path sampled on t0 + k dt, k = 0..steps, from the stream of (seed, path).
 * Coarser simulations sum these increments, so refinements share the same path.
 */
class BrownianPath {
public:
    BrownianPath(int d, double t0, double T, int steps, std::uint64_t seed, std::uint64_t path);

    int dim() const { return d_; }
    int steps() const { return steps_; }
    double t0() const { return t0_; }
    double T() const { return T_; }
    double dt() const { return (T_ - t0_) / steps_; }
    /// Grid index of t; Domain error when t is not a grid time.
    int index(double t) const;
    /// B(t) - B(t0).
    Vec at(double t) const;
    Vec increment(double a, double b) const { return at(b) - at(a); }

private:
    int d_, steps_;
    double t0_, T_;
    std::vector<double> W_;
};

struct FlowOptions {
    double s = 0.0;
    double T = 1.0;
    double dt = 1.0 / 256;
    int M = 1000;
    std::uint64_t seed = 0;
    /// Brownian resolution; 0 means dt. Must divide dt.
    double master_dt = 0.0;
    unsigned threads = 0;
};

/// Paths of one or more initial points driven by shared increments within each path.
struct FlowEnsemble {
    int d = 1;
    int M = 0;
    TimeGrid time;
    std::vector<Vec> points;
    std::uint64_t seed = 0;
    std::vector<double> dB;    ///< (path, step, component)
    std::vector<double> X;     ///< (path, point, level, component)
    std::vector<double> Y;     ///< transformed state; empty unless simulated through gamma
    std::vector<double> xi;    ///< (path, point, level, i*d + j); empty until derivative_flow
    std::vector<double> detJ;  ///< (path, point, level); empty until liouville_det

    int P() const { return static_cast<int>(points.size()); }
    int levels() const { return time.levels(); }
    std::size_t state_offset(int path, int point, int level) const;
    Vec state(int path, int point, int level) const;
    Vec transformed(int path, int point, int level) const;
    Vec increment(int path, int step) const;
    Mat jacobian(int path, int point, int level) const;
    double det(int path, int point, int level) const;
};

/// Euler-Maruyama from x at time s to t; steps land on s0 + k dt with partial steps at the ends.
Vec integrate_path(const DriftSpec& b, const Vec& x, double s, double t, double dt, const BrownianPath& B);

FlowEnsemble simulate_flow(const DriftSpec& b, const std::vector<Vec>& points, const FlowOptions& opt);

/// Simulates Y = gamma(X) with the transformed coefficients and maps back through gamma^{-1}.
FlowEnsemble simulate_transformed_flow(const ItoTanakaMap& map, const std::vector<Vec>& points,
                                       const FlowOptions& opt);

enum class DerivativeScheme { Euler, Exponential };

/// Jacobian flow d xi = grad b(t, X) xi dt along each stored path; xi(s) = I.
void derivative_flow(const DriftSpec& b, FlowEnsemble& ens, DerivativeScheme scheme = DerivativeScheme::Euler);
/// Jacobian through the transformed system: xi = grad gamma^{-1}(t, Y) eta grad gamma(s, x).
void derivative_flow_transformed(const ItoTanakaMap& map, FlowEnsemble& ens);

/// Backward Euler from y at t to s: Z_k = Z_{k+1} - b(t_{k+1}, Z_{k+1}) dt - dB_k.
Vec inverse_path(const DriftSpec& b, const Vec& y, double s, double t, double dt, const BrownianPath& B);

/**
 * Inverse flow for the paths of (opt.seed, path): level k holds X^{-1}(t_k, t, y), so level 0 is
 * X^{-1}(s, t, y) and the last level is y.
 */
FlowEnsemble inverse_flow(const DriftSpec& b, const std::vector<Vec>& points, const FlowOptions& opt);

struct LiouvilleReport {
    std::vector<double> det_exp;  ///< (path, point) at the final time
    std::vector<double> det_fd;
    double max_rel_gap = 0.0;
    double mean_rel_gap = 0.0;
    double h = 0.0;
};

/**
 * det grad X by exp(\int div b(r, X) dr) with the trapezoid rule (stored in ens.detJ for all
 * levels) and by a centered finite-difference Jacobian over re-simulated neighbours.
 * h <= 0 picks max(1e-4, 10 dt).
 */
LiouvilleReport liouville_det(const DriftSpec& b, FlowEnsemble& ens, double h = 0.0);

struct IncrementStats {
    double mean = 0.0;
    double variance = 0.0;
    double z_mean = 0.0;      ///< mean / its standard error
    double z_variance = 0.0;  ///< (variance - dt) / its standard error
    bool ok() const { return std::abs(z_mean) <= 4.0 && std::abs(z_variance) <= 4.0; }
};

/// Pooled statistics of all stored increments.
IncrementStats increment_stats(const FlowEnsemble& ens);

}  // namespace stflow
