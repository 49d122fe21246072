#pragma once

#include "stflow/linalg.hpp"

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace stflow {

/**
 * Uniform grid on [-L, L]^d with n points per axis.
 *
 * Non-periodic grids include both endpoints (h = 2L/(n-1)) and extend fields by their edge
 * value. Periodic grids drop the right endpoint (h = 2L/n) and wrap.
 */
struct Grid {
    int d = 1;
    double L = 1.0;
    int n = 2;
    bool periodic = false;

    Grid() = default;
    Grid(int dim, double half_width, int points, bool wrap = false);

    double h() const;
    std::size_t size() const;
    double coord(int i) const { return -L + i * h(); }
    Vec point(std::size_t flat) const;
    std::array<int, kMaxDim> unflatten(std::size_t flat) const;
    std::size_t flatten(const std::array<int, kMaxDim>& idx) const;
    /// Maps an axis index into range by clamping or wrapping.
    int fold(int i) const;
    std::size_t stride(int axis) const;
};

struct TimeGrid {
    double t0 = 0.0;
    double T = 1.0;
    int steps = 1;

    TimeGrid() = default;
    TimeGrid(double start, double end, int n_steps);
    /// Requires dt to divide end - start; throws ConfigError otherwise.
    static TimeGrid from_dt(double start, double end, double dt);

    double dt() const { return (T - t0) / steps; }
    double time(int k) const { return t0 + (T - t0) * k / steps; }
    int levels() const { return steps + 1; }
};

/// Values indexed by (time level, component, grid point), component-major within a level.
class GridFunction {
public:
    GridFunction() = default;
    GridFunction(Grid grid, TimeGrid time, int components);

    const Grid& grid() const { return grid_; }
    const TimeGrid& time() const { return time_; }
    int components() const { return comps_; }

    std::span<double> slice(int level, int comp);
    std::span<const double> slice(int level, int comp) const;
    double& at(int level, int comp, std::size_t point);
    double at(int level, int comp, std::size_t point) const;

    /// Multilinear in space, linear in time; clamps t to the time grid.
    double interpolate(double t, const Vec& x, int comp) const;
    double sup_abs() const;

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

private:
    Grid grid_;
    TimeGrid time_;
    int comps_ = 1;
    std::vector<double> data_;
};

/// Multilinear interpolation of a single slice at x.
double interpolate_slice(const Grid& g, std::span<const double> f, const Vec& x);

/// Centered difference along `axis`: fourth order where the stencil fits, second order near
/// non-periodic edges, one-sided at the endpoints.
std::vector<double> diff(const Grid& g, std::span<const double> f, int axis);
/// Second derivative d^2/dx_a dx_b with the same order conventions.
std::vector<double> diff2(const Grid& g, std::span<const double> f, int a, int b);

}  // namespace stflow
