#include "stflow/grid.hpp"

#include "stflow/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace stflow {

double operator_norm(const Mat& a) {
    Eigen::JacobiSVD<Mat> svd(a);
    return svd.singularValues()(0);
}

double min_singular_value(const Mat& a) {
    Eigen::JacobiSVD<Mat> svd(a);
    return svd.singularValues()(svd.singularValues().size() - 1);
}

Grid::Grid(int dim, double half_width, int points, bool wrap)
    : d(dim), L(half_width), n(points), periodic(wrap) {
    if (d < 1 || d > kMaxDim) fail(ErrorKind::Config, "grid dimension must lie in [1, " + std::to_string(kMaxDim) + "]");
    if (!(L > 0.0)) fail(ErrorKind::Config, "grid half-width must be positive");
    if (n < 4) fail(ErrorKind::Config, "grid needs at least 4 points per axis");
}

double Grid::h() const { return periodic ? 2.0 * L / n : 2.0 * L / (n - 1); }

std::size_t Grid::size() const {
    std::size_t s = 1;
    for (int a = 0; a < d; ++a) s *= static_cast<std::size_t>(n);
    return s;
}

std::size_t Grid::stride(int axis) const {
    std::size_t s = 1;
    for (int a = d - 1; a > axis; --a) s *= static_cast<std::size_t>(n);
    return s;
}

std::array<int, kMaxDim> Grid::unflatten(std::size_t flat) const {
    std::array<int, kMaxDim> idx{};
    for (int a = d - 1; a >= 0; --a) {
        idx[a] = static_cast<int>(flat % n);
        flat /= n;
    }
    return idx;
}

std::size_t Grid::flatten(const std::array<int, kMaxDim>& idx) const {
    std::size_t flat = 0;
    for (int a = 0; a < d; ++a) flat = flat * n + static_cast<std::size_t>(idx[a]);
    return flat;
}

Vec Grid::point(std::size_t flat) const {
    const auto idx = unflatten(flat);
    Vec x(d);
    for (int a = 0; a < d; ++a) x(a) = coord(idx[a]);
    return x;
}

int Grid::fold(int i) const {
    if (periodic) {
        i %= n;
        return i < 0 ? i + n : i;
    }
    return std::clamp(i, 0, n - 1);
}

TimeGrid::TimeGrid(double start, double end, int n_steps) : t0(start), T(end), steps(n_steps) {
    if (!(end >= start)) fail(ErrorKind::Config, "time grid end precedes start");
    if (steps < 1) fail(ErrorKind::Config, "time grid needs at least one step");
}

TimeGrid TimeGrid::from_dt(double start, double end, double dt) {
    if (!(dt > 0.0)) fail(ErrorKind::Config, "time step must be positive");
    const double ratio = (end - start) / dt;
    const double k = std::round(ratio);
    if (k < 1.0 || std::abs(ratio - k) > 1e-9 * std::max(1.0, ratio))
        fail(ErrorKind::Config, "time step does not divide the interval");
    return TimeGrid(start, end, static_cast<int>(k));
}

GridFunction::GridFunction(Grid grid, TimeGrid time, int components)
    : grid_(grid), time_(time), comps_(components),
      data_(static_cast<std::size_t>(time.levels()) * components * grid.size(), 0.0) {}

std::span<double> GridFunction::slice(int level, int comp) {
    const std::size_t n = grid_.size();
    return {data_.data() + (static_cast<std::size_t>(level) * comps_ + comp) * n, n};
}

std::span<const double> GridFunction::slice(int level, int comp) const {
    const std::size_t n = grid_.size();
    return {data_.data() + (static_cast<std::size_t>(level) * comps_ + comp) * n, n};
}

double& GridFunction::at(int level, int comp, std::size_t point) { return slice(level, comp)[point]; }
double GridFunction::at(int level, int comp, std::size_t point) const { return slice(level, comp)[point]; }

double interpolate_slice(const Grid& g, std::span<const double> f, const Vec& x) {
    std::array<int, kMaxDim> i0{}, i1{};
    std::array<double, kMaxDim> w{};
    const double h = g.h();
    for (int a = 0; a < g.d; ++a) {
        double s = (x(a) + g.L) / h;
        if (g.periodic) {
            const double fl = std::floor(s);
            w[a] = s - fl;
            i0[a] = g.fold(static_cast<int>(fl));
            i1[a] = g.fold(static_cast<int>(fl) + 1);
        } else {
            s = std::clamp(s, 0.0, static_cast<double>(g.n - 1));
            int lo = std::min(static_cast<int>(std::floor(s)), g.n - 2);
            w[a] = s - lo;
            i0[a] = lo;
            i1[a] = lo + 1;
        }
    }
    double value = 0.0;
    const int corners = 1 << g.d;
    for (int c = 0; c < corners; ++c) {
        std::array<int, kMaxDim> idx{};
        double weight = 1.0;
        for (int a = 0; a < g.d; ++a) {
            const bool hi = (c >> a) & 1;
            idx[a] = hi ? i1[a] : i0[a];
            weight *= hi ? w[a] : 1.0 - w[a];
        }
        if (weight != 0.0) value += weight * f[g.flatten(idx)];
    }
    return value;
}

double GridFunction::interpolate(double t, const Vec& x, int comp) const {
    const double s = std::clamp((t - time_.t0) / time_.dt(), 0.0, static_cast<double>(time_.steps));
    const int k = std::min(static_cast<int>(std::floor(s)), time_.steps - 1);
    const double w = s - k;
    const double a = interpolate_slice(grid_, slice(k, comp), x);
    if (w == 0.0) return a;
    const double b = interpolate_slice(grid_, slice(k + 1, comp), x);
    return (1.0 - w) * a + w * b;
}

double GridFunction::sup_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
}

std::vector<double> diff(const Grid& g, std::span<const double> f, int axis) {
    const std::size_t N = g.size();
    const std::size_t s = g.stride(axis);
    const int n = g.n;
    const double h = g.h();
    std::vector<double> out(N);
    for (std::size_t p = 0; p < N; ++p) {
        const int i = static_cast<int>((p / s) % n);
        const std::size_t base = p - static_cast<std::size_t>(i) * s;
        auto F = [&](int j) { return f[base + static_cast<std::size_t>(g.fold(j)) * s]; };
        if (g.periodic || (i >= 2 && i <= n - 3)) {
            out[p] = (F(i - 2) - 8.0 * F(i - 1) + 8.0 * F(i + 1) - F(i + 2)) / (12.0 * h);
        } else if (i >= 1 && i <= n - 2) {
            out[p] = (F(i + 1) - F(i - 1)) / (2.0 * h);
        } else if (i == 0) {
            out[p] = (-3.0 * F(0) + 4.0 * F(1) - F(2)) / (2.0 * h);
        } else {
            out[p] = (3.0 * F(n - 1) - 4.0 * F(n - 2) + F(n - 3)) / (2.0 * h);
        }
    }
    return out;
}

std::vector<double> diff2(const Grid& g, std::span<const double> f, int a, int b) {
    if (a != b) {
        const std::vector<double> fa = diff(g, f, a);
        return diff(g, fa, b);
    }
    const std::size_t N = g.size();
    const std::size_t s = g.stride(a);
    const int n = g.n;
    const double h2 = g.h() * g.h();
    std::vector<double> out(N);
    for (std::size_t p = 0; p < N; ++p) {
        const int i = static_cast<int>((p / s) % n);
        const std::size_t base = p - static_cast<std::size_t>(i) * s;
        auto F = [&](int j) { return f[base + static_cast<std::size_t>(g.fold(j)) * s]; };
        if (g.periodic || (i >= 2 && i <= n - 3)) {
            out[p] = (-F(i - 2) + 16.0 * F(i - 1) - 30.0 * F(i) + 16.0 * F(i + 1) - F(i + 2)) / (12.0 * h2);
        } else if (i >= 1 && i <= n - 2) {
            out[p] = (F(i + 1) - 2.0 * F(i) + F(i - 1)) / h2;
        } else if (i == 0) {
            out[p] = (2.0 * F(0) - 5.0 * F(1) + 4.0 * F(2) - F(3)) / h2;
        } else {
            out[p] = (2.0 * F(n - 1) - 5.0 * F(n - 2) + 4.0 * F(n - 3) - F(n - 4)) / h2;
        }
    }
    return out;
}

}  // namespace stflow
