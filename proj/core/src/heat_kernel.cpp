#include "stflow/heat_kernel.hpp"

#include "stflow/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace stflow {

namespace {

void check_time(double t) {
    if (!(t > 0.0)) fail(ErrorKind::Domain, "heat kernel needs t > 0");
}

// \int_0^1 e^{-xs} ds and \int_0^1 e^{-xs} s ds.
double phi1(double x) {
    if (std::abs(x) < 0.5) {
        double term = 1.0, sum = 1.0;
        for (int k = 1; k < 20; ++k) {
            term *= -x / k;
            sum += term / (k + 1);
        }
        return sum;
    }
    return -std::expm1(-x) / x;
}

double phi_s(double x) {
    if (std::abs(x) < 0.5) {
        double term = 1.0, sum = 0.5;
        for (int k = 1; k < 20; ++k) {
            term *= -x / k;
            sum += term / (k + 2);
        }
        return sum;
    }
    return (-std::expm1(-x) - x * std::exp(-x)) / (x * x);
}

// out = stencil applied along one axis (centered, offsets -R..R).
void conv_axis(const Grid& g, std::span<const double> in, std::span<double> out,
               const std::vector<double>& w, int axis) {
    const int n = g.n;
    const int R = static_cast<int>(w.size() / 2);
    const std::size_t s = g.stride(axis);
    const std::size_t N = g.size();
    std::vector<double> line(static_cast<std::size_t>(n + 2 * R));
    for (std::size_t base = 0; base < N; ++base) {
        if ((base / s) % n != 0) continue;
        for (int j = -R; j < n + R; ++j) line[j + R] = in[base + static_cast<std::size_t>(g.fold(j)) * s];
        for (int i = 0; i < n; ++i) {
            const double* src = line.data() + i;
            double acc = 0.0;
            for (std::size_t m = 0; m < w.size(); ++m) acc += w[m] * src[m];
            out[base + static_cast<std::size_t>(i) * s] = acc;
        }
    }
}

}  // namespace

double kernel_eval(double t, const Vec& x) {
    check_time(t);
    const int d = static_cast<int>(x.size());
    return std::pow(2.0 * std::numbers::pi * t, -0.5 * d) * std::exp(-x.squaredNorm() / (2.0 * t));
}

Vec grad_kernel(double t, const Vec& x) { return (-kernel_eval(t, x) / t) * x; }

Mat hess_kernel(double t, const Vec& x) {
    const int d = static_cast<int>(x.size());
    const double k = kernel_eval(t, x);
    Mat h = (x * x.transpose()) / (t * t);
    h -= Mat::Identity(d, d) / t;
    return k * h;
}

double kernel_dt(double t, const Vec& x) {
    const int d = static_cast<int>(x.size());
    return kernel_eval(t, x) * (x.squaredNorm() / (2.0 * t * t) - 0.5 * d / t);
}

std::vector<double> kernel_stencil(double t, double h) {
    check_time(t);
    const int R = static_cast<int>(std::ceil(8.0 * std::sqrt(t) / h));
    std::vector<double> w(2 * R + 1);
    double total = 0.0;
    for (int m = -R; m <= R; ++m) {
        const double x = m * h;
        w[m + R] = std::exp(-x * x / (2.0 * t));
        total += w[m + R];
    }
    for (double& v : w) v /= total;
    return w;
}

std::vector<double> convolve(const Grid& g, std::span<const double> f, double t) {
    check_time(t);
    if (g.h() > std::sqrt(t)) fail(ErrorKind::GridTooCoarse, "grid spacing exceeds sqrt(t)");
    const std::vector<double> w = kernel_stencil(t, g.h());
    std::vector<double> a(f.begin(), f.end()), b(f.size());
    for (int axis = 0; axis < g.d; ++axis) {
        conv_axis(g, a, b, w, axis);
        std::swap(a, b);
    }
    return a;
}

void Propagator::add(double coef, double tau) {
    const double h = grid_.h();
    if (tau < h * h) {
        identity_ += coef;
        laplace_ += coef * 0.5 * tau;
    } else {
        gauss_.emplace_back(coef, kernel_stencil(tau, h));
    }
}

void Propagator::finalize() {
    if (grid_.d != 1) return;
    std::size_t width = 3;
    for (const auto& [c, w] : gauss_) width = std::max(width, w.size());
    std::vector<double> merged(width, 0.0);
    const std::size_t mid = width / 2;
    for (const auto& [c, w] : gauss_) {
        const std::size_t off = mid - w.size() / 2;
        for (std::size_t m = 0; m < w.size(); ++m) merged[off + m] += c * w[m];
    }
    const double h2 = grid_.h() * grid_.h();
    merged[mid] += identity_ - 2.0 * laplace_ / h2;
    merged[mid - 1] += laplace_ / h2;
    merged[mid + 1] += laplace_ / h2;
    gauss_.clear();
    gauss_.emplace_back(1.0, std::move(merged));
    identity_ = 0.0;
    laplace_ = 0.0;
}

void Propagator::apply(std::span<const double> in, std::span<double> out) const {
    const std::size_t N = in.size();
    for (std::size_t i = 0; i < N; ++i) out[i] = identity_ * in[i];
    std::vector<double> a(N), b(N);
    if (laplace_ != 0.0) {
        const double h2 = grid_.h() * grid_.h();
        const std::vector<double> lap = {laplace_ / h2, -2.0 * laplace_ / h2, laplace_ / h2};
        for (int axis = 0; axis < grid_.d; ++axis) {
            conv_axis(grid_, in, a, lap, axis);
            for (std::size_t i = 0; i < N; ++i) out[i] += a[i];
        }
    }
    for (const auto& [coef, w] : gauss_) {
        std::copy(in.begin(), in.end(), a.begin());
        for (int axis = 0; axis < grid_.d; ++axis) {
            conv_axis(grid_, a, b, w, axis);
            std::swap(a, b);
        }
        for (std::size_t i = 0; i < N; ++i) out[i] += coef * a[i];
    }
}

DuhamelStepper::DuhamelStepper(const Grid& g, double dt, double decay, int nodes)
    : grid_(g), evolve_(g), next_(g), prev_(g) {
    if (!(dt > 0.0)) fail(ErrorKind::Domain, "time step must be positive");
    if (g.h() > std::sqrt(dt)) fail(ErrorKind::GridTooCoarse, "grid spacing exceeds sqrt(dt)");
    if (nodes < 2) fail(ErrorKind::Domain, "need at least two lag nodes");
    evolve_.add(std::exp(-decay * dt), dt);
    std::vector<double> tau(nodes + 1), omega(nodes + 1, 0.0);
    for (int j = 0; j <= nodes; ++j) {
        const double q = static_cast<double>(j) / nodes;
        tau[j] = dt * q * q;
    }
    for (int j = 0; j < nodes; ++j) {
        const double width = tau[j + 1] - tau[j];
        const double x = decay * width;
        const double scale = std::exp(-decay * tau[j]) * width;
        const double right = scale * phi_s(x);
        omega[j] += scale * phi1(x) - right;
        omega[j + 1] += right;
    }
    for (int j = 0; j <= nodes; ++j) {
        const double theta = tau[j] / dt;
        next_.add(omega[j] * (1.0 - theta), tau[j]);
        prev_.add(omega[j] * theta, tau[j]);
    }
    evolve_.finalize();
    next_.finalize();
    prev_.finalize();
    scratch_.resize(g.size());
}

void DuhamelStepper::source_only(std::span<const double> f_prev, std::span<const double> f_next,
                                 std::span<double> out) const {
    next_.apply(f_next, out);
    prev_.apply(f_prev, scratch_);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += scratch_[i];
}

void DuhamelStepper::step(std::span<const double> u, std::span<const double> f_prev,
                          std::span<const double> f_next, std::span<double> out) const {
    source_only(f_prev, f_next, out);
    evolve_.apply(u, scratch_);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += scratch_[i];
}

GridFunction duhamel(const GridFunction& f, double decay) {
    GridFunction u(f.grid(), f.time(), f.components());
    if (f.time().T == f.time().t0) return u;
    DuhamelStepper stepper(f.grid(), f.time().dt(), decay);
    for (int c = 0; c < f.components(); ++c)
        for (int k = 0; k < f.time().steps; ++k)
            stepper.step(u.slice(k, c), f.slice(k, c), f.slice(k + 1, c), u.slice(k + 1, c));
    return u;
}

std::vector<double> duhamel_at(const GridFunction& f, int level, int comp) {
    const std::size_t N = f.grid().size();
    std::vector<double> u(N, 0.0), next(N);
    if (level == 0) return u;
    DuhamelStepper stepper(f.grid(), f.time().dt());
    for (int k = 0; k < level; ++k) {
        stepper.step(u, f.slice(k, comp), f.slice(k + 1, comp), next);
        std::swap(u, next);
    }
    return u;
}

}  // namespace stflow
