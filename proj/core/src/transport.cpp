#include "stflow/transport.hpp"

#include "stflow/errors.hpp"
#include "stflow/monte_carlo.hpp"
#include "stflow/parallel.hpp"

#include <cmath>

namespace stflow {

TransportSolution::TransportSolution(DriftSpec b, InitialDatum u0, Grid grid, FlowOptions opt)
    : b_(std::move(b)), u0_(std::move(u0)), grid_(grid), opt_(opt) {
    if (b_.d != grid_.d) fail(ErrorKind::Domain, "drift and grid dimensions differ");
    if (opt_.M < 1) fail(ErrorKind::Config, "M must be at least 1");
    time_ = TimeGrid::from_dt(opt_.s, opt_.T, opt_.dt);
    if (opt_.master_dt > 0.0) {
        const double r = opt_.dt / opt_.master_dt;
        ratio_ = static_cast<int>(std::llround(r));
        if (ratio_ < 1 || std::abs(r - ratio_) > 1e-9 * r) fail(ErrorKind::Config, "master_dt must divide dt");
    }
}

BrownianPath TransportSolution::brownian(int path) const {
    return BrownianPath(grid_.d, time_.t0, time_.T, time_.steps * ratio_, opt_.seed, static_cast<std::uint64_t>(path));
}

std::vector<double> TransportSolution::path_values(int path, const std::vector<std::size_t>& points) const {
    const BrownianPath B = brownian(path);
    const std::size_t n = points.empty() ? grid_.size() : points.size();
    std::vector<double> out(static_cast<std::size_t>(time_.levels()) * n);
    for (std::size_t i = 0; i < n; ++i) {
        const Vec x = grid_.point(points.empty() ? i : points[i]);
        for (int k = 0; k <= time_.steps; ++k)
            out[static_cast<std::size_t>(k) * n + i] = u0_(inverse_path(b_, x, time_.t0, time_.time(k), time_.dt(), B));
    }
    return out;
}

void TransportSolution::materialize() {
    const std::size_t per = static_cast<std::size_t>(time_.levels()) * grid_.size();
    u_.assign(per * opt_.M, 0.0);
    parallel_for(static_cast<std::size_t>(opt_.M), [&](std::size_t p) {
        const auto v = path_values(static_cast<int>(p));
        std::copy(v.begin(), v.end(), u_.begin() + static_cast<std::ptrdiff_t>(p * per));
    }, opt_.threads);
}

double TransportSolution::at(int path, int level, std::size_t point) const {
    if (u_.empty()) fail(ErrorKind::MissingArray, "transport solution was not materialized");
    return u_[(static_cast<std::size_t>(path) * time_.levels() + level) * grid_.size() + point];
}

TransportSolution solve_transport(const DriftSpec& b, const InitialDatum& u0, const Grid& grid,
                                  const FlowOptions& opt, bool store) {
    TransportSolution sol(b, u0, grid, opt);
    if (store) sol.materialize();
    return sol;
}

double TestFunction::value(const Vec& x) const {
    const double s = (x - center).squaredNorm() / (radius * radius);
    return s >= 1.0 ? 0.0 : std::exp(-1.0 / (1.0 - s));
}

Vec TestFunction::grad(const Vec& x) const {
    const double s = (x - center).squaredNorm() / (radius * radius);
    if (s >= 1.0) return Vec::Zero(x.size());
    const double q = 1.0 - s;
    const double phi = std::exp(-1.0 / q);
    return (-phi / (q * q) * 2.0 / (radius * radius)) * (x - center);
}

double TestFunction::laplacian(const Vec& x) const {
    const double R2 = radius * radius;
    const double s = (x - center).squaredNorm() / R2;
    if (s >= 1.0) return 0.0;
    const double q = 1.0 - s;
    const double phi = std::exp(-1.0 / q);
    const double phi_s = -phi / (q * q);
    const double phi_ss = phi * (1.0 - 2.0 * q) / (q * q * q * q);
    return phi_ss * 4.0 * s / R2 + phi_s * 2.0 * x.size() / R2;
}

WeakResidual weak_residual(const TransportSolution& sol, const TestFunction& phi) {
    const Grid& g = sol.grid();
    const TimeGrid& tg = sol.time();
    const DriftSpec& b = sol.drift();
    const int d = g.d;
    if (phi.center.size() != d) fail(ErrorKind::Domain, "test function has the wrong dimension");
    if (!b.div && !b.grad) fail(ErrorKind::SmoothnessRequired, "weak residual needs div b");
    // Only points in the support of phi contribute.
    std::vector<std::size_t> pts;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (phi.value(g.point(i)) > 0.0) pts.push_back(i);
    const double vol = std::pow(g.h(), d);
    const std::size_t np = pts.size();
    std::vector<double> w_phi(np), w_lap(np);
    std::vector<Vec> w_grad(np);
    for (std::size_t j = 0; j < np; ++j) {
        const Vec x = g.point(pts[j]);
        w_phi[j] = phi.value(x) * vol;
        w_grad[j] = phi.grad(x) * vol;
        w_lap[j] = phi.laplacian(x) * vol;
    }
    // div(b phi) depends on time when b does.
    auto w_div = [&](double t, std::size_t j) {
        const Vec x = g.point(pts[j]);
        return (phi.value(x) * b.divergence(t, x) + b(t, x).dot(phi.grad(x))) * vol;
    };

    WeakResidual out;
    out.time = tg;
    out.M = sol.M();
    const int L = tg.levels();
    out.residual.assign(static_cast<std::size_t>(sol.M()) * L, 0.0);
    const double dt = tg.dt();
    parallel_for(static_cast<std::size_t>(sol.M()), [&](std::size_t p) {
        const auto u = sol.path_values(static_cast<int>(p), pts);
        const BrownianPath B = sol.brownian(static_cast<int>(p));
        double* res = out.residual.data() + p * L;
        auto pair = [&](int k, auto weight) {
            double s = 0.0;
            for (std::size_t j = 0; j < np; ++j) s += weight(j) * u[static_cast<std::size_t>(k) * np + j];
            return s;
        };
        auto drift_lap = [&](int k) {
            const double t = tg.time(k);
            return pair(k, [&](std::size_t j) { return w_div(t, j) + 0.5 * w_lap[j]; });
        };
        const double m0 = pair(0, [&](std::size_t j) { return w_phi[j]; });
        double acc = 0.0;
        double prev = drift_lap(0);
        res[0] = 0.0;
        for (int k = 0; k < tg.steps; ++k) {
            const Vec dB = B.increment(tg.time(k), tg.time(k + 1));
            double ito = 0.0;
            for (int i = 0; i < d; ++i) ito += pair(k, [&](std::size_t j) { return w_grad[j](i); }) * dB(i);
            const double next = drift_lap(k + 1);
            acc += 0.5 * (prev + next) * dt + ito;
            prev = next;
            res[k + 1] = pair(k + 1, [&](std::size_t j) { return w_phi[j]; }) - m0 - acc;
        }
    }, sol.options().threads);

    out.mean.assign(L, 0.0);
    out.ci.assign(L, 0.0);
    for (int k = 0; k < L; ++k) {
        std::vector<double> v(static_cast<std::size_t>(sol.M()));
        for (int p = 0; p < sol.M(); ++p) v[p] = out.at(p, k);
        const MomentEstimate m = summarize("residual", 1.0, v);
        out.mean[k] = m.estimate;
        out.ci[k] = m.ci;
    }
    double ss = 0.0;
    for (int p = 0; p < sol.M(); ++p) {
        const double r = out.at(p, tg.steps);
        ss += r * r;
        for (int k = 0; k < L; ++k) out.max_abs = std::max(out.max_abs, std::abs(out.at(p, k)));
    }
    out.rms_final = std::sqrt(ss / sol.M());
    return out;
}

namespace {

// Classical RK4 for x' = f(x) from 0, used for the deterministic mollified ODEs.
double rk4_scalar(const DriftSpec& b, double T, int steps) {
    const double h = T / steps;
    Vec x = Vec::Zero(1);
    for (int k = 0; k < steps; ++k) {
        const double t = k * h;
        const Vec k1 = b(t, x);
        const Vec k2 = b(t + h / 2, x + h / 2 * k1);
        const Vec k3 = b(t + h / 2, x + h / 2 * k2);
        const Vec k4 = b(t + h, x + h * k3);
        x += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    return x(0);
}

}  // namespace

NonuniquenessReport nonuniqueness_demo(double alpha, double T, const std::vector<double>& n_list,
                                       const FlowOptions& opt) {
    if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorKind::Domain, "alpha must lie in (0, 1)");
    if (!(T > 0.0)) fail(ErrorKind::Domain, "T must be positive");
    NonuniquenessReport rep;
    rep.alpha = alpha;
    rep.T = T;
    const DriftSpec b = drifts::signed_power(1, alpha);
    // x(t) = ((1 - alpha) t)^{1 / (1 - alpha)}, x'(t) = ((1 - alpha) t)^{alpha / (1 - alpha)}.
    const double e = 1.0 / (1.0 - alpha);
    for (int i = 0; i <= 16; ++i) {
        BranchRow row;
        row.t = T * i / 16;
        row.escaping = std::pow((1.0 - alpha) * row.t, e);
        const double deriv = std::pow((1.0 - alpha) * row.t, alpha * e);
        Vec x(1);
        x << row.escaping;
        row.residual_escaping = std::abs(deriv - b(row.t, x)(0));
        row.residual_stationary = std::abs(0.0 - b(row.t, Vec::Zero(1))(0));
        rep.branches.push_back(row);
    }
    FlowOptions o = opt;
    o.s = 0.0;
    o.T = T;
    const Vec origin = Vec::Zero(1);
    for (double n : n_list) {
        SelectionRow row;
        row.n = n;
        row.det_plus = rk4_scalar(mollify_drift(b, n, 0.5), T, 4096);
        row.det_minus = rk4_scalar(mollify_drift(b, n, -0.5), T, 4096);
        const FlowEnsemble a = simulate_flow(mollify_drift(b, n), {origin}, o);
        const FlowEnsemble c = simulate_flow(mollify_drift(b, 4.0 * n), {origin}, o);
        std::vector<double> gaps(static_cast<std::size_t>(o.M));
        for (int p = 0; p < o.M; ++p) gaps[p] = std::abs(a.state(p, 0, a.time.steps)(0) - c.state(p, 0, c.time.steps)(0));
        row.gap = summarize("|X^n-X^4n|", 1.0, gaps);
        rep.selection.push_back(row);
    }
    rep.gaps_decreasing = rep.selection.size() >= 2;
    for (std::size_t i = 1; i < rep.selection.size(); ++i)
        if (!(rep.selection[i].gap.estimate < rep.selection[i - 1].gap.estimate)) rep.gaps_decreasing = false;
    return rep;
}

}  // namespace stflow
