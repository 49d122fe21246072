#include "stflow/sde_flow.hpp"

#include "stflow/errors.hpp"
#include "stflow/parallel.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <random>

namespace stflow {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// s, the grid times of t0 + k dt strictly between s and t, then t.
std::vector<double> step_times(double t0, double dt, double s, double t) {
    std::vector<double> out{s};
    const double eps = 1e-9 * dt;
    long k = static_cast<long>(std::floor((s - t0) / dt + 1e-9)) + 1;
    for (;; ++k) {
        const double tk = t0 + k * dt;
        if (tk >= t - eps) break;
        if (tk > s + eps) out.push_back(tk);
    }
    out.push_back(t);
    return out;
}

struct Layout {
    int steps = 0;
    int ratio = 1;
};

Layout check_options(const DriftSpec* b, int d, const std::vector<Vec>& points, const FlowOptions& opt) {
    if (opt.M < 1) fail(ErrorKind::Config, "M must be at least 1");
    if (points.empty()) fail(ErrorKind::Config, "no initial points");
    for (const Vec& p : points)
        if (p.size() != d) fail(ErrorKind::Domain, "initial point has the wrong dimension");
    if (b && !b->eval) fail(ErrorKind::Domain, "drift has no evaluator");
    Layout l;
    l.steps = TimeGrid::from_dt(opt.s, opt.T, opt.dt).steps;
    if (opt.master_dt > 0.0) {
        const double r = opt.dt / opt.master_dt;
        l.ratio = static_cast<int>(std::llround(r));
        if (l.ratio < 1 || std::abs(r - l.ratio) > 1e-9 * r)
            fail(ErrorKind::Config, "master_dt must divide dt");
    }
    return l;
}

FlowEnsemble make_ensemble(int d, const std::vector<Vec>& points, const FlowOptions& opt, int steps) {
    FlowEnsemble e;
    e.d = d;
    e.M = opt.M;
    e.time = TimeGrid(opt.s, opt.T, steps);
    e.points = points;
    e.seed = opt.seed;
    e.dB.assign(static_cast<std::size_t>(opt.M) * steps * d, 0.0);
    e.X.assign(static_cast<std::size_t>(opt.M) * points.size() * (steps + 1) * d, 0.0);
    return e;
}

// Fills the stored increments of one path from its master-resolution Brownian path.
void fill_increments(FlowEnsemble& e, int path, const Layout& l) {
    const BrownianPath B(e.d, e.time.t0, e.time.T, l.steps * l.ratio, e.seed, static_cast<std::uint64_t>(path));
    double* dst = e.dB.data() + static_cast<std::size_t>(path) * l.steps * e.d;
    for (int k = 0; k < l.steps; ++k) {
        const Vec inc = B.increment(e.time.time(k), e.time.time(k + 1));
        for (int c = 0; c < e.d; ++c) dst[k * e.d + c] = inc(c);
    }
}

void put(std::vector<double>& arr, std::size_t off, const Vec& v) {
    for (int c = 0; c < v.size(); ++c) arr[off + c] = v(c);
}

void euler_path(const DriftSpec& b, const FlowEnsemble& e, int path, const Vec& x0, std::vector<double>& out,
                std::size_t off) {
    const double dt = e.time.dt();
    Vec x = x0;
    put(out, off, x);
    for (int k = 0; k < e.time.steps; ++k) {
        x += b(e.time.time(k), x) * dt + e.increment(path, k);
        put(out, off + static_cast<std::size_t>(k + 1) * e.d, x);
    }
}

}  // namespace

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t path) { return splitmix64(seed ^ splitmix64(path)); }

BrownianPath::BrownianPath(int d, double t0, double T, int steps, std::uint64_t seed, std::uint64_t path)
    : d_(d), steps_(steps), t0_(t0), T_(T), W_(static_cast<std::size_t>(steps + 1) * d, 0.0) {
    if (steps < 1 || !(T > t0)) fail(ErrorKind::Domain, "Brownian path needs T > t0 and steps >= 1");
    std::mt19937_64 rng(stream_seed(seed, path));
    std::normal_distribution<double> normal;
    const double sd = std::sqrt(dt());
    for (int k = 0; k < steps; ++k)
        for (int c = 0; c < d; ++c) W_[(k + 1) * d + c] = W_[k * d + c] + sd * normal(rng);
}

int BrownianPath::index(double t) const {
    const double u = (t - t0_) / dt();
    const long k = std::lround(u);
    if (std::abs(u - k) > 1e-6 || k < 0 || k > steps_)
        fail(ErrorKind::Domain, "time " + std::to_string(t) + " is not on the Brownian grid");
    return static_cast<int>(k);
}

Vec BrownianPath::at(double t) const {
    const int k = index(t);
    Vec v(d_);
    for (int c = 0; c < d_; ++c) v(c) = W_[k * d_ + c];
    return v;
}

std::size_t FlowEnsemble::state_offset(int path, int point, int level) const {
    return ((static_cast<std::size_t>(path) * P() + point) * levels() + level) * d;
}

Vec FlowEnsemble::state(int path, int point, int level) const {
    return Eigen::Map<const Eigen::VectorXd>(X.data() + state_offset(path, point, level), d);
}

Vec FlowEnsemble::transformed(int path, int point, int level) const {
    if (Y.empty()) fail(ErrorKind::MissingArray, "ensemble has no transformed states");
    return Eigen::Map<const Eigen::VectorXd>(Y.data() + state_offset(path, point, level), d);
}

Vec FlowEnsemble::increment(int path, int step) const {
    return Eigen::Map<const Eigen::VectorXd>(dB.data() + (static_cast<std::size_t>(path) * time.steps + step) * d, d);
}

Mat FlowEnsemble::jacobian(int path, int point, int level) const {
    if (xi.empty()) fail(ErrorKind::MissingArray, "ensemble has no derivative flow");
    const double* p = xi.data() + state_offset(path, point, level) * d;
    Mat J(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) J(i, j) = p[i * d + j];
    return J;
}

double FlowEnsemble::det(int path, int point, int level) const {
    if (detJ.empty()) fail(ErrorKind::MissingArray, "ensemble has no determinants");
    return detJ[state_offset(path, point, level) / d];
}

Vec integrate_path(const DriftSpec& b, const Vec& x, double s, double t, double dt, const BrownianPath& B) {
    if (!(t >= s)) fail(ErrorKind::Domain, "integrate_path needs t >= s");
    Vec y = x;
    if (t == s) return y;
    const auto ts = step_times(B.t0(), dt, s, t);
    for (std::size_t k = 0; k + 1 < ts.size(); ++k) y += b(ts[k], y) * (ts[k + 1] - ts[k]) + B.increment(ts[k], ts[k + 1]);
    return y;
}

Vec inverse_path(const DriftSpec& b, const Vec& y, double s, double t, double dt, const BrownianPath& B) {
    if (!(t >= s)) fail(ErrorKind::Domain, "inverse_path needs t >= s");
    Vec z = y;
    if (t == s) return z;
    const auto ts = step_times(B.t0(), dt, s, t);
    for (std::size_t k = ts.size() - 1; k > 0; --k)
        z -= b(ts[k], z) * (ts[k] - ts[k - 1]) + B.increment(ts[k - 1], ts[k]);
    return z;
}

FlowEnsemble simulate_flow(const DriftSpec& b, const std::vector<Vec>& points, const FlowOptions& opt) {
    const Layout l = check_options(&b, b.d, points, opt);
    FlowEnsemble e = make_ensemble(b.d, points, opt, l.steps);
    parallel_for(static_cast<std::size_t>(opt.M), [&](std::size_t i) {
        const int path = static_cast<int>(i);
        fill_increments(e, path, l);
        for (int p = 0; p < e.P(); ++p) euler_path(b, e, path, points[p], e.X, e.state_offset(path, p, 0));
    }, opt.threads);
    return e;
}

FlowEnsemble simulate_transformed_flow(const ItoTanakaMap& map, const std::vector<Vec>& points,
                                       const FlowOptions& opt) {
    const int d = map.dim();
    const Layout l = check_options(nullptr, d, points, opt);
    if (opt.s < map.t0() - 1e-12 || opt.T > map.T() + 1e-12)
        fail(ErrorKind::Domain, "flow window leaves the time range of the map");
    if (!map.grad_bound()) fail(ErrorKind::Precondition, "map violates sup|grad U| <= 1/2");
    FlowEnsemble e = make_ensemble(d, points, opt, l.steps);
    e.Y.assign(e.X.size(), 0.0);
    parallel_for(static_cast<std::size_t>(opt.M), [&](std::size_t i) {
        const int path = static_cast<int>(i);
        fill_increments(e, path, l);
        const double dt = e.time.dt();
        for (int p = 0; p < e.P(); ++p) {
            const std::size_t off = e.state_offset(path, p, 0);
            Vec y = map.gamma(e.time.t0, points[p]);
            put(e.Y, off, y);
            put(e.X, off, points[p]);
            for (int k = 0; k < e.time.steps; ++k) {
                const TransformedCoeffs c = map.transformed_coeffs(e.time.time(k), y);
                y += c.drift * dt + c.sigma * e.increment(path, k);
                const std::size_t o = off + static_cast<std::size_t>(k + 1) * d;
                put(e.Y, o, y);
                put(e.X, o, map.gamma_inverse(e.time.time(k + 1), y));
            }
        }
    }, opt.threads);
    return e;
}

void derivative_flow(const DriftSpec& b, FlowEnsemble& e, DerivativeScheme scheme) {
    if (!b.differentiable())
        fail(ErrorKind::SmoothnessRequired, "derivative flow needs a mollified or differentiable drift");
    const int d = e.d;
    e.xi.assign(e.X.size() * d, 0.0);
    const double dt = e.time.dt();
    parallel_for(static_cast<std::size_t>(e.M), [&](std::size_t i) {
        const int path = static_cast<int>(i);
        for (int p = 0; p < e.P(); ++p) {
            Mat xi = Mat::Identity(d, d);
            for (int k = 0;; ++k) {
                double* dst = e.xi.data() + e.state_offset(path, p, k) * d;
                for (int r = 0; r < d; ++r)
                    for (int c = 0; c < d; ++c) dst[r * d + c] = xi(r, c);
                if (k == e.time.steps) break;
                const Mat A = b.jacobian(e.time.time(k), e.state(path, p, k));
                if (scheme == DerivativeScheme::Euler) {
                    xi += A * xi * dt;
                } else {
                    const Eigen::MatrixXd step = (Eigen::MatrixXd(A) * dt).exp();
                    xi = (step * xi).eval();
                }
            }
        }
    }, 0);
}

void derivative_flow_transformed(const ItoTanakaMap& map, FlowEnsemble& e) {
    if (e.Y.empty()) fail(ErrorKind::MissingArray, "transformed derivative flow needs Y from the transformed flow");
    const int d = e.d;
    const double lambda = map.lambda();
    e.xi.assign(e.X.size() * d, 0.0);
    const double dt = e.time.dt();
    const Mat I = Mat::Identity(d, d);
    parallel_for(static_cast<std::size_t>(e.M), [&](std::size_t i) {
        const int path = static_cast<int>(i);
        for (int p = 0; p < e.P(); ++p) {
            const Mat grad_gamma0 = I + map.grad_U(e.time.t0, e.points[p]);
            Mat eta = I;
            for (int k = 0;; ++k) {
                const double t = e.time.time(k);
                const Vec x = e.state(path, p, k);
                const Mat G = (I + map.grad_U(t, x)).inverse();
                const Mat xi = G * eta * grad_gamma0;
                double* dst = e.xi.data() + e.state_offset(path, p, k) * d;
                for (int r = 0; r < d; ++r)
                    for (int c = 0; c < d; ++c) dst[r * d + c] = xi(r, c);
                if (k == e.time.steps) break;
                // d eta = grad b~ eta dt + sum_m grad sigma~_{., m} eta dB_m.
                const Mat Ab = lambda * map.grad_U(t, x) * G;
                const auto H = map.hess_U(t, x);
                const Vec dBk = e.increment(path, k);
                Mat noise = Mat::Zero(d, d);
                for (int m = 0; m < d; ++m) {
                    Mat Dm(d, d);  // Dm(i, q) = d_q d_m U_i
                    for (int r = 0; r < d; ++r)
                        for (int q = 0; q < d; ++q) Dm(r, q) = H[static_cast<std::size_t>((r * d + m) * d + q)];
                    noise += Dm * G * dBk(m);
                }
                eta += (Ab * dt + noise) * eta;
            }
        }
    }, 0);
}

FlowEnsemble inverse_flow(const DriftSpec& b, const std::vector<Vec>& points, const FlowOptions& opt) {
    const Layout l = check_options(&b, b.d, points, opt);
    FlowEnsemble e = make_ensemble(b.d, points, opt, l.steps);
    const double dt = e.time.dt();
    parallel_for(static_cast<std::size_t>(opt.M), [&](std::size_t i) {
        const int path = static_cast<int>(i);
        fill_increments(e, path, l);
        for (int p = 0; p < e.P(); ++p) {
            const std::size_t off = e.state_offset(path, p, 0);
            Vec z = points[p];
            put(e.X, off + static_cast<std::size_t>(l.steps) * e.d, z);
            for (int k = l.steps - 1; k >= 0; --k) {
                z -= b(e.time.time(k + 1), z) * dt + e.increment(path, k);
                put(e.X, off + static_cast<std::size_t>(k) * e.d, z);
            }
        }
    }, opt.threads);
    return e;
}

LiouvilleReport liouville_det(const DriftSpec& b, FlowEnsemble& e, double h) {
    if (!b.div && !b.grad) fail(ErrorKind::SmoothnessRequired, "Liouville determinant needs div b");
    const int d = e.d;
    const double dt = e.time.dt();
    if (h <= 0.0) h = std::max(1e-4, 10.0 * dt);
    const int last = e.time.steps;
    LiouvilleReport rep;
    rep.h = h;
    const std::size_t np = static_cast<std::size_t>(e.M) * e.P();
    rep.det_exp.assign(np, 0.0);
    rep.det_fd.assign(np, 0.0);
    e.detJ.assign(e.X.size() / d, 0.0);
    parallel_for(static_cast<std::size_t>(e.M), [&](std::size_t i) {
        const int path = static_cast<int>(i);
        std::vector<double> buf(static_cast<std::size_t>(e.levels()) * d);
        for (int p = 0; p < e.P(); ++p) {
            double log_det = 0.0;
            double prev = b.divergence(e.time.time(0), e.state(path, p, 0));
            const std::size_t base = e.state_offset(path, p, 0) / d;
            e.detJ[base] = 1.0;
            for (int k = 0; k < last; ++k) {
                const double next = b.divergence(e.time.time(k + 1), e.state(path, p, k + 1));
                log_det += 0.5 * (prev + next) * dt;
                e.detJ[base + k + 1] = std::exp(log_det);
                prev = next;
            }
            Mat J(d, d);
            for (int j = 0; j < d; ++j) {
                Vec xp = e.points[p], xm = e.points[p];
                xp(j) += h;
                xm(j) -= h;
                euler_path(b, e, path, xp, buf, 0);
                const Vec fp = Eigen::Map<const Eigen::VectorXd>(buf.data() + static_cast<std::size_t>(last) * d, d);
                euler_path(b, e, path, xm, buf, 0);
                const Vec fm = Eigen::Map<const Eigen::VectorXd>(buf.data() + static_cast<std::size_t>(last) * d, d);
                J.col(j) = (fp - fm) / (2.0 * h);
            }
            const std::size_t q = static_cast<std::size_t>(path) * e.P() + p;
            rep.det_exp[q] = e.detJ[base + last];
            rep.det_fd[q] = J.determinant();
        }
    }, 0);
    double sum = 0.0;
    for (std::size_t q = 0; q < np; ++q) {
        const double gap = std::abs(rep.det_exp[q] - rep.det_fd[q]) / std::abs(rep.det_fd[q]);
        rep.max_rel_gap = std::max(rep.max_rel_gap, gap);
        sum += gap;
    }
    rep.mean_rel_gap = sum / static_cast<double>(np);
    return rep;
}

IncrementStats increment_stats(const FlowEnsemble& e) {
    IncrementStats s;
    const double n = static_cast<double>(e.dB.size());
    if (n < 2) return s;
    double sum = 0.0;
    for (double v : e.dB) sum += v;
    s.mean = sum / n;
    double ss = 0.0;
    for (double v : e.dB) {
        const double c = v - s.mean;
        ss += c * c;
    }
    s.variance = ss / (n - 1);
    const double dt = e.time.dt();
    s.z_mean = s.mean / std::sqrt(dt / n);
    // Var of the sample variance for a Gaussian is 2 dt^2 / (n - 1).
    s.z_variance = (s.variance - dt) / (dt * std::sqrt(2.0 / (n - 1)));
    return s;
}

}  // namespace stflow
