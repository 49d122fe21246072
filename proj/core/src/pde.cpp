#include "stflow/pde.hpp"

#include "stflow/errors.hpp"
#include "stflow/heat_kernel.hpp"
#include "stflow/mollifier.hpp"
#include "stflow/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace stflow {

GridFunction sample(const Grid& g, const TimeGrid& time, int components, const FieldFn& fn) {
    GridFunction out(g, time, components);
    const std::size_t N = g.size();
    for (int k = 0; k < time.levels(); ++k) {
        const double t = time.time(k);
        for (std::size_t p = 0; p < N; ++p) {
            const Vec v = fn(t, g.point(p));
            if (v.size() != components) fail(ErrorKind::Domain, "sampled function has wrong arity");
            for (int c = 0; c < components; ++c) out.at(k, c, p) = v(c);
        }
    }
    return out;
}

namespace {

void check_compatible(const GridFunction& f, const GridFunction& g) {
    const Grid& a = f.grid();
    const Grid& b = g.grid();
    if (a.d != b.d || a.n != b.n || a.L != b.L || a.periodic != b.periodic)
        fail(ErrorKind::Domain, "source and drift live on different grids");
    if (f.time().steps != g.time().steps || f.time().t0 != g.time().t0 || f.time().T != g.time().T)
        fail(ErrorKind::Domain, "source and drift live on different time grids");
    if (g.components() != a.d) fail(ErrorKind::Domain, "drift must have d components");
}

// F_k = f_k + g_k . grad u_k for one level and component.
void forcing(const GridFunction& f, const GridFunction& g, const GridFunction& u, int k, int c,
             std::span<double> out) {
    const Grid& G = f.grid();
    const auto fk = f.slice(k, c);
    std::copy(fk.begin(), fk.end(), out.begin());
    for (int j = 0; j < G.d; ++j) {
        const std::vector<double> du = diff(G, u.slice(k, c), j);
        const auto gj = g.slice(k, j);
        for (std::size_t p = 0; p < out.size(); ++p) out[p] += gj[p] * du[p];
    }
}

struct SegmentResult {
    bool converged = false;
    int iterations = 0;
    double residual = 0.0;
    std::vector<double> ratios;
};

SegmentResult picard_segment(const GridFunction& f, const GridFunction& g, GridFunction& u,
                             const DuhamelStepper& stepper, int k0, int k1, const PicardOptions& opt) {
    const std::size_t N = f.grid().size();
    const int m = f.components();
    const int len = k1 - k0;
    std::vector<double> F(static_cast<std::size_t>(len + 1) * N);
    std::vector<double> next(static_cast<std::size_t>(len) * N);
    SegmentResult res;
    double prev_change = 0.0;
    int rising = 0;
    for (int it = 1; it <= opt.max_iter; ++it) {
        double change = 0.0, sup = 0.0;
        for (int c = 0; c < m; ++c) {
            for (int k = k0; k <= k1; ++k)
                forcing(f, g, u, k, c, std::span<double>(F.data() + (k - k0) * N, N));
            for (int k = k0; k < k1; ++k) {
                std::span<const double> cur = k == k0 ? std::span<const double>(u.slice(k0, c))
                                                      : std::span<const double>(next.data() + (k - k0 - 1) * N, N);
                stepper.step(cur, std::span<const double>(F.data() + (k - k0) * N, N),
                             std::span<const double>(F.data() + (k - k0 + 1) * N, N),
                             std::span<double>(next.data() + (k - k0) * N, N));
            }
            for (int k = k0 + 1; k <= k1; ++k) {
                auto dst = u.slice(k, c);
                const double* src = next.data() + (k - k0 - 1) * N;
                for (std::size_t p = 0; p < N; ++p) {
                    change = std::max(change, std::abs(src[p] - dst[p]));
                    sup = std::max(sup, std::abs(src[p]));
                    dst[p] = src[p];
                }
            }
        }
        res.iterations = it;
        res.residual = change;
        if (!std::isfinite(change)) return res;
        if (it > 1) {
            const double ratio = prev_change > 0.0 ? change / prev_change : 0.0;
            res.ratios.push_back(ratio);
            rising = ratio >= 1.0 ? rising + 1 : 0;
        }
        if (change <= opt.tol * std::max(1.0, sup)) {
            res.converged = true;
            return res;
        }
        if (rising >= 10) return res;
        prev_change = change;
    }
    return res;
}

}  // namespace

MildSolution solve_mild(const GridFunction& f, const GridFunction& g, const PicardOptions& opt) {
    check_compatible(f, g);
    const TimeGrid& tg = f.time();
    MildSolution sol;
    sol.u = GridFunction(f.grid(), tg, f.components());
    if (opt.initial_guess) {
        if (opt.initial_guess->data().size() != sol.u.data().size())
            fail(ErrorKind::Domain, "initial guess has the wrong shape");
        sol.u.data() = opt.initial_guess->data();
        for (int c = 0; c < f.components(); ++c) {
            auto s = sol.u.slice(0, c);
            std::fill(s.begin(), s.end(), 0.0);
        }
    }
    if (tg.T == tg.t0) return sol;
    const GridFunction start = sol.u;
    const DuhamelStepper stepper(f.grid(), tg.dt(), opt.decay);
    const int steps = tg.steps;
    const int min_seg = std::max(1, steps / std::max(1, opt.min_fraction));
    int seg = steps;
    int k0 = 0;
    sol.subintervals = 0;
    while (k0 < steps) {
        const int k1 = std::min(steps, k0 + seg);
        SegmentResult r = picard_segment(f, g, sol.u, stepper, k0, k1, opt);
        sol.iterations += r.iterations;
        if (r.converged) {
            sol.contraction.insert(sol.contraction.end(), r.ratios.begin(), r.ratios.end());
            sol.residual = std::max(sol.residual, r.residual);
            ++sol.subintervals;
            k0 = k1;
            continue;
        }
        if (seg <= min_seg) fail(ErrorKind::NoContraction, "Picard iteration does not contract on the shortest subinterval");
        for (int c = 0; c < f.components(); ++c)
            for (int k = k0 + 1; k <= k1; ++k) {
                auto dst = sol.u.slice(k, c);
                auto src = start.slice(k, c);
                std::copy(src.begin(), src.end(), dst.begin());
            }
        seg = std::max(min_seg, seg / 2);
    }
    return sol;
}

double mild_residual(const GridFunction& u, const GridFunction& f, const GridFunction& g, double decay) {
    check_compatible(f, g);
    const TimeGrid& tg = f.time();
    if (tg.T == tg.t0) return u.sup_abs();
    const std::size_t N = f.grid().size();
    const DuhamelStepper stepper(f.grid(), tg.dt(), decay);
    std::vector<double> Fa(N), Fb(N), cur(N, 0.0), next(N);
    double worst = 0.0;
    for (int c = 0; c < f.components(); ++c) {
        std::fill(cur.begin(), cur.end(), 0.0);
        for (std::size_t p = 0; p < N; ++p) worst = std::max(worst, std::abs(u.at(0, c, p)));
        forcing(f, g, u, 0, c, Fa);
        for (int k = 0; k < tg.steps; ++k) {
            forcing(f, g, u, k + 1, c, Fb);
            stepper.step(cur, Fa, Fb, next);
            for (std::size_t p = 0; p < N; ++p) worst = std::max(worst, std::abs(next[p] - u.at(k + 1, c, p)));
            std::swap(cur, next);
            std::swap(Fa, Fb);
        }
    }
    return worst;
}

double gradient_sup(const GridFunction& grad, int d) {
    const std::size_t N = grad.grid().size();
    double sup = 0.0;
    for (int k = 0; k < grad.time().levels(); ++k)
        for (std::size_t p = 0; p < N; ++p) {
            if (d == 1) {
                sup = std::max(sup, std::abs(grad.at(k, 0, p)));
                continue;
            }
            Mat J(d, d);
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) J(i, j) = grad.at(k, i * d + j, p);
            sup = std::max(sup, operator_norm(J));
        }
    return sup;
}

ResolventSolution solve_resolvent(const GridFunction& b, double lambda, const PicardOptions& opt) {
    if (!(lambda > 0.0)) fail(ErrorKind::Domain, "resolvent needs lambda > 0");
    const Grid& G = b.grid();
    const int d = G.d;
    if (b.components() != d) fail(ErrorKind::Domain, "drift must have d components");
    const TimeGrid& tg = b.time();
    const int steps = tg.steps;
    GridFunction rev(G, tg, d);
    for (int k = 0; k <= steps; ++k)
        for (int c = 0; c < d; ++c) {
            auto src = b.slice(steps - k, c);
            std::copy(src.begin(), src.end(), rev.slice(k, c).begin());
        }
    PicardOptions o = opt;
    o.decay = lambda;
    const MildSolution V = solve_mild(rev, rev, o);

    ResolventSolution sol;
    sol.lambda = lambda;
    sol.iterations = V.iterations;
    sol.U = GridFunction(G, tg, d);
    sol.grad = GridFunction(G, tg, d * d);
    sol.hess = GridFunction(G, tg, d * d * d);
    for (int k = 0; k <= steps; ++k)
        for (int i = 0; i < d; ++i) {
            auto src = V.u.slice(steps - k, i);
            std::copy(src.begin(), src.end(), sol.U.slice(k, i).begin());
        }
    for (int k = 0; k <= steps; ++k)
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
                const auto dj = diff(G, sol.U.slice(k, i), j);
                std::copy(dj.begin(), dj.end(), sol.grad.slice(k, i * d + j).begin());
                for (int l = 0; l < d; ++l) {
                    const auto djl = diff2(G, sol.U.slice(k, i), j, l);
                    std::copy(djl.begin(), djl.end(), sol.hess.slice(k, (i * d + j) * d + l).begin());
                }
            }
    sol.grad_sup = gradient_sup(sol.grad, d);
    return sol;
}

LambdaSweep lambda_sweep(const GridFunction& b, const std::vector<double>& lambdas,
                         const PicardOptions& opt, unsigned threads) {
    LambdaSweep sweep;
    sweep.lambda = lambdas;
    std::sort(sweep.lambda.begin(), sweep.lambda.end());
    sweep.grad_sup.assign(sweep.lambda.size(), 0.0);
    parallel_for(sweep.lambda.size(), [&](std::size_t i) {
        // Only the gradient is needed here; solve_resolvent also builds the Hessian.
        const ResolventSolution s = solve_resolvent(b, sweep.lambda[i], opt);
        sweep.grad_sup[i] = s.grad_sup;
    }, threads);
    sweep.strictly_decreasing = true;
    for (std::size_t i = 1; i < sweep.grad_sup.size(); ++i)
        if (!(sweep.grad_sup[i] < sweep.grad_sup[i - 1])) sweep.strictly_decreasing = false;
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < sweep.lambda.size(); ++i)
        if (sweep.lambda[i] >= 16.0 && sweep.lambda[i] <= 1024.0 && sweep.grad_sup[i] > 0.0) {
            lx.push_back(std::log(sweep.lambda[i]));
            ly.push_back(std::log(sweep.grad_sup[i]));
        }
    if (lx.size() >= 2) {
        const double n = static_cast<double>(lx.size());
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (std::size_t i = 0; i < lx.size(); ++i) {
            sx += lx[i];
            sy += ly[i];
            sxx += lx[i] * lx[i];
            sxy += lx[i] * ly[i];
        }
        sweep.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    }
    for (std::size_t i = 0; i < sweep.lambda.size(); ++i)
        if (sweep.grad_sup[i] <= 0.5) {
            sweep.lambda0 = sweep.lambda[i];
            break;
        }
    return sweep;
}

LambdaSweep calibrate_lambda(const GridFunction& b, int k_max, const PicardOptions& opt, unsigned threads) {
    std::vector<double> lambdas;
    for (int k = 0; k <= k_max; ++k) lambdas.push_back(std::ldexp(1.0, k));
    LambdaSweep sweep = lambda_sweep(b, lambdas, opt, threads);
    if (sweep.lambda0 == 0.0) fail(ErrorKind::NotReached, "no lambda up to 2^" + std::to_string(k_max) + " gives sup|grad U| <= 1/2");
    return sweep;
}

ModulusMeasurement measure_modulus(const Grid& g, std::span<const double> D, const Modulus& m,
                                   double delta, int pairs_per_scale, unsigned long seed) {
    if (D.size() != g.size()) fail(ErrorKind::Domain, "field does not match the grid");
    if (!(delta > 0.0 && delta < 1.0)) fail(ErrorKind::Domain, "delta must lie in (0, 1)");
    const double h = g.h();
    std::vector<int> offsets;
    for (int j = 0;; ++j) {
        const int off = 1 << j;
        if (off * h > delta || off >= g.n / 2) break;
        offsets.push_back(off);
    }
    if (offsets.size() < 3) fail(ErrorKind::Domain, "fewer than three dyadic separations fit below delta");
    std::mt19937_64 rng(seed);
    ModulusMeasurement out;
    for (int off : offsets) {
        const double r = off * h;
        const double F = f_delta(m, delta, r);
        std::uniform_int_distribution<int> axis_pick(0, g.d - 1);
        std::uniform_int_distribution<std::size_t> point_pick(0, g.size() - 1);
        ScaleRatio s{r, 0.0};
        for (int k = 0; k < pairs_per_scale; ++k) {
            const int axis = axis_pick(rng);
            auto idx = g.unflatten(point_pick(rng));
            if (!g.periodic && idx[axis] + off >= g.n) idx[axis] -= off;
            auto jdx = idx;
            jdx[axis] = g.fold(idx[axis] + off);
            const double diffv = std::abs(D[g.flatten(idx)] - D[g.flatten(jdx)]);
            s.max_ratio = std::max(s.max_ratio, diffv / F);
        }
        out.scales.push_back(s);
        out.C_hat = std::max(out.C_hat, s.max_ratio);
    }
    const double finest = out.scales.front().max_ratio;
    const double coarsest = out.scales.back().max_ratio;
    if (finest > 0.0 && coarsest > 0.0) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        const double n = static_cast<double>(out.scales.size());
        for (const auto& s : out.scales) {
            const double x = std::log(s.r);
            const double y = std::log(std::max(s.max_ratio, 1e-300));
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        out.unbounded = slope <= -0.25 && finest >= 2.0 * coarsest;
    }
    return out;
}

std::vector<MollifiedError> mollified_convergence(const GridFunction& f, const GridFunction& g,
                                                  const std::vector<double>& levels,
                                                  const PicardOptions& opt) {
    const MildSolution base = solve_mild(f, g, opt);
    const Grid& G = f.grid();
    const int last = f.time().steps;
    std::vector<MollifiedError> out;
    for (double n : levels) {
        const MildSolution s = n > 0.0 ? solve_mild(mollify(f, n), mollify(g, n), opt) : solve_mild(f, g, opt);
        MollifiedError e;
        e.n = n;
        for (int c = 0; c < f.components(); ++c) {
            std::vector<double> delta(G.size());
            for (std::size_t p = 0; p < G.size(); ++p) delta[p] = s.u.at(last, c, p) - base.u.at(last, c, p);
            for (double v : delta) e.c0 = std::max(e.c0, std::abs(v));
            for (int j = 0; j < G.d; ++j) {
                for (double v : diff(G, delta, j)) e.c1 = std::max(e.c1, std::abs(v));
                for (int l = 0; l < G.d; ++l)
                    for (double v : diff2(G, delta, j, l)) e.c2 = std::max(e.c2, std::abs(v));
            }
        }
        out.push_back(e);
    }
    return out;
}

}  // namespace stflow
