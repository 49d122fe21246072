#include "stflow/monte_carlo.hpp"

#include "stflow/errors.hpp"
#include "stflow/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace stflow {

const char* to_string(Quantity q) noexcept {
    switch (q) {
        case Quantity::Position: return "X";
        case Quantity::Displacement: return "X-x";
        case Quantity::Jacobian: return "gradX";
        case Quantity::TwoPoint: return "X(x)-X(y)";
        case Quantity::JacobianTwoPoint: return "gradX(x)-gradX(y)";
    }
    return "?";
}

const char* to_string(FitModel m) noexcept { return m == FitModel::Power ? "power" : "log-power"; }

MomentEstimate summarize(std::string label, double p, const std::vector<double>& v, const MomentOptions& opt) {
    MomentEstimate est;
    est.label = std::move(label);
    est.p = p;
    est.M = static_cast<int>(v.size());
    if (v.empty()) return est;
    double sum = 0.0;
    for (double x : v) sum += x;
    est.estimate = sum / v.size();
    if (v.size() < 2) return est;
    if (opt.bootstrap) {
        std::mt19937_64 rng(stream_seed(opt.seed, 0xB00757A9ULL));
        std::uniform_int_distribution<std::size_t> pick(0, v.size() - 1);
        std::vector<double> means(static_cast<std::size_t>(opt.resamples));
        for (double& m : means) {
            double s = 0.0;
            for (std::size_t i = 0; i < v.size(); ++i) s += v[pick(rng)];
            m = s / v.size();
        }
        std::sort(means.begin(), means.end());
        const double lo = means[static_cast<std::size_t>(0.025 * (means.size() - 1))];
        const double hi = means[static_cast<std::size_t>(0.975 * (means.size() - 1))];
        est.ci = 0.5 * (hi - lo);
        return est;
    }
    double ss = 0.0;
    for (double x : v) ss += (x - est.estimate) * (x - est.estimate);
    est.ci = 1.96 * std::sqrt(ss / (v.size() - 1) / v.size());
    return est;
}

MomentEstimate moment_sup(const FlowEnsemble& e, Quantity q, double p, const MomentOptions& opt) {
    if (!(p > 0.0)) fail(ErrorKind::Domain, "moment order must be positive");
    const bool jac = q == Quantity::Jacobian || q == Quantity::JacobianTwoPoint;
    const bool two = q == Quantity::TwoPoint || q == Quantity::JacobianTwoPoint;
    if (jac && e.xi.empty()) fail(ErrorKind::MissingArray, "ensemble has no derivative flow");
    if (opt.point < 0 || opt.point >= e.P() || (two && (opt.other < 0 || opt.other >= e.P())))
        fail(ErrorKind::Domain, "point index out of range");
    std::vector<double> v(static_cast<std::size_t>(e.M));
    parallel_for(v.size(), [&](std::size_t i) {
        const int path = static_cast<int>(i);
        double sup = 0.0;
        for (int k = 0; k < e.levels(); ++k) {
            double a = 0.0;
            switch (q) {
                case Quantity::Position: a = e.state(path, opt.point, k).norm(); break;
                case Quantity::Displacement: a = (e.state(path, opt.point, k) - e.points[opt.point]).norm(); break;
                case Quantity::Jacobian: a = operator_norm(e.jacobian(path, opt.point, k)); break;
                case Quantity::TwoPoint: a = (e.state(path, opt.point, k) - e.state(path, opt.other, k)).norm(); break;
                case Quantity::JacobianTwoPoint:
                    a = operator_norm(e.jacobian(path, opt.point, k) - e.jacobian(path, opt.other, k));
                    break;
            }
            sup = std::max(sup, std::pow(a, p));
        }
        v[i] = sup;
    });
    return summarize(to_string(q), p, v, opt);
}

ModulusFit modulus_regression(const std::vector<double>& r, const std::vector<double>& m, FitModel model) {
    if (r.size() != m.size()) fail(ErrorKind::Domain, "separations and moments differ in length");
    if (r.size() < 4) fail(ErrorKind::Precondition, "modulus fit needs at least four separations");
    ModulusFit fit;
    fit.model = model;
    fit.r = r;
    fit.moment = m;
    bool all_equal = true;
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (!(r[i] > 0.0 && r[i] < 1.0)) fail(ErrorKind::Domain, "separations must lie in (0, 1)");
        if (m[i] != m[0]) all_equal = false;
        if (!(m[i] > 0.0)) fit.degenerate = true;
    }
    if (all_equal) fit.degenerate = true;
    if (fit.degenerate) return fit;
    const double n = static_cast<double>(r.size());
    std::vector<double> xs(r.size()), ys(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) {
        xs[i] = model == FitModel::Power ? std::log(r[i]) : std::log(-std::log(r[i]));
        ys[i] = std::log(m[i]);
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    fit.intercept = (sy - slope * sx) / n;
    fit.exponent = model == FitModel::Power ? slope : -slope;
    double ss = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double e = ys[i] - (fit.intercept + slope * xs[i]);
        ss += e * e;
    }
    fit.residual = std::sqrt(ss / n);
    return fit;
}

std::vector<double> dyadic_ladder(int k_min, int k_max) {
    std::vector<double> r;
    for (int k = k_min; k <= k_max; ++k) r.push_back(std::ldexp(1.0, -k));
    return r;
}

LadderResult two_point_ladder(const DriftSpec& b, const Vec& base, const std::vector<double>& sep, double p,
                              Quantity q, FitModel model, const FlowOptions& opt) {
    if (q != Quantity::TwoPoint && q != Quantity::JacobianTwoPoint)
        fail(ErrorKind::Domain, "ladder needs a two-point quantity");
    std::vector<Vec> pts{base};
    for (double r : sep) {
        Vec y = base;
        y(0) += r;
        pts.push_back(y);
    }
    FlowEnsemble e = simulate_flow(b, pts, opt);
    if (q == Quantity::JacobianTwoPoint) derivative_flow(b, e);
    LadderResult out;
    std::vector<double> m;
    for (std::size_t k = 0; k < sep.size(); ++k) {
        MomentOptions mo;
        mo.point = 0;
        mo.other = static_cast<int>(k + 1);
        out.moments.push_back(moment_sup(e, q, p, mo));
        m.push_back(out.moments.back().estimate);
    }
    out.fit = modulus_regression(sep, m, model);
    return out;
}

std::vector<ConvergenceRow> convergence_study(const DriftSpec& b, const std::vector<double>& n_list, const Vec& x,
                                              double p, const FlowOptions& opt, bool with_gradient,
                                              double n_ref) {
    if (n_list.empty()) fail(ErrorKind::Config, "empty mollification list");
    if (n_ref <= 0.0) n_ref = 4.0 * *std::max_element(n_list.begin(), n_list.end());
    const DriftSpec ref_drift = mollify_drift(b, n_ref);
    FlowEnsemble ref = simulate_flow(ref_drift, {x}, opt);
    if (with_gradient) derivative_flow(ref_drift, ref);
    std::vector<ConvergenceRow> rows;
    for (double n : n_list) {
        const DriftSpec bn = mollify_drift(b, n);
        FlowEnsemble e = simulate_flow(bn, {x}, opt);
        if (with_gradient) derivative_flow(bn, e);
        std::vector<double> fx(static_cast<std::size_t>(opt.M)), fg(static_cast<std::size_t>(opt.M));
        parallel_for(fx.size(), [&](std::size_t i) {
            const int path = static_cast<int>(i);
            double sx = 0.0, sg = 0.0;
            for (int k = 0; k < e.levels(); ++k) {
                sx = std::max(sx, std::pow((e.state(path, 0, k) - ref.state(path, 0, k)).norm(), p));
                if (with_gradient)
                    sg = std::max(sg, std::pow(operator_norm(e.jacobian(path, 0, k) - ref.jacobian(path, 0, k)), p));
            }
            fx[i] = sx;
            fg[i] = sg;
        }, opt.threads);
        ConvergenceRow row;
        row.n = n;
        row.flow = summarize("X^n-X", p, fx);
        if (with_gradient) row.gradient = summarize("gradX^n-gradX", p, fg);
        rows.push_back(row);
    }
    return rows;
}

}  // namespace stflow
