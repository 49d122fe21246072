#include "stflow/moduli.hpp"

#include "stflow/errors.hpp"
#include "stflow/quadrature.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

namespace stflow {

const char* to_string(ModulusClass c) noexcept {
    switch (c) {
        case ModulusClass::Dini: return "Dini";
        case ModulusClass::HolderDini: return "HolderDini";
        case ModulusClass::StrongHolder: return "StrongHolder";
        case ModulusClass::Holder: return "Holder";
        case ModulusClass::WeakHolder: return "WeakHolder";
        case ModulusClass::NotDini: return "NotDini";
        case ModulusClass::Unknown: return "Unknown";
    }
    return "Unknown";
}

const char* to_string(ModulusFamily f) noexcept {
    switch (f) {
        case ModulusFamily::PowerLog: return "power-log";
        case ModulusFamily::InverseLog: return "inverse-log";
        case ModulusFamily::Linear: return "linear";
        case ModulusFamily::Table: return "table";
        case ModulusFamily::Custom: return "custom";
    }
    return "custom";
}

const char* to_string(LimitVerdict v) noexcept {
    switch (v) {
        case LimitVerdict::Bounded: return "bounded";
        case LimitVerdict::Unbounded: return "unbounded";
        case LimitVerdict::Inconclusive: return "inconclusive";
    }
    return "inconclusive";
}

namespace {

void check_r0(double r0) {
    if (!(r0 > 0.0 && r0 < 1.0)) fail(ErrorKind::Domain, "modulus r0 must lie in (0, 1)");
}

ModulusClass power_log_class(double alpha) {
    if (alpha < -1.0) return ModulusClass::HolderDini;
    if (alpha < 0.0) return ModulusClass::StrongHolder;
    if (alpha == 0.0) return ModulusClass::Holder;
    return ModulusClass::WeakHolder;
}

}  // namespace

Modulus Modulus::power_log(double C, double theta, double alpha, double r0) {
    check_r0(r0);
    if (!(theta > 0.0 && theta < 1.0)) fail(ErrorKind::Domain, "power-log theta must lie in (0, 1)");
    if (!(C > 0.0)) fail(ErrorKind::Domain, "modulus constant must be positive");
    Modulus m;
    m.family_ = ModulusFamily::PowerLog;
    m.C_ = C;
    m.theta_ = theta;
    m.alpha_ = alpha;
    m.r0_ = r0;
    m.claimed_ = power_log_class(alpha);
    return m;
}

Modulus Modulus::inverse_log(double C, double alpha, double r0) {
    check_r0(r0);
    if (!(C > 0.0)) fail(ErrorKind::Domain, "modulus constant must be positive");
    if (!(alpha > 0.0)) fail(ErrorKind::Domain, "inverse-log alpha must be positive");
    Modulus m;
    m.family_ = ModulusFamily::InverseLog;
    m.C_ = C;
    m.alpha_ = alpha;
    m.r0_ = r0;
    m.claimed_ = alpha > 1.0 ? ModulusClass::Dini : ModulusClass::NotDini;
    return m;
}

Modulus Modulus::linear(double C, double r0) {
    check_r0(r0);
    if (!(C >= 0.0)) fail(ErrorKind::Domain, "modulus constant must be nonnegative");
    Modulus m;
    m.family_ = ModulusFamily::Linear;
    m.C_ = C;
    m.r0_ = r0;
    m.claimed_ = ModulusClass::Dini;
    return m;
}

Modulus Modulus::table(std::vector<std::pair<double, double>> samples, double r0) {
    check_r0(r0);
    if (samples.size() < 2) fail(ErrorKind::Domain, "table modulus needs at least two samples");
    std::sort(samples.begin(), samples.end());
    Modulus m;
    m.family_ = ModulusFamily::Table;
    m.r0_ = r0;
    for (const auto& [r, phi] : samples) {
        if (!(r > 0.0) || !(phi > 0.0))
            fail(ErrorKind::Domain, "table modulus samples must have r > 0 and phi > 0");
        m.log_r_.push_back(std::log(r));
        m.log_phi_.push_back(std::log(phi));
    }
    for (std::size_t i = 1; i < m.log_r_.size(); ++i)
        if (m.log_r_[i] == m.log_r_[i - 1]) fail(ErrorKind::Domain, "table modulus has repeated r");
    return m;
}

Modulus Modulus::custom(std::function<double(double)> phi, double r0, ModulusClass claimed) {
    check_r0(r0);
    Modulus m;
    m.family_ = ModulusFamily::Custom;
    m.r0_ = r0;
    m.fn_ = std::move(phi);
    m.claimed_ = claimed;
    return m;
}

double Modulus::table_eval(double r) const { return std::exp(log_at_log(std::log(r))); }

double Modulus::operator()(double r) const {
    if (!(r > 0.0)) {
        if (family_ == ModulusFamily::Custom) return fn_(0.0);
        return 0.0;
    }
    switch (family_) {
        case ModulusFamily::Linear: return C_ * r;
        case ModulusFamily::Table: return table_eval(r);
        case ModulusFamily::Custom: return fn_(r);
        default: return at_log(std::log(r));
    }
}

double Modulus::log_at_log(double u) const {
    switch (family_) {
        case ModulusFamily::PowerLog: return std::log(C_) + theta_ * u + alpha_ * std::log(std::abs(u));
        case ModulusFamily::InverseLog: return std::log(C_) - alpha_ * std::log(std::abs(u));
        case ModulusFamily::Linear: return std::log(C_) + u;
        case ModulusFamily::Table: {
            const std::size_t n = log_r_.size();
            std::size_t i = 0;
            if (u >= log_r_.back()) {
                i = n - 2;
            } else if (u > log_r_.front()) {
                i = static_cast<std::size_t>(std::upper_bound(log_r_.begin(), log_r_.end(), u) - log_r_.begin()) - 1;
            }
            const double slope = (log_phi_[i + 1] - log_phi_[i]) / (log_r_[i + 1] - log_r_[i]);
            return log_phi_[i] + slope * (u - log_r_[i]);
        }
        case ModulusFamily::Custom: return std::log(fn_(std::exp(u)));
    }
    return 0.0;
}

double Modulus::at_log(double u) const {
    if (family_ == ModulusFamily::Custom) return fn_(std::exp(u));
    return std::exp(log_at_log(u));
}

namespace {

constexpr int kDiniLevels = 20;
constexpr double kDiniRelChange = 1e-8;

// \int_lo^hi g with panels of width 1, 2, 4, ... measured from the anchored end, where the
// integrand varies fastest.
double geometric_panels(const std::function<double(double)>& g, double lo, double hi, bool anchor_low) {
    const double len = hi - lo;
    double total = 0.0, pos = 0.0, width = 1.0;
    while (pos < len) {
        const double next = std::min(len, pos + width);
        total += anchor_low ? integrate_adaptive(g, lo + pos, lo + next)
                            : integrate_adaptive(g, hi - next, hi - pos);
        pos = next;
        width *= 2.0;
    }
    return total;
}

// \int_{-inf}^{ub} phi(e^u) e^{-log_scale} du, level by level away from ub.
DiniReport dini_from_zero(const Modulus& m, double ub, double log_scale) {
    auto g = [&](double u) { return std::exp(m.log_at_log(u) - log_scale); };
    DiniReport rep;
    double sum = 0.0;
    double U = -ub;
    for (int level = 0; level < kDiniLevels; ++level) {
        const double next = std::max(U * std::exp(2.0), U + 4.0);
        const double inc = geometric_panels(g, -next, -U, false);
        sum += inc;
        rep.partial_sums.push_back(sum);
        U = next;
        if (!std::isfinite(sum)) break;
        if (level > 0 && std::abs(inc) <= kDiniRelChange * std::abs(sum)) {
            rep.finite = true;
            rep.value = sum;
            return rep;
        }
        if (level > 0 && sum == 0.0) {
            rep.finite = true;
            return rep;
        }
    }
    rep.finite = false;
    rep.value = sum;
    return rep;
}

// r \int_r^delta phi(s)/s^2 ds e^{-log_scale} with r = e^{ur}, delta = e^{ud}.
double tail_scaled(const Modulus& m, double ur, double ud, double log_scale) {
    auto g = [&](double u) { return std::exp(m.log_at_log(u) - log_scale + ur - u); };
    return geometric_panels(g, ur, ud, true);
}

}  // namespace

DiniReport dini_integral_report(const Modulus& m, double a, double b) {
    if (!(a >= 0.0) || !(b >= a)) fail(ErrorKind::Domain, "dini_integral requires 0 <= a <= b");
    if (!(b < 1.0)) fail(ErrorKind::Domain, "dini_integral requires b < 1");
    DiniReport rep;
    if (b == 0.0 || a == b) {
        rep.finite = true;
        return rep;
    }
    if (a > 0.0) {
        // dr / r = du
        rep.value = geometric_panels([&](double u) { return m.at_log(u); }, std::log(a), std::log(b), false);
        rep.finite = std::isfinite(rep.value);
        rep.partial_sums.push_back(rep.value);
        return rep;
    }
    return dini_from_zero(m, std::log(b), 0.0);
}

double dini_integral(const Modulus& m, double a, double b) {
    DiniReport rep = dini_integral_report(m, a, b);
    if (!rep.finite) throw NonFiniteError("Dini integral does not converge", rep.value);
    return rep.value;
}

double tail_integral(const Modulus& m, double r, double delta) {
    if (!(r > 0.0) || !(r < delta)) fail(ErrorKind::Domain, "tail_integral requires 0 < r < delta");
    return tail_scaled(m, std::log(r), std::log(delta), 0.0);
}

double f_delta(const Modulus& m, double delta, double r) {
    if (!(delta > 0.0 && delta < 1.0)) fail(ErrorKind::Domain, "f_delta requires delta in (0, 1)");
    if (r < 0.0 || r > delta) fail(ErrorKind::Domain, "f_delta requires 0 <= r <= delta");
    if (r == 0.0) return 0.0;
    double value = dini_integral(m, 0.0, r) + m(r) + r;
    if (r < delta) value += tail_integral(m, r, delta);
    return value;
}

DiniReport verify_dini(const Modulus& m) { return dini_integral_report(m, 0.0, m.r0()); }

ModulusClass classify(const Modulus& m) {
    if (m.claimed_class() != ModulusClass::Unknown) return m.claimed_class();
    return verify_dini(m).finite ? ModulusClass::Dini : ModulusClass::NotDini;
}

InvariantReport check_invariants(const Modulus& m, int samples) {
    InvariantReport rep;
    double prev = m(0.0);
    if (prev < 0.0) {
        rep.nonnegative = false;
        rep.worst_r = 0.0;
    }
    for (int i = 1; i <= samples; ++i) {
        const double r = m.r0() * i / samples;
        const double v = m(r);
        if (v < 0.0 && rep.nonnegative) {
            rep.nonnegative = false;
            rep.worst_r = r;
        }
        if (v < prev - 1e-14 * std::abs(prev) && rep.nondecreasing) {
            rep.nondecreasing = false;
            rep.worst_r = r;
        }
        prev = v;
    }
    return rep;
}

namespace {

constexpr int kWindow = 10;

void classify_sequence(RatioSequence& seq) {
    const int n = static_cast<int>(seq.ratio.size());
    if (n < kWindow) {
        seq.verdict = LimitVerdict::Inconclusive;
        return;
    }
    seq.finest = seq.ratio.back();
    const int lo = n - kWindow;
    for (int i = lo; i < n; ++i) {
        if (!std::isfinite(seq.ratio[i]) || seq.ratio[i] <= 0.0) {
            seq.verdict = LimitVerdict::Inconclusive;
            return;
        }
    }
    int ups = 0, downs = 0;
    for (int i = lo + 1; i < n; ++i) {
        const double d = seq.ratio[i] - seq.ratio[i - 1];
        const double tol = 1e-9 * std::abs(seq.ratio[i]);
        if (d > tol) ++ups;
        if (d < -tol) ++downs;
    }
    double mx = seq.ratio[lo];
    for (int i = lo; i < n; ++i) mx = std::max(mx, seq.ratio[i]);
    seq.growth = mx / seq.ratio[lo];

    // Fits in the variable |log r|, which is what the log-power factors see.
    Eigen::MatrixXd A(kWindow, 2), Q(kWindow, 3);
    Eigen::VectorXd y(kWindow), z(kWindow);
    for (int k = 0; k < kWindow; ++k) {
        const double L = -seq.log_r[lo + k];
        A(k, 0) = 1.0;
        A(k, 1) = std::log(L);
        y(k) = std::log(seq.ratio[lo + k]);
        Q(k, 0) = 1.0;
        Q(k, 1) = 1.0 / L;
        Q(k, 2) = 1.0 / (L * L);
        z(k) = seq.ratio[lo + k];
    }
    const Eigen::VectorXd slope = A.colPivHouseholderQr().solve(y);
    seq.loglog_slope = slope(1);
    const Eigen::VectorXd c = Q.colPivHouseholderQr().solve(z);
    seq.limit_estimate = c(0);
    const double resid = (Q * c - z).cwiseAbs().maxCoeff();

    if (ups > 0 && downs > 0) {
        seq.verdict = LimitVerdict::Inconclusive;
    } else if (seq.growth <= 1.05) {
        seq.verdict = LimitVerdict::Bounded;
        if (ups == 0 && downs == 0) seq.limit_estimate = seq.finest;
    } else if (seq.loglog_slope >= 0.5) {
        seq.verdict = LimitVerdict::Unbounded;
    } else if (std::isfinite(seq.limit_estimate) && seq.limit_estimate > 0.0 &&
               resid <= 1e-3 * std::abs(seq.limit_estimate)) {
        seq.verdict = LimitVerdict::Bounded;
    } else {
        seq.verdict = LimitVerdict::Inconclusive;
    }
}

}  // namespace

MaxRegularityReport verify_max_regularity(const Modulus& m) {
    MaxRegularityReport rep;
    const double u0 = std::log(m.r0());
    auto push = [&](double u) {
        const double lphi = m.log_at_log(u);
        double a = std::numeric_limits<double>::infinity();
        double b = a;
        if (std::isfinite(lphi)) {
            const DiniReport inner = dini_from_zero(m, u, lphi);
            if (inner.finite) a = inner.value;
            b = tail_scaled(m, u, u0, lphi);
        }
        rep.inner.log_r.push_back(u);
        rep.inner.ratio.push_back(a);
        rep.tail.log_r.push_back(u);
        rep.tail.ratio.push_back(b);
    };
    double u = u0;
    for (int k = 1; k <= 40; ++k) {
        if (u - std::log(2.0) < std::log(1e-12)) break;
        u -= std::log(2.0);
        push(u);
    }
    if (m.log_space_exact())
        for (int j = 0; j < 15; ++j) {
            u *= 2.0;
            push(u);
        }
    classify_sequence(rep.inner);
    classify_sequence(rep.tail);
    rep.holds = rep.inner.verdict == LimitVerdict::Bounded && rep.tail.verdict == LimitVerdict::Bounded;
    return rep;
}

ConcavityReport verify_f_concavity(const Modulus& m, double p, double delta, int samples) {
    if (!(p >= 1.0)) fail(ErrorKind::Domain, "concavity exponent p must be >= 1");
    if (!(delta > 0.0 && delta <= m.r0())) fail(ErrorKind::Domain, "concavity delta must lie in (0, r0]");
    if (samples < 256) fail(ErrorKind::Domain, "concavity check needs at least 256 samples");
    ConcavityReport rep;
    rep.r.resize(samples);
    rep.values.resize(samples);
    double vmax = 0.0;
    for (int i = 0; i < samples; ++i) {
        rep.r[i] = delta * i / (samples - 1);
        rep.values[i] = std::pow(f_delta(m, delta, rep.r[i]), p);
        vmax = std::max(vmax, std::abs(rep.values[i]));
    }
    const double tol = 1e-9 * vmax;
    rep.increasing = true;
    rep.concave = true;
    for (int i = 1; i < samples; ++i) {
        const double d1 = rep.values[i] - rep.values[i - 1];
        if (d1 < -tol) {
            rep.increasing = false;
            if (-d1 > rep.worst_violation) {
                rep.worst_violation = -d1;
                rep.worst_r = rep.r[i];
            }
        }
        if (i + 1 < samples) {
            const double d2 = rep.values[i + 1] - 2.0 * rep.values[i] + rep.values[i - 1];
            if (d2 > tol) {
                rep.concave = false;
                if (d2 > rep.worst_violation) {
                    rep.worst_violation = d2;
                    rep.worst_r = rep.r[i];
                }
            }
        }
    }
    return rep;
}

double largest_concave_delta(const Modulus& m, double p, int iterations) {
    auto ok = [&](double d) { return verify_f_concavity(m, p, d).passes(); };
    double hi = m.r0();
    if (ok(hi)) return hi;
    double lo = 0.0;
    for (int k = 1; k <= 40; ++k) {
        const double d = std::ldexp(m.r0(), -k);
        if (ok(d)) {
            lo = d;
            break;
        }
        hi = d;
    }
    if (lo == 0.0) return 0.0;
    for (int i = 0; i < iterations; ++i) {
        const double mid = 0.5 * (lo + hi);
        (ok(mid) ? lo : hi) = mid;
    }
    return lo;
}

}  // namespace stflow
