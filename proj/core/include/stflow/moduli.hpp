#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace stflow {

enum class ModulusFamily { PowerLog, InverseLog, Linear, Table, Custom };

enum class ModulusClass { Dini, HolderDini, StrongHolder, Holder, WeakHolder, NotDini, Unknown };

const char* to_string(ModulusClass c) noexcept;
const char* to_string(ModulusFamily f) noexcept;

/**
 * Continuity modulus phi on [0, r0], r0 in (0, 1).
 *
 * Built-in families evaluate in log coordinates analytically, so integrals and ratios at
 * r far below the smallest double never touch an underflowed r.
 */
class Modulus {
public:
    /// C r^theta |log r|^alpha.
    static Modulus power_log(double C, double theta, double alpha, double r0 = 0.5);
    /// C |log r|^{-alpha}.
    static Modulus inverse_log(double C, double alpha, double r0 = 0.5);
    /// C r.
    static Modulus linear(double C, double r0 = 0.5);
    /// Log-log linear interpolation through (r, phi) samples; phi(0) = 0.
    static Modulus table(std::vector<std::pair<double, double>> samples, double r0 = 0.5);
    static Modulus custom(std::function<double(double)> phi, double r0 = 0.5,
                          ModulusClass claimed = ModulusClass::Unknown);

    double operator()(double r) const;
    /// phi(e^u).
    double at_log(double u) const;
    /// log phi(e^u); analytic for the built-in families, so it never underflows.
    double log_at_log(double u) const;
    /// True when log_at_log does not route through phi(r) itself.
    bool log_space_exact() const noexcept { return family_ != ModulusFamily::Custom; }

    ModulusFamily family() const noexcept { return family_; }
    double r0() const noexcept { return r0_; }
    double C() const noexcept { return C_; }
    double theta() const noexcept { return theta_; }
    double alpha() const noexcept { return alpha_; }
    /// Class declared by the family parameters (Unknown for tables and custom functions).
    ModulusClass claimed_class() const noexcept { return claimed_; }

private:
    Modulus() = default;
    double table_eval(double r) const;

    ModulusFamily family_ = ModulusFamily::Custom;
    double C_ = 1.0, theta_ = 0.0, alpha_ = 0.0, r0_ = 0.5;
    ModulusClass claimed_ = ModulusClass::Unknown;
    std::vector<double> log_r_, log_phi_;
    std::function<double(double)> fn_;
};

/// Result of an improper Dini integral.
struct DiniReport {
    bool finite = false;
    double value = 0.0;
    /// Running value after each refinement level toward r = 0.
    std::vector<double> partial_sums;
};

/// \int_a^b phi(r)/r dr; a may be 0. Throws NonFiniteError when the a = 0 tail does not settle.
double dini_integral(const Modulus& m, double a, double b);
DiniReport dini_integral_report(const Modulus& m, double a, double b);

/// r \int_r^delta phi(s)/s^2 ds. Requires 0 < r < delta.
double tail_integral(const Modulus& m, double r, double delta);

/// F_delta(r) = \int_0^r phi/s ds + phi(r) + r \int_r^delta phi/s^2 ds + r.
double f_delta(const Modulus& m, double delta, double r);

DiniReport verify_dini(const Modulus& m);

/// Classification from the family parameters, falling back to the numerical Dini test.
ModulusClass classify(const Modulus& m);

struct InvariantReport {
    bool nonnegative = true;
    bool nondecreasing = true;
    double worst_r = 0.0;
};

/// Samples phi on [0, r0] and reports sign and monotonicity violations.
InvariantReport check_invariants(const Modulus& m, int samples = 2048);

enum class LimitVerdict { Bounded, Unbounded, Inconclusive };
const char* to_string(LimitVerdict v) noexcept;

struct RatioSequence {
    std::vector<double> log_r;
    std::vector<double> ratio;
    LimitVerdict verdict = LimitVerdict::Inconclusive;
    double growth = 0.0;          ///< max/first over the last 10 samples
    double loglog_slope = 0.0;    ///< d log ratio / d log|log r| over the last 10 samples
    double limit_estimate = 0.0;  ///< quadratic fit in 1/|log r|, evaluated at 0
    double finest = 0.0;
};

struct MaxRegularityReport {
    RatioSequence inner;  ///< \int_0^r phi/s ds / phi(r)
    RatioSequence tail;   ///< r \int_r^{r0} phi/s^2 ds / phi(r)
    bool holds = false;
};

/**
 * Ratio sequences on r_k = r0 2^{-k}, k = 1..40, truncated below 1e-12, then continued for
 * the built-in families by doubling |log r| fifteen more times. The verdict looks at the
 * last 10 samples.
 */
MaxRegularityReport verify_max_regularity(const Modulus& m);

struct ConcavityReport {
    bool increasing = false;
    bool concave = false;
    double worst_violation = 0.0;
    double worst_r = 0.0;
    std::vector<double> r;
    std::vector<double> values;
    bool passes() const { return increasing && concave; }
};

/// Samples F_delta^p on a uniform grid of [0, delta].
ConcavityReport verify_f_concavity(const Modulus& m, double p, double delta, int samples = 257);

/// Largest delta in (0, r0] for which verify_f_concavity passes, by bisection.
double largest_concave_delta(const Modulus& m, double p, int iterations = 40);

}  // namespace stflow
