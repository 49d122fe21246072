#pragma once

#include "stflow/drift.hpp"
#include "stflow/pde.hpp"

namespace stflow {

struct TransformedCoeffs {
    Vec drift;   ///< lambda U(t, gamma^{-1}(t, y))
    Mat sigma;   ///< I + grad U(t, gamma^{-1}(t, y))
};

/**
 * gamma(t, x) = x + U(t, x) for a resolvent solution U. Off-grid values of U, grad U and
 * hess U are multilinear interpolants of the grid fields.
 */
class ItoTanakaMap {
public:
    explicit ItoTanakaMap(ResolventSolution sol);
    /// Builds the map from U sampled on a grid; grad and hess come from grid differences.
    static ItoTanakaMap from_field(const Grid& g, const TimeGrid& time, double lambda, const FieldFn& U);
    /// Samples b, solves the resolvent at `lambda`.
    static ItoTanakaMap solve(const DriftSpec& b, const Grid& g, const TimeGrid& time, double lambda,
                              const PicardOptions& opt = {});

    int dim() const { return d_; }
    double lambda() const { return sol_.lambda; }
    bool grad_bound() const { return sol_.grad_sup <= 0.5; }
    const ResolventSolution& resolvent() const { return sol_; }
    double t0() const { return sol_.U.time().t0; }
    double T() const { return sol_.U.time().T; }

    Vec U(double t, const Vec& x) const;
    Mat grad_U(double t, const Vec& x) const;
    /// Component (i*d + j)*d + k is d_k d_j U_i.
    std::vector<double> hess_U(double t, const Vec& x) const;

    Vec gamma(double t, const Vec& x) const;
    /// Fixed point x = y - U(t, x); throws NoConvergence if it does not settle.
    Vec gamma_inverse(double t, const Vec& y) const;
    TransformedCoeffs transformed_coeffs(double t, const Vec& y) const;

private:
    void require_bound() const;

    int d_ = 1;
    ResolventSolution sol_;
};

}  // namespace stflow
