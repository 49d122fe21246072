#pragma once

#include "stflow/grid.hpp"
#include "stflow/linalg.hpp"

#include <span>
#include <vector>

namespace stflow {

/// Unnormalized bump exp(-1/(1-|z|^2)) on the unit ball.
double bump(const Vec& z);
/// 1 / \int_{B_1} bump in dimension d.
double bump_normalization(int d);

/**
 * Fixed product rule for z -> rho(z) on the unit ball, optionally shifted by `shift` along
 * every axis. Weights sum to 1; grad_weights integrate against grad rho.
 */
struct MollifierRule {
    int d = 1;
    std::vector<Vec> nodes;
    std::vector<double> weights;
    std::vector<Vec> grad_weights;
};

MollifierRule mollifier_rule(int d, double shift = 0.0);

/// Discrete rho_n * f on the grid; identity once the support 1/n is below the grid spacing.
std::vector<double> mollify_slice(const Grid& g, std::span<const double> f, double n);
GridFunction mollify(const GridFunction& f, double n);

}  // namespace stflow
