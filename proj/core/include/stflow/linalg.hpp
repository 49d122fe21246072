#pragma once

#include <Eigen/Dense>

namespace stflow {

/// Largest supported spatial dimension. Vectors and matrices below never allocate.
inline constexpr int kMaxDim = 3;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

/// Spectral norm.
double operator_norm(const Mat& a);
/// Smallest singular value.
double min_singular_value(const Mat& a);

}  // namespace stflow
