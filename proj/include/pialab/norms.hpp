#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "pialab/errors.hpp"

namespace pialab {

// (sum_i |x_i|^p)^(1/p) over all coefficients of any dense expression.
// Scaled by the max element so tiny entries cannot underflow to a spurious 0
// and huge entries cannot overflow for large p.
template <class Derived>
double lp_norm(const Eigen::MatrixBase<Derived>& x, double p) {
  if (!(p >= 1.0)) throw invalid_argument_error("lp_norm: p must be >= 1");
  Eigen::ArrayXXd a = x.derived().template cast<double>().array().abs();
  if (!a.allFinite()) throw invalid_argument_error("lp_norm: non-finite input");
  double m = a.size() == 0 ? 0.0 : a.maxCoeff();
  if (m == 0.0) return 0.0;
  return m * std::pow((a / m).pow(p).sum(), 1.0 / p);
}

}  // namespace pialab
