#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "pialab/errors.hpp"
#include "pialab/model.hpp"
#include "pialab/schedule.hpp"

namespace pialab {

// One deterministic (sigma = 0) DDIM denoising step t -> t_next. Exactly one
// model query.
template <class M>
Eigen::RowVectorXd ddim_step(M& model, const Eigen::RowVectorXd& x_t, int t, int t_next,
                             const NoiseSchedule& sched) {
  if (t_next >= t) throw invalid_argument_error("ddim_step: t_next must be < t");
  double ab_t = sched.abar(t);
  double ab_n = sched.abar(t_next);
  Eigen::RowVectorXd e = model.eps(x_t, sched.u_of(t));
  double r = std::sqrt(ab_n / ab_t);
  return r * (x_t - std::sqrt(1.0 - ab_t) * e) + std::sqrt(1.0 - ab_n) * e;
}

// The trajectory point fixed by (x0, eps0) under the deterministic process,
// anchored at the clean sample (alpha_bar at step 0 is exactly 1).
template <class D1, class D2>
Eigen::RowVectorXd groundtruth_point(const Eigen::MatrixBase<D1>& x0,
                                     const Eigen::MatrixBase<D2>& eps0, int t,
                                     const NoiseSchedule& sched) {
  if (x0.rows() != eps0.rows() || x0.cols() != eps0.cols())
    throw invalid_argument_error("groundtruth_point: shape mismatch");
  double ab = sched.abar(t);
  return std::sqrt(ab) * x0 + std::sqrt(1.0 - ab) * eps0;
}

template <class D1, class D2>
Eigen::RowVectorXd groundtruth_point(const Eigen::MatrixBase<D1>& x0,
                                     const Eigen::MatrixBase<D2>& eps0, double t,
                                     const NoiseSchedule& sched) {
  if (x0.rows() != eps0.rows() || x0.cols() != eps0.cols())
    throw invalid_argument_error("groundtruth_point: shape mismatch");
  double ab = sched.alpha_bar(t);
  return std::sqrt(ab) * x0 + std::sqrt(1.0 - ab) * eps0;
}

// Generic anchor form: the same trajectory expressed from an arbitrary known
// point x_k instead of the clean sample.
template <class D1, class D2>
Eigen::RowVectorXd trajectory_point(const Eigen::MatrixBase<D1>& x0,
                                    const Eigen::MatrixBase<D2>& x_k, double abar_k,
                                    double abar_t) {
  if (x0.rows() != x_k.rows() || x0.cols() != x_k.cols())
    throw invalid_argument_error("trajectory_point: shape mismatch");
  if (!(abar_k < 1.0))
    throw invalid_argument_error("trajectory_point: anchor needs abar_k < 1");
  Eigen::RowVectorXd eps_k = (x_k - std::sqrt(abar_k) * x0) / std::sqrt(1.0 - abar_k);
  return std::sqrt(abar_t) * x0 + std::sqrt(1.0 - abar_t) * eps_k;
}

// Inverts the forward marginal given a predicted noise.
template <class D1, class D2>
Eigen::RowVectorXd reconstruct_x0(const Eigen::MatrixBase<D1>& x_t,
                                  const Eigen::MatrixBase<D2>& eps_pred, int t,
                                  const NoiseSchedule& sched) {
  if (x_t.rows() != eps_pred.rows() || x_t.cols() != eps_pred.cols())
    throw invalid_argument_error("reconstruct_x0: shape mismatch");
  double ab = sched.abar(t);
  if (ab == 0.0) throw invalid_argument_error("reconstruct_x0: division by zero (abar_t = 0)");
  return (x_t - std::sqrt(1.0 - ab) * eps_pred) / std::sqrt(ab);
}

// s_theta = -eps_theta / sqrt(1 - abar_t); one query.
template <class M>
Eigen::RowVectorXd score_from_eps(M& model, const Eigen::RowVectorXd& x, double t,
                                  const NoiseSchedule& sched) {
  double ab = sched.alpha_bar(t);
  if (ab == 1.0)
    throw invalid_argument_error("score_from_eps: division by zero (abar_t = 1, t too close to 0)");
  return -model.eps(x, sched.u_of(t)) / std::sqrt(1.0 - ab);
}

// Probability-flow ODE drift f_t(x) - 1/2 g_t^2 s_theta(x, t); one query.
template <class M>
Eigen::RowVectorXd ode_drift(const VpSde& sde, M& model, const Eigen::RowVectorXd& x, double t) {
  if (!(t > 0.0) || t > 1.0) throw invalid_argument_error("ode_drift: t must be in (0, 1]");
  Eigen::RowVectorXd s = score_from_eps(model, x, t, *sde.sched);
  return sde.drift(x, t) - 0.5 * sde.g_squared(t) * s;
}

}  // namespace pialab
