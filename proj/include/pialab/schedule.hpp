#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "pialab/errors.hpp"

namespace pialab {

// Discrete {beta_t, alpha_t, alpha_bar_t} tables (index 0 is the clean-data
// sentinel: beta_0 = 0, alpha_bar_0 = 1) or the continuous variance-preserving
// parameterization beta(t) = beta_min + t*(beta_max - beta_min), t in [0,1].
struct NoiseSchedule {
  bool continuous = false;
  int T = 0;
  Eigen::VectorXd betas, alphas, alpha_bars;  // size T+1, entry 0 is the sentinel
  double beta_start = 0.0, beta_end = 0.0;    // discrete construction params
  double beta_min = 0.1, beta_max = 20.0;     // continuous params

  double beta(double t) const {
    if (!continuous) throw invalid_argument_error("beta(t): schedule is discrete");
    return beta_min + t * (beta_max - beta_min);
  }

  // closed form of exp(-integral_0^t beta(s) ds)
  double alpha_bar(double t) const {
    if (!continuous) {
      int ti = static_cast<int>(t);
      if (ti != t) throw invalid_argument_error("alpha_bar: non-integer t on a discrete schedule");
      return abar(ti);
    }
    if (t < 0.0 || t > 1.0)
      throw invalid_argument_error("alpha_bar: continuous t must be in [0, 1]");
    return std::exp(-(beta_min * t + 0.5 * (beta_max - beta_min) * t * t));
  }

  double abar(int t) const {
    if (continuous) throw invalid_argument_error("abar: schedule is continuous");
    if (t < 0 || t > T) throw invalid_argument_error("abar: t out of range");
    return alpha_bars(t);
  }

  bool valid_time(int t) const { return !continuous && t >= 0 && t <= T; }

  // normalized time fed to the model's embedding
  double u_of(double t) const { return continuous ? t : t / static_cast<double>(T); }

  // Advisory check backing the near-1 approximation the attack relies on;
  // deliberately not enforced at construction (tiny-T schedules are legal).
  bool first_step_near_one() const {
    return continuous ? alpha_bar(1e-3) >= 0.999 : alpha_bars(1) >= 0.999;
  }
};

inline NoiseSchedule make_linear_schedule(int T, double beta_start, double beta_end) {
  if (T < 1) throw invalid_argument_error("make_linear_schedule: T must be >= 1");
  if (!(beta_start > 0.0) || !(beta_start <= beta_end) || !(beta_end < 1.0))
    throw invalid_argument_error("make_linear_schedule: need 0 < beta_start <= beta_end < 1");
  NoiseSchedule s;
  s.T = T;
  s.beta_start = beta_start;
  s.beta_end = beta_end;
  s.betas = Eigen::VectorXd::Zero(T + 1);
  s.alphas = Eigen::VectorXd::Ones(T + 1);
  s.alpha_bars = Eigen::VectorXd::Ones(T + 1);
  for (int t = 1; t <= T; ++t) {
    double b = T == 1 ? beta_start
                      : beta_start + (beta_end - beta_start) * (t - 1) / static_cast<double>(T - 1);
    s.betas(t) = b;
    s.alphas(t) = 1.0 - b;
    s.alpha_bars(t) = s.alpha_bars(t - 1) * s.alphas(t);
  }
  return s;
}

inline NoiseSchedule make_vp_schedule(double beta_min = 0.1, double beta_max = 20.0) {
  if (!(beta_min > 0.0) || !(beta_min <= beta_max))
    throw invalid_argument_error("make_vp_schedule: need 0 < beta_min <= beta_max");
  NoiseSchedule s;
  s.continuous = true;
  s.beta_min = beta_min;
  s.beta_max = beta_max;
  return s;
}

// sqrt(abar_t) * x0 + sqrt(1 - abar_t) * eps, for a single row or a batch
template <class D1, class D2>
Eigen::MatrixXd forward_marginal_ab(const Eigen::MatrixBase<D1>& x0,
                                    const Eigen::MatrixBase<D2>& eps, double ab) {
  if (x0.rows() != eps.rows() || x0.cols() != eps.cols())
    throw invalid_argument_error("forward_marginal: shape mismatch between x0 and eps");
  return std::sqrt(ab) * x0 + std::sqrt(1.0 - ab) * eps;
}

template <class D1, class D2>
Eigen::MatrixXd forward_marginal(const Eigen::MatrixBase<D1>& x0, int t,
                                 const Eigen::MatrixBase<D2>& eps, const NoiseSchedule& sched) {
  return forward_marginal_ab(x0, eps, sched.abar(t));
}

template <class D1, class D2>
Eigen::MatrixXd forward_marginal(const Eigen::MatrixBase<D1>& x0, double t,
                                 const Eigen::MatrixBase<D2>& eps, const NoiseSchedule& sched) {
  return forward_marginal_ab(x0, eps, sched.alpha_bar(t));
}

// Variance-preserving SDE coefficients: dx = f_t(x) dt + g_t dw with
// f_t(x) = -1/2 beta(t) x and g_t = sqrt(beta(t)).
struct VpSde {
  const NoiseSchedule* sched;

  explicit VpSde(const NoiseSchedule& s) : sched(&s) {
    if (!s.continuous) throw invalid_argument_error("VpSde: requires a continuous schedule");
  }

  template <class D>
  Eigen::MatrixXd drift(const Eigen::MatrixBase<D>& x, double t) const {
    return -0.5 * sched->beta(t) * x;
  }
  double g_squared(double t) const { return sched->beta(t); }
};

}  // namespace pialab
