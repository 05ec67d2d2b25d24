#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "pialab/ddim.hpp"
#include "pialab/errors.hpp"
#include "pialab/norms.hpp"
#include "pialab/rng.hpp"
#include "pialab/schedule.hpp"

namespace pialab {

enum class AttackMethod { naive, secmi_style, pia, pian, pia_sde };

inline const char* method_label(AttackMethod m) {
  switch (m) {
    case AttackMethod::naive: return "na";
    case AttackMethod::secmi_style: return "secmi-style";
    case AttackMethod::pia: return "pia";
    case AttackMethod::pian: return "pian";
    case AttackMethod::pia_sde: return "pia-sde";
  }
  throw invalid_argument_error("method_label: unknown method");
}

inline AttackMethod method_from_label(const std::string& s) {
  if (s == "na") return AttackMethod::naive;
  if (s == "secmi-style") return AttackMethod::secmi_style;
  if (s == "pia") return AttackMethod::pia;
  if (s == "pian") return AttackMethod::pian;
  if (s == "pia-sde") return AttackMethod::pia_sde;
  throw invalid_argument_error("unknown attack method '" + s +
                               "' (expected na|secmi-style|pia|pian|pia-sde)");
}

// One scored sample. Lower score = more member-like for every method here.
// sample_id / is_member are bookkeeping filled in by the scoring runner;
// queries is always measured off the model's own counter.
struct AttackScore {
  long long sample_id = -1;
  bool is_member = false;
  AttackMethod method = AttackMethod::pia;
  double t = 0.0;
  double p = 2.0;
  double score = 0.0;
  long long queries = 0;
};

// Predicted member iff score is strictly below the threshold.
inline bool classify(const AttackScore& s, double tau) { return s.score < tau; }

// The shared time-0 query: the model's noise prediction on the clean sample.
template <class M>
Eigen::RowVectorXd proximal_eps(M& model, const Eigen::RowVectorXd& x0) {
  return model.eps(x0, 0.0);
}

// Rescales eps so its l1 norm is N*sqrt(pi/2); positive-scale invariant and
// idempotent. All-zero input has no scale and is rejected.
inline Eigen::RowVectorXd pian_normalize(const Eigen::RowVectorXd& eps) {
  double l1 = eps.array().abs().sum();
  if (l1 == 0.0) throw degenerate_input_error("pian_normalize: all-zero input");
  double n = static_cast<double>(eps.size());
  return eps * (n * std::sqrt(std::numbers::pi / 2.0) / l1);
}

namespace detail {
template <class M>
double two_query_residual(M& model, const Eigen::RowVectorXd& x0, const Eigen::RowVectorXd& e0,
                          int t, const NoiseSchedule& sched, double p) {
  Eigen::RowVectorXd x_t = groundtruth_point(x0, e0, t, sched);
  return lp_norm((e0 - model.eps(x_t, sched.u_of(t))).eval(), p);
}

inline void check_norm_order(double p) {
  if (!(p >= 1.0)) throw invalid_argument_error("attack: norm order p must be >= 1");
}
}  // namespace detail

// Training-loss probe with fresh noise: || eps - eps_theta(x_t, t) ||_p for
// eps ~ N(0, I) drawn from `seed`. One query; different seeds give different
// scores on the same sample.
template <class M>
AttackScore naive_attack(M& model, const Eigen::RowVectorXd& x0, int t,
                         const NoiseSchedule& sched, double p, std::uint64_t seed) {
  detail::check_norm_order(p);
  Rng rng(seed);
  Eigen::RowVectorXd eps(x0.size());
  for (Eigen::Index i = 0; i < eps.size(); ++i) eps(i) = rng.normal();
  long long c0 = model.query_count();
  Eigen::RowVectorXd x_t = groundtruth_point(x0, eps, t, sched);
  AttackScore out;
  out.method = AttackMethod::naive;
  out.t = static_cast<double>(t);
  out.p = p;
  out.score = lp_norm((eps - model.eps(x_t, sched.u_of(t))).eval(), p);
  out.queries = model.query_count() - c0;
  return out;
}

// Deterministic two-query probe: anchor the trajectory with the model's own
// time-0 prediction, re-query at t, and measure how far the prediction moved.
template <class M>
AttackScore pia_score(M& model, const Eigen::RowVectorXd& x0, int t, const NoiseSchedule& sched,
                      double p) {
  detail::check_norm_order(p);
  long long c0 = model.query_count();
  Eigen::RowVectorXd e0 = proximal_eps(model, x0);
  AttackScore out;
  out.method = AttackMethod::pia;
  out.t = static_cast<double>(t);
  out.p = p;
  out.score = detail::two_query_residual(model, x0, e0, t, sched, p);
  out.queries = model.query_count() - c0;
  return out;
}

// Same probe with the anchor rescaled to a fixed l1 norm; the rescaled anchor
// is used both to build x_t and inside the residual.
template <class M>
AttackScore pian_score(M& model, const Eigen::RowVectorXd& x0, int t, const NoiseSchedule& sched,
                       double p) {
  detail::check_norm_order(p);
  long long c0 = model.query_count();
  Eigen::RowVectorXd e0 = pian_normalize(proximal_eps(model, x0));
  AttackScore out;
  out.method = AttackMethod::pian;
  out.t = static_cast<double>(t);
  out.p = p;
  out.score = detail::two_query_residual(model, x0, e0, t, sched, p);
  out.queries = model.query_count() - c0;
  return out;
}

// Evenly spaced integer stage boundaries 0 = g_0 < g_1 < ... < g_k = t.
inline std::vector<int> secmi_partition(int t, int k_steps) {
  if (k_steps < 1) throw invalid_argument_error("secmi_score: k_steps must be >= 1");
  std::vector<int> grid(static_cast<size_t>(k_steps) + 1);
  for (int i = 0; i <= k_steps; ++i)
    grid[static_cast<size_t>(i)] =
        static_cast<int>(std::llround(static_cast<double>(t) * i / k_steps));
  for (int i = 0; i < k_steps; ++i)
    if (grid[static_cast<size_t>(i) + 1] <= grid[static_cast<size_t>(i)])
      throw invalid_argument_error(
          "secmi_score: t not reachable in k_steps strictly increasing stages");
  return grid;
}

// Deterministically noises x0 up to step t in k refined stages (two queries
// per stage), then probes with one denoise step t -> t-delta and one renoise
// step back; score is the gap between x_t and its round trip. 2k+2 queries.
template <class M>
AttackScore secmi_score(M& model, const Eigen::RowVectorXd& x0, int t, int k_steps,
                        const NoiseSchedule& sched, double p) {
  detail::check_norm_order(p);
  std::vector<int> grid = secmi_partition(t, k_steps);
  long long c0 = model.query_count();
  Eigen::RowVectorXd x = x0;
  for (int i = 0; i < k_steps; ++i) {
    int ta = grid[static_cast<size_t>(i)];
    int tb = grid[static_cast<size_t>(i) + 1];
    double aa = sched.abar(ta);
    double ab = sched.abar(tb);
    Eigen::RowVectorXd e1 = model.eps(x, sched.u_of(ta));
    Eigen::RowVectorXd base = std::sqrt(ab / aa) * (x - std::sqrt(1.0 - aa) * e1);
    Eigen::RowVectorXd provisional = base + std::sqrt(1.0 - ab) * e1;
    Eigen::RowVectorXd e2 = model.eps(provisional, sched.u_of(tb));
    x = base + std::sqrt(1.0 - ab) * e2;
  }
  int delta = grid[static_cast<size_t>(k_steps)] - grid[static_cast<size_t>(k_steps) - 1];
  int td = t - delta;
  Eigen::RowVectorXd x_t = x;
  Eigen::RowVectorXd xd = ddim_step(model, x_t, t, td, sched);
  double at = sched.abar(t);
  double ad = sched.abar(td);
  Eigen::RowVectorXd er = model.eps(xd, sched.u_of(td));
  Eigen::RowVectorXd xr =
      std::sqrt(at / ad) * (xd - std::sqrt(1.0 - ad) * er) + std::sqrt(1.0 - at) * er;
  AttackScore out;
  out.method = AttackMethod::secmi_style;
  out.t = static_cast<double>(t);
  out.p = p;
  out.score = lp_norm((x_t - xr).eval(), p);
  out.queries = model.query_count() - c0;
  return out;
}

// Continuous-time probe: anchor x_t with the time-0 prediction, then measure
// the norm of the probability-flow drift there. Two queries; t = 0 is a
// score singularity.
template <class M>
AttackScore pia_sde_score(M& model, const VpSde& sde, const Eigen::RowVectorXd& x0, double t,
                          double p) {
  if (!(t > 0.0) || t > 1.0)
    throw invalid_argument_error("pia_sde_score: t must be in (0, 1]");
  detail::check_norm_order(p);
  long long c0 = model.query_count();
  Eigen::RowVectorXd e0 = proximal_eps(model, x0);
  Eigen::RowVectorXd x_t = groundtruth_point(x0, e0, t, *sde.sched);
  AttackScore out;
  out.method = AttackMethod::pia_sde;
  out.t = t;
  out.p = p;
  out.score = lp_norm(ode_drift(sde, model, x_t, t), p);
  out.queries = model.query_count() - c0;
  return out;
}

// Scalar relating the one-step denoising gap at a lower target step to the
// two-query residual at t: gap == |coefficient| * residual, exactly.
inline double ddim_gap_coefficient(int t, int target, const NoiseSchedule& sched) {
  if (target >= t) throw invalid_argument_error("ddim_gap_coefficient: target must be < t");
  double at = sched.abar(t);
  double ag = sched.abar(target);
  return (std::sqrt(1.0 - ag) * std::sqrt(at) - std::sqrt(1.0 - at) * std::sqrt(ag)) /
         std::sqrt(at);
}

// Distance between a one-step denoise from the anchored x_t and the anchored
// trajectory point at the target step. Test/diagnostic helper; two queries.
template <class M>
double ddim_gap_distance(M& model, const Eigen::RowVectorXd& x0, int t, int target,
                         const NoiseSchedule& sched, double p) {
  detail::check_norm_order(p);
  Eigen::RowVectorXd e0 = proximal_eps(model, x0);
  Eigen::RowVectorXd x_t = groundtruth_point(x0, e0, t, sched);
  Eigen::RowVectorXd stepped = ddim_step(model, x_t, t, target, sched);
  Eigen::RowVectorXd anchor = groundtruth_point(x0, e0, target, sched);
  return lp_norm((stepped - anchor).eval(), p);
}

}  // namespace pialab
