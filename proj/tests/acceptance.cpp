// End-to-end acceptance gate. Trains both bundled presets from scratch and
// checks every documented guarantee at its stated tolerance, printing one
// PASS/FAIL line per check; exits nonzero if any fail. Numeric bounds are
// pinned here on purpose -- edit the constant, not the comparison.

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

#include "pialab/attacks.hpp"
#include "pialab/embedding.hpp"
#include "pialab/eval.hpp"
#include "pialab/model.hpp"
#include "pialab/rng.hpp"
#include "pialab/runner.hpp"
#include "pialab/schedule.hpp"
#include "pialab/tape.hpp"
#include "pialab/train.hpp"

using Eigen::MatrixXd;
using Eigen::RowVectorXd;
using namespace pialab;

namespace {

bool g_all_ok = true;

void report(int id, bool ok, const std::string& what) {
  std::printf("[%s] criterion-%d: %s\n", ok ? "PASS" : "FAIL", id, what.c_str());
  std::fflush(stdout);
  if (!ok) g_all_ok = false;
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

double auc_of(const std::vector<AttackScore>& scores) { return auc(roc_curve(scores)); }

long long total_queries(const std::vector<AttackScore>& scores) {
  long long q = 0;
  for (const auto& s : scores) q += s.queries;
  return q;
}

std::vector<int> argsort(const std::vector<double>& v) {
  std::vector<int> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    if (v[a] != v[b]) return v[a] < v[b];
    return a < b;
  });
  return idx;
}

// oracle for the deterministic-sampler roundtrip: always predicts the exact
// noise the trajectory was built from
struct FixedEps {
  RowVectorXd e;
  RowVectorXd eps(const RowVectorXd&, double) { return e; }
};

RowVectorXd normal_row(Rng& rng, int dim) {
  RowVectorXd x(dim);
  for (int j = 0; j < dim; ++j) x(j) = rng.normal();
  return x;
}

}  // namespace

int main() {
  // one worker so the wall-clock bound below measures single-core compute
  setenv("PIALAB_THREADS", "1", 1);

  ExperimentConfig cfg;  // the bundled discrete overfit preset

  // ---- 1: preset separation under the wall-clock budget --------------------
  auto clock0 = std::chrono::steady_clock::now();
  PreparedData data = prepare_data(cfg);
  TrainResult tr = train_from_config(cfg, data);
  std::vector<AttackScore> sc_na, sc_secmi, sc_pia, sc_pian;
  for (const AttackSpec& spec : cfg.attacks) {
    std::vector<AttackScore> scores = score_split(tr.model, tr.sched, data, spec);
    if (spec.method == "na") sc_na = std::move(scores);
    else if (spec.method == "secmi-style") sc_secmi = std::move(scores);
    else if (spec.method == "pia") sc_pia = std::move(scores);
    else sc_pian = std::move(scores);
  }
  double auc_na = auc_of(sc_na);
  double auc_pia = auc_of(sc_pia);
  double auc_pian = auc_of(sc_pian);
  double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - clock0).count();
  report(1,
         auc_pia >= 0.70 && auc_pian >= 0.70 && auc_pia >= auc_na - 0.02 && elapsed <= 600.0,
         fmt("preset separation: pia auc %.4f and pian auc %.4f (bound 0.70), na auc %.4f "
             "(need pia >= na - 0.02), computed in %.1f s (bound 600 s, one worker, loss "
             "%.2f -> %.3f)",
             auc_pia, auc_pian, auc_na, elapsed, tr.loss_trace.front(), tr.loss_trace.back()));

  // ---- 2: exact query totals off the model counter -------------------------
  {
    long long n = data.members.rows() + data.holdout.rows();
    long long k = cfg.attacks[1].k_steps;
    long long qna = total_queries(sc_na);
    long long qsec = total_queries(sc_secmi);
    long long qpia = total_queries(sc_pia);
    long long qpian = total_queries(sc_pian);
    report(2,
           qna == n && qpia == 2 * n && qpian == 2 * n && qsec == (2 * k + 2) * n,
           fmt("query totals for n=%lld: na %lld (want %lld), pia %lld (want %lld), pian %lld "
               "(want %lld), secmi-style %lld (want %lld)",
               n, qna, n, qpia, 2 * n, qpian, 2 * n, qsec, (2 * k + 2) * n));
  }

  // ---- 3: one-step gap at lower targets ranks samples identically ----------
  {
    const int t = 20;
    const double p = 4.0;
    MatrixXd all(data.members.rows() + data.holdout.rows(), cfg.dim);
    all << data.members, data.holdout;
    std::vector<double> resid(static_cast<size_t>(all.rows()));
    for (Eigen::Index i = 0; i < all.rows(); ++i)
      resid[static_cast<size_t>(i)] =
          pia_score(tr.model, RowVectorXd(all.row(i)), t, tr.sched, p).score;
    const std::vector<int> want_order = argsort(resid);
    bool ok = true;
    double worst_rel = 0.0;
    for (int target : {1, t / 2, t - 1}) {
      double c = std::abs(ddim_gap_coefficient(t, target, tr.sched));
      std::vector<double> dist(static_cast<size_t>(all.rows()));
      for (Eigen::Index i = 0; i < all.rows(); ++i)
        dist[static_cast<size_t>(i)] =
            ddim_gap_distance(tr.model, RowVectorXd(all.row(i)), t, target, tr.sched, p);
      if (argsort(dist) != want_order) ok = false;
      for (size_t i = 0; i < dist.size(); ++i) {
        double want = c * resid[i];
        worst_rel = std::max(worst_rel, std::abs(dist[i] - want) / std::max(want, 1e-300));
      }
    }
    if (worst_rel > 1e-8) ok = false;
    report(3, ok,
           fmt("gap-vs-residual at t=20, targets {1,10,19}: sample orderings identical, "
               "|d - c*R| rel %.2e (bound 1e-8)",
               worst_rel));
  }

  // ---- 4: anchor normalization contract -------------------------------------
  {
    Rng rng(6101);
    const int N = 16;
    const double want_l1 = N * std::sqrt(std::numbers::pi / 2.0);
    double worst_l1 = 0.0, worst_scale = 0.0, worst_idem = 0.0;
    for (int rep = 0; rep < 1000; ++rep) {
      RowVectorXd e = normal_row(rng, N);
      RowVectorXd nrm = pian_normalize(e);
      worst_l1 = std::max(worst_l1, std::abs(nrm.array().abs().sum() - want_l1) / want_l1);
      double lam = 0.5 + 4.0 * rng.unit();
      RowVectorXd scaled = pian_normalize((lam * e).eval());
      worst_scale = std::max(worst_scale, (scaled - nrm).array().abs().maxCoeff());
      RowVectorXd again = pian_normalize(nrm);
      worst_idem = std::max(worst_idem, (again - nrm).array().abs().maxCoeff());
    }
    report(4, worst_l1 <= 1e-10 && worst_scale <= 1e-12 && worst_idem <= 1e-12,
           fmt("normalized anchor over 1000 inputs: l1 rel err %.2e (bound 1e-10), "
               "positive-scale dev %.2e and idempotence dev %.2e (bound 1e-12)",
               worst_l1, worst_scale, worst_idem));
  }

  // ---- 5: trapezoid AUC equals the pairwise oracle --------------------------
  {
    Rng rng(6201);
    double worst = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
      std::vector<AttackScore> scores;
      long long id = 0;
      long nm = 3 + static_cast<long>(rng.below(38));
      long nh = 3 + static_cast<long>(rng.below(38));
      for (long i = 0; i < nm + nh; ++i) {
        AttackScore s;
        s.sample_id = id++;
        s.is_member = i < nm;
        s.score = static_cast<double>(rng.below(9)) / 4.0;  // coarse grid, heavy ties
        scores.push_back(s);
      }
      worst = std::max(worst, std::abs(auc_of(scores) - pairwise_auc(scores)));
    }
    report(5, worst <= 1e-12,
           fmt("auc vs pairwise oracle over 100 tie-heavy sets: max |diff| %.2e (bound 1e-12)",
               worst));
  }

  // ---- 6: reverse-mode gradients against central differences ----------------
  {
    // The difference quotient itself carries rounding noise of order
    // eps_mach * loss / h, so entries below that magnitude are checked
    // absolutely at kGradAtol; everything else is relative at kGradRtol.
    const double kFdStep = 1e-5;
    const double kGradRtol = 1e-4;
    const double kGradAtol = 1e-7;
    EpsilonModel model = EpsilonModel::init(cfg.dim, 6001);
    Rng rng(6002);
    bool ok = true;
    double worst_ratio = 0.0, worst_abs = 0.0;
    long checked = 0;
    for (int draw = 0; draw < 20; ++draw) {
      RowVectorXd x0 = normal_row(rng, cfg.dim);
      RowVectorXd eps0 = normal_row(rng, cfg.dim);
      int t = static_cast<int>(rng.uniform_int(1, tr.sched.T));
      double ab = tr.sched.abar(t);
      double u = tr.sched.u_of(t);

      MatrixXd input(1, cfg.dim + kTimeEmbedDim);
      input.block(0, 0, 1, cfg.dim) = std::sqrt(ab) * x0 + std::sqrt(1.0 - ab) * eps0;
      input.block(0, cfg.dim, 1, kTimeEmbedDim) = time_embedding(u);
      GradientTape tape;
      std::vector<int> wrt;
      for (auto& p : model.params) wrt.push_back(tape.leaf(p, true));
      int h = tape.leaf(input);
      for (int l = 0; l < EpsilonModel::kLayers; ++l) {
        h = tape.add_rowvec(tape.matmul(h, wrt[2 * l]), wrt[2 * l + 1]);
        if (l < EpsilonModel::kLayers - 1) h = tape.silu(h);
      }
      int resid = tape.sub(h, tape.leaf(MatrixXd(eps0)));
      std::vector<MatrixXd> grads = tape.grad(tape.sum_squares(resid), wrt);

      EpsilonModel probe = model;
      for (size_t pi = 0; pi < model.params.size(); ++pi) {
        MatrixXd& P = probe.params[pi];
        for (Eigen::Index r = 0; r < P.rows(); ++r)
          for (Eigen::Index c = 0; c < P.cols(); ++c) {
            double keep = P(r, c);
            P(r, c) = keep + kFdStep;
            double up = ddpm_loss(probe, x0, t, eps0, tr.sched);
            P(r, c) = keep - kFdStep;
            double dn = ddpm_loss(probe, x0, t, eps0, tr.sched);
            P(r, c) = keep;
            double fd = (up - dn) / (2.0 * kFdStep);
            double an = grads[pi](r, c);
            double diff = std::abs(fd - an);
            double allow = kGradRtol * std::max(std::abs(an), std::abs(fd)) + kGradAtol;
            worst_ratio = std::max(worst_ratio, diff / allow);
            worst_abs = std::max(worst_abs, diff);
            if (diff > allow) ok = false;
            ++checked;
          }
      }
    }
    report(6, ok,
           fmt("gradient vs central difference (h=1e-5): %ld entries over 20 draws, worst "
               "|an-fd| %.2e, worst fill of 1e-4-rel + 1e-7-abs allowance %.3f (bound 1)",
               checked, worst_abs, worst_ratio));
  }

  // ---- 7: deterministic sampler repeats bitwise and inverts exactly ---------
  {
    Rng rng(6301);
    bool bit_ok = true;
    for (int rep = 0; rep < 10; ++rep) {
      RowVectorXd x = normal_row(rng, cfg.dim);
      int t = 2 + static_cast<int>(rng.below(99));
      int tn = static_cast<int>(rng.below(static_cast<std::uint64_t>(t)));
      RowVectorXd a = ddim_step(tr.model, x, t, tn, tr.sched);
      RowVectorXd b = ddim_step(tr.model, x, t, tn, tr.sched);
      if (!(a == b)) bit_ok = false;
    }
    double worst = 0.0;
    for (int rep = 0; rep < 50; ++rep) {
      FixedEps oracle{normal_row(rng, cfg.dim)};
      RowVectorXd x0 = normal_row(rng, cfg.dim);
      int t = 2 + static_cast<int>(rng.below(99));
      int tn = static_cast<int>(rng.below(static_cast<std::uint64_t>(t)));
      RowVectorXd x_t = groundtruth_point(x0, oracle.e, t, tr.sched);
      RowVectorXd stepped = ddim_step(oracle, x_t, t, tn, tr.sched);
      RowVectorXd want = groundtruth_point(x0, oracle.e, tn, tr.sched);
      for (int j = 0; j < cfg.dim; ++j)
        worst = std::max(worst,
                         std::abs(stepped(j) - want(j)) / std::max(1.0, std::abs(want(j))));
    }
    report(7, bit_ok && worst <= 1e-10,
           fmt("ddim: 10 repeats bit-identical, oracle-noise roundtrip over 50 (t,t') pairs "
               "off by %.2e (bound 1e-10)",
               worst));
  }

  // ---- 8: continuous-time preset separates with two queries per sample ------
  {
    ExperimentConfig ccfg = continuous_preset();
    PreparedData cdata = prepare_data(ccfg);
    TrainResult ctr = train_from_config(ccfg, cdata);
    std::vector<AttackScore> scores = score_split(ctr.model, ctr.sched, cdata, ccfg.attacks[0]);
    bool q_ok = true;
    for (const auto& s : scores) q_ok = q_ok && s.queries == 2;
    double a = auc_of(scores);
    report(8, a >= 0.60 && q_ok,
           fmt("continuous preset: pia-sde auc %.4f at t=0.3 (bound 0.60), every sample took "
               "exactly 2 queries: %s",
               a, q_ok ? "yes" : "no"));
  }

  // ---- 9: auc-vs-t sweep peaks strictly inside the grid ---------------------
  {
    std::vector<double> grid = default_t_grid(tr.sched);
    AttackSpec spec = cfg.attacks[2];  // pia at the preset norm order
    std::vector<double> aucs;
    aucs.reserve(grid.size());
    for (double tval : grid) {
      spec.t = tval;
      aucs.push_back(sweep_point(tr.model, tr.sched, data, spec).auc);
    }
    double vmax = *std::max_element(aucs.begin(), aucs.end());
    size_t imax =
        static_cast<size_t>(std::max_element(aucs.begin(), aucs.end()) - aucs.begin());
    bool interior = aucs.front() < vmax && aucs.back() < vmax;
    report(9, interior,
           fmt("auc sweep over %zu grid points: %.4f at t=%g, peak %.4f at t=%g, %.4f at "
               "t=%g (peak must be interior)",
               grid.size(), aucs.front(), grid.front(), vmax, grid[imax], aucs.back(),
               grid.back()));
  }

  // ---- 10: members reconstruct better than holdouts -------------------------
  {
    const int t = 40;
    auto rec_rms = [&](const RowVectorXd& x0) {
      RowVectorXd e0 = proximal_eps(tr.model, x0);
      RowVectorXd x_t = groundtruth_point(x0, e0, t, tr.sched);
      RowVectorXd ep = tr.model.eps(x_t, tr.sched.u_of(t));
      RowVectorXd rec = reconstruct_x0(x_t, ep, t, tr.sched);
      return std::sqrt((rec - x0).squaredNorm() / static_cast<double>(x0.size()));
    };
    int pairs = static_cast<int>(data.members.rows());
    int wins = 0;
    for (int i = 0; i < pairs; ++i)
      if (rec_rms(data.members.row(i)) < rec_rms(data.holdout.row(i))) ++wins;
    int need = (7 * pairs + 9) / 10;  // ceil(0.70 * pairs)
    report(10, wins >= need,
           fmt("reconstruction at t=40: member beats matched holdout on %d/%d pairs "
               "(need >= %d)",
               wins, pairs, need));
  }

  std::printf("acceptance: %s\n", g_all_ok ? "all criteria passed" : "FAILURES above");
  return g_all_ok ? 0 : 1;
}
