#pragma once

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "pialab/adam.hpp"
#include "pialab/embedding.hpp"
#include "pialab/errors.hpp"
#include "pialab/model.hpp"
#include "pialab/norms.hpp"
#include "pialab/rng.hpp"
#include "pialab/schedule.hpp"
#include "pialab/tape.hpp"

namespace pialab {

// ||eps - eps_theta(sqrt(abar_t) x0 + sqrt(1-abar_t) eps, t)||^2 summed over
// elements. The caller supplies eps explicitly so the loss is deterministic.
template <class M>
double ddpm_loss(M& model, const Eigen::RowVectorXd& x0, int t, const Eigen::RowVectorXd& eps,
                 const NoiseSchedule& sched) {
  Eigen::MatrixXd xt = forward_marginal(x0, t, eps, sched);
  Eigen::RowVectorXd pred = model.eps(Eigen::RowVectorXd(xt.row(0)), sched.u_of(t));
  return (eps - pred).squaredNorm();
}

struct TrainOptions {
  int epochs = 2000;
  int batch = 640;
  double lr = 5e-3;
  std::uint64_t seed = 0;
  // presentations contributed by each sample per epoch, drawn with fresh
  // uniform-random t and fresh noise; T draws/sample/epoch is what lets the
  // pinned epoch budget reach the memorization regime
  int pool_multiplier = 100;
  double budget_seconds = 0.0;  // 0 = unlimited
  bool cosine_decay = true;
};

// Minimizes the DDPM objective over the dataset; returns per-epoch mean loss.
// Epoch = one shuffled pass over the presentation pool (n * pool_multiplier
// (sample, t, eps) triples). Single-threaded by design.
inline std::vector<double> train(EpsilonModel& model, const Eigen::MatrixXd& data,
                                 const NoiseSchedule& sched, const TrainOptions& opt) {
  if (data.rows() == 0) throw invalid_argument_error("train: dataset is empty");
  if (data.cols() != model.dim) throw invalid_argument_error("train: data/model dim mismatch");
  if (opt.epochs < 0) throw invalid_argument_error("train: epochs must be >= 0");
  if (opt.batch < 1) throw invalid_argument_error("train: batch must be >= 1");

  const int n = static_cast<int>(data.rows());
  const int dim = model.dim;
  const long pool = static_cast<long>(n) * opt.pool_multiplier;
  const long steps_per_epoch = (pool + opt.batch - 1) / opt.batch;
  const long total_steps = static_cast<long>(opt.epochs) * steps_per_epoch;

  Rng rng(opt.seed);
  AdamState adam;
  adam.lr = opt.lr;
  adam.init_like(model.params);

  std::vector<double> trace;
  trace.reserve(opt.epochs);
  std::vector<int> idxs(pool);
  auto t0 = std::chrono::steady_clock::now();

  for (int ep = 0; ep < opt.epochs; ++ep) {
    for (long i = 0; i < pool; ++i) idxs[i] = static_cast<int>(i % n);
    rng.shuffle(idxs);

    double epoch_loss = 0.0;
    long batches = 0;
    for (long s = 0; s < pool; s += opt.batch) {
      const int B = static_cast<int>(std::min<long>(opt.batch, pool - s));
      Eigen::MatrixXd input(B, dim + kTimeEmbedDim);
      Eigen::MatrixXd noise(B, dim);
      for (int b = 0; b < B; ++b) {
        double ab, u;
        if (sched.continuous) {
          double t = 1.0 - rng.unit();  // (0, 1]
          ab = sched.alpha_bar(t);
          u = t;
        } else {
          long t = rng.uniform_int(1, sched.T);
          ab = sched.abar(static_cast<int>(t));
          u = sched.u_of(static_cast<double>(t));
        }
        for (int j = 0; j < dim; ++j) noise(b, j) = rng.normal();
        input.block(b, 0, 1, dim) =
            std::sqrt(ab) * data.row(idxs[s + b]) + std::sqrt(1.0 - ab) * noise.row(b);
        input.block(b, dim, 1, kTimeEmbedDim) = time_embedding(u);
      }

      GradientTape tape;
      std::vector<int> wrt;
      for (auto& p : model.params) wrt.push_back(tape.leaf(p, true));
      int h = tape.leaf(input);
      for (int l = 0; l < EpsilonModel::kLayers; ++l) {
        h = tape.add_rowvec(tape.matmul(h, wrt[2 * l]), wrt[2 * l + 1]);
        if (l < EpsilonModel::kLayers - 1) h = tape.silu(h);
      }
      int resid = tape.sub(h, tape.leaf(noise));
      int loss = tape.scale(tape.sum_squares(resid), 1.0 / B);
      model.add_queries(B);

      double lval = tape.value(loss)(0, 0);
      if (!std::isfinite(lval))
        throw training_diverged_error("train: non-finite loss at epoch " + std::to_string(ep), ep);
      epoch_loss += lval;
      ++batches;

      auto grads = tape.grad(loss, wrt);
      if (opt.cosine_decay) {
        double step = static_cast<double>(adam.step + 1);
        adam.lr = opt.lr * 0.5 *
                  (1.0 + std::cos(std::numbers::pi * step / static_cast<double>(total_steps)));
      }
      adam_step(model.params, grads, adam);
    }
    trace.push_back(epoch_loss / static_cast<double>(batches));

    if (opt.budget_seconds > 0.0) {
      double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      if (elapsed > opt.budget_seconds)
        throw budget_exceeded_error("train: wall-time budget exceeded at epoch " +
                                    std::to_string(ep));
    }
  }
  return trace;
}

}  // namespace pialab
