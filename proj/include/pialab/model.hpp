#pragma once

#include <Eigen/Dense>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <vector>

#include "pialab/embedding.hpp"
#include "pialab/errors.hpp"
#include "pialab/rng.hpp"
#include "pialab/tape.hpp"

namespace pialab {

// Noise-prediction MLP eps_theta(x, t): input is the sample concatenated with
// the sinusoidal time embedding, three SiLU hidden layers of width 128, linear
// output of the sample dimension. The query counter counts one per sample
// forward evaluation and is safe under concurrent scoring.
class EpsilonModel {
 public:
  static constexpr int kHidden = 128;
  static constexpr int kLayers = 4;  // 3 hidden + output

  // params laid out [W0, b0, W1, b1, W2, b2, W3, b3]; biases are 1 x n rows
  std::vector<Eigen::MatrixXd> params;
  int dim = 0;
  std::uint64_t init_seed = 0;

  EpsilonModel() = default;
  EpsilonModel(const EpsilonModel& o)
      : params(o.params), dim(o.dim), init_seed(o.init_seed), query_count_(o.query_count_.load()) {}
  EpsilonModel& operator=(const EpsilonModel& o) {
    params = o.params;
    dim = o.dim;
    init_seed = o.init_seed;
    query_count_.store(o.query_count_.load());
    return *this;
  }

  // He-style init, biases zero. input_gain multiplies the first-layer rows fed
  // by the sample coordinates (not the time embedding): a random-feature init
  // that lets the pinned architecture resolve sub-noise spatial scales within
  // the desk-scale epoch budget.
  static EpsilonModel init(int dim, std::uint64_t seed, double input_gain = 10.0) {
    if (dim < 1) throw invalid_argument_error("EpsilonModel::init: dim must be >= 1");
    EpsilonModel m;
    m.dim = dim;
    m.init_seed = seed;
    Rng r(seed);
    std::vector<int> dims = {dim + kTimeEmbedDim, kHidden, kHidden, kHidden, dim};
    for (int l = 0; l < kLayers; ++l) {
      Eigen::MatrixXd w(dims[l], dims[l + 1]);
      double s = std::sqrt(2.0 / dims[l]);
      for (Eigen::Index i = 0; i < w.rows(); ++i)
        for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = s * r.normal();
      if (l == 0) w.topRows(dim) *= input_gain;
      m.params.push_back(std::move(w));
      m.params.push_back(Eigen::MatrixXd::Zero(1, dims[l + 1]));
    }
    return m;
  }

  // One forward evaluation = one query.
  Eigen::RowVectorXd eps(const Eigen::RowVectorXd& x, double u) const {
    if (x.cols() != dim) throw invalid_argument_error("eps: sample dimension mismatch");
    Eigen::RowVectorXd in(dim + kTimeEmbedDim);
    in << x, time_embedding(u);
    Eigen::MatrixXd h = in;
    for (int l = 0; l < kLayers; ++l) {
      h = (h * params[2 * l]).rowwise() + params[2 * l + 1].row(0);
      if (l < kLayers - 1) h = GradientTape::silu_fwd(h);
    }
    query_count_.fetch_add(1, std::memory_order_relaxed);
    return h.row(0);
  }

  long long query_count() const { return query_count_.load(std::memory_order_relaxed); }
  void add_queries(long long n) const { query_count_.fetch_add(n, std::memory_order_relaxed); }

  std::vector<int> layer_dims() const {
    std::vector<int> d;
    d.push_back(static_cast<int>(params[0].rows()));
    for (int l = 0; l < kLayers; ++l) d.push_back(static_cast<int>(params[2 * l].cols()));
    return d;
  }

 private:
  mutable std::atomic<long long> query_count_{0};
};

}  // namespace pialab
