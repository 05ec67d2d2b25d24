#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "pialab/errors.hpp"

namespace pialab {

struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step = 0;
  std::vector<Eigen::MatrixXd> m, v;

  void init_like(const std::vector<Eigen::MatrixXd>& params) {
    m.clear();
    v.clear();
    for (const auto& p : params) {
      m.push_back(Eigen::MatrixXd::Zero(p.rows(), p.cols()));
      v.push_back(Eigen::MatrixXd::Zero(p.rows(), p.cols()));
    }
    step = 0;
  }
};

// Bias-corrected Adam update in place; increments state.step by one.
inline void adam_step(std::vector<Eigen::MatrixXd>& params,
                      const std::vector<Eigen::MatrixXd>& grads, AdamState& st) {
  if (!(st.lr >= 0)) throw invalid_argument_error("adam_step: learning rate must be >= 0");
  if (params.size() != grads.size() || params.size() != st.m.size())
    throw invalid_argument_error("adam_step: parameter/gradient count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i)
    if (params[i].rows() != grads[i].rows() || params[i].cols() != grads[i].cols())
      throw invalid_argument_error("adam_step: shape mismatch at parameter " + std::to_string(i));

  st.step += 1;
  double c1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step));
  double c2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    st.m[i] = st.beta1 * st.m[i] + (1.0 - st.beta1) * grads[i];
    st.v[i] = st.beta2 * st.v[i] + (1.0 - st.beta2) * grads[i].cwiseProduct(grads[i]);
    Eigen::ArrayXXd mhat = st.m[i].array() / c1;
    Eigen::ArrayXXd vhat = st.v[i].array() / c2;
    params[i].array() -= st.lr * mhat / (vhat.sqrt() + st.eps);
  }
}

}  // namespace pialab
