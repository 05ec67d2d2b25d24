#pragma once

#include <Eigen/Dense>
#include <vector>

#include "pialab/errors.hpp"

namespace pialab {

// Define-by-run reverse-mode tape at matrix granularity. One tape per loss
// evaluation; nodes are appended in execution order and walked backwards.
// The op set is exactly what the MLP needs (see non-goals in the design).
class GradientTape {
 public:
  enum class Op { leaf, matmul, add, add_rowvec, sub, hadamard, scale, silu, sum_squares, opaque };

  struct Node {
    Op op;
    int a = -1, b = -1;
    double c = 0.0;  // scalar payload for Op::scale
    Eigen::MatrixXd value;
    bool trainable = false;
  };

  int leaf(const Eigen::MatrixXd& v, bool trainable = false) {
    nodes_.push_back({Op::leaf, -1, -1, 0.0, v, trainable});
    return static_cast<int>(nodes_.size()) - 1;
  }

  // Value produced outside the registered primitive set; backward through it
  // is unsupported by construction.
  int opaque(const Eigen::MatrixXd& v, int parent) {
    nodes_.push_back({Op::opaque, parent, -1, 0.0, v, false});
    return static_cast<int>(nodes_.size()) - 1;
  }

  int matmul(int a, int b) {
    return push(Op::matmul, a, b, nodes_[a].value * nodes_[b].value);
  }
  int add(int a, int b) {
    require_same_shape(a, b, "add");
    return push(Op::add, a, b, nodes_[a].value + nodes_[b].value);
  }
  int sub(int a, int b) {
    require_same_shape(a, b, "sub");
    return push(Op::sub, a, b, nodes_[a].value - nodes_[b].value);
  }
  // b is a 1 x n row vector broadcast-added to every row of a
  int add_rowvec(int a, int b) {
    const auto& A = nodes_[a].value;
    const auto& B = nodes_[b].value;
    if (B.rows() != 1 || B.cols() != A.cols())
      throw invalid_argument_error("add_rowvec: bias must be 1 x cols(a)");
    return push(Op::add_rowvec, a, b, A.rowwise() + B.row(0));
  }
  int hadamard(int a, int b) {
    require_same_shape(a, b, "hadamard");
    return push(Op::hadamard, a, b, nodes_[a].value.cwiseProduct(nodes_[b].value));
  }
  int scale(int a, double c) {
    int id = push(Op::scale, a, -1, nodes_[a].value * c);
    nodes_[id].c = c;
    return id;
  }
  int silu(int a) { return push(Op::silu, a, -1, silu_fwd(nodes_[a].value)); }
  int sum_squares(int a) {
    Eigen::MatrixXd s(1, 1);
    s(0, 0) = nodes_[a].value.array().square().sum();
    return push(Op::sum_squares, a, -1, s);
  }

  const Eigen::MatrixXd& value(int id) const { return nodes_[id].value; }

  // Adjoints of `wrt` leaves for the scalar output node `out`.
  std::vector<Eigen::MatrixXd> grad(int out, const std::vector<int>& wrt) const {
    if (nodes_[out].value.size() != 1)
      throw invalid_argument_error("grad: output node must be scalar");
    std::vector<Eigen::MatrixXd> adj(nodes_.size());
    std::vector<bool> touched(nodes_.size(), false);
    adj[out] = Eigen::MatrixXd::Ones(1, 1);
    touched[out] = true;
    for (int i = out; i >= 0; --i) {
      if (!touched[i]) continue;
      const Node& n = nodes_[i];
      const Eigen::MatrixXd& g = adj[i];
      switch (n.op) {
        case Op::leaf:
          break;
        case Op::opaque:
          throw unsupported_operation_error("grad: opaque node has no registered adjoint");
        case Op::matmul:
          accumulate(adj, touched, n.a, g * nodes_[n.b].value.transpose());
          accumulate(adj, touched, n.b, nodes_[n.a].value.transpose() * g);
          break;
        case Op::add:
          accumulate(adj, touched, n.a, g);
          accumulate(adj, touched, n.b, g);
          break;
        case Op::add_rowvec:
          accumulate(adj, touched, n.a, g);
          accumulate(adj, touched, n.b, g.colwise().sum());
          break;
        case Op::sub:
          accumulate(adj, touched, n.a, g);
          accumulate(adj, touched, n.b, -g);
          break;
        case Op::hadamard:
          accumulate(adj, touched, n.a, g.cwiseProduct(nodes_[n.b].value));
          accumulate(adj, touched, n.b, g.cwiseProduct(nodes_[n.a].value));
          break;
        case Op::scale:
          accumulate(adj, touched, n.a, g * n.c);
          break;
        case Op::silu:
          accumulate(adj, touched, n.a, g.cwiseProduct(silu_bwd(nodes_[n.a].value)));
          break;
        case Op::sum_squares:
          accumulate(adj, touched, n.a, 2.0 * g(0, 0) * nodes_[n.a].value);
          break;
      }
    }
    std::vector<Eigen::MatrixXd> out_grads;
    out_grads.reserve(wrt.size());
    for (int id : wrt) {
      if (touched[id])
        out_grads.push_back(adj[id]);
      else
        out_grads.push_back(Eigen::MatrixXd::Zero(nodes_[id].value.rows(), nodes_[id].value.cols()));
    }
    return out_grads;
  }

  static Eigen::MatrixXd silu_fwd(const Eigen::MatrixXd& x) {
    return x.array() * sigmoid(x.array());
  }

 private:
  std::vector<Node> nodes_;

  int push(Op op, int a, int b, Eigen::MatrixXd v) {
    nodes_.push_back({op, a, b, 0.0, std::move(v), false});
    return static_cast<int>(nodes_.size()) - 1;
  }

  void require_same_shape(int a, int b, const char* what) const {
    if (nodes_[a].value.rows() != nodes_[b].value.rows() ||
        nodes_[a].value.cols() != nodes_[b].value.cols())
      throw invalid_argument_error(std::string(what) + ": shape mismatch");
  }

  static void accumulate(std::vector<Eigen::MatrixXd>& adj, std::vector<bool>& touched, int id,
                         const Eigen::MatrixXd& g) {
    if (!touched[id]) {
      adj[id] = g;
      touched[id] = true;
    } else {
      adj[id] += g;
    }
  }

  // exp() only ever sees non-positive arguments; no overflow for any input
  static Eigen::ArrayXXd sigmoid(const Eigen::ArrayXXd& x) {
    Eigen::ArrayXXd pos = 1.0 / (1.0 + (-x.max(0.0)).exp());
    Eigen::ArrayXXd en = (x.min(0.0)).exp();
    Eigen::ArrayXXd neg = en / (1.0 + en);
    return (x >= 0.0).select(pos, neg);
  }

  static Eigen::MatrixXd silu_bwd(const Eigen::MatrixXd& x) {
    Eigen::ArrayXXd s = sigmoid(x.array());
    return (s * (1.0 + x.array() * (1.0 - s))).matrix();
  }
};

}  // namespace pialab
