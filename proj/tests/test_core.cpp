#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numeric>
#include <vector>

#include "pialab/adam.hpp"
#include "pialab/embedding.hpp"
#include "pialab/errors.hpp"
#include "pialab/norms.hpp"
#include "pialab/rng.hpp"
#include "pialab/tape.hpp"

using namespace pialab;
using Eigen::MatrixXd;
using Eigen::RowVectorXd;

TEST_CASE("rng: identical seeds give identical streams") {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng c(42), d(43);
  bool all_equal = true;
  for (int i = 0; i < 16; ++i) all_equal = all_equal && c.next_u64() == d.next_u64();
  CHECK_FALSE(all_equal);
}

TEST_CASE("rng: unit in [0,1), normal has the right two moments") {
  Rng r(7);
  double lo = 1.0, hi = 0.0;
  for (int i = 0; i < 20000; ++i) {
    double u = r.unit();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    lo = std::min(lo, u);
    hi = std::max(hi, u);
  }
  CHECK(lo < 0.01);
  CHECK(hi > 0.99);

  Rng g(8);
  double sum = 0.0, sum2 = 0.0;
  const int n = 50000;
  for (int i = 0; i < n; ++i) {
    double z = g.normal();
    sum += z;
    sum2 += z * z;
  }
  double mean = sum / n;
  double var = sum2 / n - mean * mean;
  CHECK(std::abs(mean) < 0.02);
  CHECK(std::abs(var - 1.0) < 0.05);
}

TEST_CASE("rng: bounded integer draws") {
  Rng r(9);
  bool saw_lo = false, saw_hi = false;
  for (int i = 0; i < 2000; ++i) {
    CHECK(r.below(7) < 7);
    long v = r.uniform_int(3, 5);
    CHECK(v >= 3);
    CHECK(v <= 5);
    saw_lo = saw_lo || v == 3;
    saw_hi = saw_hi || v == 5;
  }
  CHECK(saw_lo);
  CHECK(saw_hi);
}

TEST_CASE("rng: shuffle is a seeded permutation") {
  std::vector<int> v(50);
  std::iota(v.begin(), v.end(), 0);
  Rng r(11);
  r.shuffle(v);
  std::vector<int> w = v;
  std::sort(w.begin(), w.end());
  for (int i = 0; i < 50; ++i) CHECK(w[static_cast<size_t>(i)] == i);

  std::vector<int> v2(50);
  std::iota(v2.begin(), v2.end(), 0);
  Rng r2(11);
  r2.shuffle(v2);
  CHECK(v == v2);
}

TEST_CASE("rng: split streams depend on (seed, stream) only") {
  Rng parent(123);
  parent.next_u64();  // advance; split must not care
  Rng child_a = parent.split(5);
  Rng child_b = Rng(123).split(5);
  for (int i = 0; i < 64; ++i) CHECK(child_a.next_u64() == child_b.next_u64());

  Rng c5 = Rng(123).split(5);
  Rng c6 = Rng(123).split(6);
  bool all_equal = true;
  for (int i = 0; i < 16; ++i) all_equal = all_equal && c5.next_u64() == c6.next_u64();
  CHECK_FALSE(all_equal);
}

TEST_CASE("lp_norm: hand values") {
  RowVectorXd v(2);
  v << 3.0, 4.0;
  CHECK(lp_norm(v, 2.0) == doctest::Approx(5.0).epsilon(1e-14));
  CHECK(lp_norm(v, 1.0) == doctest::Approx(7.0).epsilon(1e-14));

  RowVectorXd w(3);
  w << 1.0, -2.0, 3.0;
  CHECK(lp_norm(w, 3.0) == doctest::Approx(3.3019272488946263).epsilon(1e-13));

  RowVectorXd z = RowVectorXd::Zero(4);
  CHECK(lp_norm(z, 2.0) == 0.0);
}

TEST_CASE("lp_norm: scaling keeps tiny and huge inputs exact") {
  RowVectorXd tiny(2);
  tiny << 1e-300, 1e-300;
  CHECK(lp_norm(tiny, 2.0) == doctest::Approx(1e-300 * std::sqrt(2.0)).epsilon(1e-12));

  RowVectorXd huge(2);
  huge << 1e200, 1e200;
  double h = lp_norm(huge, 4.0);
  CHECK(std::isfinite(h));
  CHECK(h == doctest::Approx(1e200 * std::pow(2.0, 0.25)).epsilon(1e-12));
}

TEST_CASE("lp_norm: homogeneity and monotonicity in p") {
  Rng r(21);
  RowVectorXd x(6);
  for (int i = 0; i < 6; ++i) x(i) = r.normal();
  for (double c : {-3.0, 0.5, 7.0})
    for (double p : {1.0, 2.0, 4.0, 7.0})
      CHECK(lp_norm((c * x).eval(), p) ==
            doctest::Approx(std::abs(c) * lp_norm(x, p)).epsilon(1e-10));

  double prev = lp_norm(x, 1.0);
  for (double p : {1.5, 2.0, 3.0, 4.0, 6.0, 10.0}) {
    double cur = lp_norm(x, p);
    CHECK(cur <= prev + 1e-12);
    prev = cur;
  }
}

TEST_CASE("lp_norm: rejects p < 1 and non-finite input") {
  RowVectorXd v(2);
  v << 1.0, 2.0;
  CHECK_THROWS_AS(lp_norm(v, 0.5), invalid_argument_error);
  v(1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(lp_norm(v, 2.0), invalid_argument_error);
}

TEST_CASE("tape: forward values of the primitive set") {
  GradientTape tape;
  MatrixXd A(2, 2), B(2, 1);
  A << 1, 2, 3, 4;
  B << 1, 1;
  int a = tape.leaf(A), b = tape.leaf(B);
  int mm = tape.matmul(a, b);
  CHECK(tape.value(mm)(0, 0) == 3.0);
  CHECK(tape.value(mm)(1, 0) == 7.0);
  int ss = tape.sum_squares(mm);
  CHECK(tape.value(ss)(0, 0) == 58.0);
  int sc = tape.scale(ss, 0.5);
  CHECK(tape.value(sc)(0, 0) == 29.0);

  MatrixXd X(1, 1);
  X << 1.0;
  int x = tape.leaf(X);
  int s = tape.silu(x);
  CHECK(tape.value(s)(0, 0) == doctest::Approx(0.7310585786300049).epsilon(1e-15));
}

TEST_CASE("tape: hand-computed adjoint of sum_squares(A*B)") {
  GradientTape tape;
  MatrixXd A(2, 2), B(2, 1);
  A << 1, 2, 3, 4;
  B << 1, 1;
  int a = tape.leaf(A, true), b = tape.leaf(B, true);
  int loss = tape.sum_squares(tape.matmul(a, b));
  auto g = tape.grad(loss, {a, b});
  // d/dB = 2 A^T (A B) = [48, 68]^T ; d/dA = 2 (A B) B^T
  CHECK(g[1](0, 0) == doctest::Approx(48.0));
  CHECK(g[1](1, 0) == doctest::Approx(68.0));
  CHECK(g[0](0, 0) == doctest::Approx(6.0));
  CHECK(g[0](0, 1) == doctest::Approx(6.0));
  CHECK(g[0](1, 0) == doctest::Approx(14.0));
  CHECK(g[0](1, 1) == doctest::Approx(14.0));
}

TEST_CASE("tape: bias adjoint is the column sum of the upstream gradient") {
  GradientTape tape;
  MatrixXd A(3, 2);
  A << 1, 2, 3, 4, 5, 6;
  MatrixXd bvec(1, 2);
  bvec << 0.5, -0.5;
  int a = tape.leaf(A), b = tape.leaf(bvec, true);
  int out = tape.add_rowvec(a, b);
  int loss = tape.scale(tape.sum_squares(out), 0.5);
  auto g = tape.grad(loss, {b});
  // d loss / d out = out; bias grad = column sums of out
  MatrixXd expect = (A.rowwise() + bvec.row(0)).colwise().sum();
  CHECK(g[0](0, 0) == doctest::Approx(expect(0, 0)).epsilon(1e-14));
  CHECK(g[0](0, 1) == doctest::Approx(expect(0, 1)).epsilon(1e-14));
}

namespace {

// numeric gradient of a scalar-valued rebuildable graph
template <class F>
void check_against_central_difference(MatrixXd& param, F rebuild, const MatrixXd& analytic,
                                      double h = 1e-5, double rel_tol = 1e-4) {
  for (Eigen::Index i = 0; i < param.rows(); ++i)
    for (Eigen::Index j = 0; j < param.cols(); ++j) {
      double keep = param(i, j);
      param(i, j) = keep + h;
      double up = rebuild();
      param(i, j) = keep - h;
      double dn = rebuild();
      param(i, j) = keep;
      double fd = (up - dn) / (2.0 * h);
      double an = analytic(i, j);
      double denom = std::max({std::abs(fd), std::abs(an), 1e-8});
      CHECK(std::abs(fd - an) / denom < rel_tol);
    }
}

}  // namespace

TEST_CASE("tape: full MLP-shaped graph matches central finite differences") {
  Rng r(31);
  auto fill = [&](Eigen::Index rows, Eigen::Index cols) {
    MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = 2.0 * (2.0 * r.unit() - 1.0);
    return m;
  };
  MatrixXd X = fill(3, 5), W1 = fill(5, 4), b1 = fill(1, 4), W2 = fill(4, 2), b2 = fill(1, 2),
           Tgt = fill(3, 2);

  auto value_and_grads = [&](bool want_grads) {
    GradientTape tape;
    int x = tape.leaf(X);
    int w1 = tape.leaf(W1, true), bb1 = tape.leaf(b1, true);
    int w2 = tape.leaf(W2, true), bb2 = tape.leaf(b2, true);
    int h1 = tape.silu(tape.add_rowvec(tape.matmul(x, w1), bb1));
    int out = tape.add_rowvec(tape.matmul(h1, w2), bb2);
    int resid = tape.sub(out, tape.leaf(Tgt));
    int loss = tape.scale(tape.sum_squares(resid), 1.0 / 3.0);
    std::vector<MatrixXd> grads;
    if (want_grads) grads = tape.grad(loss, {w1, bb1, w2, bb2});
    return std::make_pair(tape.value(loss)(0, 0), grads);
  };

  auto [val, grads] = value_and_grads(true);
  CHECK(std::isfinite(val));
  auto rebuild = [&] { return value_and_grads(false).first; };
  check_against_central_difference(W1, rebuild, grads[0]);
  check_against_central_difference(b1, rebuild, grads[1]);
  check_against_central_difference(W2, rebuild, grads[2]);
  check_against_central_difference(b2, rebuild, grads[3]);
}

TEST_CASE("tape: hadamard adjoints") {
  MatrixXd A(2, 2), B(2, 2);
  A << 1, 2, 3, 4;
  B << 5, 6, 7, 8;
  GradientTape tape;
  int a = tape.leaf(A, true), b = tape.leaf(B, true);
  int loss = tape.sum_squares(tape.hadamard(a, b));
  auto g = tape.grad(loss, {a, b});
  // d/dA = 2 (A.*B).*B
  MatrixXd ga = 2.0 * A.cwiseProduct(B).cwiseProduct(B);
  MatrixXd gb = 2.0 * A.cwiseProduct(B).cwiseProduct(A);
  CHECK((g[0] - ga).norm() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK((g[1] - gb).norm() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("tape: opaque values flow forward but refuse to differentiate") {
  GradientTape tape;
  MatrixXd X(1, 2);
  X << 1.0, 2.0;
  int x = tape.leaf(X, true);
  MatrixXd outside = tape.value(x).array().exp();  // computed off-tape
  int o = tape.opaque(outside, x);
  CHECK(tape.value(o)(0, 1) == doctest::Approx(std::exp(2.0)));
  int loss = tape.sum_squares(o);
  CHECK_THROWS_AS(tape.grad(loss, {x}), unsupported_operation_error);
}

TEST_CASE("tape: leaves outside the graph get zero gradients") {
  GradientTape tape;
  MatrixXd A(1, 2);
  A << 1, 2;
  int used = tape.leaf(A, true);
  int unused = tape.leaf(A, true);
  int loss = tape.sum_squares(used);
  auto g = tape.grad(loss, {unused});
  CHECK(g[0].rows() == 1);
  CHECK(g[0].cols() == 2);
  CHECK(g[0].norm() == 0.0);
}

TEST_CASE("tape: gradient requires a scalar output") {
  GradientTape tape;
  MatrixXd A(1, 2);
  A << 1, 2;
  int a = tape.leaf(A, true);
  CHECK_THROWS_AS(tape.grad(a, {a}), invalid_argument_error);
}

TEST_CASE("adam: zero gradient leaves parameters exactly unchanged at step 1") {
  std::vector<MatrixXd> params = {MatrixXd::Constant(2, 2, 1.5)};
  std::vector<MatrixXd> grads = {MatrixXd::Zero(2, 2)};
  AdamState st;
  st.lr = 0.1;
  st.init_like(params);
  adam_step(params, grads, st);
  CHECK((params[0].array() == 1.5).all());
}

TEST_CASE("adam: hand-evaluated scalar recurrence") {
  std::vector<MatrixXd> params = {MatrixXd::Zero(1, 1)};
  std::vector<MatrixXd> grads = {MatrixXd::Constant(1, 1, 1.0)};
  AdamState st;
  st.lr = 0.1;
  st.init_like(params);
  adam_step(params, grads, st);
  // bias correction makes mhat = vhat = 1 at step 1
  CHECK(params[0](0, 0) == doctest::Approx(-0.09999999900000002).epsilon(1e-12));
  double first = -params[0](0, 0);

  adam_step(params, grads, st);
  double second = -params[0](0, 0) - first;
  CHECK(second <= first + 1e-12);
}

TEST_CASE("adam: validates shapes and learning rate") {
  std::vector<MatrixXd> params = {MatrixXd::Zero(2, 2)};
  std::vector<MatrixXd> bad = {MatrixXd::Zero(2, 3)};
  AdamState st;
  st.init_like(params);
  CHECK_THROWS_AS(adam_step(params, bad, st), invalid_argument_error);
  st.lr = -1.0;
  std::vector<MatrixXd> good = {MatrixXd::Zero(2, 2)};
  CHECK_THROWS_AS(adam_step(params, good, st), invalid_argument_error);
}

TEST_CASE("time embedding: frozen values") {
  RowVectorXd e0 = time_embedding(0.0);
  CHECK(e0.size() == kTimeEmbedDim);
  for (int i = 0; i < kTimeEmbedDim / 2; ++i) {
    CHECK(e0(i) == 0.0);
    CHECK(e0(kTimeEmbedDim / 2 + i) == 1.0);
  }
  RowVectorXd e = time_embedding(0.2);
  CHECK(e(0) == doctest::Approx(0.9129452507276277).epsilon(1e-14));
  CHECK(e(8) == doctest::Approx(0.40808206181339196).epsilon(1e-14));
  CHECK(e(1) == doctest::Approx(-0.7942630738091546).epsilon(1e-14));
  CHECK(e(4) == doctest::Approx(0.10340432689581401).epsilon(1e-14));
  CHECK(e(15) == doctest::Approx(0.9999980000006666).epsilon(1e-14));
}
