#include <doctest.h>

#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "sparse_lpv/analysis.hpp"
#include "sparse_lpv/sdp.hpp"

using namespace sparse_lpv;
using sdp::Matrix;

namespace {

Matrix random_symmetric(std::mt19937_64& g, int n) {
  std::normal_distribution<double> d(0.0, 1.0);
  Matrix M(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) M(i, j) = d(g);
  return 0.5 * (M + M.transpose());
}

// minimize t subject to M - t I <= 0
sdp::Problem max_eigenvalue_problem(const Matrix& M) {
  sdp::Problem p;
  const int t = p.add_scalar("t");
  p.set_objective(p.variable(t).offset, 1.0);
  sdp::LmiBuilder b(p, static_cast<int>(M.rows()));
  b.add_constant(0, 0, M);
  b.add_scalar(0, 0, t, -Matrix::Identity(M.rows(), M.rows()));
  p.add_constraint(b.finish("eig", -1, -1, 0.0));
  return p;
}

}  // namespace

TEST_CASE("2x2 eigenvalue toy") {
  Matrix M(2, 2);
  M << 0, 1, 1, 0;
  const auto sol = sdp::solve(max_eigenvalue_problem(M));
  CHECK(sol.status == sdp::Status::kOptimal);
  CHECK(sol.objective == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("largest eigenvalue of random symmetric matrices") {
  std::mt19937_64 g(1);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix M = random_symmetric(g, 2 + trial);
    Eigen::SelfAdjointEigenSolver<Matrix> es(M);
    const auto sol = sdp::solve(max_eigenvalue_problem(M));
    REQUIRE(sol.status == sdp::Status::kOptimal);
    CHECK(std::abs(sol.objective - es.eigenvalues().maxCoeff()) <= 1e-7 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("minimum-trace Lyapunov inequality recovers the Lyapunov solution") {
  std::mt19937_64 g(2);
  std::normal_distribution<double> d(0.0, 1.0);
  for (int n : {2, 4, 6}) {
    Matrix A(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) A(i, j) = d(g);
    A -= (spectral_abscissa(A) + 0.5) * Matrix::Identity(n, n);
    // A' P + P A + I <= 0, minimize trace P
    sdp::Problem p;
    const int P = p.add_symmetric("P", n);
    for (int i = 0; i < n; ++i) p.set_objective(p.variable(P).unknown(i, i), 1.0);
    sdp::LmiBuilder b(p, n);
    b.add_sym_product(0, A.transpose(), P, Matrix::Identity(n, n));
    b.add_constant(0, 0, Matrix::Identity(n, n));
    p.add_constraint(b.finish("lyap", -1, -1, 0.0));
    const auto sol = sdp::solve(p);
    REQUIRE(sol.status == sdp::Status::kOptimal);
    const Matrix expected = lyapunov_solve(A.transpose(), Matrix::Identity(n, n));
    const Matrix got = p.value(P, sol.values);
    CHECK((got - expected).cwiseAbs().maxCoeff() <= 1e-5 * expected.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("contradictory bounds are reported infeasible") {
  sdp::Problem p;
  const int t = p.add_scalar("t");
  p.set_objective(p.variable(t).offset, 1.0);
  sdp::LmiBuilder b(p, 2);
  Matrix sel(2, 2);
  sel << 1, 0, 0, -1;
  b.add_scalar(0, 0, t, sel);
  b.add_constant(0, 0, Matrix::Identity(2, 2));
  p.add_constraint(b.finish("split", -1, -1, 0.0));  // t <= -1 and t >= 1
  const auto sol = sdp::solve(p);
  CHECK(sol.status == sdp::Status::kInfeasible);
}

TEST_CASE("check_feasibility") {
  sdp::Problem p;
  const int t = p.add_scalar("t", 0.5);
  sdp::LmiBuilder b(p, 3);
  b.add_constant(0, 0, -Matrix::Identity(3, 3));
  p.add_constraint(b.finish("neg", -1, -1, 0.0));
  const std::vector<double> v = sdp::check_feasibility(p, sdp::Vector::Zero(1));
  REQUIRE(v.size() == 2);
  CHECK(v[0] == doctest::Approx(0.5));  // lower bound 0.5 - t with t = 0
  CHECK(v[1] == doctest::Approx(-1.0));
  CHECK(sdp::max_violation(p, sdp::Vector::Constant(1, 2.0)) == doctest::Approx(-1.0));
  (void)t;

  std::mt19937_64 g(3);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix M = random_symmetric(g, 5);
    const Matrix N = random_symmetric(g, 5);
    sdp::Problem q;
    const int s = q.add_scalar("s");
    sdp::LmiBuilder lb(q, 5);
    lb.add_constant(0, 0, M);
    lb.add_scalar(0, 0, s, N);
    q.add_constraint(lb.finish("rand", -1, -1, 1e-3));
    const double sv = 0.7;
    Eigen::SelfAdjointEigenSolver<Matrix> es(M + sv * N);
    CHECK(sdp::check_feasibility(q, sdp::Vector::Constant(1, sv))[0] ==
          doctest::Approx(es.eigenvalues().maxCoeff() + 1e-3).epsilon(1e-12));
  }
}

TEST_CASE("objective scaling scales the optimum") {
  std::mt19937_64 g(4);
  const Matrix M = random_symmetric(g, 4);
  sdp::Problem p = max_eigenvalue_problem(M);
  const double base = sdp::solve(p).objective;
  p.set_objective(p.variable(0).offset, 3.0);
  CHECK(sdp::solve(p).objective == doctest::Approx(3.0 * base).epsilon(1e-7));
}

TEST_CASE("text dump round trip") {
  std::mt19937_64 g(5);
  sdp::Problem p;
  const int X = p.add_symmetric("X", 3);
  const int W = p.add_matrix("W", 2, 3);
  const int s = p.add_scalar("s", 1e-12, 4.0);
  p.set_objective(p.variable(s).offset, 0.1 + 1.0 / 3.0);
  sdp::LmiBuilder b(p, 5);
  b.add_sym_product(0, random_symmetric(g, 3), X, Matrix::Identity(3, 3));
  b.add_product(3, 0, Matrix::Identity(2, 2), W, Matrix::Identity(3, 3), -1.0);
  b.add_scalar(3, 3, s, -Matrix::Identity(2, 2));
  b.add_constant(0, 0, 1e-300 * Matrix::Identity(5, 5));
  p.add_constraint(b.finish("mixed", 2, 7, 1e-7));
  std::stringstream ss;
  sdp::write_text(ss, p);
  std::stringstream in(ss.str());
  const sdp::Problem back = sdp::read_text(in);
  CHECK(back == p);
  std::stringstream again;
  sdp::write_text(again, back);
  CHECK(again.str() == ss.str());
}
