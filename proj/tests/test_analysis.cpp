#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "sparse_lpv/analysis.hpp"
#include "sparse_lpv/error.hpp"
#include "sparse_lpv/wing_model.hpp"

using namespace sparse_lpv;

namespace {

LTIStateSpace first_order() {
  return LTIStateSpace(Matrix::Constant(1, 1, -1.0), Matrix::Constant(1, 1, 1.0), Matrix::Constant(1, 1, 1.0),
                       Matrix::Zero(1, 1));
}

}  // namespace

TEST_CASE("lyapunov_solve closed forms") {
  CHECK(lyapunov_solve(Matrix::Constant(1, 1, -1.0), Matrix::Constant(1, 1, 2.0))(0, 0) ==
        doctest::Approx(1.0).epsilon(1e-14));
  const Matrix P = lyapunov_solve(-Matrix::Identity(4, 4), Matrix::Identity(4, 4));
  CHECK((P - 0.5 * Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("lyapunov_solve residual on random stable systems") {
  std::mt19937_64 g(21);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 2 + trial % 9;
    const LTIStateSpace sys = oracle::random_stable(g, n, 2, 1, false);
    const Matrix Q = sys.B * sys.B.transpose();
    const Matrix P = lyapunov_solve(sys.A, Q);
    const Matrix R = sys.A * P + P * sys.A.transpose() + Q;
    CHECK(R.cwiseAbs().maxCoeff() <= 1e-9 * Q.cwiseAbs().maxCoeff());
    CHECK((P - P.transpose()).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("lyapunov_solve rejects unstable and marginal A") {
  CHECK_THROWS_AS(lyapunov_solve(Matrix::Constant(1, 1, 0.5), Matrix::Identity(1, 1)), NumericalError);
  Matrix rot(2, 2);
  rot << 0, 1, -1, 0;
  CHECK_THROWS_AS(lyapunov_solve(rot, Matrix::Identity(2, 2)), NumericalError);
}

TEST_CASE("h2_norm") {
  CHECK(h2_norm(first_order()) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-14));
  LTIStateSpace zero_c = first_order();
  zero_c.C.setZero();
  CHECK(h2_norm(zero_c) == 0.0);
  LTIStateSpace with_d = first_order();
  with_d.D(0, 0) = 1.0;
  CHECK_THROWS_AS(h2_norm(with_d), ConfigError);
  LTIStateSpace unstable = first_order();
  unstable.A(0, 0) = 1.0;
  CHECK_THROWS_AS(h2_norm(unstable), NumericalError);
}

TEST_CASE("h2_norm matches frequency quadrature") {
  std::mt19937_64 g(22);
  for (int trial = 0; trial < 20; ++trial) {
    const LTIStateSpace sys = oracle::random_stable(g, 4 + trial % 5, 2, 2, false);
    const double exact = h2_norm(sys);
    CHECK(std::abs(exact - oracle::h2_quadrature(sys)) <= 1e-3 * exact);
  }
}

TEST_CASE("hinf_norm closed forms") {
  CHECK(hinf_norm(first_order()) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(hinf_norm(first_order()) >= 1.0);
  Matrix D(2, 2);
  D << 3, 0, 0, -4;
  const LTIStateSpace gain(Matrix::Constant(1, 1, -1.0), Matrix::Zero(1, 2), Matrix::Zero(2, 1), D);
  CHECK(hinf_norm(gain) == doctest::Approx(4.0).epsilon(1e-12));
  LTIStateSpace unstable = first_order();
  unstable.A(0, 0) = 0.0;
  CHECK_THROWS_AS(hinf_norm(unstable), NumericalError);
}

TEST_CASE("hinf_norm of a lightly damped resonator") {
  for (double zeta : {0.1, 0.01, 0.001}) {
    const double wn = 3.0;
    Matrix A(2, 2);
    A << 0, 1, -wn * wn, -2 * zeta * wn;
    const LTIStateSpace sys(A, Matrix(Eigen::Vector2d(0, 1)), Matrix(Eigen::RowVector2d(1, 0)), Matrix::Zero(1, 1));
    const HinfResult r = hinf_norm_detailed(sys);
    // peak of 1/|wn^2 - w^2 + 2 j zeta wn w|
    const double peak = 1.0 / (2.0 * zeta * wn * wn * std::sqrt(1.0 - zeta * zeta));
    CHECK(r.norm == doctest::Approx(peak).epsilon(1e-6));
    CHECK(std::abs(r.norm - oracle::hinf_grid(sys)) <= 1e-4 * r.norm);
    CHECK(r.lower <= r.norm);
  }
}

TEST_CASE("hinf_norm matches a refined frequency grid") {
  std::mt19937_64 g(23);
  for (int trial = 0; trial < 20; ++trial) {
    const LTIStateSpace sys = oracle::random_stable(g, 4 + trial % 5, 2, 3, trial % 2 == 0);
    const double h = hinf_norm(sys);
    const double grid = oracle::hinf_grid(sys);
    CHECK(std::abs(h - grid) <= 1e-4 * h);
    CHECK(h >= grid * (1.0 - 1e-12));
  }
}

TEST_CASE("norms are invariant under similarity and scale with B") {
  std::mt19937_64 g(24);
  for (int trial = 0; trial < 10; ++trial) {
    const LTIStateSpace sys = oracle::random_stable(g, 5, 2, 2, false);
    Matrix T;
    do {
      T = oracle::random_matrix(g, 5, 5) + 3.0 * Matrix::Identity(5, 5);
      Eigen::JacobiSVD<Matrix> svd(T);
      if (svd.singularValues()(0) / svd.singularValues()(4) < 1e3) break;
    } while (true);
    const Matrix Ti = T.inverse();
    const LTIStateSpace moved(T * sys.A * Ti, T * sys.B, sys.C * Ti, sys.D);
    const double h = hinf_norm(sys, 1e-12);
    CHECK(std::abs(hinf_norm(moved, 1e-12) - h) <= 1e-8 * h);

    const double s = 2.5;
    const LTIStateSpace scaled(sys.A, s * sys.B, sys.C, sys.D);
    CHECK(std::abs(hinf_norm(scaled, 1e-13) - s * hinf_norm(sys, 1e-13)) <= 1e-10 * s * h);
    CHECK(std::abs(h2_norm(scaled) - s * h2_norm(sys)) <= 1e-10 * s * h2_norm(sys));
  }
}

TEST_CASE("uniform grid") {
  const ParamBox box(Vector::Zero(2), Vector::Ones(2));
  CHECK(uniform_grid(box, 1).size() == 4);
  CHECK(uniform_grid(box, 4).size() == 25);
  CHECK_THROWS_AS(uniform_grid(box, 0), ConfigError);
}

TEST_CASE("grid_verify") {
  WingParams p;
  p.n = 2;
  const AffineLPVModel model = wing_to_lpv(build_wing(p));
  VerifyTarget target;
  target.kind = NormKind::kHinf;
  target.gamma0 = 100.0;

  SUBCASE("density 1 evaluates the vertices only") {
    // the open-loop wing is undamped, so stabilise it with rate feedback
    Matrix K = Matrix::Zero(2, 4);
    K.rightCols(2) = -Matrix::Identity(2, 2);
    const NormReport r = grid_verify(model, K, target);
    CHECK(r.samples.size() == model.vertices().size());
    CHECK(r.samples.size() == 4);
    for (const auto& s : r.samples) {
      CHECK(s.stable);
      CHECK(s.origin == "vertex");
      CHECK(r.worst_performance >= s.performance);
    }
    GridOptions dense;
    dense.density = 3;
    dense.random_samples = 5;
    CHECK(grid_verify(model, K, target, dense).samples.size() == 16 + 5);
  }
  SUBCASE("open loop is flagged unstable, not thrown") {
    const NormReport r = grid_verify(model, Matrix::Zero(2, 4), target);
    CHECK_FALSE(r.passed());
    CHECK(r.failures.size() == r.samples.size());
    CHECK_FALSE(r.samples.front().stable);
  }
  SUBCASE("exceeded bounds are reported") {
    Matrix K = Matrix::Zero(2, 4);
    K.rightCols(2) = -Matrix::Identity(2, 2);
    target.gamma0 = 1e-3;
    target.sqrt_gamma = Vector::Constant(2, 1e-6);
    const NormReport r = grid_verify(model, K, target);
    CHECK(r.failures.size() == 3 * r.samples.size());
  }
}
