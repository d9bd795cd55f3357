#include <doctest.h>

#include <random>

#include "sparse_lpv/error.hpp"
#include "sparse_lpv/log.hpp"
#include "sparse_lpv/lpv_model.hpp"

using namespace sparse_lpv;

namespace {

Matrix random_matrix(std::mt19937_64& g, int r, int c) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix M(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) M(i, j) = u(g);
  return M;
}

AffineMatrix random_affine(std::mt19937_64& g, int r, int c, int nrho) {
  AffineMatrix m{random_matrix(g, r, c), {}};
  for (int k = 0; k < nrho; ++k) m.coefficients.push_back(random_matrix(g, r, c));
  return m;
}

AffineLPVModel random_model(std::mt19937_64& g, int nx, int nu, int nw, int nz, int nrho) {
  std::array<AffineMatrix, 6> t = {random_affine(g, nx, nx, nrho), random_affine(g, nx, nu, nrho),
                                   random_affine(g, nx, nw, nrho), random_affine(g, nz, nx, nrho),
                                   random_affine(g, nz, nu, nrho), random_affine(g, nz, nw, nrho)};
  return AffineLPVModel(t, ParamBox(Vector::Constant(nrho, -1.0), Vector::Constant(nrho, 1.0)));
}

AffineLPVModel scalar_model(double a0, double a1) {
  auto s = [](double v) { return Matrix::Constant(1, 1, v); };
  std::array<AffineMatrix, 6> t = {AffineMatrix{s(a0), {s(a1)}}, AffineMatrix{s(1), {s(0)}},
                                   AffineMatrix{s(1), {s(0)}},  AffineMatrix{s(1), {s(0)}},
                                   AffineMatrix{s(0), {s(0)}},  AffineMatrix{s(0), {s(0)}}};
  return AffineLPVModel(t, ParamBox(Vector::Constant(1, 0.0), Vector::Constant(1, 10.0)));
}

}  // namespace

TEST_CASE("affine_eval at the origin returns the constant terms") {
  std::mt19937_64 g(1);
  const auto model = random_model(g, 3, 2, 2, 2, 2);
  const FrozenSystem f = model.evaluate(Vector::Zero(2));
  CHECK(f.A == model.term(SystemMatrix::kA).constant);
  CHECK(f.Bu == model.term(SystemMatrix::kBu).constant);
  CHECK(f.Dw == model.term(SystemMatrix::kDw).constant);
}

TEST_CASE("quasi-LPV scalar cubic: A(rho) = rho with rho = x^2") {
  const auto model = scalar_model(0.0, 1.0);
  const double x = 2.0;
  const FrozenSystem f = model.evaluate(Vector::Constant(1, x * x));
  CHECK(f.A(0, 0) == 4.0);
  CHECK(f.A(0, 0) * x == x * x * x);
}

TEST_CASE("affine_eval matches elementwise recomputation") {
  std::mt19937_64 g(2);
  const auto model = random_model(g, 3, 2, 2, 2, 2);
  Vector rho(2);
  rho << 0.3, -0.1;
  const FrozenSystem f = model.evaluate(rho);
  const auto& A = model.term(SystemMatrix::kA);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const double want = A.constant(i, j) + 0.3 * A.coefficients[0](i, j) - 0.1 * A.coefficients[1](i, j);
      CHECK(f.A(i, j) == doctest::Approx(want).epsilon(1e-15));
    }
  }
}

TEST_CASE("affine_eval is linear in rho") {
  std::mt19937_64 g(3);
  const auto model = random_model(g, 4, 2, 3, 2, 3);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (int trial = 0; trial < 20; ++trial) {
    Vector r1(3), r2(3);
    for (int k = 0; k < 3; ++k) {
      r1[k] = u(g);
      r2[k] = u(g);
    }
    const Matrix lhs = model.evaluate(r1).A + model.evaluate(r2).A - model.evaluate(Vector::Zero(3)).A;
    const Matrix rhs = model.evaluate(r1 + r2).A;
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-14);
  }
}

TEST_CASE("affine_eval rejects a wrong parameter length and warns outside the box") {
  const auto model = scalar_model(0.0, 1.0);
  CHECK_THROWS_AS((void)model.evaluate(Vector::Zero(2)), DimensionError);
  int warnings = 0;
  set_warning_handler([&](std::string_view) { ++warnings; });
  (void)model.evaluate(Vector::Constant(1, 11.0));
  set_warning_handler(nullptr);
  CHECK(warnings == 1);
}

TEST_CASE("box vertices") {
  SUBCASE("1-D") {
    const auto v = box_vertices(ParamBox(Vector::Constant(1, 0.0), Vector::Constant(1, 1.0)));
    REQUIRE(v.size() == 2);
    CHECK(v[0][0] == 0.0);
    CHECK(v[1][0] == 1.0);
  }
  SUBCASE("2-D lexicographic") {
    Vector lo(2), hi(2);
    lo << 0, -1;
    hi << 1, 1;
    const auto v = box_vertices(ParamBox(lo, hi));
    REQUIRE(v.size() == 4);
    const double want[4][2] = {{0, -1}, {0, 1}, {1, -1}, {1, 1}};
    for (int i = 0; i < 4; ++i) {
      CHECK(v[i][0] == want[i][0]);
      CHECK(v[i][1] == want[i][1]);
    }
  }
  SUBCASE("5-D count") {
    const auto v = box_vertices(ParamBox(Vector::Zero(5), Vector::Constant(5, 0.25)));
    CHECK(v.size() == 32);
    for (const auto& p : v)
      for (int k = 0; k < 5; ++k) CHECK((p[k] == 0.0 || p[k] == 0.25));
  }
  SUBCASE("degenerate coordinates collapse") {
    Vector lo(3), hi(3);
    lo << 0, 2, 0;
    hi << 1, 2, 1;
    CHECK(box_vertices(ParamBox(lo, hi)).size() == 4);
  }
  SUBCASE("dimension guard") {
    CHECK_THROWS_AS(box_vertices(ParamBox(Vector::Zero(25), Vector::Ones(25))), DimensionError);
  }
  SUBCASE("inverted bounds") {
    CHECK_THROWS_AS(ParamBox(Vector::Ones(2), Vector::Zero(2)), ConfigError);
  }
}

TEST_CASE("affine functions on the box are bounded by their vertex values") {
  std::mt19937_64 g(4);
  const auto model = random_model(g, 2, 1, 1, 1, 3);
  const auto verts = model.vertices();
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    Vector rho(3);
    for (int k = 0; k < 3; ++k) rho[k] = u(g);
    const double f = model.evaluate(rho).A(0, 1);
    double lo = 1e300, hi = -1e300;
    for (const auto& v : verts) {
      const double fv = model.evaluate(v).A(0, 1);
      lo = std::min(lo, fv);
      hi = std::max(hi, fv);
    }
    CHECK(f >= lo - 1e-14);
    CHECK(f <= hi + 1e-14);
  }
}

TEST_CASE("closed_loop") {
  std::mt19937_64 g(5);
  const auto model = random_model(g, 3, 3, 2, 2, 1);
  const FrozenSystem f = model.evaluate(Vector::Constant(1, 0.2));

  SUBCASE("K = 0 leaves the plant unchanged") {
    const LTIStateSpace cl = closed_loop(f, Matrix::Zero(3, 3));
    CHECK(cl.A == f.A);
    CHECK(cl.B == f.Bw);
    CHECK(cl.C == f.Cz);
    CHECK(cl.D == f.Dw);
  }
  SUBCASE("scalar feedback") {
    FrozenSystem s{Matrix::Constant(1, 1, -1), Matrix::Constant(1, 1, 1), Matrix::Constant(1, 1, 1),
                   Matrix::Constant(1, 1, 1),  Matrix::Constant(1, 1, 0), Matrix::Constant(1, 1, 0)};
    CHECK(closed_loop(s, Matrix::Constant(1, 1, -2)).A(0, 0) == -3.0);
  }
  SUBCASE("actuator channel picks a row of K") {
    const Matrix K = random_matrix(g, 3, 3);
    const LTIStateSpace ch = actuator_channel(f, K, 1);
    CHECK(ch.C == K.row(1));
    CHECK(ch.D.rows() == 1);
    CHECK(ch.D.cwiseAbs().maxCoeff() == 0.0);
    CHECK(ch.A == closed_loop(f, K).A);
  }
  SUBCASE("shape mismatch") {
    CHECK_THROWS_AS(closed_loop(f, Matrix::Zero(2, 3)), DimensionError);
    CHECK_THROWS_AS(actuator_channel(f, Matrix::Zero(3, 3), 3), DimensionError);
  }
}

TEST_CASE("model construction validates shapes") {
  std::mt19937_64 g(6);
  auto t = std::array<AffineMatrix, 6>{random_affine(g, 2, 2, 1), random_affine(g, 2, 1, 1),
                                       random_affine(g, 2, 1, 1), random_affine(g, 1, 2, 1),
                                       random_affine(g, 1, 1, 1), random_affine(g, 1, 1, 1)};
  const ParamBox box(Vector::Zero(1), Vector::Ones(1));
  CHECK_NOTHROW(AffineLPVModel(t, box));
  auto bad = t;
  bad[1].coefficients[0] = Matrix::Zero(2, 2);
  CHECK_THROWS_AS(AffineLPVModel(bad, box), DimensionError);
  auto missing = t;
  missing[0].coefficients.clear();
  CHECK_THROWS_AS(AffineLPVModel(missing, box), DimensionError);
}

TEST_CASE("with_actuators keeps the selected input columns") {
  std::mt19937_64 g(7);
  const auto model = random_model(g, 3, 3, 1, 2, 1);
  const std::vector<int> keep = {0, 2};
  const auto reduced = model.with_actuators(keep);
  CHECK(reduced.n_u() == 2);
  CHECK(reduced.term(SystemMatrix::kBu).constant.col(1) == model.term(SystemMatrix::kBu).constant.col(2));
  CHECK(reduced.term(SystemMatrix::kDu).coefficients[0].col(0) ==
        model.term(SystemMatrix::kDu).coefficients[0].col(0));
}
