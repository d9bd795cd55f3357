#include <doctest.h>

#include <map>
#include <random>

#include "sparse_lpv/analysis.hpp"
#include "sparse_lpv/error.hpp"
#include "sparse_lpv/synthesis.hpp"
#include "sparse_lpv/wing_model.hpp"

using namespace sparse_lpv;

namespace {

AffineLPVModel scalar_plant(double a, double bu, double bw, double cz, double du, double dw) {
  auto s = [](double v) { return Matrix::Constant(1, 1, v); };
  auto term = [&](double v) { return AffineMatrix{s(v), {s(0.0)}}; };
  return AffineLPVModel({term(a), term(bu), term(bw), term(cz), term(du), term(dw)},
                        ParamBox(Vector::Zero(1), Vector::Ones(1)));
}

std::map<std::string, int> family_counts(const sdp::Problem& p) {
  std::map<std::string, int> m;
  for (const auto& c : p.constraints()) ++m[c.family];
  return m;
}

AffineLPVModel small_wing(double k2) {
  WingParams p;
  p.n = 2;
  p.k2 = k2;
  return wing_to_lpv(build_wing(p));
}

SynthesisSpec hinf_spec(double gamma0) {
  SynthesisSpec s;
  s.kind = NormKind::kHinf;
  s.gamma0 = gamma0;
  return s;
}

}  // namespace

TEST_CASE("constraint counts") {
  SUBCASE("scalar LTI toy") {
    const auto model = scalar_plant(1, 1, 1, 1, 0, 0);
    const auto sp = assemble_hinf(model, hinf_spec(2.0), Vector::Ones(1));
    auto f = family_counts(sp.problem);
    CHECK(sp.vertices.size() == 1);
    CHECK(f["hinf"] == 1);
    CHECK(f["gramian"] == 1);
    CHECK(f["actuator"] == 1);
    CHECK(f["x_positive"] == 1);
    CHECK(f["lower_bound"] == 1);
    CHECK(f.count("upper_bound") == 0);
    SynthesisSpec bounded = hinf_spec(2.0);
    bounded.gamma_ub = 4.0;
    CHECK(family_counts(assemble_hinf(model, bounded, Vector::Ones(1)).problem)["upper_bound"] == 1);
  }
  SUBCASE("five-bar LPV wing, H-infinity") {
    const auto model = wing_to_lpv(build_wing(WingParams{}));
    const auto sp = assemble_hinf(model, hinf_spec(0.15), Vector::Ones(5));
    auto f = family_counts(sp.problem);
    CHECK(sp.vertices.size() == 32);
    CHECK(f["hinf"] == 32);
    CHECK(f["gramian"] == 32);
    // actuator rows are parameter free, one per actuator serves all vertices
    CHECK(f["actuator"] == 5);
  }
  SUBCASE("five-bar LTI wing, H2") {
    WingParams p;
    p.k2 = 0.0;
    SynthesisSpec s;
    s.kind = NormKind::kH2;
    const auto sp = assemble_h2(wing_to_lpv(build_wing(p)), s, Vector::Ones(5));
    auto f = family_counts(sp.problem);
    CHECK(f["h2_output"] == 1);
    CHECK(f["gramian"] == 1);
    CHECK(f["actuator"] == 5);
    CHECK(f["trace"] == 1);
  }
}

TEST_CASE("scalar H-infinity toy") {
  const auto model = scalar_plant(1, 1, 1, 1, 0, 0);
  const SynthesisResult r = solve_weighted(model, hinf_spec(2.0), Vector::Ones(1));
  REQUIRE(r.optimal());
  CHECK(r.certificate_passed(1e-7));
  CHECK(r.X(0, 0) > 0.0);
  const double acl = 1.0 + r.K(0, 0);
  CHECK(acl < 0.0);
  const LTIStateSpace cl = closed_loop(model.evaluate(Vector::Zero(1)), r.K);
  CHECK(hinf_norm(cl) <= 2.0 * (1.0 + 1e-4));
  CHECK(std::abs((r.K * r.X - r.W).cwiseAbs().maxCoeff()) <= 1e-9);
  CHECK(r.gamma[0] >= 1e-12);
}

TEST_CASE("optimal gamma matches bisection on its feasibility") {
  const auto model = scalar_plant(1, 1, 1, 1, 0, 0);
  const SynthesisSpec spec = hinf_spec(2.0);
  const SynthesisResult opt = solve_weighted(model, spec, Vector::Ones(1));
  REQUIRE(opt.optimal());
  double lo = 0.0, hi = 10.0 * opt.gamma[0];
  for (int it = 0; it < 40; ++it) {
    SynthesisSpec s = spec;
    s.gamma_ub = 0.5 * (lo + hi);
    (solve_weighted(model, s, Vector::Ones(1)).optimal() ? hi : lo) = 0.5 * (lo + hi);
  }
  CHECK(std::abs(hi - opt.gamma[0]) <= 1e-4 * opt.gamma[0]);
}

TEST_CASE("H2 toy feasible exactly above the open-loop norm") {
  const auto model = scalar_plant(-1, 0, 1, 1, 0, 0);
  SynthesisSpec s;
  s.kind = NormKind::kH2;
  s.gamma0 = 0.72;
  CHECK(solve_weighted(model, s, Vector::Ones(1)).optimal());
  s.gamma0 = 0.70;
  const SynthesisResult r = solve_weighted(model, s, Vector::Ones(1));
  CHECK(r.status == sdp::Status::kInfeasible);
  CHECK(r.message.find("family") != std::string::npos);
}

TEST_CASE("H2 rejects feedthrough") {
  const auto model = scalar_plant(-1, 1, 1, 1, 0, 0.5);
  SynthesisSpec s;
  s.kind = NormKind::kH2;
  CHECK_THROWS_AS(assemble_h2(model, s, Vector::Ones(1)), ConfigError);
}

TEST_CASE("gain recovery") {
  CHECK(gain_from(Matrix::Identity(3, 3), Matrix::Constant(2, 3, 1.5)) == Matrix::Constant(2, 3, 1.5));
  Matrix W(1, 2);
  W << 4, 2;
  const Matrix K = gain_from(2.0 * Matrix::Identity(2, 2), W);
  CHECK(K(0, 0) == doctest::Approx(2.0));
  CHECK(K(0, 1) == doctest::Approx(1.0));
  std::mt19937_64 g(31);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix R(6, 6), Wr(3, 6);
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) R(i, j) = n(g);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 6; ++j) Wr(i, j) = n(g);
    const Matrix X = R * R.transpose() + 0.1 * Matrix::Identity(6, 6);
    CHECK((gain_from(X, Wr) * X - Wr).cwiseAbs().maxCoeff() <= 1e-9);
  }
  Matrix singular = Matrix::Identity(2, 2);
  singular(1, 1) = 1e-14;
  CHECK_THROWS_AS(gain_from(singular, Matrix::Ones(1, 2)), NumericalError);
}

TEST_CASE("reweighting arithmetic") {
  CHECK(reweight(Vector::Zero(1), 0.1)[0] == doctest::Approx(10.0));
  const Vector a = reweight(Eigen::Vector2d(0.5, 0.0), 1e-4);
  CHECK(a[0] == doctest::Approx(1.0 / 0.5001).epsilon(1e-12));
  CHECK(a[0] == doctest::Approx(1.9996).epsilon(1e-4));
  CHECK(a[1] == doctest::Approx(10000.0));
}

TEST_CASE("weighted solves on a small wing") {
  const auto model = small_wing(1.5);
  SynthesisSpec spec = hinf_spec(0.3);
  const SynthesisResult base = solve_weighted(model, spec, Vector::Ones(2));
  REQUIRE(base.optimal());
  CHECK(base.certificate_passed(1e-7));
  CHECK(base.vertex_max_eigenvalue.size() == 4);
  Eigen::SelfAdjointEigenSolver<Matrix> es(base.X);
  CHECK(es.eigenvalues().minCoeff() > 0.0);

  SUBCASE("scaling the weights leaves Gamma unchanged") {
    const SynthesisResult twice = solve_weighted(model, spec, Vector::Constant(2, 2.0));
    REQUIRE(twice.optimal());
    CHECK((twice.gamma - base.gamma).cwiseAbs().maxCoeff() <= 1e-6 * std::max(1.0, base.gamma.maxCoeff()));
    CHECK(twice.objective == doctest::Approx(2.0 * base.objective).epsilon(1e-6));
  }
  SUBCASE("tightening gamma_ub never lowers the optimum") {
    spec.gamma_ub = 0.9 * base.gamma.maxCoeff();
    const SynthesisResult tight = solve_weighted(model, spec, Vector::Ones(2));
    if (tight.optimal()) {
      CHECK(tight.objective >= base.objective - 1e-6);
      CHECK(tight.gamma.maxCoeff() <= *spec.gamma_ub * (1.0 + 1e-6));
    }
  }
  SUBCASE("vertex certificate holds on the interior of the box") {
    std::mt19937_64 g(32);
    std::uniform_real_distribution<double> u(0.0, 0.25);
    std::vector<Vector> interior;
    for (int k = 0; k < 50; ++k) interior.emplace_back(Eigen::Vector2d(u(g), u(g)));
    std::array<AffineMatrix, 6> terms;
    for (SystemMatrix m : kAllSystemMatrices) terms[static_cast<std::size_t>(m)] = model.term(m);
    const AffineLPVModel sampled(terms, model.box(), interior);
    const SynthesisProblem sp = assemble_hinf(sampled, spec, Vector::Ones(2));
    CHECK(sp.vertices.size() == 50);
    CHECK(sdp::max_violation(sp.problem, pack_solution(sp, base)) <= 1e-7);
  }
  SUBCASE("closed-loop norms respect the certificate at the vertices") {
    VerifyTarget t{NormKind::kHinf, spec.gamma0, base.sqrt_gamma(), 1e-4};
    GridOptions o;
    o.density = 3;
    const NormReport r = grid_verify(model, base.K, t, o);
    CHECK(r.passed());
  }
}

TEST_CASE("reweighting and pruning on a small wing") {
  const auto model = small_wing(1.5);
  SynthesisSpec spec = hinf_spec(0.3);
  spec.max_iterations = 4;
  const SparseDesign d = reweighted_l1(model, spec);
  CHECK(d.history.size() >= 1);
  CHECK(d.history.size() <= 5);
  for (const auto& r : d.history) {
    CHECK(r.optimal());
    CHECK((r.alpha.array() > 0).all());
    CHECK(r.alpha.allFinite());
  }
  SUBCASE("nothing to prune gives the unit-weight solve") {
    const SynthesisResult unit = solve_weighted(model, spec, Vector::Ones(2));
    SynthesisResult fake = unit;
    const PrunedDesign p = prune_and_resolve(model, spec, fake);
    CHECK(p.active.size() == 2);
    CHECK((p.gamma - unit.gamma).cwiseAbs().maxCoeff() <= 1e-9 * unit.gamma.maxCoeff());
  }
}

TEST_CASE("first infeasible weighted solve aborts reweighting") {
  const auto model = scalar_plant(1, 1, 1, 1, 0, 0);
  CHECK_THROWS_AS(reweighted_l1(model, hinf_spec(1e-9)), InfeasibleError);
}

TEST_CASE("pruning every actuator of a stable plant leaves the open loop") {
  const auto model = scalar_plant(-1, 1, 1, 1, 0, 0);
  const SynthesisSpec spec = hinf_spec(2.0);
  SynthesisResult fake;
  fake.status = sdp::Status::kOptimal;
  fake.gamma = Vector::Constant(1, 1e-12);
  const PrunedDesign p = prune_and_resolve(model, spec, fake);
  CHECK(p.active.empty());
  REQUIRE(p.reduced.optimal());
  CHECK(p.reduced.K.rows() == 0);
  CHECK(p.reduced.certificate_passed(1e-7));
  CHECK(p.K.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("spec validation") {
  const auto model = scalar_plant(1, 1, 1, 1, 0, 0);
  SynthesisSpec s = hinf_spec(0.0);
  CHECK_THROWS_AS(solve_weighted(model, s, Vector::Ones(1)), ConfigError);
  s = hinf_spec(1.0);
  s.epsilon = 0.0;
  CHECK_THROWS_AS(reweighted_l1(model, s), ConfigError);
  s = hinf_spec(1.0);
  CHECK_THROWS_AS(solve_weighted(model, s, Vector::Ones(2)), Error);
  CHECK(parse_norm_kind("h2") == NormKind::kH2);
  CHECK_THROWS_AS(parse_norm_kind("h3"), ConfigError);
}

TEST_CASE("H2 vertex certificate holds on the interior of the box") {
  const auto model = small_wing(1.5);
  SynthesisSpec spec;
  spec.kind = NormKind::kH2;
  spec.gamma0 = 0.5;
  const SynthesisResult r = solve_weighted(model, spec, Vector::Ones(2));
  REQUIRE(r.optimal());
  CHECK(r.certificate_passed(1e-7));
  std::mt19937_64 g(33);
  std::uniform_real_distribution<double> u(0.0, 0.25);
  std::vector<Vector> interior;
  for (int k = 0; k < 50; ++k) interior.emplace_back(Eigen::Vector2d(u(g), u(g)));
  std::array<AffineMatrix, 6> terms;
  for (SystemMatrix m : kAllSystemMatrices) terms[static_cast<std::size_t>(m)] = model.term(m);
  const SynthesisProblem sp = assemble_h2(AffineLPVModel(terms, model.box(), interior), spec, Vector::Ones(2));
  CHECK(sdp::max_violation(sp.problem, pack_solution(sp, r)) <= 1e-7);
  VerifyTarget t{NormKind::kH2, spec.gamma0, r.sqrt_gamma(), 1e-4};
  GridOptions o;
  o.density = 3;
  CHECK(grid_verify(model, r.K, t, o).passed());
}

TEST_CASE("five-bar wing reweighting history") {
  const auto model = wing_to_lpv(build_wing(WingParams{}));
  SynthesisSpec spec = hinf_spec(0.15);
  spec.gamma_ub = 196.0;
  const SparseDesign d = reweighted_l1(model, spec);
  REQUIRE(d.history.size() >= 2);
  int previous = 6;
  for (const auto& r : d.history) {
    REQUIRE(r.optimal());
    CHECK((r.alpha.array() > 0).all());
    CHECK(r.alpha.allFinite());
    const int above = static_cast<int>(actuators_to_keep(r, spec.prune_threshold).size());
    CHECK(above <= previous);
    previous = above;
  }
  const PrunedDesign p = prune_and_resolve(model, spec, d.last());
  REQUIRE(p.reduced.optimal());
  CHECK(p.reduced.certificate_passed(1e-7));
  CHECK(p.reduced.vertex_max_eigenvalue.size() == 32);
  for (double e : p.reduced.vertex_max_eigenvalue) CHECK(e <= 1e-7);
}
