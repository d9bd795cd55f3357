#include "sparse_lpv/synthesis.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "sparse_lpv/error.hpp"

namespace sparse_lpv {

const char* to_string(NormKind kind) { return kind == NormKind::kHinf ? "hinf" : "h2"; }

NormKind parse_norm_kind(const std::string& s) {
  if (s == "hinf" || s == "Hinf" || s == "H_inf") return NormKind::kHinf;
  if (s == "h2" || s == "H2") return NormKind::kH2;
  throw ConfigError("unknown norm kind '" + s + "' (expected hinf or h2)");
}

void SynthesisSpec::validate(int n_u) const {
  std::ostringstream os;
  if (!(gamma0 > 0)) os << "gamma0 must be positive; ";
  if (gamma_ub && !(*gamma_ub > 0)) os << "gamma_ub must be positive; ";
  if (alpha.size() != 0) {
    if (alpha.size() != n_u) os << "alpha must have one weight per actuator; ";
    if ((alpha.array() <= 0).any() || !alpha.allFinite()) os << "alpha must be positive; ";
  }
  if (!(epsilon > 0)) os << "epsilon must be positive; ";
  if (max_iterations < 1) os << "max_iterations must be at least 1; ";
  if (!(margin >= 0)) os << "margin must be non-negative; ";
  if (!(gamma_min >= 0)) os << "gamma_min must be non-negative; ";
  if (!os.str().empty()) throw ConfigError("synthesis spec: " + os.str());
}

std::vector<Vector> design_vertices(const AffineLPVModel& model) {
  if (model.parameter_independent()) {
    return {model.explicit_vertices() ? model.explicit_vertices()->front() : model.box().lower()};
  }
  auto v = model.vertices();
  if (v.empty()) throw DimensionError("synthesis: empty vertex set");
  return v;
}

namespace {

Vector weights_or_ones(const Vector& alpha, int n_u) {
  return alpha.size() == 0 ? Vector::Ones(n_u) : alpha;
}

struct Common {
  SynthesisProblem sp;
  int n_x, n_u, n_w, n_z;
  double sym_scale;
};

Common declare(const AffineLPVModel& model, const SynthesisSpec& spec, const Vector& alpha,
               NormKind kind) {
  spec.validate(model.n_u());
  if (alpha.size() != model.n_u()) throw DimensionError("synthesis: alpha length differs from N_u");
  Common c;
  c.n_x = model.n_x();
  c.n_u = model.n_u();
  c.n_w = model.n_w();
  c.n_z = model.n_z();
  c.sym_scale = spec.sym == SymConvention::kFull ? 1.0 : 0.5;
  c.sp.kind = kind;
  c.sp.vertices = design_vertices(model);
  auto& p = c.sp.problem;
  c.sp.X = p.add_symmetric("X", c.n_x);
  c.sp.W = p.add_matrix("W", c.n_u, c.n_x);
  if (kind == NormKind::kH2) c.sp.Z = p.add_symmetric("Z", c.n_z);
  for (int i = 0; i < c.n_u; ++i) {
    const int g = p.add_scalar("gamma_" + std::to_string(i + 1), spec.gamma_min, spec.gamma_ub);
    p.set_objective(p.variable(g).offset, alpha[i]);
    c.sp.gammas.push_back(g);
  }
  // X > 0
  sdp::LmiBuilder bx(p, c.n_x);
  bx.add_product(0, 0, Matrix::Identity(c.n_x, c.n_x), c.sp.X, Matrix::Identity(c.n_x, c.n_x), -1.0);
  p.add_constraint(bx.finish("x_positive", -1, -1, spec.margin));
  return c;
}

void add_lyapunov_block(sdp::LmiBuilder& b, const Common& c, const FrozenSystem& f) {
  const Matrix Ix = Matrix::Identity(c.n_x, c.n_x);
  b.add_sym_product(0, f.A, c.sp.X, Ix, c.sym_scale);
  if (c.n_u > 0) b.add_sym_product(0, f.Bu, c.sp.W, Ix, c.sym_scale);
}

void add_gramian(Common& c, const SynthesisSpec& spec, const AffineLPVModel& model,
                 const FrozenSystem& f, int vertex) {
  auto& p = c.sp.problem;
  const bool direct = spec.gramian_form == GramianForm::kDirect;
  if (direct && !model.term(SystemMatrix::kBw).parameter_independent()) {
    throw ConfigError("direct Gramian form requires a parameter-independent B_w");
  }
  sdp::LmiBuilder b(p, direct ? c.n_x : c.n_x + c.n_w);
  add_lyapunov_block(b, c, f);
  if (direct) {
    b.add_constant(0, 0, f.Bw * f.Bw.transpose());
  } else {
    b.add_constant(0, c.n_x, f.Bw);
    b.add_constant(c.n_x, c.n_x, -Matrix::Identity(c.n_w, c.n_w));
  }
  p.add_constraint(b.finish("gramian", vertex, -1, spec.margin));
}

void add_actuator_rows(Common& c, const SynthesisSpec& spec) {
  auto& p = c.sp.problem;
  for (int i = 0; i < c.n_u; ++i) {
    sdp::LmiBuilder b(p, 1 + c.n_x);
    b.add_scalar(0, 0, c.sp.gammas[static_cast<std::size_t>(i)], -Matrix::Identity(1, 1));
    b.add_rows(0, 1, c.sp.W, i, 1);
    b.add_product(1, 1, Matrix::Identity(c.n_x, c.n_x), c.sp.X, Matrix::Identity(c.n_x, c.n_x), -1.0);
    p.add_constraint(b.finish("actuator", -1, i, spec.margin));
  }
}

}  // namespace

SynthesisProblem assemble_hinf(const AffineLPVModel& model, const SynthesisSpec& spec,
                               const Vector& alpha) {
  Common c = declare(model, spec, alpha, NormKind::kHinf);
  auto& p = c.sp.problem;
  const Matrix Ix = Matrix::Identity(c.n_x, c.n_x);
  for (std::size_t v = 0; v < c.sp.vertices.size(); ++v) {
    const FrozenSystem f = model.evaluate(c.sp.vertices[v]);
    const int vi = static_cast<int>(v);
    const int ow = c.n_x;
    const int oz = c.n_x + c.n_w;
    sdp::LmiBuilder b(p, c.n_x + c.n_w + c.n_z);
    add_lyapunov_block(b, c, f);
    b.add_constant(0, ow, f.Bw);
    b.add_product(oz, 0, f.Cz, c.sp.X, Ix);
    if (c.n_u > 0) b.add_product(oz, 0, f.Du, c.sp.W, Ix);
    b.add_constant(ow, ow, -spec.gamma0 * Matrix::Identity(c.n_w, c.n_w));
    b.add_constant(oz, ow, f.Dw);
    b.add_constant(oz, oz, -spec.gamma0 * Matrix::Identity(c.n_z, c.n_z));
    p.add_constraint(b.finish("hinf", vi, -1, spec.margin));
    add_gramian(c, spec, model, f, vi);
  }
  // Actuator rows do not involve rho: one copy serves every vertex.
  add_actuator_rows(c, spec);
  return std::move(c.sp);
}

SynthesisProblem assemble_h2(const AffineLPVModel& model, const SynthesisSpec& spec,
                             const Vector& alpha) {
  const auto& dw = model.term(SystemMatrix::kDw);
  bool zero_dw = dw.constant.isZero(0.0);
  for (const auto& m : dw.coefficients) zero_dw = zero_dw && m.isZero(0.0);
  if (!zero_dw) throw ConfigError("H2 requires D_w = 0 (finite H2 norm needs zero feedthrough)");

  Common c = declare(model, spec, alpha, NormKind::kH2);
  auto& p = c.sp.problem;
  const Matrix Ix = Matrix::Identity(c.n_x, c.n_x);
  const Matrix Iz = Matrix::Identity(c.n_z, c.n_z);
  for (std::size_t v = 0; v < c.sp.vertices.size(); ++v) {
    const FrozenSystem f = model.evaluate(c.sp.vertices[v]);
    const int vi = static_cast<int>(v);
    sdp::LmiBuilder b(p, c.n_z + c.n_x);
    b.add_product(0, 0, Iz, c.sp.Z, Iz, -1.0);
    b.add_product(0, c.n_z, f.Cz, c.sp.X, Ix);
    if (c.n_u > 0) b.add_product(0, c.n_z, f.Du, c.sp.W, Ix);
    b.add_product(c.n_z, c.n_z, Ix, c.sp.X, Ix, -1.0);
    p.add_constraint(b.finish("h2_output", vi, -1, spec.margin));
    add_gramian(c, spec, model, f, vi);
  }
  sdp::LmiBuilder tr(p, 1);
  for (int k = 0; k < c.n_z; ++k) {
    tr.add_product(0, 0, Iz.row(k), c.sp.Z, Iz.col(k));
  }
  tr.add_constant(0, 0, Matrix::Constant(1, 1, -spec.gamma0 * spec.gamma0));
  p.add_constraint(tr.finish("trace", -1, -1, spec.margin));
  add_actuator_rows(c, spec);
  return std::move(c.sp);
}

SynthesisProblem assemble(const AffineLPVModel& model, const SynthesisSpec& spec,
                          const Vector& alpha) {
  return spec.kind == NormKind::kHinf ? assemble_hinf(model, spec, alpha)
                                      : assemble_h2(model, spec, alpha);
}

Vector pack_solution(const SynthesisProblem& sp, const SynthesisResult& r) {
  const auto& p = sp.problem;
  Vector y = Vector::Zero(p.num_unknowns());
  auto put = [&](int id, const Matrix& M) {
    const sdp::Variable& v = p.variable(id);
    if (M.rows() != v.rows || M.cols() != v.cols) throw DimensionError("pack_solution: value has wrong shape");
    for (int i = 0; i < v.rows; ++i) {
      for (int j = v.symmetric ? i : 0; j < v.cols; ++j) y[v.unknown(i, j)] = M(i, j);
    }
  };
  put(sp.X, r.X);
  put(sp.W, r.W);
  if (sp.Z >= 0) put(sp.Z, r.Z);
  if (static_cast<std::size_t>(r.gamma.size()) != sp.gammas.size()) throw DimensionError("pack_solution: Gamma length");
  for (std::size_t i = 0; i < sp.gammas.size(); ++i) {
    y[p.variable(sp.gammas[i]).offset] = r.gamma[static_cast<Eigen::Index>(i)];
  }
  return y;
}

Matrix gain_from(const Matrix& X, const Matrix& W) {
  if (X.rows() != X.cols() || W.cols() != X.rows()) throw DimensionError("gain_from: shape mismatch");
  if (W.rows() == 0) return Matrix::Zero(0, X.cols());
  Eigen::SelfAdjointEigenSolver<Matrix> es(X, Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues().minCoeff();
  const double lmax = es.eigenvalues().maxCoeff();
  if (!(lmin > 0)) {
    std::ostringstream os;
    os << "gain_from: X is not positive definite (min eigenvalue " << lmin << ")";
    throw NumericalError(os.str());
  }
  const double cond = lmax / lmin;
  if (cond > 1e12) {
    std::ostringstream os;
    os << "gain_from: X is numerically singular (condition number " << cond << ")";
    throw NumericalError(os.str());
  }
  Eigen::LLT<Matrix> llt(X);
  // K X = W  <=>  X K' = W'  (X symmetric)
  return llt.solve(W.transpose()).transpose();
}

SynthesisResult solve_weighted(const AffineLPVModel& model, const SynthesisSpec& spec,
                               const Vector& alpha_in) {
  const Vector alpha = weights_or_ones(alpha_in, model.n_u());
  SynthesisProblem sp = assemble(model, spec, alpha);
  const sdp::Solution sol = sdp::solve(sp.problem, spec.solver);

  SynthesisResult r;
  r.kind = spec.kind;
  r.status = sol.status;
  r.message = sol.message;
  r.alpha = alpha;
  r.vertices = sp.vertices;
  r.stats = sol.stats;
  r.objective = sol.objective;
  const auto& p = sp.problem;
  r.X = p.value(sp.X, sol.values);
  r.W = p.value(sp.W, sol.values);
  if (sp.Z >= 0) r.Z = p.value(sp.Z, sol.values);
  r.gamma.resize(model.n_u());
  for (int i = 0; i < model.n_u(); ++i) {
    r.gamma[i] = sol.values[p.variable(sp.gammas[static_cast<std::size_t>(i)]).offset];
  }

  const auto eig = sdp::check_feasibility(p, sol.values);
  r.vertex_max_eigenvalue.assign(sp.vertices.size(), -std::numeric_limits<double>::infinity());
  r.max_eigenvalue = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < eig.size(); ++j) {
    const auto& c = p.constraints()[j];
    if (eig[j] > r.max_eigenvalue) {
      r.max_eigenvalue = eig[j];
      r.worst_family = c.family;
      r.worst_vertex = c.vertex;
    }
  }
  // Vertex-free constraints (actuator rows, X > 0, bounds, trace) hold at every vertex.
  double shared = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < eig.size(); ++j) {
    if (p.constraints()[j].vertex < 0) shared = std::max(shared, eig[j]);
  }
  for (auto& v : r.vertex_max_eigenvalue) v = shared;
  for (std::size_t j = 0; j < eig.size(); ++j) {
    const int v = p.constraints()[j].vertex;
    if (v >= 0) {
      auto& slot = r.vertex_max_eigenvalue[static_cast<std::size_t>(v)];
      slot = std::max(slot, eig[j]);
    }
  }

  if (r.optimal()) {
    try {
      r.K = gain_from(r.X, r.W);
    } catch (const NumericalError& e) {
      r.status = sdp::Status::kNumericalFailure;
      r.message = e.what();
    }
  }
  if (!r.optimal()) {
    std::ostringstream os;
    os << r.message << "; largest violation " << r.max_eigenvalue << " in family '" << r.worst_family
       << "'";
    if (r.worst_vertex >= 0) os << " at vertex " << r.worst_vertex;
    r.message = os.str();
  }
  return r;
}

Vector reweight(const Vector& gamma, double epsilon) {
  return (gamma.cwiseAbs().array() + epsilon).inverse().matrix();
}

SparseDesign reweighted_l1(const AffineLPVModel& model, const SynthesisSpec& spec) {
  spec.validate(model.n_u());
  SparseDesign design;
  Vector alpha = weights_or_ones(spec.alpha, model.n_u());
  // One unit-weight solve followed by up to max_iterations reweighted solves.
  for (int j = 0; j <= spec.max_iterations; ++j) {
    SynthesisResult r = solve_weighted(model, spec, alpha);
    if (!r.optimal()) {
      if (j == 0) {
        if (r.status == sdp::Status::kInfeasible) throw InfeasibleError("synthesis infeasible: " + r.message);
        throw NumericalError("synthesis failed: " + r.message);
      }
      break;  // keep the last successful iterate
    }
    const bool done = !design.history.empty() &&
                      (r.gamma - design.last().gamma).cwiseAbs().maxCoeff() < spec.convergence_tolerance;
    alpha = reweight(r.gamma, spec.epsilon);
    design.history.push_back(std::move(r));
    if (done) {
      design.converged = true;
      break;
    }
  }
  return design;
}

std::vector<int> actuators_to_keep(const SynthesisResult& result, double threshold) {
  std::vector<int> keep;
  const Vector s = result.sqrt_gamma();
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s[i] >= threshold) keep.push_back(static_cast<int>(i));
  }
  return keep;
}

PrunedDesign prune_and_resolve(const AffineLPVModel& model, const SynthesisSpec& spec,
                               const SynthesisResult& design) {
  PrunedDesign out;
  out.active = actuators_to_keep(design, spec.prune_threshold);
  const AffineLPVModel reduced = model.with_actuators(out.active);
  out.reduced = solve_weighted(reduced, spec, Vector::Ones(static_cast<Eigen::Index>(out.active.size())));
  out.K = Matrix::Zero(model.n_u(), model.n_x());
  out.gamma = Vector::Zero(model.n_u());
  if (out.reduced.optimal()) {
    for (std::size_t j = 0; j < out.active.size(); ++j) {
      out.K.row(out.active[j]) = out.reduced.K.row(static_cast<Eigen::Index>(j));
      out.gamma[out.active[j]] = out.reduced.gamma[static_cast<Eigen::Index>(j)];
    }
  }
  return out;
}

}  // namespace sparse_lpv
