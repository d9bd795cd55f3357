#pragma once

// Sparse-actuation state-feedback synthesis for affine LPV models.
//
// Decision variables: a single Lyapunov-type matrix X > 0, W (N_u x N_x),
// the actuator bounds Gamma = (gamma_1 .. gamma_Nu) and, for H2, Z. All
// constraints are affine in rho, so enforcing them at the polytope vertices
// certifies the whole box. The gain is K = W X^-1.

#include <optional>
#include <string>
#include <vector>

#include "sparse_lpv/lpv_model.hpp"
#include "sparse_lpv/sdp.hpp"

namespace sparse_lpv {

enum class NormKind { kHinf, kH2 };

const char* to_string(NormKind kind);
NormKind parse_norm_kind(const std::string& s);

/// How sym(AX + B_u W) is formed in the Lyapunov block.
enum class SymConvention {
  kFull,  // (M + M')      standard bounded-real / Gramian form
  kHalf,  // (M + M') / 2  literal half-sum, more conservative
};

/// How "M11 + B_w B_w' < 0" is imposed.
enum class GramianForm {
  kSchur,   // [[M11, B_w], [B_w', -I]] <= 0, affine in rho for any B_w
  kDirect,  // M11 + B_w B_w' <= 0, only when B_w does not depend on rho
};

struct SynthesisSpec {
  NormKind kind = NormKind::kHinf;
  double gamma0 = 0.15;             // required performance level
  std::optional<double> gamma_ub;   // common upper bound on each gamma_i (squared scale)
  Vector alpha;                     // initial weights, empty means all ones
  double epsilon = 1e-4;            // reweighting regularizer
  int max_iterations = 10;         // reweighting updates after the first solve
  double convergence_tolerance = 1e-4;  // on max_i |gamma_i^{j+1} - gamma_i^j|
  double prune_threshold = 1e-3;        // on sqrt(gamma_i)
  double margin = 1e-7;                 // strict LMIs become F + margin I <= 0
  double gamma_min = 1e-12;             // gamma_i >= gamma_min
  double certificate_tolerance = 1e-7;
  SymConvention sym = SymConvention::kFull;
  GramianForm gramian_form = GramianForm::kSchur;
  sdp::Settings solver;

  void validate(int n_u) const;
};

/// Assembled program together with the handles of its decision variables.
struct SynthesisProblem {
  sdp::Problem problem;
  NormKind kind = NormKind::kHinf;
  std::vector<Vector> vertices;
  int X = -1;
  int W = -1;
  int Z = -1;               // H2 only
  std::vector<int> gammas;  // one scalar variable per actuator
};

struct SynthesisResult {
  NormKind kind = NormKind::kHinf;
  sdp::Status status = sdp::Status::kNumericalFailure;
  std::string message;
  Matrix X, W, Z, K;
  Vector gamma;
  Vector alpha;
  double objective = 0.0;
  std::vector<Vector> vertices;
  /// Largest eigenvalue of (F + margin I) over all constraints at each vertex.
  std::vector<double> vertex_max_eigenvalue;
  /// Largest eigenvalue over every constraint (including vertex-free ones).
  double max_eigenvalue = 0.0;
  std::string worst_family;
  int worst_vertex = -1;
  sdp::Stats stats;

  [[nodiscard]] bool optimal() const { return status == sdp::Status::kOptimal; }
  [[nodiscard]] bool certificate_passed(double tol) const {
    return optimal() && max_eigenvalue <= tol;
  }
  [[nodiscard]] Vector sqrt_gamma() const { return gamma.cwiseMax(0.0).cwiseSqrt(); }
};

/// Vertices used for synthesis: a single point for parameter-independent models.
std::vector<Vector> design_vertices(const AffineLPVModel& model);

/// Bounded-real H-infinity program (families "hinf", "gramian", "actuator").
SynthesisProblem assemble_hinf(const AffineLPVModel& model, const SynthesisSpec& spec,
                               const Vector& alpha);
/// H2 program (families "h2_output", "gramian", "trace", "actuator"); needs D_w = 0.
SynthesisProblem assemble_h2(const AffineLPVModel& model, const SynthesisSpec& spec,
                             const Vector& alpha);
SynthesisProblem assemble(const AffineLPVModel& model, const SynthesisSpec& spec,
                          const Vector& alpha);

/// Decision vector of `sp` holding the values of `r` (for auditing a result
/// against constraints assembled at other parameter points).
Vector pack_solution(const SynthesisProblem& sp, const SynthesisResult& r);

/// K solving K X = W without forming X^-1. Throws NumericalError when X is
/// not positive definite or its condition number exceeds 1e12.
Matrix gain_from(const Matrix& X, const Matrix& W);

/// Single weighted solve (objective alpha' Gamma) plus certificate audit.
SynthesisResult solve_weighted(const AffineLPVModel& model, const SynthesisSpec& spec,
                               const Vector& alpha);

/// alpha_i = 1 / (epsilon + |gamma_i|)
Vector reweight(const Vector& gamma, double epsilon);

struct SparseDesign {
  std::vector<SynthesisResult> history;
  bool converged = false;
  [[nodiscard]] const SynthesisResult& last() const { return history.back(); }
};

/// Iterative reweighted l1 minimization. Throws InfeasibleError (or
/// NumericalError) when the first weighted problem cannot be solved.
SparseDesign reweighted_l1(const AffineLPVModel& model, const SynthesisSpec& spec);

struct PrunedDesign {
  SynthesisResult reduced;       // solved on the model restricted to `active`
  std::vector<int> active;       // original indices of retained actuators
  Matrix K;                      // full N_u x N_x gain, zero rows for pruned actuators
  Vector gamma;                  // full-length bounds, zero for pruned actuators
};

/// Indices whose sqrt(gamma_i) reaches the threshold.
std::vector<int> actuators_to_keep(const SynthesisResult& result, double threshold);

/// Drops small actuators and re-solves with unit weights.
PrunedDesign prune_and_resolve(const AffineLPVModel& model, const SynthesisSpec& spec,
                               const SynthesisResult& design);

}  // namespace sparse_lpv
