#pragma once

// Independent (non-SDP) norm computations for frozen-parameter systems.

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "sparse_lpv/lpv_model.hpp"
#include "sparse_lpv/synthesis.hpp"

namespace sparse_lpv {

/// Systems with spectral abscissa at or above this are treated as unstable.
inline constexpr double kHurwitzThreshold = -1e-9;

double spectral_abscissa(const Matrix& A);
bool is_hurwitz(const Matrix& A);

/// Solves A P + P A' + Q = 0 (complex Schur / Bartels-Stewart).
/// Throws NumericalError when A is not Hurwitz.
Matrix lyapunov_solve(const Matrix& A, const Matrix& Q);

/// G(jw) = C (jwI - A)^-1 B + D
Eigen::MatrixXcd frequency_response(const LTIStateSpace& sys, double omega);
double max_singular_value(const LTIStateSpace& sys, double omega);

/// sqrt(tr(C P C')) with P the controllability Gramian. Requires D = 0.
double h2_norm(const LTIStateSpace& sys);

struct HinfResult {
  double norm = 0.0;   // certified upper end of the final bracket
  double lower = 0.0;  // attained sigma_max at peak_frequency
  double peak_frequency = 0.0;
  int iterations = 0;
};

/// Bisection on gamma with the Hamiltonian imaginary-axis test.
HinfResult hinf_norm_detailed(const LTIStateSpace& sys, double tol = 1e-6);
double hinf_norm(const LTIStateSpace& sys, double tol = 1e-6);

struct VerifyTarget {
  NormKind kind = NormKind::kHinf;
  double gamma0 = 0.0;
  Vector sqrt_gamma;  // per-actuator bounds on ||G_ui||_2
  double rel_tol = 1e-4;
};

struct GridOptions {
  int density = 1;         // points per axis minus one; 1 = vertices only
  int random_samples = 0;  // extra uniformly drawn interior points
  std::uint64_t seed = 0;
  double hinf_tol = 1e-6;
  int workers = 1;
};

struct SampleNorms {
  Vector rho;
  std::string origin;  // "vertex", "grid" or "random"
  bool stable = true;
  double abscissa = 0.0;
  double performance = 0.0;  // +inf when unstable
  Vector actuator;
};

struct NormReport {
  NormKind kind = NormKind::kHinf;
  double gamma0 = 0.0;
  Vector sqrt_gamma;
  double rel_tol = 1e-4;
  std::vector<SampleNorms> samples;
  double worst_performance = 0.0;
  Vector worst_actuator;
  std::vector<std::string> failures;

  [[nodiscard]] bool passed() const { return failures.empty(); }
};

/// Uniform grid over the box: (density+1)^n_rho points including the vertices.
std::vector<Vector> uniform_grid(const ParamBox& box, int density);

/// Frozen-parameter norms of G_z and every G_ui under u = Kx.
NormReport grid_verify(const AffineLPVModel& model, const Matrix& K, const VerifyTarget& target,
                       const GridOptions& options = {});

}  // namespace sparse_lpv
