#include "sparse_lpv/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "sparse_lpv/error.hpp"

namespace sparse_lpv {
namespace {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;

void require_hurwitz(const Matrix& A, const char* what) {
  const double a = spectral_abscissa(A);
  if (!(a < kHurwitzThreshold)) {
    std::ostringstream os;
    os << what << ": A is not Hurwitz (spectral abscissa " << a << ")";
    throw NumericalError(os.str());
  }
}

// T Y + Y T^H = -F with T upper triangular, column sweep from the right.
CMatrix triangular_lyapunov(const CMatrix& T, const CMatrix& F) {
  const Eigen::Index n = T.rows();
  CMatrix Y = CMatrix::Zero(n, n);
  for (Eigen::Index j = n - 1; j >= 0; --j) {
    Eigen::VectorXcd rhs = -F.col(j);
    for (Eigen::Index k = j + 1; k < n; ++k) rhs -= std::conj(T(j, k)) * Y.col(k);
    CMatrix shifted = T;
    shifted.diagonal().array() += std::conj(T(j, j));
    Y.col(j) = shifted.triangularView<Eigen::Upper>().solve(rhs);
  }
  return Y;
}

double sigma_max(const CMatrix& G) {
  if (G.size() == 0) return 0.0;
  Eigen::JacobiSVD<CMatrix> svd(G);
  return svd.singularValues()(0);
}

double sigma_max(const Matrix& D) {
  if (D.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(D);
  return svd.singularValues()(0);
}

// Frequencies where sigma_max(G(jw)) may equal gamma; empty means gamma is an upper bound.
std::vector<double> imaginary_crossings(const LTIStateSpace& sys, double gamma) {
  const Eigen::Index n = sys.A.rows();
  const Matrix& A = sys.A;
  const Matrix& B = sys.B;
  const Matrix& C = sys.C;
  const Matrix& D = sys.D;
  const Eigen::Index m = B.cols();
  const Matrix R = gamma * gamma * Matrix::Identity(m, m) - D.transpose() * D;
  Eigen::LLT<Matrix> llt(R);
  if (llt.info() != Eigen::Success) return {0.0};
  const Matrix RiDtC = llt.solve(D.transpose() * C);
  const Matrix RiBt = llt.solve(B.transpose());
  const Matrix Ah = A + B * RiDtC;
  Matrix H(2 * n, 2 * n);
  H.topLeftCorner(n, n) = Ah;
  H.topRightCorner(n, n) = B * RiBt;
  H.bottomLeftCorner(n, n) =
      -(C.transpose() * C + C.transpose() * D * llt.solve(D.transpose() * C));
  H.bottomRightCorner(n, n) = -Ah.transpose();
  Eigen::EigenSolver<Matrix> es(H, false);
  std::vector<double> freqs;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const Complex lam = es.eigenvalues()(i);
    if (std::abs(lam.real()) <= 1e-6 * std::max(1.0, std::abs(lam)) && lam.imag() >= 0.0) {
      freqs.push_back(lam.imag());
    }
  }
  std::sort(freqs.begin(), freqs.end());
  return freqs;
}

}  // namespace

double spectral_abscissa(const Matrix& A) {
  if (A.rows() == 0) return -std::numeric_limits<double>::infinity();
  Eigen::EigenSolver<Matrix> es(A, false);
  return es.eigenvalues().real().maxCoeff();
}

bool is_hurwitz(const Matrix& A) { return spectral_abscissa(A) < kHurwitzThreshold; }

Matrix lyapunov_solve(const Matrix& A, const Matrix& Q) {
  if (A.rows() != A.cols() || Q.rows() != A.rows() || Q.cols() != A.cols()) {
    throw DimensionError("lyapunov_solve: A and Q must be square of equal size");
  }
  if (A.rows() == 0) return Matrix(0, 0);
  require_hurwitz(A, "lyapunov_solve");
  Eigen::ComplexSchur<Matrix> schur(A);
  const CMatrix& U = schur.matrixU();
  const CMatrix& T = schur.matrixT();
  auto solve = [&](const Matrix& rhs) {
    const CMatrix F = U.adjoint() * rhs.cast<Complex>() * U;
    const CMatrix P = U * triangular_lyapunov(T, F) * U.adjoint();
    Matrix Pr = P.real();
    return Matrix(0.5 * (Pr + Pr.transpose()));
  };
  Matrix P = solve(Q);
  // one step of iterative refinement
  const Matrix residual = A * P + P * A.transpose() + Q;
  P += solve(0.5 * (residual + residual.transpose()));
  return P;
}

Eigen::MatrixXcd frequency_response(const LTIStateSpace& sys, double omega) {
  const Eigen::Index n = sys.A.rows();
  CMatrix G = sys.D.cast<Complex>();
  if (n == 0) return G;
  CMatrix M = -sys.A.cast<Complex>();
  M.diagonal().array() += Complex(0.0, omega);
  const CMatrix X = M.partialPivLu().solve(sys.B.cast<Complex>());
  G += sys.C.cast<Complex>() * X;
  return G;
}

double max_singular_value(const LTIStateSpace& sys, double omega) {
  return sigma_max(frequency_response(sys, omega));
}

double h2_norm(const LTIStateSpace& sys) {
  if (sys.D.size() > 0 && sys.D.cwiseAbs().maxCoeff() != 0.0) {
    throw ConfigError("h2_norm: feedthrough D must be zero");
  }
  if (sys.A.rows() == 0) return 0.0;
  require_hurwitz(sys.A, "h2_norm");
  const Matrix P = lyapunov_solve(sys.A, sys.B * sys.B.transpose());
  const double t = (sys.C * P * sys.C.transpose()).trace();
  return std::sqrt(std::max(t, 0.0));
}

HinfResult hinf_norm_detailed(const LTIStateSpace& sys, double tol) {
  if (!(tol > 0.0)) throw ConfigError("hinf_norm: tolerance must be positive");
  HinfResult out;
  const double sd = sigma_max(sys.D);
  out.lower = out.norm = sd;
  const Eigen::Index n = sys.A.rows();
  if (n == 0) return out;
  require_hurwitz(sys.A, "hinf_norm");

  const Matrix Pc = lyapunov_solve(sys.A, sys.B * sys.B.transpose());
  const Matrix Po = lyapunov_solve(sys.A.transpose(), sys.C.transpose() * sys.C);
  Eigen::EigenSolver<Matrix> hs(Pc * Po, false);
  double hankel_sum = 0.0;
  for (Eigen::Index i = 0; i < hs.eigenvalues().size(); ++i) {
    hankel_sum += std::sqrt(std::max(hs.eigenvalues()(i).real(), 0.0));
  }
  if (hankel_sum == 0.0) return out;

  auto probe = [&](double w) {
    const double s = max_singular_value(sys, w);
    if (s > out.lower) {
      out.lower = s;
      out.peak_frequency = w;
    }
  };
  probe(0.0);
  Eigen::EigenSolver<Matrix> poles(sys.A, false);
  for (Eigen::Index i = 0; i < poles.eigenvalues().size(); ++i) {
    probe(std::abs(poles.eigenvalues()(i).imag()));
    probe(std::abs(poles.eigenvalues()(i)));
  }

  // Returns true when gamma is certified as an upper bound.
  auto certify = [&](double gamma) {
    ++out.iterations;
    const std::vector<double> freqs = imaginary_crossings(sys, gamma);
    if (freqs.empty()) return true;
    double best = 0.0;
    for (std::size_t i = 0; i < freqs.size(); ++i) {
      const double a = freqs[i];
      best = std::max(best, max_singular_value(sys, a));
      probe(a);
      if (i + 1 < freqs.size()) {
        const double mid = 0.5 * (a + freqs[i + 1]);
        best = std::max(best, max_singular_value(sys, mid));
        probe(mid);
      }
    }
    return best < gamma;
  };

  double upper = std::max(sd + 2.0 * hankel_sum, out.lower * (1.0 + tol));
  while (!certify(upper)) {
    upper = std::max(2.0 * upper, out.lower * (1.0 + tol));
    if (out.iterations > 200) throw NumericalError("hinf_norm: could not bracket the norm");
  }
  while (upper - out.lower > tol * out.lower && out.iterations < 500) {
    const double gamma = 0.5 * (out.lower + upper);
    if (certify(gamma)) upper = gamma;
    if (upper < out.lower) upper = out.lower;
  }
  out.norm = std::max(upper, out.lower);
  return out;
}

double hinf_norm(const LTIStateSpace& sys, double tol) { return hinf_norm_detailed(sys, tol).norm; }

std::vector<Vector> uniform_grid(const ParamBox& box, int density) {
  if (density < 1) throw ConfigError("grid density must be at least 1");
  const int dim = box.dimension();
  if (dim > kMaxVertexDimension) throw DimensionError("uniform_grid: parameter dimension too large");
  std::vector<std::vector<double>> axes(static_cast<std::size_t>(dim));
  for (int k = 0; k < dim; ++k) {
    const double lo = box.lower()[k];
    const double hi = box.upper()[k];
    auto& axis = axes[static_cast<std::size_t>(k)];
    if (lo == hi) {
      axis.push_back(lo);
      continue;
    }
    for (int j = 0; j <= density; ++j) axis.push_back(j == density ? hi : lo + (hi - lo) * j / density);
  }
  std::vector<Vector> points;
  std::vector<std::size_t> idx(static_cast<std::size_t>(dim), 0);
  while (true) {
    Vector p(dim);
    for (int k = 0; k < dim; ++k) p[k] = axes[static_cast<std::size_t>(k)][idx[static_cast<std::size_t>(k)]];
    points.push_back(std::move(p));
    int k = dim - 1;
    for (; k >= 0; --k) {
      auto& i = idx[static_cast<std::size_t>(k)];
      if (++i < axes[static_cast<std::size_t>(k)].size()) break;
      i = 0;
    }
    if (k < 0) break;
  }
  return points;
}

namespace {

bool on_corner(const ParamBox& box, const Vector& rho) {
  for (Eigen::Index k = 0; k < rho.size(); ++k) {
    if (rho[k] != box.lower()[k] && rho[k] != box.upper()[k]) return false;
  }
  return true;
}

SampleNorms evaluate_sample(const AffineLPVModel& model, const Matrix& K, const VerifyTarget& target,
                            const GridOptions& options, Vector rho, std::string origin) {
  SampleNorms s;
  s.rho = std::move(rho);
  s.origin = std::move(origin);
  const FrozenSystem frozen = model.evaluate(s.rho);
  const LTIStateSpace perf = closed_loop(frozen, K);
  s.abscissa = spectral_abscissa(perf.A);
  s.actuator = Vector::Constant(model.n_u(), std::numeric_limits<double>::infinity());
  if (!(s.abscissa < kHurwitzThreshold)) {
    s.stable = false;
    s.performance = std::numeric_limits<double>::infinity();
    return s;
  }
  s.performance = target.kind == NormKind::kHinf ? hinf_norm(perf, options.hinf_tol) : h2_norm(perf);
  for (int i = 0; i < model.n_u(); ++i) s.actuator[i] = h2_norm(actuator_channel(frozen, K, i));
  return s;
}

std::string describe(const Vector& rho) {
  std::ostringstream os;
  os << "(";
  for (Eigen::Index k = 0; k < rho.size(); ++k) os << (k ? ", " : "") << rho[k];
  os << ")";
  return os.str();
}

}  // namespace

NormReport grid_verify(const AffineLPVModel& model, const Matrix& K, const VerifyTarget& target,
                       const GridOptions& options) {
  if (K.rows() != model.n_u() || K.cols() != model.n_x()) {
    throw DimensionError("grid_verify: K must be N_u x N_x");
  }
  if (target.sqrt_gamma.size() != 0 && target.sqrt_gamma.size() != model.n_u()) {
    throw DimensionError("grid_verify: sqrt_gamma must have N_u entries");
  }
  if (target.kind == NormKind::kH2) {
    const AffineMatrix& dw = model.term(SystemMatrix::kDw);
    bool zero = dw.constant.size() == 0 || dw.constant.cwiseAbs().maxCoeff() == 0.0;
    for (const Matrix& c : dw.coefficients) zero = zero && (c.size() == 0 || c.cwiseAbs().maxCoeff() == 0.0);
    if (!zero) throw ConfigError("H2 requires D_w = 0 (all constant and coefficient blocks)");
  }

  std::vector<std::pair<Vector, std::string>> points;
  // a parameter-independent model is the same system everywhere on the box
  const bool constant = model.parameter_independent();
  for (Vector& v : design_vertices(model)) points.emplace_back(std::move(v), "vertex");
  if (!constant && options.density > 1) {
    for (Vector& p : uniform_grid(model.box(), options.density)) {
      if (!on_corner(model.box(), p)) points.emplace_back(std::move(p), "grid");
    }
  }
  if (!constant && options.random_samples > 0) {
    std::mt19937_64 gen(options.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const ParamBox& box = model.box();
    for (int j = 0; j < options.random_samples; ++j) {
      Vector p(box.dimension());
      for (int k = 0; k < box.dimension(); ++k) {
        p[k] = box.lower()[k] + unit(gen) * (box.upper()[k] - box.lower()[k]);
      }
      points.emplace_back(std::move(p), "random");
    }
  }

  NormReport report;
  report.kind = target.kind;
  report.gamma0 = target.gamma0;
  report.sqrt_gamma = target.sqrt_gamma;
  report.rel_tol = target.rel_tol;
  report.samples.resize(points.size());
  const std::size_t workers = static_cast<std::size_t>(std::max(1, options.workers));
  auto run = [&](std::size_t first) {
    for (std::size_t i = first; i < points.size(); i += workers) {
      report.samples[i] = evaluate_sample(model, K, target, options, points[i].first, points[i].second);
    }
  };
  if (workers == 1) {
    run(0);
  } else {
    std::vector<std::future<void>> jobs;
    for (std::size_t w = 0; w < workers; ++w) jobs.push_back(std::async(std::launch::async, run, w));
    for (auto& j : jobs) j.get();
  }

  report.worst_actuator = Vector::Zero(model.n_u());
  for (std::size_t i = 0; i < report.samples.size(); ++i) {
    const SampleNorms& s = report.samples[i];
    const std::string where = "sample " + std::to_string(i) + " (" + s.origin + " rho=" + describe(s.rho) + ")";
    report.worst_performance = std::max(report.worst_performance, s.performance);
    report.worst_actuator = report.worst_actuator.cwiseMax(s.actuator);
    if (!s.stable) {
      report.failures.push_back(where + ": closed loop unstable, spectral abscissa " + std::to_string(s.abscissa));
      continue;
    }
    if (s.performance > target.gamma0 * (1.0 + target.rel_tol)) {
      std::ostringstream os;
      os << where << ": performance norm " << s.performance << " exceeds " << target.gamma0;
      report.failures.push_back(os.str());
    }
    for (Eigen::Index a = 0; a < target.sqrt_gamma.size(); ++a) {
      if (s.actuator[a] > target.sqrt_gamma[a] * (1.0 + target.rel_tol)) {
        std::ostringstream os;
        os << where << ": actuator " << a + 1 << " H2 norm " << s.actuator[a] << " exceeds " << target.sqrt_gamma[a];
        report.failures.push_back(os.str());
      }
    }
  }
  return report;
}

}  // namespace sparse_lpv
