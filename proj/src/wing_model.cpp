#include "sparse_lpv/wing_model.hpp"

#include <cmath>
#include <sstream>

#include "sparse_lpv/error.hpp"

namespace sparse_lpv {

void WingParams::validate() const {
  std::ostringstream os;
  if (!(m > 0)) os << "m must be positive; ";
  if (n < 1) os << "n must be at least 1; ";
  if (!(l > 0)) os << "l must be positive; ";
  if (!(k1 > 0)) os << "k1 must be positive; ";
  if (!(k2 >= 0)) os << "k2 must be non-negative; ";
  if (!(theta_max > 0)) os << "theta_max must be positive; ";
  if (z_weights.size() != 0 && z_weights.size() != 2 * n) os << "z_weights must have length 2n; ";
  if (!os.str().empty()) throw ConfigError("wing parameters: " + os.str());
}

Vector WingParams::output_weights() const {
  if (z_weights.size() == 0) return Vector::Ones(2 * n);
  return z_weights;
}

Matrix lever_arms(const WingParams& p) {
  Matrix J = Matrix::Zero(p.n, p.n);
  for (int i = 0; i < p.n; ++i) {
    for (int j = 0; j < i; ++j) J(i, j) = p.l;
    J(i, i) = 0.5 * p.l;
  }
  return J;
}

WingPlant build_wing(const WingParams& params) {
  params.validate();
  const int n = params.n;
  WingPlant plant;
  plant.params = params;
  const Matrix J = lever_arms(params);
  plant.M0 = params.m * J.transpose() * J +
             Matrix::Identity(n, n) * (params.m * params.l * params.l / 12.0);
  plant.L = J.transpose();
  plant.incidence = Matrix::Identity(n, n);
  for (int i = 1; i < n; ++i) plant.incidence(i, i - 1) = -1.0;
  plant.K_lin = params.k1 * plant.incidence.transpose() * plant.incidence;
  plant.M0_factor.compute(plant.M0);
  if (plant.M0_factor.info() != Eigen::Success) {
    throw NumericalError("wing model: inertia matrix is not positive definite");
  }
  return plant;
}

namespace {

Vector deflections(const Vector& theta) {
  Vector d = theta;
  for (Eigen::Index i = 1; i < theta.size(); ++i) d[i] -= theta[i - 1];
  return d;
}

}  // namespace

Vector spring_torque(const Vector& theta, const WingParams& p) {
  if (theta.size() != p.n) throw DimensionError("spring_torque: angle vector has wrong length");
  const Vector d = deflections(theta);
  Vector joint(p.n);
  for (int i = 0; i < p.n; ++i) joint[i] = -p.k1 * d[i] - p.k2 * d[i] * d[i] * d[i];
  // Joint i acts on bars i-1 and i with opposite signs.
  Vector q = joint;
  for (int i = 0; i + 1 < p.n; ++i) q[i] -= joint[i + 1];
  return q;
}

double potential_energy(const Vector& theta, const WingParams& p) {
  const Vector d = deflections(theta);
  double v = 0.0;
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    const double d2 = d[i] * d[i];
    v += 0.5 * p.k1 * d2 + 0.25 * p.k2 * d2 * d2;
  }
  return v;
}

double total_energy(const WingPlant& plant, const Vector& x) {
  const int n = plant.n();
  const Vector theta = x.head(n);
  const Vector rate = x.tail(n);
  return 0.5 * rate.dot(plant.M0 * rate) + potential_energy(theta, plant.params);
}

Vector wing_dynamics(const WingPlant& plant, const Vector& x, const Vector& u, const Vector& w) {
  const int n = plant.n();
  if (x.size() != 2 * n || u.size() != n || w.size() != n) {
    throw DimensionError("wing_dynamics: state, input or disturbance has wrong length");
  }
  Vector xdot(2 * n);
  xdot.head(n) = x.tail(n);
  xdot.tail(n) = plant.M0_factor.solve(spring_torque(x.head(n), plant.params) + plant.L * (u + w));
  return xdot;
}

Vector scheduling_parameters(const Vector& x, int n) { return x.head(n).array().square().matrix(); }

AffineLPVModel wing_to_lpv(const WingPlant& plant) {
  const auto& p = plant.params;
  const int n = p.n;
  const int nx = 2 * n;
  const Matrix Minv = plant.M0_factor.solve(Matrix::Identity(n, n));

  auto state_matrix = [&](const Matrix& stiffness, bool with_kinematics) {
    Matrix a = Matrix::Zero(nx, nx);
    if (with_kinematics) a.topRightCorner(n, n).setIdentity();
    a.bottomLeftCorner(n, n) = -Minv * stiffness;
    return a;
  };

  AffineMatrix A;
  A.constant = state_matrix(plant.K_lin, true);
  // d_i^3 = rho_i th_i - 3 rho_i th_{i-1} + 3 rho_{i-1} th_i - rho_{i-1} th_{i-1}
  for (int k = 0; k < n; ++k) {
    Matrix cubic = Matrix::Zero(n, n);  // d(d^3)/d(rho_k) as a map of theta
    cubic(k, k) += 1.0;
    if (k > 0) cubic(k, k - 1) += -3.0;
    if (k + 1 < n) {
      cubic(k + 1, k + 1) += 3.0;
      cubic(k + 1, k) += -1.0;
    }
    A.coefficients.push_back(state_matrix(p.k2 * plant.incidence.transpose() * cubic, false));
  }

  Matrix B = Matrix::Zero(nx, n);
  B.bottomRows(n) = Minv * plant.L;

  auto constant_term = [n](Matrix m) {
    AffineMatrix t;
    t.constant = std::move(m);
    t.coefficients.assign(static_cast<std::size_t>(n), Matrix::Zero(t.constant.rows(), t.constant.cols()));
    return t;
  };

  const Vector zw = p.output_weights();
  std::array<AffineMatrix, 6> terms = {
      A,
      constant_term(B),
      constant_term(B),
      constant_term(zw.asDiagonal().toDenseMatrix()),
      constant_term(Matrix::Zero(nx, n)),
      constant_term(Matrix::Zero(nx, n)),
  };
  ParamBox box(Vector::Zero(n), Vector::Constant(n, p.theta_max * p.theta_max));
  return AffineLPVModel(std::move(terms), std::move(box));
}

}  // namespace sparse_lpv
