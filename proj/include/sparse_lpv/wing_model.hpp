#pragma once

// Flexible wing: a chain of n rigid bars hinged by torsional springs with
// restoring torque -k1*d - k2*d^3 on each joint deflection d. Every bar
// carries one actuator force and one disturbance force acting normal to the
// bar at its centre of mass. Inertia is linearized about the straight wing.

#include <Eigen/Cholesky>

#include "sparse_lpv/lpv_model.hpp"

namespace sparse_lpv {

struct WingParams {
  double m = 1.5;          // bar mass [kg]
  int n = 5;               // number of bars
  double l = 1.0;          // bar length [m]
  double k1 = 10.0;        // linear spring constant [N m/rad]
  double k2 = 1.5;         // cubic spring constant [N m/rad^3]
  double theta_max = 0.5;  // |theta_i| bound defining the scheduling box [rad]
  /// Diagonal of C_z over x = (theta, theta_dot); empty means all ones.
  Vector z_weights;

  void validate() const;
  /// z_weights expanded to length 2n.
  [[nodiscard]] Vector output_weights() const;
};

struct WingPlant {
  WingParams params;
  Matrix M0;         // generalized inertia at theta = 0 [kg m^2]
  Matrix K_lin;      // linear stiffness, tridiagonal [N m/rad]
  Matrix incidence;  // joint deflections: delta = incidence * theta
  Matrix L;          // bar forces -> generalized torques [m]
  Eigen::LLT<Matrix> M0_factor;

  [[nodiscard]] int n() const { return params.n; }
  [[nodiscard]] int n_x() const { return 2 * params.n; }
};

WingPlant build_wing(const WingParams& params);

/// d(y_centre of bar i)/d(theta_j) at theta = 0: l for j < i, l/2 for j = i.
[[nodiscard]] Matrix lever_arms(const WingParams& params);

/// Generalized spring torque -dV/dtheta.
[[nodiscard]] Vector spring_torque(const Vector& theta, const WingParams& params);

/// V(theta) = sum_i k1 d_i^2 / 2 + k2 d_i^4 / 4.
[[nodiscard]] double potential_energy(const Vector& theta, const WingParams& params);

/// Kinetic plus potential energy of state x = (theta, theta_dot).
[[nodiscard]] double total_energy(const WingPlant& plant, const Vector& x);

/// Nonlinear vector field xdot = f(x, u, w).
[[nodiscard]] Vector wing_dynamics(const WingPlant& plant, const Vector& x, const Vector& u,
                                   const Vector& w);

/// Scheduling parameters rho_i = theta_i^2.
[[nodiscard]] Vector scheduling_parameters(const Vector& x, int n);

/// Exact quasi-LPV embedding with rho in [0, theta_max^2]^n.
[[nodiscard]] AffineLPVModel wing_to_lpv(const WingPlant& plant);

}  // namespace sparse_lpv
