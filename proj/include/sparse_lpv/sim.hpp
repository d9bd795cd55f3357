#pragma once

// Fixed-step RK4 simulation of the nonlinear wing with a seeded gust
// w_i(t) = a * eta_i + sin(omega_d t), eta_i ~ U[-1, 1] held over each step.

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "sparse_lpv/wing_model.hpp"

namespace sparse_lpv {

struct DisturbanceConfig {
  double amplitude = 0.3;   // a
  double omega = 0.005;     // omega_d [rad/s]
  bool sinusoid = true;
  bool per_bar = true;      // independent eta per bar, shared otherwise
};

struct SimConfig {
  double dt = 1e-3;
  double horizon = 400.0;
  Vector x0;                // empty: theta_i = theta0, theta_dot = 0
  double theta0 = 0.1;
  std::uint64_t seed = 42;
  DisturbanceConfig disturbance;
  std::optional<Matrix> K;  // absent = open loop
  int record_every = 10;    // keep every k-th step (and the last one)
  double settle_band = 0.02;

  void validate(int n) const;
  [[nodiscard]] Vector initial_state(int n) const;
};

class DisturbanceGenerator {
 public:
  DisturbanceGenerator(const DisturbanceConfig& cfg, int n, std::uint64_t seed);

  /// Draws the held value for the step starting at t.
  Vector sample(double t);

 private:
  double uniform();

  DisturbanceConfig cfg_;
  int n_;
  std::mt19937_64 gen_;
};

struct Trajectory {
  int n = 0;
  bool closed_loop = false;
  bool diverged = false;
  double dt = 0.0;
  std::vector<double> t;
  std::vector<Vector> x;
  std::vector<Vector> u;  // empty for open loop
  std::vector<Vector> w;
  std::vector<bool> box_violation;  // any step since the previous record left the box
  long long violation_steps = 0;

  [[nodiscard]] std::size_t size() const { return t.size(); }
};

struct Metrics {
  Vector u_inf;             // per-actuator max |u_i|
  double settling_time = 0.0;
  bool settled = true;
  double overshoot = 0.0;   // max_t max_i |theta_i|
  double rms_z = 0.0;
  long long box_violations = 0;
  bool diverged = false;
};

Trajectory simulate(const WingPlant& plant, const SimConfig& cfg);

/// Metrics over the recorded samples. `z_weights` is the diagonal of C_z.
Metrics metrics(const Trajectory& traj, const Vector& z_weights, double band = 0.02);

}  // namespace sparse_lpv
