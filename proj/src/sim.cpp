#include "sparse_lpv/sim.hpp"

#include <algorithm>
#include <cmath>

#include "sparse_lpv/error.hpp"

namespace sparse_lpv {

void SimConfig::validate(int n) const {
  if (!(dt > 0.0)) throw ConfigError("sim.dt must be positive");
  if (!(horizon >= dt)) throw ConfigError("sim.horizon must be at least dt");
  if (record_every < 1) throw ConfigError("sim.record_every must be at least 1");
  if (!(settle_band > 0.0 && settle_band < 1.0)) throw ConfigError("sim.settle_band must be in (0, 1)");
  if (x0.size() != 0 && x0.size() != 2 * n) throw ConfigError("sim.x0 must have 2n entries");
  if (K && (K->rows() != n || K->cols() != 2 * n)) throw DimensionError("sim: K must be n x 2n");
}

Vector SimConfig::initial_state(int n) const {
  if (x0.size() != 0) return x0;
  Vector x = Vector::Zero(2 * n);
  x.head(n).setConstant(theta0);
  return x;
}

DisturbanceGenerator::DisturbanceGenerator(const DisturbanceConfig& cfg, int n, std::uint64_t seed)
    : cfg_(cfg), n_(n), gen_(seed) {}

double DisturbanceGenerator::uniform() {
  // 53 random bits mapped to [-1, 1); identical on every standard library
  const double u = static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  return 2.0 * u - 1.0;
}

Vector DisturbanceGenerator::sample(double t) {
  const double s = cfg_.sinusoid ? std::sin(cfg_.omega * t) : 0.0;
  Vector w(n_);
  if (cfg_.per_bar) {
    for (int i = 0; i < n_; ++i) w[i] = cfg_.amplitude * uniform() + s;
  } else {
    w.setConstant(cfg_.amplitude * uniform() + s);
  }
  return w;
}

Trajectory simulate(const WingPlant& plant, const SimConfig& cfg) {
  const int n = plant.n();
  cfg.validate(n);
  const bool closed = cfg.K.has_value();
  const double rho_max = plant.params.theta_max * plant.params.theta_max;
  const long long steps = static_cast<long long>(std::llround(cfg.horizon / cfg.dt));

  Trajectory traj;
  traj.n = n;
  traj.closed_loop = closed;
  traj.dt = cfg.dt;
  DisturbanceGenerator gen(cfg.disturbance, n, cfg.seed);

  Vector x = cfg.initial_state(n);
  const Vector zero_u = Vector::Zero(n);
  auto control = [&](const Vector& s) -> Vector { return closed ? Vector(*cfg.K * s) : zero_u; };
  auto outside = [&](const Vector& s) { return s.head(n).array().square().maxCoeff() > rho_max; };

  bool pending_violation = false;
  auto record = [&](double t, const Vector& w) {
    traj.t.push_back(t);
    traj.x.push_back(x);
    if (closed) traj.u.push_back(control(x));
    traj.w.push_back(w);
    traj.box_violation.push_back(pending_violation);
    pending_violation = false;
  };

  for (long long k = 0; k <= steps; ++k) {
    const double t = static_cast<double>(k) * cfg.dt;
    if (outside(x)) {
      pending_violation = true;
      ++traj.violation_steps;
    }
    const Vector w = gen.sample(t);
    if (k % cfg.record_every == 0 || k == steps) record(t, w);
    if (k == steps) break;

    const double h = cfg.dt;
    auto f = [&](const Vector& s) { return wing_dynamics(plant, s, control(s), w); };
    const Vector k1 = f(x);
    const Vector k2 = f(x + 0.5 * h * k1);
    const Vector k3 = f(x + 0.5 * h * k2);
    const Vector k4 = f(x + h * k3);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!x.allFinite() || x.cwiseAbs().maxCoeff() > 1e8) {
      traj.diverged = true;
      break;
    }
  }
  return traj;
}

Metrics metrics(const Trajectory& traj, const Vector& z_weights, double band) {
  if (traj.size() < 2) throw ConfigError("metrics: trajectory needs at least two samples");
  const int n = traj.n;
  if (z_weights.size() != 2 * n) throw DimensionError("metrics: z_weights must have 2n entries");
  Metrics m;
  m.u_inf = Vector::Zero(n);
  m.diverged = traj.diverged;
  m.box_violations = traj.violation_steps;

  std::vector<double> peak(traj.size());
  double sum_sq = 0.0;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    peak[k] = traj.x[k].head(n).cwiseAbs().maxCoeff();
    m.overshoot = std::max(m.overshoot, peak[k]);
    if (!traj.u.empty()) m.u_inf = m.u_inf.cwiseMax(traj.u[k].cwiseAbs());
    sum_sq += (z_weights.array() * traj.x[k].array()).square().sum();
  }
  m.rms_z = std::sqrt(sum_sq / static_cast<double>(traj.size()));

  const double limit = band * m.overshoot;
  std::size_t last_out = traj.size();
  for (std::size_t k = traj.size(); k-- > 0;) {
    if (peak[k] > limit) {
      last_out = k;
      break;
    }
  }
  if (last_out == traj.size()) {
    m.settling_time = traj.t.front();
  } else if (last_out + 1 < traj.size()) {
    m.settling_time = traj.t[last_out + 1];
  } else {
    m.settled = false;
    m.settling_time = traj.t.back();
  }
  return m;
}

}  // namespace sparse_lpv
